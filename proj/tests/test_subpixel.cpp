#include <doctest.h>

#include <algorithm>

#include "spin/gradcheck.hpp"
#include "spin/rng.hpp"
#include "spin/subpixel.hpp"

using namespace spin;

TEST_CASE("depth_to_space at unit size follows the block layout definition") {
  // 4 channels (a,b,c,d) at 1x1 -> one 2x2 block [[a,b],[c,d]]
  Tensor<float> x = Tensor<float>::from_data({1, 4, 1, 1}, {1, 2, 3, 4});
  Tensor<float> y = depth_to_space(x);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y.data() == std::vector<float>{1, 2, 3, 4});

  SUBCASE("constant input stays constant") {
    Tensor<float> c = Tensor<float>::full({2, 8, 3, 5}, 0.7f);
    Tensor<float> out = depth_to_space(c);
    REQUIRE(out.shape() == Shape{2, 2, 6, 10});
    for (const float v : out.data()) CHECK(v == 0.7f);
  }

  SUBCASE("channel count must be divisible by 4") {
    CHECK_THROWS_AS(depth_to_space(Tensor<float>::zeros({1, 6, 2, 2})), std::invalid_argument);
  }
}

TEST_CASE("space_to_depth inverts the unit example and rejects odd extents") {
  Tensor<float> x = Tensor<float>::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor<float> y = space_to_depth(x);
  REQUIRE(y.shape() == Shape{1, 4, 1, 1});
  CHECK(y.data() == std::vector<float>{1, 2, 3, 4});
  CHECK_THROWS_AS(space_to_depth(Tensor<float>::zeros({1, 1, 3, 4})), std::invalid_argument);
  CHECK_THROWS_AS(space_to_depth(Tensor<float>::zeros({1, 1, 4, 5})), std::invalid_argument);
}

TEST_CASE("space_to_depth on 4x4 ramp groups block corners into channel 0") {
  std::vector<float> vals(16);
  for (int i = 0; i < 16; ++i) vals[i] = static_cast<float>(i);
  Tensor<float> x = Tensor<float>::from_data({1, 1, 4, 4}, vals);
  Tensor<float> y = space_to_depth(x);
  REQUIRE(y.shape() == Shape{1, 4, 2, 2});
  // channel 0 holds the top-left corner of each 2x2 block
  CHECK(y.at4(0, 0, 0, 0) == 0.0f);
  CHECK(y.at4(0, 0, 0, 1) == 2.0f);
  CHECK(y.at4(0, 0, 1, 0) == 8.0f);
  CHECK(y.at4(0, 0, 1, 1) == 10.0f);
  // channel 3: bottom-right corners
  CHECK(y.at4(0, 3, 0, 0) == 5.0f);
  CHECK(y.at4(0, 3, 1, 1) == 15.0f);
}

TEST_CASE("round-trips are bit-exact and preserve the value multiset") {
  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const int B = rng.uniform_int(1, 2);
    const int C = 4 * rng.uniform_int(1, 3);
    const int H = rng.uniform_int(1, 6);
    const int W = rng.uniform_int(1, 6);
    Tensor<float> t({B, C, H, W});
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-10.0, 10.0));

    Tensor<float> rt = space_to_depth(depth_to_space(t));
    REQUIRE(rt.shape() == t.shape());
    CHECK(rt.data() == t.data());

    Tensor<float> t2({B, rng.uniform_int(1, 4), 2 * H, 2 * W});
    for (auto& v : t2.data()) v = static_cast<float>(rng.uniform(-10.0, 10.0));
    Tensor<float> rt2 = depth_to_space(space_to_depth(t2));
    CHECK(rt2.data() == t2.data());

    // losslessness: exact multiset of values preserved
    Tensor<float> fwd = depth_to_space(t);
    std::vector<float> a = t.data(), b = fwd.data();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("every output element of depth_to_space equals exactly one input element") {
  Rng rng(22);
  // distinct values make the permutation check exact
  Tensor<double> t({1, 8, 3, 3});
  for (long long i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<double>(i) * 1.25;
  Tensor<double> y = depth_to_space(t);
  std::vector<int> hits(t.data().size(), 0);
  for (const double v : y.data()) {
    const auto it = std::find(t.data().begin(), t.data().end(), v);
    REQUIRE(it != t.data().end());
    ++hits[static_cast<size_t>(it - t.data().begin())];
  }
  for (const int h : hits) CHECK(h == 1);
}

TEST_CASE("rearrangement gradients are the inverse permutations") {
  Rng rng(23);
  Tensor<double> x({1, 4, 3, 3}, true);
  for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);
  auto fwd = [&]() { return sum_all(mul(depth_to_space(x), depth_to_space(x))); };
  const auto report = gradcheck<double>(fwd, {{"x", &x}}, 1e-6, 0, 200);
  CHECK(report.pass(1e-6));

  Tensor<double> z({1, 2, 4, 4}, true);
  for (auto& v : z.data()) v = rng.uniform(-1.0, 1.0);
  auto fwd2 = [&]() { return sum_all(mul(space_to_depth(z), space_to_depth(z))); };
  const auto report2 = gradcheck<double>(fwd2, {{"z", &z}}, 1e-6, 0, 201);
  CHECK(report2.pass(1e-6));
}
