#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spin/adam.hpp"
#include "spin/gradcheck.hpp"
#include "spin/losses.hpp"
#include "spin/metrics.hpp"
#include "spin/rng.hpp"

using namespace spin;

TEST_CASE("bce_loss closed forms") {
  SUBCASE("perfect prediction gives near-zero loss") {
    Tensor<double> y = Tensor<double>::from_data({1, 1, 2, 2}, {1.0, 0.0, 1.0, 0.0});
    Tensor<double> t = Tensor<double>::from_data({1, 1, 2, 2}, {1.0, 0.0, 1.0, 0.0});
    CHECK(bce_loss(y, t).scalar() <= 1e-6);
  }
  SUBCASE("uniform 0.5 predictions give ln 2 for any target") {
    Rng rng(31);
    Tensor<double> y = Tensor<double>::full({1, 1, 4, 4}, 0.5);
    Tensor<double> t({1, 1, 4, 4});
    for (auto& v : t.data()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    CHECK(bce_loss(y, t).scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("random case matches the per-pixel summation oracle to 1e-9") {
    Rng rng(32);
    for (int rep = 0; rep < 20; ++rep) {
      Tensor<double> y({1, 1, 4, 4});
      Tensor<double> t({1, 1, 4, 4});
      for (auto& v : y.data()) v = rng.uniform(0.01, 0.99);
      for (auto& v : t.data()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
      CHECK(bce_loss(y, t).scalar() ==
            doctest::Approx(oracle::bce_ref(y.data(), t.data())).epsilon(1e-9));
    }
  }
  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(bce_loss(Tensor<double>::zeros({1, 1, 2, 2}),
                             Tensor<double>::zeros({1, 1, 2, 3})),
                    std::invalid_argument);
  }
  SUBCASE("gradient matches finite differences") {
    Rng rng(33);
    Tensor<double> y({1, 1, 3, 3}, true);
    Tensor<double> t({1, 1, 3, 3});
    for (auto& v : y.data()) v = rng.uniform(0.05, 0.95);
    for (auto& v : t.data()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    auto fwd = [&]() { return bce_loss(y, t); };
    CHECK(gradcheck<double>(fwd, {{"y", &y}}, 1e-7, 0, 300).pass(1e-6));
  }
}

TEST_CASE("soft_dice_loss closed forms and oracle") {
  SUBCASE("all-ones prediction on all-ones target is exactly zero") {
    Tensor<double> y = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    Tensor<double> t = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    CHECK(soft_dice_loss(y, t).scalar() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("all-zero prediction and target: epsilon saves the quotient") {
    Tensor<double> y = Tensor<double>::zeros({1, 1, 3, 3});
    Tensor<double> t = Tensor<double>::zeros({1, 1, 3, 3});
    CHECK(soft_dice_loss(y, t).scalar() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("random pair matches the direct-formula oracle to 1e-9") {
    Rng rng(34);
    for (int rep = 0; rep < 20; ++rep) {
      Tensor<double> y({1, 1, 5, 5});
      Tensor<double> t({1, 1, 5, 5});
      for (auto& v : y.data()) v = rng.uniform(0.0, 1.0);
      for (auto& v : t.data()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
      CHECK(soft_dice_loss(y, t).scalar() ==
            doctest::Approx(oracle::soft_dice_ref(y.data(), t.data())).epsilon(1e-9));
    }
  }
  SUBCASE("gradient matches finite differences") {
    Rng rng(35);
    Tensor<double> y({1, 1, 3, 3}, true);
    Tensor<double> t({1, 1, 3, 3});
    for (auto& v : y.data()) v = rng.uniform(0.1, 0.9);
    for (auto& v : t.data()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    auto fwd = [&]() { return soft_dice_loss(y, t); };
    CHECK(gradcheck<double>(fwd, {{"y", &y}}, 1e-7, 0, 301).pass(1e-6));
  }
}

TEST_CASE("confusion counts exactly") {
  SUBCASE("pred equals gt with 7 positives on 16 pixels") {
    std::vector<uint8_t> m(16, 0);
    for (int i = 0; i < 7; ++i) m[i] = 1;
    const ConfusionCounts c = confusion(m, m);
    CHECK(c.tp == 7);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tn == 9);
    CHECK(c.total() == 16);
  }
  SUBCASE("all-positive prediction on empty gt") {
    std::vector<uint8_t> p(10, 1), g(10, 0);
    const ConfusionCounts c = confusion(p, g);
    CHECK(c.fp == 10);
    CHECK(c.tp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tn == 0);
  }
  SUBCASE("random masks match the pixel-loop oracle exactly") {
    Rng rng(36);
    std::vector<uint8_t> p(32 * 32), g(32 * 32);
    for (auto& v : p) v = rng.bernoulli(0.3) ? 1 : 0;
    for (auto& v : g) v = rng.bernoulli(0.3) ? 1 : 0;
    const ConfusionCounts c = confusion(p, g);
    const oracle::Counts r = oracle::confusion_ref(p, g);
    CHECK(c.tp == r.tp);
    CHECK(c.fp == r.fp);
    CHECK(c.fn == r.fn);
    CHECK(c.tn == r.tn);
  }
  SUBCASE("non-binary values are rejected") {
    std::vector<uint8_t> p{0, 2}, g{0, 1};
    CHECK_THROWS_AS(confusion(p, g), std::invalid_argument);
  }
}

TEST_CASE("metrics formulas and degenerate rules") {
  SUBCASE("tp=30 fp=10 fn=10") {
    const MetricValues m = metrics({30, 10, 10, 0});
    CHECK(m.dsc == doctest::Approx(0.75));
    CHECK(m.iou == doctest::Approx(0.6));
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.recall == doctest::Approx(0.75));
  }
  SUBCASE("empty gt and empty prediction count as perfect") {
    const MetricValues m = metrics({0, 0, 0, 25});
    CHECK(m.dsc == 1.0);
    CHECK(m.iou == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
  }
  SUBCASE("disjoint non-empty masks score zero everywhere") {
    const MetricValues m = metrics({0, 5, 7, 4});
    CHECK(m.dsc == 0.0);
    CHECK(m.iou == 0.0);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
  }
  SUBCASE("dsc >= iou and the dsc = 2*iou/(1+iou) identity") {
    Rng rng(37);
    for (int rep = 0; rep < 100; ++rep) {
      const ConfusionCounts c{static_cast<uint64_t>(rng.uniform_int(0, 50)),
                              static_cast<uint64_t>(rng.uniform_int(0, 50)),
                              static_cast<uint64_t>(rng.uniform_int(0, 50)),
                              static_cast<uint64_t>(rng.uniform_int(0, 50))};
      const MetricValues m = metrics(c);
      CHECK(m.dsc >= m.iou - 1e-12);
      CHECK(m.dsc == doctest::Approx(2.0 * m.iou / (1.0 + m.iou)).epsilon(1e-12));
      CHECK(m.dsc >= 0.0);
      CHECK(m.dsc <= 1.0);
    }
  }
  SUBCASE("metrics(confusion(m, m)) is all ones for any non-empty mask") {
    Rng rng(38);
    std::vector<uint8_t> m(64);
    for (auto& v : m) v = rng.bernoulli(0.5) ? 1 : 0;
    m[0] = 1;
    const MetricValues r = metrics(confusion(m, m));
    CHECK(r.dsc == 1.0);
    CHECK(r.iou == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
  }
}

TEST_CASE("threshold uses a strict greater-than") {
  SUBCASE("exactly 0.5 maps to class 0") {
    const auto out = threshold({0.5f}, 0.5);
    CHECK(out[0] == 0);
  }
  SUBCASE("0.6 everywhere maps to class 1") {
    const auto out = threshold(std::vector<float>(8, 0.6f), 0.5);
    for (const auto v : out) CHECK(v == 1);
  }
  SUBCASE("raising tau never increases the positive count") {
    Rng rng(39);
    std::vector<float> conf(256);
    for (auto& v : conf) v = static_cast<float>(rng.uniform(0.0, 1.0));
    long long prev = 1 << 30;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
      const auto mask = threshold(conf, tau);
      long long positives = 0;
      for (const auto v : mask) positives += v;
      CHECK(positives <= prev);
      prev = positives;
    }
  }
  SUBCASE("tau outside [0,1] is rejected") {
    CHECK_THROWS_AS(threshold({0.5f}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(threshold({0.5f}, -0.1), std::invalid_argument);
  }
}

TEST_CASE("bce is minimized at y = ybar (gradient-descent convergence)") {
  // free y under Adam: loss must land near its minimum at the target
  Rng rng(40);
  Tensor<float> y({1, 1, 4, 4}, true);
  Tensor<float> t({1, 1, 4, 4});
  for (auto& v : y.data()) v = 0.5f;
  for (auto& v : t.data()) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  AdamState<float> st;
  std::vector<Tensor<float>*> params{&y};
  double loss0 = 0.0;
  double lossN = 0.0;
  for (int i = 0; i < 400; ++i) {
    Tensor<float> l = bce_loss(sigmoid(y), t);  // reparametrized so y is unconstrained
    if (i == 0) loss0 = l.scalar();
    lossN = l.scalar();
    y.zero_grad();
    l.backward();
    adam_step(params, st, 0.05f);
  }
  CHECK(lossN < loss0);
  CHECK(lossN < 0.01);
  // converged predictions sit on the right side of 0.5 everywhere
  Tensor<float> p = sigmoid(y);
  for (long long i = 0; i < p.numel(); ++i) {
    if (t.data()[i] > 0.5f)
      CHECK(p.data()[i] > 0.9f);
    else
      CHECK(p.data()[i] < 0.1f);
  }
}

TEST_CASE("losses are invariant to joint spatial permutation") {
  Rng rng(41);
  std::vector<double> yv(16), tv(16);
  for (auto& v : yv) v = rng.uniform(0.05, 0.95);
  for (auto& v : tv) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  std::vector<int> perm(16);
  for (int i = 0; i < 16; ++i) perm[i] = i;
  for (int i = 15; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  std::vector<double> yp(16), tp(16);
  for (int i = 0; i < 16; ++i) {
    yp[i] = yv[perm[i]];
    tp[i] = tv[perm[i]];
  }
  auto mk = [](const std::vector<double>& v) {
    return Tensor<double>::from_data({1, 1, 4, 4}, v);
  };
  CHECK(bce_loss(mk(yv), mk(tv)).scalar() ==
        doctest::Approx(bce_loss(mk(yp), mk(tp)).scalar()).epsilon(1e-12));
  CHECK(soft_dice_loss(mk(yv), mk(tv)).scalar() ==
        doctest::Approx(soft_dice_loss(mk(yp), mk(tp)).scalar()).epsilon(1e-12));
}
