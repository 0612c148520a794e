#pragma once

#include <vector>

#include "spin/tensor.hpp"

namespace spin {

// Block layout shared by both rearrangement directions: factor 2, row-major
// intra-block order, channels grouped four at a time. Frozen so that
// depth_to_space and space_to_depth are exact inverses of each other:
//
//   out(b, c, 2i+di, 2j+dj) = in(b, 4c + 2di + dj, i, j)
inline constexpr int kBlockFactor = 2;

namespace detail {

template <typename T>
void d2s_map(const T* in, T* out, int B, int Cout, int H, int W) {
  // in: (B, 4*Cout, H, W) -> out: (B, Cout, 2H, 2W)
  const long long hw = static_cast<long long>(H) * W;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < Cout; ++c) {
      T* dst = out + (static_cast<long long>(b) * Cout + c) * 4 * hw;
      for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
          const T* src = in + (static_cast<long long>(b) * 4 * Cout + 4 * c + 2 * di + dj) * hw;
          for (int i = 0; i < H; ++i) {
            T* row = dst + (static_cast<long long>(2 * i + di) * 2 * W) + dj;
            const T* s = src + static_cast<long long>(i) * W;
            for (int j = 0; j < W; ++j) row[2 * j] = s[j];
          }
        }
      }
    }
  }
}

template <typename T>
void s2d_map(const T* in, T* out, int B, int Cin, int H, int W) {
  // in: (B, Cin, 2H, 2W) -> out: (B, 4*Cin, H, W)
  const long long hw = static_cast<long long>(H) * W;
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < Cin; ++c) {
      const T* src = in + (static_cast<long long>(b) * Cin + c) * 4 * hw;
      for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
          T* dst = out + (static_cast<long long>(b) * 4 * Cin + 4 * c + 2 * di + dj) * hw;
          for (int i = 0; i < H; ++i) {
            const T* row = src + (static_cast<long long>(2 * i + di) * 2 * W) + dj;
            T* d = dst + static_cast<long long>(i) * W;
            for (int j = 0; j < W; ++j) d[j] = row[2 * j];
          }
        }
      }
    }
  }
}

}  // namespace detail

// (B, 4C, H, W) -> (B, C, 2H, 2W). Pure permutation, no arithmetic; the
// backward pass is the inverse permutation.
template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& x) {
  detail::require_rank4(x, "depth_to_space");
  const int B = x.dim(0), C4 = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(C4 % 4 == 0, "depth_to_space: channel count " + std::to_string(C4) +
                         " not divisible by 4");
  const int C = C4 / 4;
  std::vector<T> out(x.data().size());
  detail::d2s_map(x.data().data(), out.data(), B, C, H, W);
  return Tensor<T>::make_op({B, C, 2 * H, 2 * W}, std::move(out), {x},
                            [B, C, H, W](TensorNode<T>& self) {
                              auto& in = self.inputs[0];
                              if (!in.requires_grad()) return;
                              std::vector<T> g(self.grad.size());
                              detail::s2d_map(self.grad.data(), g.data(), B, C, H, W);
                              detail::accumulate(in, g);
                            });
}

// (B, C, 2H, 2W) -> (B, 4C, H, W). Exact inverse of depth_to_space under the
// same block layout.
template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& x) {
  detail::require_rank4(x, "space_to_depth");
  const int B = x.dim(0), C = x.dim(1), H2 = x.dim(2), W2 = x.dim(3);
  check(H2 % 2 == 0, "space_to_depth: odd height " + std::to_string(H2));
  check(W2 % 2 == 0, "space_to_depth: odd width " + std::to_string(W2));
  const int H = H2 / 2, W = W2 / 2;
  std::vector<T> out(x.data().size());
  detail::s2d_map(x.data().data(), out.data(), B, C, H, W);
  return Tensor<T>::make_op({B, 4 * C, H, W}, std::move(out), {x},
                            [B, C, H, W](TensorNode<T>& self) {
                              auto& in = self.inputs[0];
                              if (!in.requires_grad()) return;
                              std::vector<T> g(self.grad.size());
                              detail::d2s_map(self.grad.data(), g.data(), B, C, H, W);
                              detail::accumulate(in, g);
                            });
}

}  // namespace spin
