#pragma once

#include <vector>

#include "spin/tensor.hpp"

namespace spin {

namespace detail {

// Source coordinate and weights for one output row/column of a x2 bilinear
// upsample (half-pixel centers, edges clamped).
struct Lerp {
  int i0, i1;
  double w0, w1;
};

inline Lerp lerp_coeff(int dst, int src_extent) {
  const double s = (dst + 0.5) / 2.0 - 0.5;
  double sf = std::floor(s);
  int i0 = static_cast<int>(sf);
  double f = s - sf;
  if (i0 < 0) {
    i0 = 0;
    f = 0.0;
  }
  int i1 = i0 + 1;
  if (i1 > src_extent - 1) {
    i1 = src_extent - 1;
    if (i0 > i1) i0 = i1;
    if (i1 == i0) f = 0.0;
  }
  return {i0, i1, 1.0 - f, f};
}

}  // namespace detail

// x2 bilinear upsample with fixed interpolation weights; differentiable
// w.r.t. the input (backward scatters the same weights).
template <typename T>
Tensor<T> upsample2x_bilinear(const Tensor<T>& x) {
  detail::require_rank4(x, "upsample2x_bilinear");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = 2 * H, Wo = 2 * W;
  std::vector<detail::Lerp> ly(Ho), lx(Wo);
  for (int i = 0; i < Ho; ++i) ly[i] = detail::lerp_coeff(i, H);
  for (int j = 0; j < Wo; ++j) lx[j] = detail::lerp_coeff(j, W);
  std::vector<T> out(static_cast<size_t>(B) * C * Ho * Wo);
  const auto& xv = x.data();
  long long o = 0;
  for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc) {
    const T* plane = xv.data() + bc * H * W;
    for (int i = 0; i < Ho; ++i) {
      const auto& a = ly[i];
      for (int j = 0; j < Wo; ++j) {
        const auto& b = lx[j];
        out[o++] = static_cast<T>(a.w0 * (b.w0 * plane[a.i0 * W + b.i0] +
                                          b.w1 * plane[a.i0 * W + b.i1]) +
                                  a.w1 * (b.w0 * plane[a.i1 * W + b.i0] +
                                          b.w1 * plane[a.i1 * W + b.i1]));
      }
    }
  }
  return Tensor<T>::make_op(
      {B, C, Ho, Wo}, std::move(out), {x},
      [B, C, H, W, Ho, Wo, ly = std::move(ly), lx = std::move(lx)](TensorNode<T>& self) {
        auto& in = self.inputs[0];
        if (!in.requires_grad()) return;
        auto& g = in.grad();
        long long o = 0;
        for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc) {
          T* plane = g.data() + bc * H * W;
          for (int i = 0; i < Ho; ++i) {
            const auto& a = ly[i];
            for (int j = 0; j < Wo; ++j) {
              const auto& b = lx[j];
              const T gv = self.grad[o++];
              plane[a.i0 * W + b.i0] += static_cast<T>(a.w0 * b.w0) * gv;
              plane[a.i0 * W + b.i1] += static_cast<T>(a.w0 * b.w1) * gv;
              plane[a.i1 * W + b.i0] += static_cast<T>(a.w1 * b.w0) * gv;
              plane[a.i1 * W + b.i1] += static_cast<T>(a.w1 * b.w1) * gv;
            }
          }
        }
      });
}

// x2 nearest-neighbor upsample; each input element is replicated into a
// 2x2 block.
template <typename T>
Tensor<T> upsample2x_nearest(const Tensor<T>& x) {
  detail::require_rank4(x, "upsample2x_nearest");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = 2 * H, Wo = 2 * W;
  std::vector<T> out(static_cast<size_t>(B) * C * Ho * Wo);
  const auto& xv = x.data();
  for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc) {
    const T* plane = xv.data() + bc * H * W;
    T* op = out.data() + bc * Ho * Wo;
    for (int i = 0; i < Ho; ++i) {
      const T* src = plane + static_cast<long long>(i / 2) * W;
      T* row = op + static_cast<long long>(i) * Wo;
      for (int j = 0; j < Wo; ++j) row[j] = src[j / 2];
    }
  }
  return Tensor<T>::make_op({B, C, Ho, Wo}, std::move(out), {x},
                            [B, C, H, W, Ho, Wo](TensorNode<T>& self) {
                              auto& in = self.inputs[0];
                              if (!in.requires_grad()) return;
                              auto& g = in.grad();
                              for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc) {
                                T* plane = g.data() + bc * H * W;
                                const T* gp = self.grad.data() + bc * Ho * Wo;
                                for (int i = 0; i < Ho; ++i)
                                  for (int j = 0; j < Wo; ++j)
                                    plane[static_cast<long long>(i / 2) * W + j / 2] +=
                                        gp[static_cast<long long>(i) * Wo + j];
                              }
                            });
}

}  // namespace spin
