#pragma once

#include <vector>

#include "spin/tensor.hpp"

namespace spin {

// Mean binary cross entropy over every element. Predictions are clamped to
// [1e-7, 1 - 1e-7] before the logs; the gradient is the unclamped formula
// evaluated at the clamped value, so saturated predictions keep a bounded,
// non-zero pull instead of going silent.
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& y, const Tensor<T>& ybar) {
  check(y.shape() == ybar.shape(), "bce_loss: shape mismatch " + shape_str(y.shape()) + " vs " +
                                       shape_str(ybar.shape()));
  check(y.numel() > 0, "bce_loss: empty input");
  const T lo = T(1e-7), hi = T(1) - T(1e-7);
  const auto& yv = y.data();
  const auto& tv = ybar.data();
  // Accumulate in double so float-mode losses keep full precision.
  double acc = 0.0;
  for (size_t i = 0; i < yv.size(); ++i) {
    T yc = yv[i];
    yc = yc < lo ? lo : (yc > hi ? hi : yc);
    acc -= static_cast<double>(tv[i]) * std::log(static_cast<double>(yc)) +
           (1.0 - static_cast<double>(tv[i])) * std::log(1.0 - static_cast<double>(yc));
  }
  const T n = static_cast<T>(yv.size());
  const T loss = static_cast<T>(acc / static_cast<double>(n));
  return Tensor<T>::make_op({1}, {loss}, {y, ybar}, [lo, hi, n](TensorNode<T>& self) {
    auto& y_in = self.inputs[0];
    if (!y_in.requires_grad()) return;
    auto& g = y_in.grad();
    const auto& yv = y_in.data();
    const auto& tv = self.inputs[1].data();
    const T gout = self.grad[0] / n;
    for (size_t i = 0; i < yv.size(); ++i) {
      T yc = yv[i];
      yc = yc < lo ? lo : (yc > hi ? hi : yc);
      g[i] += gout * (yc - tv[i]) / (yc * (T(1) - yc));
    }
  });
}

// Soft Dice loss 1 - (2*sum(y*ybar) + eps) / (sum(y) + sum(ybar) + eps),
// eps = 1, differentiable in y.
template <typename T>
Tensor<T> soft_dice_loss(const Tensor<T>& y, const Tensor<T>& ybar) {
  check(y.shape() == ybar.shape(), "soft_dice_loss: shape mismatch " + shape_str(y.shape()) +
                                       " vs " + shape_str(ybar.shape()));
  check(y.numel() > 0, "soft_dice_loss: empty input");
  const auto& yv = y.data();
  const auto& tv = ybar.data();
  double inter = 0.0, sy = 0.0, st = 0.0;
  for (size_t i = 0; i < yv.size(); ++i) {
    inter += static_cast<double>(yv[i]) * static_cast<double>(tv[i]);
    sy += static_cast<double>(yv[i]);
    st += static_cast<double>(tv[i]);
  }
  const double eps = 1.0;
  const double numer = 2.0 * inter + eps;
  const double denom = sy + st + eps;
  const T loss = static_cast<T>(1.0 - numer / denom);
  return Tensor<T>::make_op({1}, {loss}, {y, ybar}, [numer, denom](TensorNode<T>& self) {
    auto& y_in = self.inputs[0];
    if (!y_in.requires_grad()) return;
    auto& g = y_in.grad();
    const auto& tv = self.inputs[1].data();
    const T gout = self.grad[0];
    const double d2 = denom * denom;
    for (size_t i = 0; i < g.size(); ++i) {
      g[i] += gout * static_cast<T>(-(2.0 * static_cast<double>(tv[i]) * denom - numer) / d2);
    }
  });
}

}  // namespace spin
