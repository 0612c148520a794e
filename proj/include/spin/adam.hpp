#pragma once

#include <vector>

#include "spin/tensor.hpp"

namespace spin {

// Bias-corrected Adam. Moment buffers are laid out parallel to the parameter
// list handed to init(); the step counter increases by exactly 1 per apply.
template <typename T>
struct AdamState {
  long long step = 0;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  void init(const std::vector<Tensor<T>*>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const Tensor<T>* p : params) {
      m.emplace_back(p->data().size(), T(0));
      v.emplace_back(p->data().size(), T(0));
    }
  }

  bool initialized() const { return !m.empty(); }
};

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, AdamState<T>& state, T lr) {
  check(lr > T(0), "adam_step: learning rate must be positive");
  if (!state.initialized()) state.init(params);
  check(state.m.size() == params.size(), "adam_step: state does not match parameter list");
  state.step += 1;
  const T b1 = state.beta1, b2 = state.beta2;
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(b1),
                                               static_cast<double>(state.step)));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(b2),
                                               static_cast<double>(state.step)));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<T>& p = *params[pi];
    auto& pm = state.m[pi];
    auto& pv = state.v[pi];
    check(pm.size() == p.data().size(),
          "adam_step: moment buffer size mismatch for parameter " + std::to_string(pi));
    const T* gp = p.has_grad() ? p.grad().data() : nullptr;
    auto& val = p.data();
    for (size_t i = 0; i < val.size(); ++i) {
      const T g = gp ? gp[i] : T(0);
      pm[i] = b1 * pm[i] + (T(1) - b1) * g;
      pv[i] = b2 * pv[i] + (T(1) - b2) * g * g;
      const T mhat = pm[i] / bc1;
      const T vhat = pv[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace spin
