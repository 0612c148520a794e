#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace spin {

using Shape = std::vector<int>;

inline long long shape_numel(const Shape& s) {
  long long n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ')';
  return os.str();
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

inline void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// Thread-local switch controlling whether ops record the backward graph.
class GradMode {
 public:
  static bool enabled() { return flag(); }
  static void set(bool on) { flag() = on; }

 private:
  static bool& flag() {
    thread_local bool f = true;
    return f;
  }
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
class Tensor;

// One node of the computation graph. `inputs` + `backward_fn` are only kept
// while grad recording is on and some input requires grad; otherwise a node
// is a plain value.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first needed; same length as value after
  bool requires_grad = false;
  std::vector<Tensor<T>> inputs;
  std::function<void(TensorNode<T>&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

// Value-semantic handle to a graph node. Copies share the node.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false) {
    for (size_t i = 0; i < shape.size(); ++i) {
      check(shape[i] >= 0, "tensor: negative extent in dimension " + std::to_string(i));
    }
    node_ = std::make_shared<TensorNode<T>>();
    node_->shape = std::move(shape);
    node_->value.assign(static_cast<size_t>(shape_numel(node_->shape)), T(0));
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, T v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data()) x = v;
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<T> values) {
    check(shape_numel(shape) == static_cast<long long>(values.size()),
          "tensor: data length " + std::to_string(values.size()) +
              " does not match shape " + shape_str(shape));
    Tensor t;
    t.node_ = std::make_shared<TensorNode<T>>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    return t;
  }

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  long long numel() const { return static_cast<long long>(node_->value.size()); }

  std::vector<T>& data() { return node_->value; }
  const std::vector<T>& data() const { return node_->value; }

  std::vector<T>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<T>& grad() const {
    check(!node_->grad.empty(), "tensor: gradient has not been populated");
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.empty(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  void zero_grad() {
    node_->ensure_grad();
    std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  T scalar() const {
    check(numel() == 1, "tensor: scalar() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }

  // 4-D accessors, layout (B, C, H, W) row-major.
  T& at4(int b, int c, int h, int w) {
    const Shape& s = node_->shape;
    return node_->value[((static_cast<size_t>(b) * s[1] + c) * s[2] + h) * s[3] + w];
  }
  T at4(int b, int c, int h, int w) const {
    const Shape& s = node_->shape;
    return node_->value[((static_cast<size_t>(b) * s[1] + c) * s[2] + h) * s[3] + w];
  }

  // Value copy detached from the graph.
  Tensor detach() const {
    Tensor t;
    t.node_ = std::make_shared<TensorNode<T>>();
    t.node_->shape = node_->shape;
    t.node_->value = node_->value;
    return t;
  }

  // Reverse-mode sweep from a scalar. Gradients accumulate additively across
  // fan-out; every reachable node that requires grad ends up populated.
  void backward() {
    check(numel() == 1, "backward: loss must be scalar, got shape " + shape_str(shape()));
    std::vector<TensorNode<T>*> order = topo_order();
    node_->ensure_grad();
    node_->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      TensorNode<T>* n = *it;
      if (n->backward_fn) n->backward_fn(*n);
    }
  }

  TensorNode<T>* node() const { return node_.get(); }

  // Graph construction helper used by every op.
  static Tensor make_op(Shape out_shape, std::vector<T> value, std::vector<Tensor> inputs,
                        std::function<void(TensorNode<T>&)> backward_fn) {
    Tensor t = from_data(std::move(out_shape), std::move(value));
    bool rg = false;
    if (GradMode::enabled()) {
      for (const auto& in : inputs) rg = rg || (in.valid() && in.requires_grad());
    }
    if (rg) {
      t.node_->requires_grad = true;
      t.node_->inputs = std::move(inputs);
      t.node_->backward_fn = std::move(backward_fn);
    }
    return t;
  }

 private:
  std::vector<TensorNode<T>*> topo_order() {
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> seen;
    // Iterative post-order DFS over input edges.
    std::vector<std::pair<TensorNode<T>*, size_t>> stack;
    if (seen.insert(node_.get()).second) stack.emplace_back(node_.get(), 0);
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      if (i < n->inputs.size()) {
        TensorNode<T>* child = n->inputs[i].node();
        ++i;
        if (child && seen.insert(child).second) stack.emplace_back(child, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    return order;
  }

  std::shared_ptr<TensorNode<T>> node_;
};

namespace detail {

template <typename T>
inline void accumulate(Tensor<T>& dst, const std::vector<T>& g) {
  if (!dst.requires_grad()) return;
  auto& gd = dst.grad();
  for (size_t i = 0; i < gd.size(); ++i) gd[i] += g[i];
}

template <typename T>
inline void require_rank4(const Tensor<T>& t, const char* op) {
  check(t.rank() == 4, std::string(op) + ": expected rank-4 tensor, got " + shape_str(t.shape()));
}

}  // namespace detail

// ---- elementwise and structural ops ----------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.shape() == b.shape(),
        "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return Tensor<T>::make_op(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    for (auto& in : self.inputs) {
      if (!in.requires_grad()) continue;
      auto& g = in.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.shape() == b.shape(),
        "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return Tensor<T>::make_op(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    auto& a_in = self.inputs[0];
    auto& b_in = self.inputs[1];
    if (a_in.requires_grad()) {
      auto& ga = a_in.grad();
      const auto& bv = b_in.data();
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * bv[i];
    }
    if (b_in.requires_grad()) {
      auto& gb = b_in.grad();
      const auto& av = a_in.data();
      for (size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * av[i];
    }
  });
}

enum class Activation { relu, sigmoid, channel_softmax };

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.data());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return Tensor<T>::make_op(x.shape(), std::move(out), {x}, [](TensorNode<T>& self) {
    auto& in = self.inputs[0];
    if (!in.requires_grad()) return;
    auto& g = in.grad();
    const auto& xv = in.data();
    for (size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T(0)) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.data());
  for (auto& v : out) v = T(1) / (T(1) + std::exp(-v));
  return Tensor<T>::make_op(x.shape(), std::move(out), {x}, [](TensorNode<T>& self) {
    auto& in = self.inputs[0];
    if (!in.requires_grad()) return;
    auto& g = in.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      const T y = self.value[i];
      g[i] += self.grad[i] * y * (T(1) - y);
    }
  });
}

// Softmax over the channel axis of a (B, C, H, W) tensor, per (b, h, w).
template <typename T>
Tensor<T> channel_softmax(const Tensor<T>& x) {
  detail::require_rank4(x, "channel_softmax");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(C >= 1, "channel_softmax: needs at least one channel");
  const long long hw = static_cast<long long>(H) * W;
  std::vector<T> out(x.data().size());
  const auto& xv = x.data();
  for (long long b = 0; b < B; ++b) {
    for (long long p = 0; p < hw; ++p) {
      const long long base = b * C * hw + p;
      T mx = xv[base];
      for (int c = 1; c < C; ++c) mx = std::max(mx, xv[base + c * hw]);
      T sum = T(0);
      for (int c = 0; c < C; ++c) {
        const T e = std::exp(xv[base + c * hw] - mx);
        out[base + c * hw] = e;
        sum += e;
      }
      for (int c = 0; c < C; ++c) out[base + c * hw] /= sum;
    }
  }
  return Tensor<T>::make_op(x.shape(), std::move(out), {x}, [B, C, hw](TensorNode<T>& self) {
    auto& in = self.inputs[0];
    if (!in.requires_grad()) return;
    auto& g = in.grad();
    for (long long b = 0; b < B; ++b) {
      for (long long p = 0; p < hw; ++p) {
        const long long base = b * C * hw + p;
        T dot = T(0);
        for (int c = 0; c < C; ++c) dot += self.grad[base + c * hw] * self.value[base + c * hw];
        for (int c = 0; c < C; ++c) {
          const long long i = base + c * hw;
          g[i] += self.value[i] * (self.grad[i] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
  switch (kind) {
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::channel_softmax: return channel_softmax(x);
  }
  fail("activation: unknown kind");
}

// Channels of a followed by channels of b; spatial and batch extents must agree.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank4(a, "concat_channels");
  detail::require_rank4(b, "concat_channels");
  check(a.dim(0) == b.dim(0), "concat_channels: batch mismatch " + shape_str(a.shape()) +
                                  " vs " + shape_str(b.shape()));
  check(a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
        "concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " +
            shape_str(b.shape()));
  const int B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
  const long long hw = static_cast<long long>(H) * W;
  std::vector<T> out(static_cast<size_t>(B) * (Ca + Cb) * hw);
  const auto& av = a.data();
  const auto& bv = b.data();
  for (long long bb = 0; bb < B; ++bb) {
    std::copy_n(av.begin() + bb * Ca * hw, Ca * hw, out.begin() + bb * (Ca + Cb) * hw);
    std::copy_n(bv.begin() + bb * Cb * hw, Cb * hw, out.begin() + (bb * (Ca + Cb) + Ca) * hw);
  }
  return Tensor<T>::make_op({B, Ca + Cb, H, W}, std::move(out), {a, b},
                            [B, Ca, Cb, hw](TensorNode<T>& self) {
                              auto& a_in = self.inputs[0];
                              auto& b_in = self.inputs[1];
                              for (long long bb = 0; bb < B; ++bb) {
                                const long long base = bb * (Ca + Cb) * hw;
                                if (a_in.requires_grad()) {
                                  auto& ga = a_in.grad();
                                  for (long long i = 0; i < Ca * hw; ++i)
                                    ga[bb * Ca * hw + i] += self.grad[base + i];
                                }
                                if (b_in.requires_grad()) {
                                  auto& gb = b_in.grad();
                                  for (long long i = 0; i < Cb * hw; ++i)
                                    gb[bb * Cb * hw + i] += self.grad[base + Ca * hw + i];
                                }
                              }
                            });
}

// (B, C, H, W) -> (B, 1, H, W), summing over channels.
template <typename T>
Tensor<T> sum_channels(const Tensor<T>& x) {
  detail::require_rank4(x, "sum_channels");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const long long hw = static_cast<long long>(H) * W;
  std::vector<T> out(static_cast<size_t>(B) * hw, T(0));
  const auto& xv = x.data();
  for (long long b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (long long p = 0; p < hw; ++p) out[b * hw + p] += xv[(b * C + c) * hw + p];
  return Tensor<T>::make_op({B, 1, H, W}, std::move(out), {x}, [B, C, hw](TensorNode<T>& self) {
    auto& in = self.inputs[0];
    if (!in.requires_grad()) return;
    auto& g = in.grad();
    for (long long b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        for (long long p = 0; p < hw; ++p) g[(b * C + c) * hw + p] += self.grad[b * hw + p];
  });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T s = T(0);
  for (const T v : x.data()) s += v;
  return Tensor<T>::make_op({1}, {s}, {x}, [](TensorNode<T>& self) {
    auto& in = self.inputs[0];
    if (!in.requires_grad()) return;
    auto& g = in.grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  check(x.numel() > 0, "mean_all: empty tensor");
  T s = T(0);
  for (const T v : x.data()) s += v;
  const T inv = T(1) / static_cast<T>(x.numel());
  s *= inv;
  return Tensor<T>::make_op({1}, {s}, {x}, [inv](TensorNode<T>& self) {
    auto& in = self.inputs[0];
    if (!in.requires_grad()) return;
    auto& g = in.grad();
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

// Zero padding at the bottom/right of the spatial dimensions.
template <typename T>
Tensor<T> pad_hw(const Tensor<T>& x, int pad_h, int pad_w) {
  detail::require_rank4(x, "pad_hw");
  check(pad_h >= 0 && pad_w >= 0, "pad_hw: negative padding");
  if (pad_h == 0 && pad_w == 0) return x;
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = H + pad_h, Wo = W + pad_w;
  std::vector<T> out(static_cast<size_t>(B) * C * Ho * Wo, T(0));
  const auto& xv = x.data();
  for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc)
    for (int h = 0; h < H; ++h)
      std::copy_n(xv.begin() + (bc * H + h) * W, W, out.begin() + (bc * Ho + h) * Wo);
  return Tensor<T>::make_op({B, C, Ho, Wo}, std::move(out), {x},
                            [B, C, H, W, Ho, Wo](TensorNode<T>& self) {
                              auto& in = self.inputs[0];
                              if (!in.requires_grad()) return;
                              auto& g = in.grad();
                              for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc)
                                for (int h = 0; h < H; ++h)
                                  for (int w = 0; w < W; ++w)
                                    g[(bc * H + h) * W + w] += self.grad[(bc * Ho + h) * Wo + w];
                            });
}

// Keep the top-left (out_h, out_w) window of the spatial dimensions.
template <typename T>
Tensor<T> crop_hw(const Tensor<T>& x, int out_h, int out_w) {
  detail::require_rank4(x, "crop_hw");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(out_h >= 1 && out_h <= H && out_w >= 1 && out_w <= W,
        "crop_hw: window " + std::to_string(out_h) + "x" + std::to_string(out_w) +
            " outside input " + shape_str(x.shape()));
  if (out_h == H && out_w == W) return x;
  std::vector<T> out(static_cast<size_t>(B) * C * out_h * out_w);
  const auto& xv = x.data();
  for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc)
    for (int h = 0; h < out_h; ++h)
      std::copy_n(xv.begin() + (bc * H + h) * W, out_w, out.begin() + (bc * out_h + h) * out_w);
  return Tensor<T>::make_op({B, C, out_h, out_w}, std::move(out), {x},
                            [B, C, H, W, out_h, out_w](TensorNode<T>& self) {
                              auto& in = self.inputs[0];
                              if (!in.requires_grad()) return;
                              auto& g = in.grad();
                              for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc)
                                for (int h = 0; h < out_h; ++h)
                                  for (int w = 0; w < out_w; ++w)
                                    g[(bc * H + h) * W + w] +=
                                        self.grad[(bc * out_h + h) * out_w + w];
                            });
}

}  // namespace spin
