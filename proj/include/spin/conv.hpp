#pragma once

#include <vector>

#include "spin/gemm.hpp"
#include "spin/tensor.hpp"

namespace spin {

// Filter bank plus stride/padding. Weight layout is (out_ch, in_ch, kH, kW);
// padding is zero padding on both spatial borders.
template <typename T>
struct ConvParams {
  Tensor<T> weight;
  Tensor<T> bias;
  int stride = 1;
  int padding = 0;
};

namespace detail {

// Grow-only scratch buffers; convolutions are hot enough that per-call
// allocation shows up in profiles.
template <typename T>
std::vector<T>& conv_scratch(int which) {
  thread_local std::vector<T> buf[3];
  return buf[which];
}

// (C, H, W) image -> (C*kH*kW) x (Ho*Wo) patch matrix.
template <typename T>
void im2col(const T* im, int C, int H, int W, int kH, int kW, int stride, int pad, int Ho, int Wo,
            T* col) {
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < kH; ++kh) {
      for (int kw = 0; kw < kW; ++kw) {
        T* dst = col + ((static_cast<long long>(c) * kH + kh) * kW + kw) *
                           (static_cast<long long>(Ho) * Wo);
        for (int ho = 0; ho < Ho; ++ho) {
          const int h = ho * stride - pad + kh;
          if (h < 0 || h >= H) {
            for (int wo = 0; wo < Wo; ++wo) *dst++ = T(0);
            continue;
          }
          const T* src = im + (static_cast<long long>(c) * H + h) * W;
          if (stride == 1 && kw >= pad && kw < kW - pad) {
            // entire row lands in-bounds: straight copy
            const T* s = src + kw - pad;
            for (int wo = 0; wo < Wo; ++wo) *dst++ = s[wo];
            continue;
          }
          for (int wo = 0; wo < Wo; ++wo) {
            const int w = wo * stride - pad + kw;
            *dst++ = (w >= 0 && w < W) ? src[w] : T(0);
          }
        }
      }
    }
  }
}

// Patch-major variant, (Ho*Wo) x (C*kH*kW); feeds the dW GEMM.
template <typename T>
void im2col_t(const T* im, int C, int H, int W, int kH, int kW, int stride, int pad, int Ho,
              int Wo, T* col) {
  const long long K = static_cast<long long>(C) * kH * kW;
  for (int ho = 0; ho < Ho; ++ho) {
    for (int wo = 0; wo < Wo; ++wo) {
      T* dst = col + (static_cast<long long>(ho) * Wo + wo) * K;
      const int w0 = wo * stride - pad;
      const bool w_interior = w0 >= 0 && w0 + kW <= W;
      for (int c = 0; c < C; ++c) {
        const T* plane = im + static_cast<long long>(c) * H * W;
        for (int kh = 0; kh < kH; ++kh) {
          const int h = ho * stride - pad + kh;
          if (h < 0 || h >= H) {
            for (int kw = 0; kw < kW; ++kw) *dst++ = T(0);
            continue;
          }
          const T* row = plane + static_cast<long long>(h) * W;
          if (w_interior) {
            for (int kw = 0; kw < kW; ++kw) *dst++ = row[w0 + kw];
            continue;
          }
          for (int kw = 0; kw < kW; ++kw) {
            const int w = w0 + kw;
            *dst++ = (w >= 0 && w < W) ? row[w] : T(0);
          }
        }
      }
    }
  }
}

// Inverse of im2col: accumulate patch-matrix values back into the image.
template <typename T>
void col2im_acc(const T* col, int C, int H, int W, int kH, int kW, int stride, int pad, int Ho,
                int Wo, T* im) {
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < kH; ++kh) {
      for (int kw = 0; kw < kW; ++kw) {
        const T* src = col + ((static_cast<long long>(c) * kH + kh) * kW + kw) *
                                 (static_cast<long long>(Ho) * Wo);
        if (stride == 1 && kw >= pad && kw < kW - pad) {
          // every column lands in-bounds: contiguous accumulate
          const int off = kw - pad;
          for (int ho = 0; ho < Ho; ++ho) {
            const int h = ho - pad + kh;
            if (h >= 0 && h < H) {
              T* dst = im + (static_cast<long long>(c) * H + h) * W + off;
              for (int wo = 0; wo < Wo; ++wo) dst[wo] += src[wo];
            }
            src += Wo;
          }
          continue;
        }
        for (int ho = 0; ho < Ho; ++ho) {
          const int h = ho * stride - pad + kh;
          if (h < 0 || h >= H) {
            src += Wo;
            continue;
          }
          T* dst = im + (static_cast<long long>(c) * H + h) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int w = wo * stride - pad + kw;
            if (w >= 0 && w < W) dst[w] += src[wo];
          }
          src += Wo;
        }
      }
    }
  }
}

}  // namespace detail

// 2-D cross correlation with bias, differentiable w.r.t. input, weight and
// bias. Forward and backward both run through im2col + GEMM.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const ConvParams<T>& p) {
  detail::require_rank4(x, "conv2d");
  check(p.weight.valid() && p.weight.rank() == 4,
        "conv2d: weight must be rank 4 (out_ch, in_ch, kH, kW)");
  const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = p.weight.dim(0), kH = p.weight.dim(2), kW = p.weight.dim(3);
  check(p.weight.dim(1) == Cin, "conv2d: input has " + std::to_string(Cin) +
                                    " channels but weight expects " +
                                    std::to_string(p.weight.dim(1)));
  check(p.bias.valid() && p.bias.numel() == Cout,
        "conv2d: bias length " + std::to_string(p.bias.numel()) + " != out_ch " +
            std::to_string(Cout));
  check(p.stride >= 1, "conv2d: stride must be positive");
  check(p.padding >= 0, "conv2d: padding must be non-negative");
  const int eh = H + 2 * p.padding - kH;
  const int ew = W + 2 * p.padding - kW;
  check(eh >= 0 && eh % p.stride == 0,
        "conv2d: height " + std::to_string(H) + " incompatible with kernel " +
            std::to_string(kH) + ", pad " + std::to_string(p.padding) + ", stride " +
            std::to_string(p.stride));
  check(ew >= 0 && ew % p.stride == 0,
        "conv2d: width " + std::to_string(W) + " incompatible with kernel " + std::to_string(kW) +
            ", pad " + std::to_string(p.padding) + ", stride " + std::to_string(p.stride));
  const int Ho = eh / p.stride + 1;
  const int Wo = ew / p.stride + 1;
  const long long K = static_cast<long long>(Cin) * kH * kW;
  const long long hw = static_cast<long long>(Ho) * Wo;

  std::vector<T> out(static_cast<size_t>(B) * Cout * hw);
  auto& col = detail::conv_scratch<T>(0);
  col.resize(static_cast<size_t>(K) * hw);
  const auto& xv = x.data();
  const auto& wv = p.weight.data();
  const auto& bv = p.bias.data();
  for (int b = 0; b < B; ++b) {
    detail::im2col(xv.data() + static_cast<long long>(b) * Cin * H * W, Cin, H, W, kH, kW,
                   p.stride, p.padding, Ho, Wo, col.data());
    T* dst = out.data() + static_cast<long long>(b) * Cout * hw;
    for (int co = 0; co < Cout; ++co) {
      T* row = dst + static_cast<long long>(co) * hw;
      const T beta = bv[co];
      for (long long i = 0; i < hw; ++i) row[i] = beta;
    }
    gemm_nn(Cout, static_cast<int>(hw), static_cast<int>(K), wv.data(), col.data(), dst);
  }

  const int stride = p.stride, pad = p.padding;
  return Tensor<T>::make_op(
      {B, Cout, Ho, Wo}, std::move(out), {x, p.weight, p.bias},
      [B, Cin, H, W, Cout, kH, kW, stride, pad, Ho, Wo, K, hw](TensorNode<T>& self) {
        auto& x_in = self.inputs[0];
        auto& w_in = self.inputs[1];
        auto& b_in = self.inputs[2];
        const auto& xv = x_in.data();
        const auto& wv = w_in.data();
        auto& colt = detail::conv_scratch<T>(1);
        auto& colg = detail::conv_scratch<T>(2);
        if (w_in.requires_grad()) colt.resize(static_cast<size_t>(K) * hw);
        if (x_in.requires_grad()) colg.resize(static_cast<size_t>(K) * hw);
        for (int b = 0; b < B; ++b) {
          const T* gy = self.grad.data() + static_cast<long long>(b) * Cout * hw;
          if (w_in.requires_grad()) {
            // dW[Cout x K] += dY[Cout x hw] * col_t[hw x K]
            detail::im2col_t(xv.data() + static_cast<long long>(b) * Cin * H * W, Cin, H, W, kH,
                             kW, stride, pad, Ho, Wo, colt.data());
            gemm_nn(Cout, static_cast<int>(K), static_cast<int>(hw), gy, colt.data(),
                    w_in.grad().data());
          }
          if (b_in.requires_grad()) {
            auto& gb = b_in.grad();
            for (int co = 0; co < Cout; ++co) {
              T s = T(0);
              const T* row = gy + static_cast<long long>(co) * hw;
              for (long long i = 0; i < hw; ++i) s += row[i];
              gb[co] += s;
            }
          }
          if (x_in.requires_grad()) {
            // col_grad[K x hw] = W^T[K x Cout] * dY[Cout x hw], then scatter
            std::fill(colg.begin(), colg.end(), T(0));
            gemm_tn(static_cast<int>(K), static_cast<int>(hw), Cout, wv.data(), gy, colg.data());
            detail::col2im_acc(colg.data(), Cin, H, W, kH, kW, stride, pad, Ho, Wo,
                               x_in.grad().data() + static_cast<long long>(b) * Cin * H * W);
          }
        }
      });
}

namespace detail {

// Reorder (Cout, Cin, 2, 2) weights into a (4*Cout) x Cin matrix whose row
// index is co*4 + 2*di + dj, so the transposed convolution becomes one GEMM
// followed by a block scatter.
template <typename T>
void tconv_reorder_weights(const T* w, int Cout, int Cin, T* wr) {
  for (int co = 0; co < Cout; ++co)
    for (int ci = 0; ci < Cin; ++ci)
      for (int k = 0; k < 4; ++k)
        wr[(static_cast<long long>(co) * 4 + k) * Cin + ci] =
            w[(static_cast<long long>(co) * Cin + ci) * 4 + k];
}

}  // namespace detail

// Transposed convolution restricted to the decoder's only configuration:
// stride 2, 2x2 kernel, no padding. Each input element scatters
// kernel * value into a disjoint 2x2 output block; internally that is a
// 1x1-style GEMM to 4*Cout channels plus a depth-to-space scatter.
template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& x, const ConvParams<T>& p) {
  detail::require_rank4(x, "transposed_conv2d");
  check(p.weight.valid() && p.weight.rank() == 4, "transposed_conv2d: weight must be rank 4");
  const int kH = p.weight.dim(2), kW = p.weight.dim(3);
  check(p.stride == 2 && kH == 2 && kW == 2 && p.padding == 0,
        "transposed_conv2d: unsupported configuration (requires stride 2, 2x2 kernel, pad 0)");
  const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = p.weight.dim(0);
  check(p.weight.dim(1) == Cin, "transposed_conv2d: input has " + std::to_string(Cin) +
                                    " channels but weight expects " +
                                    std::to_string(p.weight.dim(1)));
  check(p.bias.valid() && p.bias.numel() == Cout,
        "transposed_conv2d: bias length " + std::to_string(p.bias.numel()) + " != out_ch " +
            std::to_string(Cout));
  const int Ho = 2 * H, Wo = 2 * W;
  const long long hw = static_cast<long long>(H) * W;
  std::vector<T> out(static_cast<size_t>(B) * Cout * Ho * Wo);
  const auto& xv = x.data();
  const auto& bv = p.bias.data();

  std::vector<T> wr(static_cast<size_t>(4) * Cout * Cin);
  detail::tconv_reorder_weights(p.weight.data().data(), Cout, Cin, wr.data());
  auto& tmp = detail::conv_scratch<T>(0);
  tmp.resize(static_cast<size_t>(4) * Cout * hw);
  for (int b = 0; b < B; ++b) {
    std::fill(tmp.begin(), tmp.end(), T(0));
    gemm_nn(4 * Cout, static_cast<int>(hw), Cin, wr.data(),
            xv.data() + static_cast<long long>(b) * Cin * hw, tmp.data());
    for (int co = 0; co < Cout; ++co) {
      T* o = out.data() + (static_cast<long long>(b) * Cout + co) * Ho * Wo;
      const T beta = bv[co];
      for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
          const T* src = tmp.data() + (static_cast<long long>(co) * 4 + 2 * di + dj) * hw;
          for (int i = 0; i < H; ++i) {
            T* row = o + (static_cast<long long>(2 * i + di)) * Wo + dj;
            const T* s = src + static_cast<long long>(i) * W;
            for (int j = 0; j < W; ++j) row[2 * j] = s[j] + beta;
          }
        }
      }
    }
  }
  return Tensor<T>::make_op(
      {B, Cout, Ho, Wo}, std::move(out), {x, p.weight, p.bias},
      [B, Cin, H, W, Cout, Ho, Wo, hw](TensorNode<T>& self) {
        auto& x_in = self.inputs[0];
        auto& w_in = self.inputs[1];
        auto& b_in = self.inputs[2];
        const auto& xv = x_in.data();

        std::vector<T> wr;
        if (x_in.requires_grad()) {
          wr.resize(static_cast<size_t>(4) * Cout * Cin);
          detail::tconv_reorder_weights(w_in.data().data(), Cout, Cin, wr.data());
        }
        std::vector<T> dwr;
        if (w_in.requires_grad()) dwr.assign(static_cast<size_t>(4) * Cout * Cin, T(0));

        auto& dtmp = detail::conv_scratch<T>(0);
        dtmp.resize(static_cast<size_t>(4) * Cout * hw);
        auto& in_t = detail::conv_scratch<T>(1);
        if (w_in.requires_grad()) in_t.resize(static_cast<size_t>(Cin) * hw);

        for (int b = 0; b < B; ++b) {
          // gather dY into the (4*Cout) x hw layout of the forward GEMM
          for (int co = 0; co < Cout; ++co) {
            const T* gy = self.grad.data() + (static_cast<long long>(b) * Cout + co) * Ho * Wo;
            if (b_in.requires_grad()) {
              T s = T(0);
              for (long long i = 0; i < static_cast<long long>(Ho) * Wo; ++i) s += gy[i];
              b_in.grad()[co] += s;
            }
            for (int di = 0; di < 2; ++di) {
              for (int dj = 0; dj < 2; ++dj) {
                T* dst = dtmp.data() + (static_cast<long long>(co) * 4 + 2 * di + dj) * hw;
                for (int i = 0; i < H; ++i) {
                  const T* row = gy + (static_cast<long long>(2 * i + di)) * Wo + dj;
                  T* d = dst + static_cast<long long>(i) * W;
                  for (int j = 0; j < W; ++j) d[j] = row[2 * j];
                }
              }
            }
          }
          if (w_in.requires_grad()) {
            // dWr[4Cout x Cin] += dtmp[4Cout x hw] * in^T[hw x Cin]
            const T* in = xv.data() + static_cast<long long>(b) * Cin * hw;
            for (int ci = 0; ci < Cin; ++ci)
              for (long long pp = 0; pp < hw; ++pp)
                in_t[pp * Cin + ci] = in[static_cast<long long>(ci) * hw + pp];
            gemm_nn(4 * Cout, Cin, static_cast<int>(hw), dtmp.data(), in_t.data(), dwr.data());
          }
          if (x_in.requires_grad()) {
            // dX[Cin x hw] += Wr^T[Cin x 4Cout] * dtmp[4Cout x hw]
            gemm_tn(Cin, static_cast<int>(hw), 4 * Cout, wr.data(), dtmp.data(),
                    x_in.grad().data() + static_cast<long long>(b) * Cin * hw);
          }
        }
        if (w_in.requires_grad()) {
          auto& gw = w_in.grad();
          for (int co = 0; co < Cout; ++co)
            for (int ci = 0; ci < Cin; ++ci)
              for (int k = 0; k < 4; ++k)
                gw[(static_cast<long long>(co) * Cin + ci) * 4 + k] +=
                    dwr[(static_cast<long long>(co) * 4 + k) * Cin + ci];
        }
      });
}

// 2x2 max pooling with stride 2. Backward routes the gradient to the argmax
// element; ties go to the first element in row-major window order.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x) {
  detail::require_rank4(x, "max_pool2d");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(H % 2 == 0, "max_pool2d: odd height " + std::to_string(H));
  check(W % 2 == 0, "max_pool2d: odd width " + std::to_string(W));
  const int Ho = H / 2, Wo = W / 2;
  std::vector<T> out(static_cast<size_t>(B) * C * Ho * Wo);
  std::vector<long long> arg(out.size());
  const auto& xv = x.data();
  long long o = 0;
  for (long long bc = 0; bc < static_cast<long long>(B) * C; ++bc) {
    const T* plane = xv.data() + bc * H * W;
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        const long long base = static_cast<long long>(2 * i) * W + 2 * j;
        long long best = base;
        T bv = plane[base];
        const long long cand[3] = {base + 1, base + W, base + W + 1};
        for (const long long idx : cand) {
          if (plane[idx] > bv) {
            bv = plane[idx];
            best = idx;
          }
        }
        out[o] = bv;
        arg[o] = bc * H * W + best;
        ++o;
      }
    }
  }
  return Tensor<T>::make_op({B, C, Ho, Wo}, std::move(out), {x},
                            [arg = std::move(arg)](TensorNode<T>& self) {
                              auto& in = self.inputs[0];
                              if (!in.requires_grad()) return;
                              auto& g = in.grad();
                              for (size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
                            });
}

}  // namespace spin
