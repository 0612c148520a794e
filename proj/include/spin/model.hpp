#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spin/conv.hpp"
#include "spin/resample.hpp"
#include "spin/rng.hpp"
#include "spin/subpixel.hpp"
#include "spin/tensor.hpp"

namespace spin {

enum class Guidance { spg, bilinear_input, nearest_input, none };
enum class Downsampler { learnable, bilinear, nearest };

inline std::string to_string(Guidance g) {
  switch (g) {
    case Guidance::spg: return "spg";
    case Guidance::bilinear_input: return "bilinear_input";
    case Guidance::nearest_input: return "nearest_input";
    case Guidance::none: return "none";
  }
  return "?";
}

inline std::string to_string(Downsampler d) {
  switch (d) {
    case Downsampler::learnable: return "learnable";
    case Downsampler::bilinear: return "bilinear";
    case Downsampler::nearest: return "nearest";
  }
  return "?";
}

inline Guidance guidance_from_string(const std::string& s) {
  if (s == "spg") return Guidance::spg;
  if (s == "bilinear_input") return Guidance::bilinear_input;
  if (s == "nearest_input") return Guidance::nearest_input;
  if (s == "none") return Guidance::none;
  fail("unknown guidance mode '" + s + "' (expected spg|bilinear_input|nearest_input|none)");
}

inline Downsampler downsampler_from_string(const std::string& s) {
  if (s == "learnable") return Downsampler::learnable;
  if (s == "bilinear") return Downsampler::bilinear;
  if (s == "nearest") return Downsampler::nearest;
  fail("unknown downsampler mode '" + s + "' (expected learnable|bilinear|nearest)");
}

struct ModelConfig {
  int input_slices = 5;  // c, odd
  std::vector<int> encoder_channels = {32, 64, 128, 256};
  int final2x_channels = 16;  // decoder feature width at 2x resolution
  Guidance guidance = Guidance::spg;
  Downsampler downsampler = Downsampler::learnable;
  int output_classes = 1;

  bool spg_enabled() const { return guidance == Guidance::spg; }

  void validate() const {
    check(input_slices >= 1 && input_slices % 2 == 1,
          "model config: input_slices must be odd and >= 1, got " +
              std::to_string(input_slices));
    check(!encoder_channels.empty(), "model config: encoder_channels must be non-empty");
    for (int c : encoder_channels)
      check(c >= 1, "model config: encoder channel counts must be positive");
    check(final2x_channels >= 1, "model config: final2x_channels must be positive");
    check(output_classes == 1, "model config: only single-class output is supported");
  }
};

struct ParameterCount {
  std::vector<std::pair<std::string, long long>> modules;
  long long total = 0;

  long long module(const std::string& name) const {
    for (const auto& [m, n] : modules)
      if (m == name) return n;
    return 0;
  }
};

namespace detail {

template <typename T>
ConvParams<T> make_conv(int out_ch, int in_ch, int k, int pad, int stride = 1) {
  ConvParams<T> p;
  p.weight = Tensor<T>({out_ch, in_ch, k, k}, true);
  p.bias = Tensor<T>({out_ch}, true);
  p.stride = stride;
  p.padding = pad;
  return p;
}

template <typename T>
ConvParams<T> make_upconv(int out_ch, int in_ch) {
  ConvParams<T> p;
  p.weight = Tensor<T>({out_ch, in_ch, 2, 2}, true);
  p.bias = Tensor<T>({out_ch}, true);
  p.stride = 2;
  p.padding = 0;
  return p;
}

}  // namespace detail

// The SPiN network: a subpixel guidance branch, a U-Net style encoder-decoder
// emitting predictions at 2x the input resolution, and a downsampler that
// recombines each 2x2 block of subpixel predictions into one output value.
// Ablation variants swap the guidance branch for fixed interpolation (or
// nothing) and the learnable downsampler for fixed weights.
template <typename T>
class SpinModel {
 public:
  struct ResBlock {
    ConvParams<T> conv1, conv2;
    ConvParams<T> proj;  // 1x1 shortcut projection, present when channels differ
    bool has_proj = false;
  };

  struct EncLevel {
    ConvParams<T> conv1, conv2;
  };

  struct DecLevel {
    ConvParams<T> up;
    ConvParams<T> conv1, conv2;
  };

  struct Forward {
    Tensor<T> f;   // (B, 1, H, W) final confidence
    Tensor<T> f0;  // (B, 1, 2H, 2W) subpixel confidences
    Tensor<T> h;   // (B, 4, H, W) recombination weights
    Tensor<T> g;   // (B, 24 or 16, 2H, 2W) decoder latent
  };

  struct GuidanceOut {
    Tensor<T> embed2x;  // (B, 8, 2H, 2W)
    Tensor<T> skip1x;   // (B, 8, H, W)
    Tensor<T> skip2x;   // (B, 8, 2H, 2W)
  };

  explicit SpinModel(ModelConfig cfg, uint64_t init_seed = 1) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build();
    init_params(init_seed);
  }

  const ModelConfig& config() const { return cfg_; }

  // Spatial extents must be padded to a multiple of this before the encoder.
  int spatial_divisor() const { return 1 << (static_cast<int>(cfg_.encoder_channels.size()) - 1); }

  int latent_channels() const {
    return cfg_.final2x_channels + (cfg_.guidance != Guidance::none ? 8 : 0);
  }

  // ---- subpixel guidance ----------------------------------------------------

  // Residual feature extraction at 1x, depth-to-space lift to 2x, then the two
  // skip projections feeding the decoder at 1x and 2x resolution.
  GuidanceOut spg_forward(const Tensor<T>& x) const {
    check(cfg_.guidance == Guidance::spg, "spg_forward: model was built without SPG");
    detail::require_rank4(x, "spg_forward");
    const int H = x.dim(2), W = x.dim(3);
    check(H % 2 == 0 && W % 2 == 0, "spg_forward: spatial extents must be even, got " +
                                        shape_str(x.shape()));
    check(H >= 4 && W >= 4,
          "spg_forward: spatial extents too small, need >= 4, got " + shape_str(x.shape()));
    Tensor<T> t = resblock(spg_block1_, x);
    t = resblock(spg_block2_, t);
    t = depth_to_space(t);  // 16 -> 4 channels at 2H x 2W
    t = relu(conv2d(t, spg_post1_));
    Tensor<T> embed2x = conv2d(t, spg_post2_);
    return skips_from_embedding(embed2x);
  }

  // Ablation guidance: a 2x interpolated copy of the center image undergoes a
  // 3x3 convolution, then the same skip projections as SPG.
  GuidanceOut interp_guidance_forward(const Tensor<T>& x) const {
    check(cfg_.guidance == Guidance::bilinear_input || cfg_.guidance == Guidance::nearest_input,
          "interp_guidance_forward: model guidance is not interpolation-based");
    Tensor<T> center = center_slice(x);
    Tensor<T> up = cfg_.guidance == Guidance::bilinear_input ? upsample2x_bilinear(center)
                                                             : upsample2x_nearest(center);
    Tensor<T> embed2x = conv2d(up, guide_embed_);
    return skips_from_embedding(embed2x);
  }

  // ---- encoder-decoder ------------------------------------------------------

  // Contracting path (two 3x3 conv+relu per level, 2x2 max-pool between) and
  // expanding path (2x2 up-convolution, skip concat, two 3x3 conv+relu). The
  // final upsampling stage reaches 2H x 2W; guidance skips are concatenated at
  // 1x before it and at 2x after it, forming the latent g.
  Tensor<T> encoder_decoder_forward(const Tensor<T>& x, const Tensor<T>* skip1x,
                                    const Tensor<T>* skip2x) const {
    detail::require_rank4(x, "encoder_decoder_forward");
    const int div = spatial_divisor();
    check(x.dim(2) % div == 0 && x.dim(3) % div == 0,
          "encoder_decoder_forward: spatial extents " + shape_str(x.shape()) +
              " must be divisible by " + std::to_string(div));
    const bool guided = cfg_.guidance != Guidance::none;
    check(guided == (skip1x != nullptr && skip2x != nullptr),
          "encoder_decoder_forward: guidance skips do not match the model configuration");

    std::vector<Tensor<T>> enc;
    enc.reserve(encoder_.size());
    Tensor<T> t = x;
    for (size_t i = 0; i < encoder_.size(); ++i) {
      if (i > 0) t = max_pool2d(t);
      t = relu(conv2d(t, encoder_[i].conv1));
      t = relu(conv2d(t, encoder_[i].conv2));
      enc.push_back(t);
    }
    Tensor<T> d = enc.back();
    for (size_t k = 0; k < decoder_.size(); ++k) {
      const size_t level = decoder_.size() - 1 - k;  // decoder_[i] lands at enc level i
      d = concat_channels(transposed_conv2d(d, decoder_[level].up), enc[level]);
      d = relu(conv2d(d, decoder_[level].conv1));
      d = relu(conv2d(d, decoder_[level].conv2));
    }
    if (guided) d = concat_channels(d, *skip1x);
    Tensor<T> u = transposed_conv2d(d, up2x_up_);
    u = relu(conv2d(u, up2x_conv1_));
    u = relu(conv2d(u, up2x_conv2_));
    if (guided) u = concat_channels(u, *skip2x);
    return u;
  }

  // One 3x3 filter over the latent, then sigmoid: subpixel confidences.
  Tensor<T> subpixel_head(const Tensor<T>& g) const {
    check(g.rank() == 4 && g.dim(1) == latent_channels(),
          "subpixel_head: latent has " + std::to_string(g.dim(1)) + " channels, expected " +
              std::to_string(latent_channels()));
    return sigmoid(conv2d(g, head_));
  }

  // Per-pixel convex recombination of each 2x2 subpixel block of f0. For the
  // learnable mode the weights h are predicted from z = [g; f0]; the fixed
  // modes use 0.25 everywhere (bilinear) or the top-left subpixel (nearest).
  std::pair<Tensor<T>, Tensor<T>> downsample_to_input(const Tensor<T>& g,
                                                      const Tensor<T>& f0) const {
    check(g.dim(2) == f0.dim(2) && g.dim(3) == f0.dim(3),
          "downsample_to_input: spatial mismatch between latent " + shape_str(g.shape()) +
              " and subpixel prediction " + shape_str(f0.shape()));
    const int B = f0.dim(0), H = f0.dim(2) / 2, W = f0.dim(3) / 2;
    Tensor<T> h;
    if (cfg_.downsampler == Downsampler::learnable) {
      Tensor<T> z = concat_channels(g, f0);
      Tensor<T> zz = space_to_depth(z);
      Tensor<T> a = relu(conv2d(zz, ld_conv1_));
      a = relu(conv2d(a, ld_conv2_));
      h = channel_softmax(conv2d(a, ld_conv3_));
    } else if (cfg_.downsampler == Downsampler::bilinear) {
      h = Tensor<T>::full({B, 4, H, W}, T(0.25));
    } else {
      h = Tensor<T>::zeros({B, 4, H, W});
      auto& hv = h.data();
      const long long hw = static_cast<long long>(H) * W;
      for (int b = 0; b < B; ++b)
        for (long long p = 0; p < hw; ++p) hv[b * 4 * hw + p] = T(1);
    }
    Tensor<T> f = sum_channels(mul(h, space_to_depth(f0)));
    return {h, f};
  }

  // Full forward pass. Inputs of arbitrary spatial extent are zero-padded up
  // to the encoder divisor and every product is cropped back afterwards.
  Forward forward_full(const Tensor<T>& x) const {
    detail::require_rank4(x, "forward_full");
    check(x.dim(1) == cfg_.input_slices,
          "forward_full: input has " + std::to_string(x.dim(1)) + " slices, model expects " +
              std::to_string(cfg_.input_slices));
    const int H = x.dim(2), W = x.dim(3);
    check(H >= 1 && W >= 1, "forward_full: empty spatial extents");
    const int div = spatial_divisor();
    const int Hp = (H + div - 1) / div * div;
    const int Wp = (W + div - 1) / div * div;
    Tensor<T> xin = pad_hw(x, Hp - H, Wp - W);

    Tensor<T> g;
    if (cfg_.guidance == Guidance::none) {
      g = encoder_decoder_forward(xin, nullptr, nullptr);
    } else {
      GuidanceOut go =
          cfg_.guidance == Guidance::spg ? spg_forward(xin) : interp_guidance_forward(xin);
      g = encoder_decoder_forward(xin, &go.skip1x, &go.skip2x);
    }
    Tensor<T> f0 = subpixel_head(g);
    auto [h, f] = downsample_to_input(g, f0);

    Forward out;
    out.f = crop_hw(f, H, W);
    out.f0 = crop_hw(f0, 2 * H, 2 * W);
    out.h = crop_hw(h, H, W);
    out.g = crop_hw(g, 2 * H, 2 * W);
    return out;
  }

  // ---- parameters -----------------------------------------------------------

  std::vector<std::pair<std::string, Tensor<T>*>> named_parameters() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    auto add = [&out](const std::string& name, ConvParams<T>& p) {
      out.emplace_back(name + ".weight", &p.weight);
      out.emplace_back(name + ".bias", &p.bias);
    };
    if (cfg_.guidance == Guidance::spg) {
      add("spg.block1.conv1", spg_block1_.conv1);
      add("spg.block1.conv2", spg_block1_.conv2);
      add("spg.block1.proj", spg_block1_.proj);
      add("spg.block2.conv1", spg_block2_.conv1);
      add("spg.block2.conv2", spg_block2_.conv2);
      add("spg.post1", spg_post1_);
      add("spg.post2", spg_post2_);
      add("spg.skip1", skip1_proj_);
      add("spg.skip2", skip2_proj_);
    } else if (cfg_.guidance != Guidance::none) {
      add("guide.embed", guide_embed_);
      add("guide.skip1", skip1_proj_);
      add("guide.skip2", skip2_proj_);
    }
    for (size_t i = 0; i < encoder_.size(); ++i) {
      add("encoder.l" + std::to_string(i) + ".conv1", encoder_[i].conv1);
      add("encoder.l" + std::to_string(i) + ".conv2", encoder_[i].conv2);
    }
    for (size_t i = 0; i < decoder_.size(); ++i) {
      add("decoder.l" + std::to_string(i) + ".up", decoder_[i].up);
      add("decoder.l" + std::to_string(i) + ".conv1", decoder_[i].conv1);
      add("decoder.l" + std::to_string(i) + ".conv2", decoder_[i].conv2);
    }
    add("decoder.up2x.up", up2x_up_);
    add("decoder.up2x.conv1", up2x_conv1_);
    add("decoder.up2x.conv2", up2x_conv2_);
    add("head.conv", head_);
    if (cfg_.downsampler == Downsampler::learnable) {
      add("ld.conv1", ld_conv1_);
      add("ld.conv2", ld_conv2_);
      add("ld.conv3", ld_conv3_);
    }
    return out;
  }

  std::vector<Tensor<T>*> parameters() {
    std::vector<Tensor<T>*> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (Tensor<T>* p : parameters()) p->zero_grad();
  }

  // Exact per-submodule and total parameter counts, grouped by the name
  // component before the first dot.
  ParameterCount count_parameters() {
    ParameterCount pc;
    for (auto& [name, p] : named_parameters()) {
      const std::string module = name.substr(0, name.find('.'));
      bool found = false;
      for (auto& [m, n] : pc.modules) {
        if (m == module) {
          n += p->numel();
          found = true;
          break;
        }
      }
      if (!found) pc.modules.emplace_back(module, p->numel());
      pc.total += p->numel();
    }
    return pc;
  }

  // He-normal weights, zero biases, drawn in declaration order from one
  // seeded stream so identical seeds give identical models.
  void init_params(uint64_t seed) {
    Rng rng(seed);
    for (auto& [name, p] : named_parameters()) {
      if (p->rank() == 4) {
        const T std_dev =
            std::sqrt(T(2) / static_cast<T>(p->dim(1) * p->dim(2) * p->dim(3)));
        for (auto& v : p->data()) v = std_dev * static_cast<T>(rng.gaussian());
      } else {
        for (auto& v : p->data()) v = T(0);
      }
    }
  }

 private:
  Tensor<T> resblock(const ResBlock& rb, const Tensor<T>& x) const {
    Tensor<T> y = conv2d(x, rb.conv1);
    y = relu(y);
    y = conv2d(y, rb.conv2);
    Tensor<T> s = rb.has_proj ? conv2d(x, rb.proj) : x;
    return relu(add(y, s));
  }

  Tensor<T> center_slice(const Tensor<T>& x) const {
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int mid = (C - 1) / 2;
    const long long hw = static_cast<long long>(H) * W;
    std::vector<T> out(static_cast<size_t>(B) * hw);
    const auto& xv = x.data();
    for (int b = 0; b < B; ++b)
      std::copy_n(xv.begin() + (static_cast<long long>(b) * C + mid) * hw, hw,
                  out.begin() + static_cast<long long>(b) * hw);
    return Tensor<T>::make_op({B, 1, H, W}, std::move(out), {x},
                              [B, C, mid, hw](TensorNode<T>& self) {
                                auto& in = self.inputs[0];
                                if (!in.requires_grad()) return;
                                auto& g = in.grad();
                                for (int b = 0; b < B; ++b)
                                  for (long long p = 0; p < hw; ++p)
                                    g[(static_cast<long long>(b) * C + mid) * hw + p] +=
                                        self.grad[static_cast<long long>(b) * hw + p];
                              });
  }

  GuidanceOut skips_from_embedding(const Tensor<T>& embed2x) const {
    GuidanceOut out;
    out.embed2x = embed2x;
    out.skip1x = conv2d(space_to_depth(embed2x), skip1_proj_);
    out.skip2x = conv2d(embed2x, skip2_proj_);
    return out;
  }

  void build() {
    const int c = cfg_.input_slices;
    const bool guided = cfg_.guidance != Guidance::none;
    if (cfg_.guidance == Guidance::spg) {
      spg_block1_.conv1 = detail::make_conv<T>(16, c, 3, 1);
      spg_block1_.conv2 = detail::make_conv<T>(16, 16, 3, 1);
      spg_block1_.proj = detail::make_conv<T>(16, c, 1, 0);
      spg_block1_.has_proj = true;
      spg_block2_.conv1 = detail::make_conv<T>(16, 16, 3, 1);
      spg_block2_.conv2 = detail::make_conv<T>(16, 16, 3, 1);
      spg_post1_ = detail::make_conv<T>(8, 4, 1, 0);
      spg_post2_ = detail::make_conv<T>(8, 8, 3, 1);
    } else if (guided) {
      guide_embed_ = detail::make_conv<T>(8, 1, 3, 1);
    }
    if (guided) {
      skip1_proj_ = detail::make_conv<T>(8, 32, 3, 1);
      skip2_proj_ = detail::make_conv<T>(8, 8, 3, 1);
    }

    const auto& ch = cfg_.encoder_channels;
    int in_ch = c;
    for (const int out_ch : ch) {
      EncLevel lvl;
      lvl.conv1 = detail::make_conv<T>(out_ch, in_ch, 3, 1);
      lvl.conv2 = detail::make_conv<T>(out_ch, out_ch, 3, 1);
      encoder_.push_back(std::move(lvl));
      in_ch = out_ch;
    }
    for (size_t i = 0; i + 1 < ch.size(); ++i) {
      DecLevel lvl;
      lvl.up = detail::make_upconv<T>(ch[i], ch[i + 1]);
      lvl.conv1 = detail::make_conv<T>(ch[i], 2 * ch[i], 3, 1);
      lvl.conv2 = detail::make_conv<T>(ch[i], ch[i], 3, 1);
      decoder_.push_back(std::move(lvl));
    }
    const int d0 = ch[0] + (guided ? 8 : 0);
    up2x_up_ = detail::make_upconv<T>(cfg_.final2x_channels, d0);
    up2x_conv1_ = detail::make_conv<T>(cfg_.final2x_channels, cfg_.final2x_channels, 3, 1);
    up2x_conv2_ = detail::make_conv<T>(cfg_.final2x_channels, cfg_.final2x_channels, 3, 1);
    head_ = detail::make_conv<T>(1, latent_channels(), 3, 1);
    if (cfg_.downsampler == Downsampler::learnable) {
      const int zc = 4 * (latent_channels() + 1);
      ld_conv1_ = detail::make_conv<T>(16, zc, 3, 1);
      ld_conv2_ = detail::make_conv<T>(16, 16, 3, 1);
      ld_conv3_ = detail::make_conv<T>(4, 16, 1, 0);
    }
  }

  ModelConfig cfg_;
  ResBlock spg_block1_, spg_block2_;
  ConvParams<T> spg_post1_, spg_post2_;
  ConvParams<T> guide_embed_;
  ConvParams<T> skip1_proj_, skip2_proj_;
  std::vector<EncLevel> encoder_;
  std::vector<DecLevel> decoder_;
  ConvParams<T> up2x_up_, up2x_conv1_, up2x_conv2_;
  ConvParams<T> head_;
  ConvParams<T> ld_conv1_, ld_conv2_, ld_conv3_;
};

}  // namespace spin
