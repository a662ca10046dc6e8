// derevb/models.hpp

// Copyright 2026  The derevb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The two sub-networks of the enhancement pipeline:
//   - s2s: log-magnitude U-Net with a self-attention block in the
//     bottleneck and a tanh output scaled by a learned gain pooled from the
//     bottleneck latent;
//   - ri2ri: real/imaginary U-Net without self-attention, linear output.
// Both down/upsample the frequency axis only, so any frame count works.

#ifndef DEREVB_MODELS_HPP
#define DEREVB_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "derevb/autodiff.hpp"
#include "derevb/errors.hpp"
#include "derevb/rng.hpp"
#include "derevb/stft.hpp"

namespace derevb {

enum class OutputActivation { kTanhGain, kLinear };

struct UNetConfig {
  int depth = 4;
  int base_channels = 16;
  int kernel_f = 3;
  int kernel_t = 3;
  bool use_self_attention = false;
  int in_channels = 1;
  int out_channels = 1;
  OutputActivation output_activation = OutputActivation::kLinear;
  int attn_dim = 64;
  int freq_size = 256;  // frequency extent after the Nyquist drop

  void validate() const {
    if (depth < 1) throw ConfigError("depth", "must be >= 1");
    if (base_channels < 1) throw ConfigError("base_channels", "must be >= 1");
    if (kernel_f < 1 || kernel_f % 2 == 0)
      throw ConfigError("kernel_f", "must be odd and >= 1");
    if (kernel_t < 1 || kernel_t % 2 == 0)
      throw ConfigError("kernel_t", "must be odd and >= 1");
    if (in_channels < 1 || out_channels < 1)
      throw ConfigError("channels", "must be >= 1");
    if (attn_dim < 1) throw ConfigError("attn_dim", "must be >= 1");
    if (freq_size < 1 || freq_size % (1 << depth) != 0)
      throw ConfigError("freq_size",
                        "must be divisible by 2^depth (frequency halves "
                        "once per encoder level)");
  }

  bool operator==(const UNetConfig&) const = default;
};

// Encoder level i maps to base_channels * 2^i feature maps.
inline int level_channels(const UNetConfig& cfg, int level) {
  return cfg.base_channels << level;
}

template <typename T>
class UNet {
 public:
  UNet(UNetConfig cfg, uint64_t seed) : cfg_(cfg) { init(seed); }

  const UNetConfig& config() const { return cfg_; }
  std::vector<ad::Parameter<T>>& parameters() { return params_; }
  const std::vector<ad::Parameter<T>>& parameters() const { return params_; }

  void set_frozen(bool frozen) {
    for (auto& p : params_) p.set_frozen(frozen);
  }
  bool frozen() const {
    for (const auto& p : params_)
      if (!p.frozen()) return false;
    return true;
  }

  // Overwrites every parameter value from a same-config net (fresh grads,
  // fresh freeze state untouched).
  void copy_values_from(const UNet& other) {
    if (!(cfg_ == other.cfg_))
      throw InvalidInput("unet: copy_values_from config mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].tensor->value = other.params_[i].tensor->value;
      params_[i].tensor->grad.clear();
    }
  }

  ad::Tensor<T> param(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw InvalidInput("unet: no parameter named '" + name + "'");
    return params_[it->second].tensor;
  }

  struct Forward {
    ad::Tensor<T> output;
    ad::Tensor<T> gain;  // null unless the head is tanh-with-gain
  };

  Forward forward_detail(const ad::Tensor<T>& x) const {
    check_input(x);
    std::vector<ad::Tensor<T>> skips;
    ad::Tensor<T> e = x;
    for (int i = 0; i < cfg_.depth; ++i) {
      skips.push_back(e);
      const std::string lv = "enc" + std::to_string(i);
      e = ad::conv2d(e, param(lv + ".w"), param(lv + ".b"), 2);
      e = ad::channel_norm(e, param(lv + ".ng"), param(lv + ".nb"));
      e = ad::leaky_relu(e, T(0.2));
    }
    e = ad::conv2d(e, param("mid.w"), param("mid.b"), 1);
    e = ad::channel_norm(e, param("mid.ng"), param("mid.nb"));
    e = ad::leaky_relu(e, T(0.2));
    if (cfg_.use_self_attention) e = attention_block(e);

    ad::Tensor<T> d = e;
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      const std::string lv = "dec" + std::to_string(i);
      d = ad::upsample_freq2(d);
      d = ad::concat(d, skips[i], 0);
      d = ad::conv2d(d, param(lv + ".w"), param(lv + ".b"), 1);
      d = ad::channel_norm(d, param(lv + ".ng"), param(lv + ".nb"));
      d = ad::leaky_relu(d, T(0.2));
    }
    // The head also sees the raw input, so a constructed-weight identity
    // mapping is expressible exactly.
    auto pre = ad::conv2d(ad::concat(d, x, 0), param("head.w"),
                          param("head.b"), 1);

    Forward fw;
    if (cfg_.output_activation == OutputActivation::kLinear) {
      fw.output = pre;
      return fw;
    }
    // tanh bounded output scaled by a gain pooled from the bottleneck.
    auto bounded = ad::tanh_op(pre);
    const std::size_t cb = e->shape[0];
    auto gap = ad::row_mean(ad::reshape(e, {cb, e->size() / cb}));
    auto gv = ad::add(ad::matmul(ad::reshape(gap, {1, cb}), param("gain.w")),
                      param("gain.b"));
    fw.gain = ad::softplus(gv);
    fw.output = ad::scale_by(bounded, fw.gain);
    // |tanh| <= 1, so |output| can never exceed the gain.
    const T g = fw.gain->value[0];
    for (T v : fw.output->value)
      if (std::abs(v) > g * (T(1) + T(1e-5)) + T(1e-6))
        throw NumericalError("unet: output exceeded the learned gain bound");
    return fw;
  }

  ad::Tensor<T> forward(const ad::Tensor<T>& x) const {
    return forward_detail(x).output;
  }

 private:
  void check_input(const ad::Tensor<T>& x) const {
    if (x->shape.size() != 3 ||
        x->shape[0] != static_cast<std::size_t>(cfg_.in_channels) ||
        x->shape[1] != static_cast<std::size_t>(cfg_.freq_size))
      throw ShapeError("unet: expected input (" +
                       std::to_string(cfg_.in_channels) + "," +
                       std::to_string(cfg_.freq_size) + ",T), got " +
                       ad::shape_str(x->shape));
    if (x->shape[2] < 1) throw ShapeError("unet: empty time axis");
  }

  // Tokens are time frames; features are the flattened (channel, freq)
  // planes of the bottleneck.  Residual connection around the projected
  // attention output.
  ad::Tensor<T> attention_block(const ad::Tensor<T>& e) const {
    const std::size_t c = e->shape[0], f = e->shape[1], t = e->shape[2];
    auto tokens = ad::transpose(ad::reshape(e, {c * f, t}));  // T x CF
    auto q = ad::matmul(tokens, param("sa.wq"));
    auto k = ad::matmul(tokens, param("sa.wk"));
    auto v = ad::matmul(tokens, param("sa.wv"));
    auto ctx = ad::scaled_dot_product_attention(q, k, v);    // T x d
    auto proj = ad::matmul(ctx, param("sa.wo"));             // T x CF
    auto y = ad::add(tokens, proj);
    return ad::reshape(ad::transpose(y), {c, f, t});
  }

  void add_param(const std::string& name, ad::Shape shape,
                 std::vector<T> data) {
    index_[name] = params_.size();
    params_.push_back(ad::make_parameter<T>(name, std::move(shape),
                                            std::move(data)));
  }

  std::vector<T> conv_init(Rng& rng, std::size_t co, std::size_t ci,
                           std::size_t kf, std::size_t kt) {
    const double s = std::sqrt(2.0 / static_cast<double>(ci * kf * kt));
    std::vector<T> w(co * ci * kf * kt);
    for (auto& v : w) v = static_cast<T>(rng.normal() * s);
    return w;
  }

  std::vector<T> dense_init(Rng& rng, std::size_t rows, std::size_t cols) {
    const double s = std::sqrt(1.0 / static_cast<double>(rows));
    std::vector<T> w(rows * cols);
    for (auto& v : w) v = static_cast<T>(rng.normal() * s);
    return w;
  }

  void init(uint64_t seed) {
    cfg_.validate();
    Rng rng(seed);
    const auto kf = static_cast<std::size_t>(cfg_.kernel_f);
    const auto kt = static_cast<std::size_t>(cfg_.kernel_t);

    auto add_conv = [&](const std::string& name, std::size_t co,
                        std::size_t ci) {
      add_param(name + ".w", {co, ci, kf, kt}, conv_init(rng, co, ci, kf, kt));
      add_param(name + ".b", {co}, std::vector<T>(co, T(0)));
      add_param(name + ".ng", {co}, std::vector<T>(co, T(1)));
      add_param(name + ".nb", {co}, std::vector<T>(co, T(0)));
    };

    std::size_t ch = static_cast<std::size_t>(cfg_.in_channels);
    for (int i = 0; i < cfg_.depth; ++i) {
      const auto co = static_cast<std::size_t>(level_channels(cfg_, i));
      add_conv("enc" + std::to_string(i), co, ch);
      ch = co;
    }
    const std::size_t cb = ch;  // bottleneck channels
    add_conv("mid", cb, cb);

    if (cfg_.use_self_attention) {
      const std::size_t fb =
          static_cast<std::size_t>(cfg_.freq_size >> cfg_.depth);
      const std::size_t feat = cb * fb;
      const auto d = static_cast<std::size_t>(cfg_.attn_dim);
      add_param("sa.wq", {feat, d}, dense_init(rng, feat, d));
      add_param("sa.wk", {feat, d}, dense_init(rng, feat, d));
      add_param("sa.wv", {feat, d}, dense_init(rng, feat, d));
      add_param("sa.wo", {d, feat}, dense_init(rng, d, feat));
    }

    std::size_t dch = cb;
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      const std::size_t skip_ch =
          i == 0 ? static_cast<std::size_t>(cfg_.in_channels)
                 : static_cast<std::size_t>(level_channels(cfg_, i - 1));
      const std::size_t co =
          i == 0 ? static_cast<std::size_t>(cfg_.base_channels)
                 : static_cast<std::size_t>(level_channels(cfg_, i - 1));
      std::string name = "dec" + std::to_string(i);
      add_param(name + ".w", {co, dch + skip_ch, kf, kt},
                conv_init(rng, co, dch + skip_ch, kf, kt));
      add_param(name + ".b", {co}, std::vector<T>(co, T(0)));
      add_param(name + ".ng", {co}, std::vector<T>(co, T(1)));
      add_param(name + ".nb", {co}, std::vector<T>(co, T(0)));
      dch = co;
    }

    const auto out_ch = static_cast<std::size_t>(cfg_.out_channels);
    const std::size_t head_in =
        dch + static_cast<std::size_t>(cfg_.in_channels);
    add_param("head.w", {out_ch, head_in, kf, kt},
              conv_init(rng, out_ch, head_in, kf, kt));
    add_param("head.b", {out_ch}, std::vector<T>(out_ch, T(0)));

    if (cfg_.output_activation == OutputActivation::kTanhGain) {
      add_param("gain.w", {cb, 1}, std::vector<T>(cb, T(0)));
      // softplus(b) == 1 at init, so the gain starts neutral.
      add_param("gain.b", {1, 1},
                {static_cast<T>(std::log(std::exp(1.0) - 1.0))});
    }
  }

  UNetConfig cfg_;
  std::vector<ad::Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Canonical configurations.

inline UNetConfig s2s_config(int depth, int base_channels, int attn_dim) {
  UNetConfig cfg;
  cfg.depth = depth;
  cfg.base_channels = base_channels;
  cfg.use_self_attention = true;
  cfg.in_channels = 1;
  cfg.out_channels = 1;
  cfg.output_activation = OutputActivation::kTanhGain;
  cfg.attn_dim = attn_dim;
  return cfg;
}

inline UNetConfig ri2ri_config(int depth, int base_channels) {
  UNetConfig cfg;
  cfg.depth = depth;
  cfg.base_channels = base_channels;
  cfg.use_self_attention = false;
  cfg.in_channels = 2;
  cfg.out_channels = 2;
  cfg.output_activation = OutputActivation::kLinear;
  return cfg;
}

inline UNetConfig reference_s2s_config() { return s2s_config(4, 16, 64); }
inline UNetConfig reference_ri2ri_config() { return ri2ri_config(4, 16); }
inline UNetConfig desk_s2s_config() { return s2s_config(2, 8, 32); }
inline UNetConfig desk_ri2ri_config() { return ri2ri_config(2, 8); }

template <typename T>
struct ModelBundle {
  UNet<T> s2s;
  UNet<T> ri2ri;
  StftConfig stft_cfg;

  ModelBundle(UNetConfig s2s_cfg, UNetConfig ri2ri_cfg, StftConfig stft,
              uint64_t seed)
      : s2s(s2s_cfg, Rng::derive(seed, 101).next_u64()),
        ri2ri(ri2ri_cfg, Rng::derive(seed, 202).next_u64()),
        stft_cfg(stft) {
    if (s2s_cfg.freq_size != stft.n_bins - 1 ||
        ri2ri_cfg.freq_size != stft.n_bins - 1)
      throw ConfigError("freq_size",
                        "must equal the bin count minus the dropped Nyquist");
  }

  // Deep copy: fresh tensors with identical values (shared_ptr parameters
  // would otherwise alias between copies).
  ModelBundle clone() const {
    ModelBundle out(s2s.config(), ri2ri.config(), stft_cfg, 0);
    out.s2s.copy_values_from(s2s);
    out.ri2ri.copy_values_from(ri2ri);
    return out;
  }
};

template <typename T>
ModelBundle<T> make_desk_bundle(uint64_t seed, StftConfig stft = {}) {
  return ModelBundle<T>(desk_s2s_config(), desk_ri2ri_config(), stft, seed);
}

// ---------------------------------------------------------------------------
// plane conversions between the stft module's frame-major layout and the
// networks' channel-major C x F x T layout (Nyquist bin dropped / restored)

// (n_bins-1) x n_frames plane from frame-major log-magnitude.
template <typename T>
std::vector<T> log_mag_plane(const MagPhase& mp) {
  const std::size_t bins = static_cast<std::size_t>(mp.config.n_bins);
  const std::size_t f = bins - 1, t = mp.n_frames;
  std::vector<T> plane(f * t);
  for (std::size_t k = 0; k < f; ++k)
    for (std::size_t l = 0; l < t; ++l)
      plane[k * t + l] = static_cast<T>(mp.log_mag[l * bins + k]);
  return plane;
}

// Population standard deviation; the per-utterance normalization scalar.
template <typename T>
double plane_std(const std::vector<T>& plane) {
  if (plane.empty()) throw InvalidInput("plane_std: empty plane");
  double mean = 0.0;
  for (T v : plane) mean += static_cast<double>(v);
  mean /= static_cast<double>(plane.size());
  double var = 0.0;
  for (T v : plane) {
    const double d = static_cast<double>(v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(plane.size());
  return std::max(std::sqrt(var), 1e-12);
}

// Real/imaginary planes (2 x F x T) from a log-magnitude plane plus the
// phase of `phase_src`.
template <typename T>
std::vector<T> ri_plane(const std::vector<T>& log_mag_fxt,
                        const MagPhase& phase_src) {
  const std::size_t bins = static_cast<std::size_t>(phase_src.config.n_bins);
  const std::size_t f = bins - 1, t = phase_src.n_frames;
  if (log_mag_fxt.size() != f * t)
    throw ShapeError("ri_plane: log-magnitude plane size mismatch");
  std::vector<T> ri(2 * f * t);
  for (std::size_t k = 0; k < f; ++k)
    for (std::size_t l = 0; l < t; ++l) {
      const double m = std::exp(static_cast<double>(log_mag_fxt[k * t + l]));
      const double ph = phase_src.phase[l * bins + k];
      ri[k * t + l] = static_cast<T>(m * std::cos(ph));
      ri[f * t + k * t + l] = static_cast<T>(m * std::sin(ph));
    }
  return ri;
}

// Frame-major complex spectrogram from 2 x F x T real/imaginary planes;
// the Nyquist bin is restored as zero.
template <typename T>
Spectrogram spectrogram_from_ri_plane(const std::vector<T>& ri,
                                      const StftConfig& cfg,
                                      std::size_t n_frames,
                                      std::size_t source_len) {
  const std::size_t bins = static_cast<std::size_t>(cfg.n_bins);
  const std::size_t f = bins - 1;
  if (ri.size() != 2 * f * n_frames)
    throw ShapeError("spectrogram_from_ri_plane: plane size mismatch");
  Spectrogram spec;
  spec.config = cfg;
  spec.n_frames = n_frames;
  spec.source_len = source_len;
  spec.values.assign(n_frames * bins, {0.0, 0.0});
  for (std::size_t l = 0; l < n_frames; ++l)
    for (std::size_t k = 0; k < f; ++k)
      spec.values[l * bins + k] = {
          static_cast<double>(ri[k * n_frames + l]),
          static_cast<double>(ri[f * n_frames + k * n_frames + l])};
  return spec;
}

// In-graph L x K x 2 layout for the differentiable synthesis layer, from a
// 2 x F x T network output (zero Nyquist appended).
template <typename T>
ad::Tensor<T> ri_plane_to_frames(const ad::Tensor<T>& ri_2ft) {
  if (ri_2ft->shape.size() != 3 || ri_2ft->shape[0] != 2)
    throw ShapeError("ri_plane_to_frames: expected 2 x F x T");
  auto padded = ad::pad_axis(ri_2ft, 1, std::size_t{0}, std::size_t{1});
  return ad::permute3(padded, {2, 1, 0});
}

// ---------------------------------------------------------------------------
// full inference pipeline

// Runs the s2s stage on a noisy utterance: returns the enhanced
// (denormalized) log-magnitude plane plus the normalization scalar used.
template <typename T>
struct S2sResult {
  std::vector<T> enhanced_log_mag;  // F x T plane
  double sigma = 1.0;
  MagPhase noisy;  // decomposition the plane came from (phase donor)
};

template <typename T>
S2sResult<T> s2s_enhance(const Waveform& noisy, const UNet<T>& s2s,
                         const StftConfig& cfg) {
  S2sResult<T> res;
  res.noisy = decompose(stft(noisy, cfg));
  auto plane = log_mag_plane<T>(res.noisy);
  res.sigma = plane_std(plane);
  const std::size_t f = static_cast<std::size_t>(cfg.n_bins) - 1;
  const std::size_t t = res.noisy.n_frames;
  for (auto& v : plane) v = static_cast<T>(v / res.sigma);
  auto x = ad::make_tensor<T>({1, f, t}, std::move(plane));
  auto y = s2s.forward(x);
  res.enhanced_log_mag.resize(f * t);
  for (std::size_t i = 0; i < res.enhanced_log_mag.size(); ++i)
    res.enhanced_log_mag[i] = static_cast<T>(y->value[i] * res.sigma);
  return res;
}

// Full decoupled pipeline: s2s magnitude enhancement, recombination with
// the noisy phase, ri2ri refinement, synthesis.  Output length matches the
// input.
template <typename T>
Waveform two_stage_enhance(const Waveform& noisy, const UNet<T>& s2s,
                           const UNet<T>& ri2ri, const StftConfig& cfg) {
  const auto stage1 = s2s_enhance(noisy, s2s, cfg);
  const std::size_t f = static_cast<std::size_t>(cfg.n_bins) - 1;
  const std::size_t t = stage1.noisy.n_frames;
  auto ri = ri_plane<T>(stage1.enhanced_log_mag, stage1.noisy);
  auto x = ad::make_tensor<T>({2, f, t}, std::move(ri));
  auto y = ri2ri.forward(x);
  auto spec =
      spectrogram_from_ri_plane<T>(y->value, cfg, t, stage1.noisy.source_len);
  Waveform out = istft(spec);
  out.sample_rate_hz = noisy.sample_rate_hz;
  return out;
}

template <typename T>
Waveform two_stage_enhance(const Waveform& noisy,
                           const ModelBundle<T>& bundle) {
  return two_stage_enhance(noisy, bundle.s2s, bundle.ri2ri, bundle.stft_cfg);
}

}  // namespace derevb

#endif  // DEREVB_MODELS_HPP
