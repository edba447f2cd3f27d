// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Full enhancement network: pseudo-frame fusion -> conv encoder -> dual-path
// recurrent bottleneck -> deconv decoder with attention-refined skip
// connections -> Tanh mask applied to the noisy spectrum -> overlap-add.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ofif/common.hpp"
#include "ofif/layers.hpp"
#include "ofif/ofif.hpp"
#include "ofif/stdct.hpp"
#include "ofif/tensor.hpp"
#include "ofif/tfca.hpp"
#include "ofif/tfsm.hpp"
#include "ofif/weights.hpp"

namespace ofif {

struct ModelConfig {
  int input_channels = kOfifMembers;
  std::vector<int> encoder_channels{16, 32, 64, 128, 128};
  std::vector<int> decoder_channels{128, 64, 32, 16, 1};
  int kernel_f = 5;
  int kernel_t = 2;
  int stride_f = 2;
  int encoder_pad_f = 2;
  int decoder_pad_f = 2;
  int decoder_out_pad_f = 1;
  std::vector<int> tfsm_hidden{128, 64, 32};
  int pool_window = 15;
  int dct_points = kDctPoints;
  double bn_eps = 1e-5;
  AttentionMode attention_mode = AttentionMode::kCumulative;

  ConvGeometry encoder_geometry() const {
    return {kernel_f, kernel_t, stride_f, encoder_pad_f, 0};
  }
  ConvGeometry decoder_geometry() const {
    return {kernel_f, kernel_t, stride_f, decoder_pad_f, decoder_out_pad_f};
  }

  int depth() const { return static_cast<int>(encoder_channels.size()); }

  // Frequency size entering encoder block i (i == depth(): bottleneck).
  std::vector<int> encoder_freqs() const {
    std::vector<int> f{dct_points};
    Conv2dParams probe;
    probe.geo = encoder_geometry();
    for (int i = 0; i < depth(); ++i) f.push_back(probe.out_freq(f.back()));
    return f;
  }

  void validate() const {
    auto fail = [](const std::string& m) {
      throw Error(ErrorCode::kInvalidConfiguration, "config: " + m);
    };
    if (dct_points != kDctPoints) {
      fail("dct_points must be " + std::to_string(kDctPoints));
    }
    if (input_channels < 1 || input_channels > 4) fail("input_channels must be 1..4");
    if (encoder_channels.empty()) fail("at least one encoder block is required");
    if (decoder_channels.size() != encoder_channels.size()) {
      fail("decoder must have as many blocks as the encoder");
    }
    for (int c : encoder_channels) if (c < 1) fail("channel counts must be >= 1");
    for (int c : decoder_channels) if (c < 1) fail("channel counts must be >= 1");
    for (int h : tfsm_hidden) if (h < 1) fail("TFSM hidden sizes must be >= 1");
    if (decoder_channels.back() != 1) fail("last decoder block must output 1 channel");
    const int L = depth();
    for (int i = 0; i + 1 < L; ++i) {
      if (decoder_channels[i] != encoder_channels[L - 2 - i]) {
        fail("decoder channels must mirror the encoder");
      }
    }
    if (kernel_f < 1 || kernel_t < 1 || stride_f < 1 || encoder_pad_f < 0 ||
        decoder_pad_f < 0 || decoder_out_pad_f < 0 || pool_window < 1) {
      fail("invalid kernel/stride/padding/pool window");
    }
    const auto ef = encoder_freqs();
    Conv2dParams probe;
    probe.geo = decoder_geometry();
    probe.transposed = true;
    int f = ef.back();
    for (int i = 0; i < L; ++i) {
      f = probe.out_freq(f);
      if (f != ef[L - 1 - i]) {
        fail("decoder block " + std::to_string(i) + " produces " +
             std::to_string(f) + " bins, skip connection has " +
             std::to_string(ef[L - 1 - i]));
      }
    }
  }

  nlohmann::json to_json() const {
    return {{"input_channels", input_channels},
            {"encoder_channels", encoder_channels},
            {"decoder_channels", decoder_channels},
            {"kernel", {kernel_f, kernel_t}},
            {"stride", {stride_f, 1}},
            {"encoder_pad_f", encoder_pad_f},
            {"decoder_pad_f", decoder_pad_f},
            {"decoder_out_pad_f", decoder_out_pad_f},
            {"tfsm_hidden", tfsm_hidden},
            {"pool_window", pool_window},
            {"dct_points", dct_points},
            {"bn_eps", bn_eps},
            {"attention_mode", std::string(attention_mode_name(attention_mode))}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
      c.input_channels = j.value("input_channels", c.input_channels);
      c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
      c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
      if (j.contains("kernel")) {
        auto k = j.at("kernel").get<std::vector<int>>();
        if (k.size() != 2) throw Error(ErrorCode::kInvalidConfiguration, "config: kernel must be [k_f, k_t]");
        c.kernel_f = k[0];
        c.kernel_t = k[1];
      }
      if (j.contains("stride")) {
        auto s = j.at("stride").get<std::vector<int>>();
        if (s.size() != 2 || s[1] != 1) {
          throw Error(ErrorCode::kInvalidConfiguration,
                      "config: stride must be [s_f, 1]");
        }
        c.stride_f = s[0];
      }
      c.encoder_pad_f = j.value("encoder_pad_f", c.encoder_pad_f);
      c.decoder_pad_f = j.value("decoder_pad_f", c.decoder_pad_f);
      c.decoder_out_pad_f = j.value("decoder_out_pad_f", c.decoder_out_pad_f);
      c.tfsm_hidden = j.value("tfsm_hidden", c.tfsm_hidden);
      c.pool_window = j.value("pool_window", c.pool_window);
      c.dct_points = j.value("dct_points", c.dct_points);
      c.bn_eps = j.value("bn_eps", c.bn_eps);
      if (j.contains("attention_mode")) {
        c.attention_mode =
            parse_attention_mode(j.at("attention_mode").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidConfiguration,
                  std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

inline ModelConfig load_config(const std::string& path) {
  const std::string text = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfiguration,
                "config '" + path + "': " + e.what());
  }
  return ModelConfig::from_json(j);
}

inline void save_config(const ModelConfig& c, const std::string& path) {
  write_file_bytes(path, c.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Tensor layout

inline void append_block_specs(std::vector<TensorSpec>& specs,
                               const std::string& prefix, int channels,
                               const std::string& module, bool with_prelu) {
  using Init = TensorSpec::Init;
  specs.push_back({prefix + "bn.gamma", {channels}, module});
  specs.push_back({prefix + "bn.beta", {channels}, module});
  specs.push_back({prefix + "bn.mean", {channels}, module, false, Init::kZero});
  specs.push_back({prefix + "bn.var", {channels}, module, false, Init::kOne});
  if (with_prelu) specs.push_back({prefix + "prelu.slope", {channels}, module});
}

// Every tensor of the model in canonical order.
inline std::vector<TensorSpec> model_tensor_specs(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<TensorSpec> specs;
  auto append = [&specs](std::vector<TensorSpec> more) {
    for (auto& s : more) specs.push_back(std::move(s));
  };
  const int L = cfg.depth();
  append(tfca_tensor_specs("ofif.tfca.", cfg.input_channels, "ofif_tfca"));

  int in_ch = cfg.input_channels;
  for (int i = 0; i < L; ++i) {
    const std::string p = "enc." + std::to_string(i) + ".";
    const int out_ch = cfg.encoder_channels[i];
    specs.push_back({p + "conv.w",
                     conv_weight_dims(in_ch, out_ch, cfg.encoder_geometry(), false),
                     "encoder"});
    specs.push_back({p + "conv.b", {out_ch}, "encoder"});
    append_block_specs(specs, p, out_ch, "encoder", true);
    in_ch = out_ch;
  }
  for (int i = 0; i < L; ++i) {
    append(tfca_tensor_specs("skip." + std::to_string(i) + ".tfca.",
                             cfg.encoder_channels[i], "skip_tfca"));
  }
  for (std::size_t k = 0; k < cfg.tfsm_hidden.size(); ++k) {
    append(tfsm_tensor_specs("tfsm." + std::to_string(k) + ".",
                             cfg.encoder_channels.back(), cfg.tfsm_hidden[k]));
  }
  int stream_ch = cfg.encoder_channels.back();
  for (int i = 0; i < L; ++i) {
    const std::string p = "dec." + std::to_string(i) + ".";
    const int skip_ch = cfg.encoder_channels[L - 1 - i];
    const int out_ch = cfg.decoder_channels[i];
    const bool last = i == L - 1;
    specs.push_back({p + "deconv.w",
                     conv_weight_dims(stream_ch + skip_ch, out_ch,
                                      cfg.decoder_geometry(), true),
                     "decoder"});
    specs.push_back({p + "deconv.b", {out_ch}, "decoder"});
    append_block_specs(specs, p, out_ch, "decoder", !last);
    if (!last) append(tfca_tensor_specs(p + "tfca.", out_ch, "decoder_tfca"));
    stream_ch = out_ch;
  }
  return specs;
}

// Deterministic uniform [-0.1, 0.1] weights; batch-norm statistics 0 / 1.
inline WeightStore init_random_weights(const ModelConfig& cfg,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (const auto& s : model_tensor_specs(cfg)) {
    WeightTensor t{s.name, s.dims, std::vector<float>(s.numel())};
    for (float& v : t.data) {
      switch (s.init) {
        case TensorSpec::Init::kZero: v = 0.0f; break;
        case TensorSpec::Init::kOne: v = 1.0f; break;
        case TensorSpec::Init::kUniform: {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          v = static_cast<float>(-0.1 + 0.2 * u);
          break;
        }
      }
    }
    store.add(std::move(t));
  }
  return store;
}

struct ParamBreakdown {
  std::vector<std::pair<std::string, std::size_t>> modules;  // learnable
  std::size_t total = 0;
  std::size_t buffers = 0;  // batch-norm running statistics

  std::size_t module(const std::string& name) const {
    for (const auto& [n, c] : modules) if (n == name) return c;
    return 0;
  }
};

inline ParamBreakdown count_params(const std::vector<TensorSpec>& specs) {
  ParamBreakdown b;
  for (const auto& s : specs) {
    if (!s.learnable) {
      b.buffers += s.numel();
      continue;
    }
    b.total += s.numel();
    auto it = std::find_if(b.modules.begin(), b.modules.end(),
                           [&](const auto& m) { return m.first == s.module; });
    if (it == b.modules.end()) {
      b.modules.emplace_back(s.module, s.numel());
    } else {
      it->second += s.numel();
    }
  }
  return b;
}

// Rejects missing, mis-shaped and unexpected tensors, naming the first one.
inline void validate_weights(const ModelConfig& cfg, const WeightStore& store) {
  const auto specs = model_tensor_specs(cfg);
  std::unordered_map<std::string, bool> expected;
  for (const auto& s : specs) {
    expected.emplace(s.name, true);
    const WeightTensor* t = store.find(s.name);
    require(t != nullptr, ErrorCode::kInvalidWeights,
            "missing tensor '" + s.name + "'");
    require(t->dims == s.dims, ErrorCode::kInvalidWeights,
            "tensor '" + s.name + "' has shape " + shape_string(t->dims) +
                ", expected " + shape_string(s.dims));
    if (!std::all_of(t->data.begin(), t->data.end(),
                     [](float v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kInvalidWeights,
                  "tensor '" + s.name + "' contains a non-finite value");
    }
  }
  for (const auto& t : store.tensors()) {
    require(expected.contains(t.name), ErrorCode::kInvalidWeights,
            "unexpected tensor '" + t.name + "'");
  }
}

// ---------------------------------------------------------------------------
// Built model

struct EncoderBlock {
  Conv2dParams conv;
  BatchNormParams bn;
  std::vector<double> prelu;
  TfcaParams skip_tfca;
  int in_freq = 0;
  int out_freq = 0;
};

struct DecoderBlock {
  Conv2dParams deconv;
  BatchNormParams bn;
  std::vector<double> prelu;  // empty on the last block (Tanh)
  std::optional<TfcaParams> tfca;
  int in_freq = 0;
  int out_freq = 0;
  int skip_index = 0;

  bool last() const { return prelu.empty(); }
};

class Model {
 public:
  const ModelConfig& config() const { return config_; }
  const ParamBreakdown& params() const { return params_; }
  std::size_t param_count() const { return params_.total; }

  const TfcaParams& ofif_tfca() const { return ofif_tfca_; }
  const std::vector<EncoderBlock>& encoder() const { return encoder_; }
  const std::vector<TfsmParams>& tfsm() const { return tfsm_; }
  const std::vector<DecoderBlock>& decoder() const { return decoder_; }

  Model with_mode(AttentionMode mode) const {
    Model m = *this;
    m.config_.attention_mode = mode;
    return m;
  }

 private:
  friend Model build_model(const ModelConfig&, const WeightStore&);

  ModelConfig config_;
  ParamBreakdown params_;
  TfcaParams ofif_tfca_;
  std::vector<EncoderBlock> encoder_;
  std::vector<TfsmParams> tfsm_;
  std::vector<DecoderBlock> decoder_;
};

inline BatchNormParams load_batchnorm(const WeightStore& store,
                                      const std::string& prefix, double eps) {
  return make_batchnorm_params(store.get(prefix + "bn.gamma").data,
                               store.get(prefix + "bn.beta").data,
                               store.get(prefix + "bn.mean").data,
                               store.get(prefix + "bn.var").data, eps);
}

inline Model build_model(const ModelConfig& cfg, const WeightStore& store) {
  cfg.validate();
  validate_weights(cfg, store);
  Model m;
  m.config_ = cfg;
  m.params_ = count_params(model_tensor_specs(cfg));
  m.ofif_tfca_ = make_tfca_params(store, "ofif.tfca.", cfg.input_channels,
                                  cfg.pool_window);
  const int L = cfg.depth();
  const auto freqs = cfg.encoder_freqs();
  for (int i = 0; i < L; ++i) {
    const std::string p = "enc." + std::to_string(i) + ".";
    EncoderBlock b;
    b.conv = make_conv_params(store.get(p + "conv.w"), store.get(p + "conv.b"),
                              cfg.encoder_geometry(), false);
    b.bn = load_batchnorm(store, p, cfg.bn_eps);
    b.prelu = to_double(store.get(p + "prelu.slope").data);
    b.skip_tfca = make_tfca_params(store, "skip." + std::to_string(i) + ".tfca.",
                                   cfg.encoder_channels[i], cfg.pool_window);
    b.in_freq = freqs[i];
    b.out_freq = freqs[i + 1];
    m.encoder_.push_back(std::move(b));
  }
  for (std::size_t k = 0; k < cfg.tfsm_hidden.size(); ++k) {
    m.tfsm_.push_back(make_tfsm_params(store, "tfsm." + std::to_string(k) + ".",
                                       cfg.encoder_channels.back(),
                                       cfg.tfsm_hidden[k]));
  }
  for (int i = 0; i < L; ++i) {
    const std::string p = "dec." + std::to_string(i) + ".";
    DecoderBlock b;
    b.deconv = make_conv_params(store.get(p + "deconv.w"),
                                store.get(p + "deconv.b"),
                                cfg.decoder_geometry(), true);
    b.bn = load_batchnorm(store, p, cfg.bn_eps);
    if (i != L - 1) {
      b.prelu = to_double(store.get(p + "prelu.slope").data);
      b.tfca = make_tfca_params(store, p + "tfca.", cfg.decoder_channels[i],
                                cfg.pool_window);
    }
    b.skip_index = L - 1 - i;
    b.in_freq = freqs[L - i];
    b.out_freq = freqs[L - 1 - i];
    m.decoder_.push_back(std::move(b));
  }
  return m;
}

inline Model random_model(const ModelConfig& cfg, std::uint64_t seed) {
  return build_model(cfg, init_random_weights(cfg, seed));
}

// ---------------------------------------------------------------------------
// Offline inference

// Length after zero-padding the trailing partial frame: at least one window,
// and a whole number of hops past it.
inline std::size_t padded_length(std::size_t len) {
  if (len <= static_cast<std::size_t>(kWindow)) return kWindow;
  const std::size_t extra = len - kWindow;
  return kWindow + (extra + kHop - 1) / kHop * kHop;
}

inline void apply_mask_frame(std::span<const float> mask,
                             std::span<const float> noisy,
                             std::span<float> out) {
  for (std::size_t k = 0; k < mask.size(); ++k) out[k] = mask[k] * noisy[k];
}

inline FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
  require(a.freq() == b.freq() && a.frames() == b.frames(),
          ErrorCode::kInvalidConfiguration, "concat shape mismatch");
  FeatureMap out(a.channels() + b.channels(), a.freq(), a.frames());
  for (int t = 0; t < a.frames(); ++t) {
    auto dst = out.frame(t);
    std::copy(a.frame(t).begin(), a.frame(t).end(), dst.begin());
    std::copy(b.frame(t).begin(), b.frame(t).end(),
              dst.begin() + static_cast<std::ptrdiff_t>(a.frame_size()));
  }
  return out;
}

struct ForwardTrace {
  std::vector<int> ofif_shape;        // (C, F, T) of the stacked input
  std::vector<int> bottleneck_shape;  // (C, F, T) leaving the encoder
};

struct EnhanceResult {
  std::vector<float> enhanced;
  Spectrogram mask;
  std::size_t clamped = 0;
};

// Mask * noisy spectrum -> overlap-add, truncated to out_len.
inline EnhanceResult synthesize_masked(const Spectrogram& noisy,
                                       Spectrogram mask, std::size_t out_len) {
  require(mask.bins() == noisy.bins() && mask.frames() == noisy.frames(),
          ErrorCode::kInvalidConfiguration, "mask/spectrum shape mismatch");
  Spectrogram enhanced(noisy.bins(), noisy.frames());
  for (int t = 0; t < noisy.frames(); ++t) {
    apply_mask_frame(mask.frame(t), noisy.frame(t), enhanced.frame(t));
  }
  const std::size_t covered =
      static_cast<std::size_t>(noisy.frames() - 1) * kHop + kWindow;
  OlaResult ola = istdct_ola(enhanced, std::min(out_len, covered));
  ola.samples.resize(out_len, 0.0f);
  return {std::move(ola.samples), std::move(mask), ola.clamped};
}

inline EnhanceResult model_forward(const Model& model,
                                   std::span<const float> wave,
                                   std::optional<AttentionMode> mode_override = {},
                                   ForwardTrace* trace = nullptr) {
  const auto& cfg = model.config();
  const AttentionMode mode = mode_override.value_or(cfg.attention_mode);
  require(wave.size() >= static_cast<std::size_t>(kWindow), ErrorCode::kTooShort,
          "input of " + std::to_string(wave.size()) +
              " samples is shorter than one window");
  std::vector<float> padded(wave.begin(), wave.end());
  padded.resize(padded_length(wave.size()), 0.0f);

  const FeatureMap stacked = ofif_stack(padded, cfg.input_channels);
  const Spectrogram noisy = ofif_channel(stacked, 0);
  if (trace) trace->ofif_shape = {stacked.channels(), stacked.freq(), stacked.frames()};

  FeatureMap x = ofif_fuse(stacked, model.ofif_tfca(), mode);
  std::vector<FeatureMap> skips;
  for (const auto& b : model.encoder()) {
    x = conv2d_causal(x, b.conv);
    x = batchnorm_eval(std::move(x), b.bn);
    for (int t = 0; t < x.frames(); ++t) prelu_frame(b.prelu, x.freq(), x.frame(t));
    skips.push_back(tfca_forward(x, b.skip_tfca, mode));
  }
  if (trace) trace->bottleneck_shape = {x.channels(), x.freq(), x.frames()};
  for (const auto& blk : model.tfsm()) x = tfsm_block(x, blk);

  for (const auto& b : model.decoder()) {
    x = deconv2d_causal(concat_channels(x, skips[b.skip_index]), b.deconv);
    x = batchnorm_eval(std::move(x), b.bn);
    if (b.last()) {
      x = tanh_act(std::move(x));
    } else {
      for (int t = 0; t < x.frames(); ++t) prelu_frame(b.prelu, x.freq(), x.frame(t));
      x = tfca_forward(x, *b.tfca, mode);
    }
  }

  Spectrogram mask(kDctPoints, x.frames());
  mask.data() = x.data();
  return synthesize_masked(noisy, std::move(mask), wave.size());
}

// ---------------------------------------------------------------------------
// Training objective and evaluation metric

// Clamped ratio mask: clamp(S X / (X^2 + eps), -1, 1).
inline Spectrogram target_mask(const Spectrogram& clean,
                               const Spectrogram& noisy, double eps = 1e-8) {
  require(clean.bins() == noisy.bins() && clean.frames() == noisy.frames(),
          ErrorCode::kInvalidConfiguration, "spectrogram shape mismatch");
  Spectrogram m(noisy.bins(), noisy.frames());
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    const double s = clean.data()[i];
    const double x = noisy.data()[i];
    m.data()[i] = static_cast<float>(std::clamp(s * x / (x * x + eps), -1.0, 1.0));
  }
  return m;
}

struct LossComponents {
  double waveform_l1 = 0.0;  // mean |s_hat - s|
  double mask_mse = 0.0;     // mean (M_hat - M)^2
  double total() const { return waveform_l1 + mask_mse; }
};

inline LossComponents loss_fn(std::span<const float> est,
                              std::span<const float> ref,
                              std::span<const float> est_mask,
                              std::span<const float> ref_mask) {
  require(est.size() == ref.size() && !est.empty(),
          ErrorCode::kUndefinedInput, "waveform lengths differ or are empty");
  require(est_mask.size() == ref_mask.size(), ErrorCode::kUndefinedInput,
          "mask sizes differ");
  LossComponents l;
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    s += std::abs(static_cast<double>(est[i]) - ref[i]);
  }
  l.waveform_l1 = s / static_cast<double>(est.size());
  if (!est_mask.empty()) {
    double m = 0.0;
    for (std::size_t i = 0; i < est_mask.size(); ++i) {
      const double d = static_cast<double>(est_mask[i]) - ref_mask[i];
      m += d * d;
    }
    l.mask_mse = m / static_cast<double>(est_mask.size());
  }
  return l;
}

inline constexpr double kSiSnrCapDb = 120.0;

// Scale-invariant SNR (dB) of `est` against target `ref`, clamped to
// [-120, 120].
inline double si_snr(std::span<const float> est, std::span<const float> ref) {
  require(est.size() == ref.size() && !est.empty(), ErrorCode::kUndefinedInput,
          "SI-SNR needs equal, non-zero lengths");
  const double n = static_cast<double>(est.size());
  double me = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mr += ref[i];
  }
  me /= n;
  mr /= n;
  double dot = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double e = est[i] - me;
    const double r = ref[i] - mr;
    dot += e * r;
    rr += r * r;
  }
  require(rr > 0.0, ErrorCode::kUndefinedInput,
          "SI-SNR undefined for a zero (or constant) target");
  const double alpha = dot / rr;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double st = alpha * (ref[i] - mr);
    const double e = (est[i] - me) - st;
    target += st * st;
    noise += e * e;
  }
  if (noise <= 0.0) return kSiSnrCapDb;
  if (target <= 0.0) return -kSiSnrCapDb;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSnrCapDb,
                    kSiSnrCapDb);
}

}  // namespace ofif
