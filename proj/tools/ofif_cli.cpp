// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// ofif_cli: offline/streaming enhancement, causality verification, weight
// tooling and metrics.
//
// Exit codes: 0 ok, 1 verification failed, 2 audio format, 3 weights,
// 4 I/O, 5 configuration, 6 invalid input, 64 usage.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ofif/engine.hpp"

namespace {

using namespace ofif;

enum class LogLevel { kQuiet, kInfo, kTrace };

LogLevel log_level() {
  const char* env = std::getenv("OFIF_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "trace") return LogLevel::kTrace;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& msg) {
  if (log_level() >= level) std::cerr << msg << '\n';
}

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 64;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat: return 2;
    case ErrorCode::kInvalidWeights: return 3;
    case ErrorCode::kIo: return 4;
    case ErrorCode::kInvalidConfiguration: return 5;
    case ErrorCode::kTooShort:
    case ErrorCode::kStreamClosed:
    case ErrorCode::kUndefinedInput: return 6;
  }
  return 6;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(std::string_view code, const std::string& msg, int exit_code) {
  std::cerr << "ERR:" << code << ": " << one_line(msg) << '\n';
  return exit_code;
}

ModelConfig config_or_default(const std::string& path) {
  return path.empty() ? ModelConfig{} : load_config(path);
}

Model load_model(const std::string& weights, const std::string& config) {
  return build_model(config_or_default(config), load_weights(weights));
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct EnhanceArgs {
  std::string in, out, weights, config, mode;
};

int run_enhance(const EnhanceArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const Model model = load_model(a.weights, a.config);
  const Wav wav = read_wav(a.in);
  std::optional<AttentionMode> mode;
  if (!a.mode.empty()) mode = parse_attention_mode(a.mode);
  const EnhanceResult r = model_forward(model, wav.samples, mode);
  write_wav(a.out, r.enhanced);

  const auto& m = r.mask.data();
  double lo = m.empty() ? 0.0 : m.front(), hi = lo, sum = 0.0;
  for (float v : m) {
    lo = std::min<double>(lo, v);
    hi = std::max<double>(hi, v);
    sum += v;
  }
  log(LogLevel::kInfo, "mask " + std::to_string(r.mask.bins()) + "x" +
                           std::to_string(r.mask.frames()) + " min " +
                           fmt("%.6f", lo) + " max " + fmt("%.6f", hi) +
                           " mean " + fmt("%.6f", m.empty() ? 0.0 : sum / m.size()));
  if (r.clamped > 0) {
    log(LogLevel::kInfo, "overlap-add clamped samples: " + std::to_string(r.clamped));
  }
  log(LogLevel::kInfo, "elapsed: " + fmt("%.1f", elapsed_ms(start)) + " ms");
  return 0;
}

struct StreamArgs {
  std::string in, out, weights, config;
  int chunk_ms = 8;
  bool report_latency = false;
};

int run_stream(const StreamArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const Model model =
      load_model(a.weights, a.config).with_mode(AttentionMode::kCumulative);
  const Wav wav = read_wav(a.in);
  const std::size_t chunk = static_cast<std::size_t>(a.chunk_ms) * kSampleRate / 1000;

  StreamState st(model);
  std::vector<float> out;
  out.reserve(wav.samples.size());
  std::uint64_t latency = 0;
  const std::span<const float> in(wav.samples);
  for (std::size_t pos = 0; pos < in.size(); pos += chunk) {
    auto piece = stream_push(st, model, in.subspan(pos, std::min(chunk, in.size() - pos)));
    out.insert(out.end(), piece.begin(), piece.end());
    if (st.consumed() >= static_cast<std::uint64_t>(kWindow)) {
      latency = std::max(latency, st.consumed() - st.emitted());
    }
    log(LogLevel::kTrace, "push " + std::to_string(pos) + ": consumed " +
                              std::to_string(st.consumed()) + " emitted " +
                              std::to_string(st.emitted()));
  }
  auto tail = stream_flush(st, model);
  out.insert(out.end(), tail.begin(), tail.end());
  write_wav(a.out, out);

  if (a.report_latency) {
    if (st.consumed() < static_cast<std::uint64_t>(kWindow)) {
      std::cout << "algorithmic delay: undetermined (input shorter than one window)\n";
    } else {
      std::cout << "algorithmic delay: "
                << fmt("%.1f", 1000.0 * static_cast<double>(latency) / kSampleRate)
                << " ms\n";
    }
  }
  log(LogLevel::kInfo, "frames: " + std::to_string(st.frames()) + ", elapsed: " +
                           fmt("%.1f", elapsed_ms(start)) + " ms");
  return 0;
}

struct VerifyArgs {
  std::string weights, config, mode;
  std::optional<std::uint64_t> random_seed;
  int trials = 100;
  std::uint64_t trial_seed = 1;
  int frames = 100;
};

int run_verify(const VerifyArgs& a) {
  const ModelConfig cfg = config_or_default(a.config);
  const Model model = a.random_seed ? random_model(cfg, *a.random_seed)
                                    : build_model(cfg, load_weights(a.weights));
  CausalityOptions opt;
  opt.length = static_cast<std::size_t>(a.frames - 1) * kHop + kWindow;
  if (!a.mode.empty()) opt.mode = parse_attention_mode(a.mode);

  std::mt19937_64 rng(a.trial_seed);
  int failures = 0;
  for (int i = 0; i < a.trials; ++i) {
    const std::uint64_t seed = rng();
    // Split somewhere past the first window so a prefix is compared.
    const std::size_t split =
        kWindow + 1 + static_cast<std::size_t>(rng() % (opt.length - kWindow));
    const CausalityReport r = verify_causality(model, seed, split, opt);
    if (r.passed) {
      log(LogLevel::kTrace, "trial " + std::to_string(i) + ": pass (split " +
                                std::to_string(split) + ")");
      continue;
    }
    ++failures;
    std::cout << "trial " << i << " seed " << seed << " split " << split
              << ": FAIL";
    if (r.divergence) std::cout << ", first divergence at sample " << *r.divergence;
    if (r.latency && *r.latency != static_cast<std::uint64_t>(kWindow)) {
      std::cout << ", latency " << *r.latency;
    }
    std::cout << '\n';
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << ": " << a.trials - failures
            << "/" << a.trials << " trials causal ("
            << attention_mode_name(opt.mode.value_or(cfg.attention_mode))
            << " mode)\n";
  return failures == 0 ? 0 : kExitVerifyFailed;
}

int run_weights_init(std::uint64_t seed, const std::string& out,
                     const std::string& config) {
  save_weights(init_random_weights(config_or_default(config), seed), out);
  log(LogLevel::kInfo, "wrote " + out);
  return 0;
}

int run_weights_inspect(const std::string& path) {
  const WeightStore store = load_weights(path);
  for (const auto& t : store.tensors()) {
    std::cout << t.name << " " << shape_string(t.dims) << " " << t.data.size() << '\n';
  }
  std::cout << store.size() << " tensors, " << store.total_scalars() << " scalars\n";
  return 0;
}

int run_weights_param_count(const std::string& path, const std::string& config) {
  const ModelConfig cfg = config_or_default(config);
  validate_weights(cfg, load_weights(path));
  const ParamBreakdown b = count_params(model_tensor_specs(cfg));
  for (const auto& [name, n] : b.modules) std::cout << name << " " << n << '\n';
  std::cout << "total " << b.total << " ("
            << fmt("%.3f", static_cast<double>(b.total) / 1e6) << " M)\n";
  std::cout << "buffers " << b.buffers << '\n';
  return 0;
}

struct MetricsArgs {
  std::string est, ref, noisy;
};

int run_metrics(const MetricsArgs& a) {
  const Wav est = read_wav(a.est);
  const Wav ref = read_wav(a.ref);
  require(est.samples.size() == ref.samples.size(), ErrorCode::kUndefinedInput,
          "length mismatch: " + std::to_string(est.samples.size()) + " vs " +
              std::to_string(ref.samples.size()) + " samples");
  std::vector<float> est_mask, ref_mask;
  if (!a.noisy.empty()) {
    const Wav noisy = read_wav(a.noisy);
    require(noisy.samples.size() == ref.samples.size(), ErrorCode::kUndefinedInput,
            "noisy length differs from reference");
    const Spectrogram x = stdct(noisy.samples);
    est_mask = target_mask(stdct(est.samples), x).data();
    ref_mask = target_mask(stdct(ref.samples), x).data();
  }
  const double snr = si_snr(est.samples, ref.samples);
  const LossComponents l = loss_fn(est.samples, ref.samples, est_mask, ref_mask);
  std::cout << "si_snr_db " << fmt("%.4f", snr) << '\n'
            << "loss_waveform_l1 " << fmt("%.9g", l.waveform_l1) << '\n'
            << "loss_mask_mse " << fmt("%.9g", l.mask_mse) << '\n'
            << "loss_total " << fmt("%.9g", l.total()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFIF-Net causal speech enhancement"};
  app.require_subcommand(1);
  int code = 0;

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "offline enhancement of a WAV file");
  enhance->add_option("--in", ea.in, "input WAV")->required();
  enhance->add_option("--out", ea.out, "output WAV (32-bit float)")->required();
  enhance->add_option("--weights", ea.weights, "weight file")->required();
  enhance->add_option("--config", ea.config, "JSON model config");
  enhance->add_option("--mode", ea.mode, "attention mode")
      ->check(CLI::IsMember({"offline", "cumulative"}));
  enhance->callback([&] { code = run_enhance(ea); });

  StreamArgs sa;
  auto* stream = app.add_subcommand("stream", "chunked streaming enhancement");
  stream->add_option("--in", sa.in, "input WAV")->required();
  stream->add_option("--out", sa.out, "output WAV (32-bit float)")->required();
  stream->add_option("--weights", sa.weights, "weight file")->required();
  stream->add_option("--config", sa.config, "JSON model config");
  stream->add_option("--chunk-ms", sa.chunk_ms, "chunk length in ms")
      ->check(CLI::Range(1, 60000));
  stream->add_flag("--report-latency", sa.report_latency,
                   "print the measured algorithmic delay");
  stream->callback([&] { code = run_stream(sa); });

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "causality trials");
  auto* vw = verify->add_option("--weights", va.weights, "weight file");
  auto* vs = verify->add_option("--random-seed", va.random_seed,
                                "use seeded random weights");
  vw->excludes(vs);
  verify->add_option("--config", va.config, "JSON model config");
  verify->add_option("--trials", va.trials, "number of trials")
      ->check(CLI::Range(1, 1000000));
  verify->add_option("--mode", va.mode, "attention mode")
      ->check(CLI::IsMember({"offline", "cumulative"}));
  verify->add_option("--trial-seed", va.trial_seed, "seed for trial inputs");
  verify->add_option("--frames", va.frames, "frames per trial")
      ->check(CLI::Range(2, 100000));
  verify->callback([&] {
    if (va.weights.empty() && !va.random_seed) {
      throw CLI::ValidationError("verify", "one of --weights or --random-seed is required");
    }
    code = run_verify(va);
  });

  auto* weights = app.add_subcommand("weights", "weight-file tooling");
  weights->require_subcommand(1);
  std::uint64_t init_seed = 0;
  std::string init_out, init_config;
  auto* init = weights->add_subcommand("init", "write seeded random weights");
  init->add_option("--seed", init_seed, "RNG seed")->required();
  init->add_option("--out", init_out, "output path")->required();
  init->add_option("--config", init_config, "JSON model config");
  init->callback([&] { code = run_weights_init(init_seed, init_out, init_config); });

  std::string inspect_path;
  auto* inspect = weights->add_subcommand("inspect", "list tensors and shapes");
  inspect->add_option("path", inspect_path, "weight file")->required();
  inspect->callback([&] { code = run_weights_inspect(inspect_path); });

  std::string count_path, count_config;
  auto* count = weights->add_subcommand("param-count", "learnable parameter count");
  count->add_option("path", count_path, "weight file")->required();
  count->add_option("--config", count_config, "JSON model config");
  count->callback([&] { code = run_weights_param_count(count_path, count_config); });

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "SI-SNR and loss between two WAVs");
  metrics->add_option("--est", ma.est, "estimate WAV")->required();
  metrics->add_option("--ref", ma.ref, "reference WAV")->required();
  metrics->add_option("--noisy", ma.noisy, "noisy mixture WAV, enables the mask term");
  metrics->callback([&] { code = run_metrics(ma); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  } catch (const Error& e) {
    return fail(error_code_name(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 70);
  }
  return code;
}
