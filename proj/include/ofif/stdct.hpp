// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Short-time DCT analysis (framing, Hamming window, orthonormal DCT-II) and
// weighted overlap-add synthesis.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <span>
#include <vector>

#include "ofif/common.hpp"

namespace ofif {

// Reconstruction delay of overlap-add synthesis, in samples: the last frame
// covering a sample starts up to W - 1 samples after it.
inline constexpr int kAlgorithmicDelay = kWindow;

// A sequence of equal-length frames stored contiguously, frame-major.
class FrameSeries {
 public:
  FrameSeries() = default;
  FrameSeries(int frame_len, int count)
      : frame_len_(frame_len), count_(count),
        data_(static_cast<std::size_t>(frame_len) * count, 0.0f) {
    require(frame_len >= 1 && count >= 0, ErrorCode::kInvalidConfiguration,
            "invalid frame series dims");
  }

  int frame_len() const { return frame_len_; }
  int count() const { return count_; }

  float& at(int i, int t) {
    return data_[static_cast<std::size_t>(t) * frame_len_ + i];
  }
  float at(int i, int t) const {
    return data_[static_cast<std::size_t>(t) * frame_len_ + i];
  }
  std::span<float> frame(int t) {
    return {data_.data() + static_cast<std::size_t>(t) * frame_len_,
            static_cast<std::size_t>(frame_len_)};
  }
  std::span<const float> frame(int t) const {
    return {data_.data() + static_cast<std::size_t>(t) * frame_len_,
            static_cast<std::size_t>(frame_len_)};
  }
  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool operator==(const FrameSeries&) const = default;

 private:
  int frame_len_ = 0;
  int count_ = 0;
  std::vector<float> data_;
};

// Windowed time-domain frames (W samples each, hop H).
struct FrameMatrix : FrameSeries {
  using FrameSeries::FrameSeries;
  int hop = kHop;
};

// DCT coefficients, dims (bins, frames).
struct Spectrogram : FrameSeries {
  using FrameSeries::FrameSeries;
  int bins() const { return frame_len(); }
  int frames() const { return count(); }
};

// Symmetric Hamming window: 0.54 - 0.46 cos(2 pi n / (W - 1)).
inline std::vector<double> make_hamming(int len) {
  std::vector<double> w(len);
  for (int n = 0; n < len; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (len - 1));
  }
  return w;
}

inline const std::vector<double>& hamming_window() {
  static const std::vector<double> w = make_hamming(kWindow);
  return w;
}

// Orthonormal DCT-II basis; the inverse is its transpose (DCT-III).
class DctBasis {
 public:
  explicit DctBasis(int n) : n_(n), basis_(static_cast<std::size_t>(n) * n),
                             basis_t_(basis_.size()) {
    const double a0 = std::sqrt(1.0 / n);
    const double ak = std::sqrt(2.0 / n);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        const double v =
            (k == 0 ? a0 : ak) *
            std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
        basis_[static_cast<std::size_t>(k) * n + i] = v;
        basis_t_[static_cast<std::size_t>(i) * n + k] = v;
      }
    }
  }

  int size() const { return n_; }
  double operator()(int k, int i) const {
    return basis_[static_cast<std::size_t>(k) * n_ + i];
  }

  // out[k] = sum_i B[k][i] x[i]
  void forward(std::span<const float> x, std::span<float> out) const {
    forward_rows(x, 1, out);
  }

  // forward() applied to `rows` consecutive frames of x.
  void forward_rows(std::span<const float> x, int rows, std::span<float> out) const {
    require(x.size() == static_cast<std::size_t>(rows) * n_ && out.size() == x.size(),
            ErrorCode::kInvalidConfiguration, "DCT frame length mismatch");
    std::vector<double> acc(x.size(), 0.0);
    for (int i = 0; i < n_; ++i) {
      const double* col = basis_t_.data() + static_cast<std::size_t>(i) * n_;
      for (int r = 0; r < rows; ++r) {
        const double v = x[static_cast<std::size_t>(r) * n_ + i];
        double* ar = acc.data() + static_cast<std::size_t>(r) * n_;
        for (int k = 0; k < n_; ++k) ar[k] += col[k] * v;
      }
    }
    for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k]);
  }

  // out[i] = sum_k B[k][i] X[k]
  void inverse(std::span<const float> coeffs, std::span<double> out) const {
    require(static_cast<int>(coeffs.size()) == n_ &&
                static_cast<int>(out.size()) == n_,
            ErrorCode::kInvalidConfiguration, "IDCT frame length mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (int k = 0; k < n_; ++k) {
      const double v = coeffs[k];
      const double* row = basis_.data() + static_cast<std::size_t>(k) * n_;
      for (int i = 0; i < n_; ++i) out[i] += row[i] * v;
    }
  }

 private:
  int n_;
  std::vector<double> basis_;    // [k][i]
  std::vector<double> basis_t_;  // [i][k]
};

inline const DctBasis& dct_basis() {
  static const DctBasis basis(kDctPoints);
  return basis;
}

inline int frame_count(std::size_t len, int window = kWindow,
                       int hop = kHop) {
  if (len < static_cast<std::size_t>(window)) return 0;
  return 1 + static_cast<int>((len - window) / hop);
}

// Hamming-windowed copy of a raw frame.
inline void window_frame(std::span<const float> raw, std::span<float> out) {
  const auto& w = hamming_window();
  require(raw.size() == w.size() && out.size() == w.size(),
          ErrorCode::kInvalidConfiguration, "window length mismatch");
  for (std::size_t n = 0; n < w.size(); ++n) {
    out[n] = static_cast<float>(raw[n] * w[n]);
  }
}

// Window + DCT of one raw (unwindowed) frame.
inline void analyze_frame(std::span<const float> raw, std::span<float> coeffs) {
  std::vector<float> tmp(raw.size());
  window_frame(raw, tmp);
  dct_basis().forward(tmp, coeffs);
}

// Frame t = window * wave[t*H, t*H + W). No padding.
inline FrameMatrix frame_signal(std::span<const float> wave) {
  require(wave.size() >= static_cast<std::size_t>(kWindow),
          ErrorCode::kTooShort,
          "signal of " + std::to_string(wave.size()) +
              " samples is shorter than one " + std::to_string(kWindow) +
              "-sample window");
  const int count = frame_count(wave.size());
  FrameMatrix frames(kWindow, count);
  for (int t = 0; t < count; ++t) {
    window_frame(wave.subspan(static_cast<std::size_t>(t) * kHop, kWindow),
                 frames.frame(t));
  }
  return frames;
}

inline Spectrogram dct_frames(const FrameMatrix& frames) {
  require(frames.frame_len() == kDctPoints, ErrorCode::kInvalidConfiguration,
          "frame length must equal the DCT size");
  Spectrogram spec(kDctPoints, frames.count());
  for (int t = 0; t < frames.count(); ++t) {
    dct_basis().forward(frames.frame(t), spec.frame(t));
  }
  return spec;
}

inline FrameMatrix idct_frames(const Spectrogram& spec) {
  require(spec.bins() == kDctPoints, ErrorCode::kInvalidConfiguration,
          "spectrogram must have " + std::to_string(kDctPoints) + " bins");
  FrameMatrix frames(kDctPoints, spec.frames());
  std::vector<double> tmp(kDctPoints);
  for (int t = 0; t < spec.frames(); ++t) {
    dct_basis().inverse(spec.frame(t), tmp);
    std::transform(tmp.begin(), tmp.end(), frames.frame(t).begin(),
                   [](double v) { return static_cast<float>(v); });
  }
  return frames;
}

inline Spectrogram stdct(std::span<const float> wave) {
  return dct_frames(frame_signal(wave));
}

// Weighted overlap-add synthesis. Each added frame is inverse-transformed,
// multiplied by the synthesis window (= analysis window) and summed at hop H;
// samples are normalized by the pointwise sum of squared windows.
//
// After frame t has been added, every sample before (t + 1) * H is final.
class OverlapAdd {
 public:
  static constexpr double kMinDenominator = 1e-8;

  void add_frame(std::span<const float> coeffs) {
    const auto& w = hamming_window();
    std::vector<double> y(kWindow);
    dct_basis().inverse(coeffs, y);
    const std::size_t start = frames_ * kHop - base_;
    if (num_.size() < start + kWindow) {
      num_.resize(start + kWindow, 0.0);
      den_.resize(start + kWindow, 0.0);
    }
    for (int n = 0; n < kWindow; ++n) {
      num_[start + n] += y[n] * w[n];
      den_[start + n] += w[n] * w[n];
    }
    ++frames_;
  }

  std::size_t frames() const { return frames_; }

  // Absolute index one past the last final sample.
  std::size_t final_end() const { return frames_ * kHop; }

  // Pops up to n final samples from the front.
  std::vector<float> take(std::size_t n) {
    n = std::min(n, final_end() - base_);
    return pop(n);
  }

  // After the last frame every covered sample is final.
  std::vector<float> drain() { return pop(num_.size()); }

  // Samples normalized with a clamped denominator.
  std::size_t clamped() const { return clamped_; }

 private:
  std::vector<float> pop(std::size_t n) {
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double den = den_.front();
      if (den < kMinDenominator) {
        den = kMinDenominator;
        ++clamped_;
      }
      out[i] = static_cast<float>(num_.front() / den);
      num_.pop_front();
      den_.pop_front();
    }
    base_ += n;
    return out;
  }

  std::deque<double> num_;
  std::deque<double> den_;
  std::size_t base_ = 0;  // absolute index of num_.front()
  std::size_t frames_ = 0;
  std::size_t clamped_ = 0;
};

struct OlaResult {
  std::vector<float> samples;
  std::size_t clamped = 0;
};

inline OlaResult istdct_ola(const Spectrogram& spec, std::size_t out_len) {
  require(spec.bins() == kDctPoints, ErrorCode::kInvalidConfiguration,
          "spectrogram must have " + std::to_string(kDctPoints) + " bins");
  const std::size_t covered =
      spec.frames() == 0
          ? 0
          : static_cast<std::size_t>(spec.frames() - 1) * kHop + kWindow;
  require(out_len <= covered, ErrorCode::kInvalidConfiguration,
          "requested " + std::to_string(out_len) + " samples but " +
              std::to_string(spec.frames()) + " frames cover only " +
              std::to_string(covered));
  OverlapAdd ola;
  for (int t = 0; t < spec.frames(); ++t) ola.add_frame(spec.frame(t));
  OlaResult res{ola.drain(), ola.clamped()};
  res.samples.resize(out_len);
  return res;
}

}  // namespace ofif
