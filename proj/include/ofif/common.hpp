// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ofif {

inline constexpr int kSampleRate = 16000;
inline constexpr int kWindow = 512;   // 32 ms
inline constexpr int kHop = 128;      // 8 ms
inline constexpr int kDctPoints = 512;

enum class ErrorCode {
  kInvalidConfiguration,
  kInvalidWeights,
  kTooShort,
  kStreamClosed,
  kUndefinedInput,
  kFormat,
  kIo,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfiguration: return "config";
    case ErrorCode::kInvalidWeights: return "weights";
    case ErrorCode::kTooShort: return "too_short";
    case ErrorCode::kStreamClosed: return "stream_closed";
    case ErrorCode::kUndefinedInput: return "undefined_input";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, std::string_view what) {
  if (!cond) throw Error(code, std::string(what));
}

// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, fill) {
    require(rows >= 0 && cols >= 0, ErrorCode::kInvalidConfiguration,
            "matrix dims must be non-negative");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<T> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const T> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace ofif
