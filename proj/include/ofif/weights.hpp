// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Named-tensor container and its binary file format.
//
// Layout (all integers little-endian):
//   "OFN1"
//   u32 tensor count
//   per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
//               prod(dims) x f32 (IEEE 754, little-endian)

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ofif/common.hpp"
#include "ofif/tensor.hpp"

namespace ofif {

inline constexpr char kWeightMagic[4] = {'O', 'F', 'N', '1'};

// Declared tensor of a model layout: drives initialization, load-time
// validation and parameter counting.
struct TensorSpec {
  enum class Init { kUniform, kZero, kOne };

  std::string name;
  std::vector<int> dims;
  std::string module;
  bool learnable = true;  // false for batch-norm running statistics
  Init init = Init::kUniform;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
};

class WeightStore {
 public:
  void add(WeightTensor t) {
    t.validate();
    require(!index_.contains(t.name), ErrorCode::kInvalidWeights,
            "duplicate tensor '" + t.name + "'");
    index_.emplace(t.name, tensors_.size());
    tensors_.push_back(std::move(t));
  }

  const WeightTensor* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tensors_[it->second];
  }

  const WeightTensor& get(const std::string& name) const {
    const WeightTensor* t = find(name);
    require(t != nullptr, ErrorCode::kInvalidWeights,
            "missing tensor '" + name + "'");
    return *t;
  }

  WeightTensor* find_mutable(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tensors_[it->second];
  }

  bool erase(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) return false;
    tensors_.erase(tensors_.begin() + static_cast<std::ptrdiff_t>(it->second));
    rebuild_index();
    return true;
  }

  const std::vector<WeightTensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  std::size_t total_scalars() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.data.size();
    return n;
  }

 private:
  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      index_.emplace(tensors_[i].name, i);
    }
  }

  std::vector<WeightTensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t le(int n, const char* what) {
    need(n, what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += n;
    return v;
  }

  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    require(bytes_.size() - pos_ >= n, ErrorCode::kInvalidWeights,
            "truncated weight file at offset " + std::to_string(pos_) +
                ": need " + std::to_string(n) + " bytes for " + what +
                ", have " + std::to_string(bytes_.size() - pos_));
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_weights(const WeightStore& store) {
  std::string out(kWeightMagic, 4);
  detail::put_le(out, store.size(), 4);
  for (const auto& t : store.tensors()) {
    require(t.name.size() <= std::numeric_limits<std::uint16_t>::max(),
            ErrorCode::kInvalidWeights, "tensor name too long");
    require(t.dims.size() <= std::numeric_limits<std::uint8_t>::max(),
            ErrorCode::kInvalidWeights, "tensor rank too large");
    detail::put_le(out, t.name.size(), 2);
    out += t.name;
    detail::put_le(out, t.dims.size(), 1);
    for (int d : t.dims) detail::put_le(out, static_cast<std::uint32_t>(d), 4);
    for (float v : t.data) detail::put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  }
  return out;
}

inline WeightStore parse_weights(std::string_view bytes) {
  detail::ByteReader in(bytes);
  auto magic = in.raw(4, "magic");
  require(magic == std::string_view(kWeightMagic, 4), ErrorCode::kInvalidWeights,
          "bad magic: not an OFN1 weight file");
  const auto count = in.le(4, "tensor count");
  WeightStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    WeightTensor t;
    const auto name_len = in.le(2, "name length");
    t.name = std::string(in.raw(name_len, "tensor name"));
    const auto rank = in.le(1, "rank");
    std::size_t numel = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      const auto d = in.le(4, "dim");
      require(d <= static_cast<std::uint64_t>(std::numeric_limits<int>::max()),
              ErrorCode::kInvalidWeights,
              "dim too large in tensor '" + t.name + "'");
      t.dims.push_back(static_cast<int>(d));
      numel = d == 0 || numel <= bytes.size() / d ? numel * d : bytes.size() + 1;
    }
    const auto payload = in.raw(
        numel > bytes.size() ? bytes.size() + 1 : numel * 4, "tensor data");
    t.data.resize(numel);
    for (std::size_t k = 0; k < numel; ++k) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) {
        u |= static_cast<std::uint32_t>(
                 static_cast<unsigned char>(payload[k * 4 + b]))
             << (8 * b);
      }
      t.data[k] = std::bit_cast<float>(u);
    }
    store.add(std::move(t));
  }
  require(in.done(), ErrorCode::kInvalidWeights,
          "trailing bytes after last tensor at offset " +
              std::to_string(in.offset()));
  return store;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::kIo, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::string_view bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::kIo, "cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), ErrorCode::kIo, "write to '" + path + "' failed");
}

inline WeightStore load_weights(const std::string& path) {
  return parse_weights(read_file_bytes(path));
}

inline void save_weights(const WeightStore& store, const std::string& path) {
  write_file_bytes(path, serialize_weights(store));
}

}  // namespace ofif
