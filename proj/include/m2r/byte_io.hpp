#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "m2r/errors.hpp"

namespace m2r {

// Little-endian encoder into an in-memory buffer, independent of host order.
class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32_array(std::span<const float> v) {
    for (float x : v) f32(x);
  }

  std::size_t size() const noexcept { return buf_.size(); }
  std::string take() && { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  std::string buf_;
};

// Bounds-checked little-endian decoder. Reading past the end throws
// kSizeMismatch.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  std::string_view bytes(std::size_t n) {
    need(n);
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f32_array(std::span<float> out) {
    need(out.size() * 4);
    for (float& x : out) x = f32();
  }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) {
      throw Error(ErrorCode::kSizeMismatch,
                  "truncated data: need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ", " + std::to_string(remaining()) + " left");
    }
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace m2r
