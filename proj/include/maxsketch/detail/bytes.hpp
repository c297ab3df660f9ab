#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "maxsketch/error.hpp"

namespace maxsketch::detail {

template <class UInt>
inline void put_le(std::vector<std::uint8_t>& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_f32(std::vector<std::uint8_t>& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }

template <class UInt>
[[nodiscard]] inline UInt load_le(const std::uint8_t* p) noexcept {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(p[i]) << (8 * i);
  return v;
}

/// Bounds-checked little-endian reader over a byte span.
class byte_cursor {
public:
  explicit byte_cursor(std::span<const std::uint8_t> bytes) noexcept : bytes_(bytes) {}

  template <class UInt>
  UInt read() {
    need(sizeof(UInt));
    const UInt v = load_le<UInt>(bytes_.data() + pos_);
    pos_ += sizeof(UInt);
    return v;
  }

  double read_f64() { return std::bit_cast<double>(read<std::uint64_t>()); }

  void expect_magic(const char (&magic)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
      throw format_error(std::string("bad magic, expected \"") + magic + "\"", pos_);
    }
    pos_ += 4;
  }

  [[nodiscard]] std::size_t position() const noexcept { return pos_; }
  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw format_error("truncated input", pos_);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

} // namespace maxsketch::detail
