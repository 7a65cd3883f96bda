#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

/// Fixed-width bit string. Bit b lives in word b/64 at position b%64, so the
/// integer view of a string of width <= 64 is little-endian in bit index.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::uint32_t width) : width_(width), words_(word_count(width), 0) {}
  BitString(std::uint32_t width, std::uint64_t value) : BitString(width) {
    if (!words_.empty()) words_[0] = value;
    trim();
  }

  static std::size_t word_count(std::uint32_t width) { return (width + 63u) / 64u; }

  std::uint32_t width() const { return width_; }
  bool empty() const { return width_ == 0; }

  bool get(std::uint32_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1u; }
  void set(std::uint32_t bit, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
    if (value)
      words_[bit / 64] |= mask;
    else
      words_[bit / 64] &= ~mask;
  }

  /// Integer value; only defined for width <= 64.
  std::uint64_t to_u64() const {
    if (width_ > 64) throw std::logic_error("BitString::to_u64 on width > 64");
    return words_.empty() ? 0 : words_[0];
  }

  /// Bits [offset, offset+count) as an integer, count <= 64.
  std::uint64_t slice(std::uint32_t offset, std::uint32_t count) const {
    std::uint64_t out = 0;
    for (std::uint32_t b = 0; b < count; ++b)
      if (get(offset + b)) out |= std::uint64_t{1} << b;
    return out;
  }

  void assign_slice(std::uint32_t offset, std::uint32_t count, std::uint64_t value) {
    for (std::uint32_t b = 0; b < count; ++b) set(offset + b, (value >> b) & 1u);
  }

  std::uint32_t popcount() const {
    std::uint32_t c = 0;
    for (auto w : words_) c += static_cast<std::uint32_t>(__builtin_popcountll(w));
    return c;
  }
  bool parity() const { return popcount() & 1u; }

  BitString& operator^=(const BitString& other) {
    if (other.width_ != width_) throw std::invalid_argument("BitString xor width mismatch");
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
    return *this;
  }

  /// Lowercase hex of the little-endian byte image, most significant nibble first.
  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::uint32_t nibbles = std::max<std::uint32_t>(1, (width_ + 3) / 4);
    std::string out(nibbles, '0');
    for (std::uint32_t k = 0; k < nibbles; ++k) {
      std::uint32_t v = 0;
      for (std::uint32_t b = 0; b < 4; ++b) {
        const std::uint32_t bit = 4 * k + b;
        if (bit < width_ && get(bit)) v |= 1u << b;
      }
      out[nibbles - 1 - k] = kDigits[v];
    }
    return out;
  }

  /// Bits in index order, "0101" means bit0=0, bit1=1, ...
  std::string bits() const {
    std::string out(width_, '0');
    for (std::uint32_t b = 0; b < width_; ++b)
      if (get(b)) out[b] = '1';
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const BitString&, const BitString&) = default;
  friend std::strong_ordering operator<=>(const BitString& a, const BitString& b) {
    if (auto c = a.width_ <=> b.width_; c != 0) return c;
    for (std::size_t k = a.words_.size(); k-- > 0;)
      if (auto c = a.words_[k] <=> b.words_[k]; c != 0) return c;
    return std::strong_ordering::equal;
  }

 private:
  void trim() {
    if (width_ % 64 != 0 && !words_.empty())
      words_.back() &= (std::uint64_t{1} << (width_ % 64)) - 1;
  }

  std::uint32_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace forge
