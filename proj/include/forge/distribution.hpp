#pragma once

#include "forge/error.hpp"
#include "forge/rational.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace forge {

enum class DistributionKind { kExact, kEmpirical };

/// Probability distribution over {0,1}^width, elements encoded as integers
/// (bit b of the element is bit b of the string). Only nonzero masses are stored.
class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(std::uint32_t width, DistributionKind kind = DistributionKind::kExact,
                        std::uint64_t samples = 0)
      : width_(width), kind_(kind), samples_(samples) {
    if (width > 63) throw Error(ErrorCode::kInvalidArgument, "distribution width must be <= 63");
  }

  static Distribution uniform(std::uint32_t width) {
    Distribution d(width);
    const std::uint64_t size = std::uint64_t{1} << width;
    for (std::uint64_t x = 0; x < size; ++x) d.masses_[x] = Rational(1, size);
    return d;
  }

  static Distribution point(std::uint32_t width, std::uint64_t element) {
    Distribution d(width);
    d.add(element, 1);
    return d;
  }

  /// Empirical distribution from outcome counts over `samples` draws.
  static Distribution from_counts(std::uint32_t width, const std::map<std::uint64_t, std::uint64_t>& counts,
                                  std::uint64_t samples, DistributionKind kind) {
    Distribution d(width, kind, kind == DistributionKind::kEmpirical ? samples : 0);
    for (const auto& [x, c] : counts)
      if (c) d.add(x, Rational(c, samples));
    return d;
  }

  void add(std::uint64_t element, const Rational& mass) {
    if (width_ < 64 && (element >> width_) != 0)
      throw Error(ErrorCode::kInvalidArgument, "element outside {0,1}^" + std::to_string(width_));
    if (mass == 0) return;
    auto& slot = masses_[element];
    slot += mass;
    if (slot == 0) masses_.erase(element);
  }

  Rational mass(std::uint64_t element) const {
    auto it = masses_.find(element);
    return it == masses_.end() ? Rational(0) : it->second;
  }

  Rational total() const {
    Rational t = 0;
    for (const auto& [x, p] : masses_) t += p;
    return t;
  }

  std::uint32_t width() const { return width_; }
  DistributionKind kind() const { return kind_; }
  bool exact() const { return kind_ == DistributionKind::kExact; }
  std::uint64_t samples() const { return samples_; }
  const std::map<std::uint64_t, Rational>& masses() const { return masses_; }

  friend bool operator==(const Distribution& a, const Distribution& b) {
    return a.width_ == b.width_ && a.masses_ == b.masses_;
  }

 private:
  std::uint32_t width_ = 0;
  DistributionKind kind_ = DistributionKind::kExact;
  std::uint64_t samples_ = 0;
  std::map<std::uint64_t, Rational> masses_;
};

/// Exact law over an arbitrary ordered outcome type (transcripts, rows, ...).
template <class Key>
using Law = std::map<Key, Rational>;

/// Half the L1 distance between two laws over the same outcome type.
template <class Key>
Rational total_variation(const Law<Key>& a, const Law<Key>& b) {
  Rational sum = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      sum += abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      sum += abs(ib->second);
      ++ib;
    } else {
      sum += abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return sum / 2;
}

}  // namespace forge
