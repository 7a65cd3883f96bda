#pragma once

#include "forge/bits.hpp"
#include "forge/error.hpp"
#include "forge/rational.hpp"

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace forge {

struct RngSeed {
  std::uint64_t value = 0;
  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Key for the derivation path (seed, tag, a, b). Distinct paths give
/// unrelated keys; identical paths always give the same key.
inline std::uint64_t derive_key(RngSeed seed, std::uint64_t tag, std::uint64_t a = 0,
                                std::uint64_t b = 0) {
  std::uint64_t k = mix64(seed.value);
  k = mix64(k ^ mix64(tag + 0x632be59bd9b4e019ULL));
  k = mix64(k ^ mix64(a + 0x8cb92ba72f3d8dd7ULL));
  k = mix64(k ^ mix64(b + 0xd6e8feb86659fd93ULL));
  return k;
}

/// Stream tags; the value is part of the key, so it must stay stable.
namespace tags {
inline constexpr std::uint64_t kHonest = 1;
inline constexpr std::uint64_t kCompressedHonest = 2;
inline constexpr std::uint64_t kCoins = 3;
inline constexpr std::uint64_t kMatrix = 4;
inline constexpr std::uint64_t kSample = 5;
inline constexpr std::uint64_t kProbe = 6;
}  // namespace tags

/// Source of random choices. Every random decision in the framework goes
/// through this interface, so the same code runs under a seeded stream or
/// under exhaustive enumeration of all choice paths.
class Chooser {
 public:
  virtual ~Chooser() = default;

  /// Uniform in [0, bound), bound >= 1.
  virtual std::uint64_t below(std::uint64_t bound) = 0;

  /// Index i with probability weights[i] / sum(weights). Zero weights are never chosen.
  virtual std::size_t weighted(std::span<const std::uint64_t> weights) = 0;

  /// Uniform bit string.
  BitString bits(std::uint32_t width) {
    BitString out(width);
    for (std::uint32_t offset = 0; offset < width; offset += 64) {
      const std::uint32_t count = std::min<std::uint32_t>(64, width - offset);
      out.assign_slice(offset, count, raw_bits(count));
    }
    return out;
  }

 protected:
  virtual std::uint64_t raw_bits(std::uint32_t count) = 0;
};

/// Counter-based stream: draw k is mix(key, k). Cheap to re-key per slot.
class KeyedStream final : public Chooser {
 public:
  KeyedStream() = default;
  explicit KeyedStream(std::uint64_t key) : key_(key) {}

  void rekey(std::uint64_t key) {
    key_ = key;
    counter_ = 0;
  }

  std::uint64_t next() { return mix64(key_ ^ mix64(counter_++ * 0xa0761d6478bd642fULL)); }

  std::uint64_t below(std::uint64_t bound) override {
    if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "below(0)");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  std::size_t weighted(std::span<const std::uint64_t> weights) override {
    const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
    if (total == 0) throw Error(ErrorCode::kInvalidArgument, "weighted() with zero total");
    std::uint64_t x = below(total);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (x < weights[i]) return i;
      x -= weights[i];
    }
    return weights.size() - 1;
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 protected:
  std::uint64_t raw_bits(std::uint32_t count) override {
    const std::uint64_t r = next();
    return count == 64 ? r : (r & ((std::uint64_t{1} << count) - 1));
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Randomness for one execution: a chooser per (tag, round, party) message
/// slot plus a chooser for adversary and experiment coins.
class Randomness {
 public:
  virtual ~Randomness() = default;
  virtual Chooser& slot(std::uint64_t tag, std::uint32_t round, std::uint32_t party) = 0;
  virtual Chooser& coins() = 0;
};

class SeededRandomness final : public Randomness {
 public:
  explicit SeededRandomness(RngSeed seed) : seed_(seed), coins_(derive_key(seed, tags::kCoins)) {}

  Chooser& slot(std::uint64_t tag, std::uint32_t round, std::uint32_t party) override {
    slot_.rekey(derive_key(seed_, tag, round, party));
    return slot_;
  }
  Chooser& coins() override { return coins_; }

 private:
  RngSeed seed_;
  KeyedStream slot_;
  KeyedStream coins_;
};

/// Honest messages fixed in advance: slot (round, party) reads `width` bits
/// of `table` at offset (round·n + party)·width. Coins stay seeded. Only
/// uniform-bit message domains can be driven this way.
class FixedMessageRandomness final : public Randomness {
 public:
  FixedMessageRandomness(std::uint64_t table, std::uint32_t n, std::uint32_t width, RngSeed coin_seed)
      : table_(table), n_(n), width_(width), coins_(derive_key(coin_seed, tags::kCoins)) {}

  Chooser& slot(std::uint64_t, std::uint32_t round, std::uint32_t party) override {
    const std::uint64_t offset = (std::uint64_t{round} * n_ + party) * width_;
    slot_.value = offset >= 64 ? 0 : table_ >> offset;
    return slot_;
  }
  Chooser& coins() override { return coins_; }

 private:
  struct Preset final : Chooser {
    std::uint64_t value = 0;
    std::uint64_t below(std::uint64_t) override {
      throw Error(ErrorCode::kInvalidArgument, "fixed honest messages support bit draws only");
    }
    std::size_t weighted(std::span<const std::uint64_t>) override {
      throw Error(ErrorCode::kInvalidArgument, "fixed honest messages support bit draws only");
    }

   protected:
    std::uint64_t raw_bits(std::uint32_t count) override {
      const std::uint64_t r = count >= 64 ? value : value & ((std::uint64_t{1} << count) - 1);
      value = count >= 64 ? 0 : value >> count;
      return r;
    }
  };

  std::uint64_t table_;
  std::uint32_t n_;
  std::uint32_t width_;
  Preset slot_;
  KeyedStream coins_;
};

/// Depth-first enumeration of every choice path of a deterministic
/// computation driven by a Chooser. The computation is re-executed once per
/// path; recorded choices are replayed and the last open choice advanced.
class Explorer final : public Chooser, public Randomness {
 public:
  explicit Explorer(std::uint64_t cap = kDefaultEnumerationCap) : cap_(cap) {}

  /// Calls sink(fn(*this), probability) once per complete choice path.
  template <class Fn, class Sink>
  void explore(Fn&& fn, Sink&& sink) {
    path_.clear();
    std::uint64_t paths = 0;
    for (;;) {
      depth_ = 0;
      probability_ = 1;
      auto result = fn(*this);
      if (depth_ != path_.size())
        throw Error(ErrorCode::kInvalidArgument, "explored computation is not deterministic");
      sink(result, probability_);
      if (++paths > cap_) throw CapExceeded("choice-path enumeration", paths, cap_);
      if (!advance()) break;
    }
  }

  std::uint64_t below(std::uint64_t bound) override {
    if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "below(0)");
    if (bound > cap_) throw CapExceeded("uniform choice arity", bound, cap_);
    Choice& c = visit(Choice{0, bound, {}});
    probability_ *= Rational(1, bound);
    return c.index;
  }

  std::size_t weighted(std::span<const std::uint64_t> weights) override {
    std::uint64_t total = 0;
    for (auto w : weights) total += w;
    if (total == 0) throw Error(ErrorCode::kInvalidArgument, "weighted() with zero total");
    Choice fresh{0, weights.size(), std::vector<std::uint64_t>(weights.begin(), weights.end())};
    while (fresh.weights[fresh.index] == 0) ++fresh.index;
    Choice& c = visit(std::move(fresh));
    probability_ *= Rational(c.weights[c.index], total);
    return c.index;
  }

  Chooser& slot(std::uint64_t, std::uint32_t, std::uint32_t) override { return *this; }
  Chooser& coins() override { return *this; }

 protected:
  std::uint64_t raw_bits(std::uint32_t count) override {
    if (count >= 64) throw CapExceeded("bit-string enumeration", UINT64_MAX, cap_);
    return below(std::uint64_t{1} << count);
  }

 private:
  struct Choice {
    std::uint64_t index;
    std::uint64_t arity;
    std::vector<std::uint64_t> weights;  // empty means uniform
  };

  Choice& visit(Choice fresh) {
    if (depth_ < path_.size()) {
      Choice& c = path_[depth_++];
      if (c.arity != fresh.arity)
        throw Error(ErrorCode::kInvalidArgument, "explored computation is not deterministic");
      return c;
    }
    path_.push_back(std::move(fresh));
    ++depth_;
    return path_.back();
  }

  bool advance() {
    while (!path_.empty()) {
      Choice& c = path_.back();
      std::uint64_t next = c.index + 1;
      if (!c.weights.empty())
        while (next < c.arity && c.weights[next] == 0) ++next;
      if (next < c.arity) {
        c.index = next;
        return true;
      }
      path_.pop_back();
    }
    return false;
  }

  std::uint64_t cap_;
  std::vector<Choice> path_;
  std::size_t depth_ = 0;
  Rational probability_ = 1;
};

}  // namespace forge
