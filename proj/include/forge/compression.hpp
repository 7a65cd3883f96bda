#pragma once

// Message compression: the matrix family, the short-message protocol Π_H,
// MAP_H, and the two desk-scale checks (output simulation over H, security
// preservation over H).

#include "forge/adversaries.hpp"
#include "forge/core.hpp"
#include "forge/parallel.hpp"
#include "forge/stats.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>

namespace forge {

struct CompressionParams {
  ProtocolParams base;
  std::uint32_t ell = 1;

  std::uint64_t N() const { return std::uint64_t{1} << ell; }
  std::uint64_t entries() const { return base.slots() * N(); }
  std::uint64_t total_bits() const { return entries() * base.L; }

  void validate() const {
    if (ell < 1 || ell > base.L)
      throw Error(ErrorCode::kInvalidArgument,
                  "ell must satisfy 1 <= ell <= L (ell=" + std::to_string(ell) + ", L=" + std::to_string(base.L) + ")");
    if (ell > 30) throw CapExceeded("row length 2^ell", pow2_saturating(ell), std::uint64_t{1} << 30);
    if (base.L > 64) throw Error(ErrorCode::kInvalidArgument, "matrix entries are limited to L <= 64 bits");
  }
};

/// ceil(m·log2(n·d)^4); exact when n·d is a power of two.
inline std::uint64_t ell_formula(std::uint32_t m, std::uint32_t n, std::uint32_t d) {
  const std::uint64_t nd = std::uint64_t{n} * d;
  if (nd < 2) throw Error(ErrorCode::kInvalidArgument, "ell_formula needs n*d >= 2");
  if (std::has_single_bit(nd)) {
    const std::uint64_t k = static_cast<std::uint64_t>(std::countr_zero(nd));
    return m * k * k * k * k;
  }
  const long double lg = std::log2(static_cast<long double>(nd));
  return static_cast<std::uint64_t>(std::ceil(static_cast<long double>(m) * lg * lg * lg * lg));
}

struct SlackBudget {
  double epsilon = 0;
  double mu_star = 0;
  bool vacuous = false;                 // mu_star >= 1
  std::optional<double> measured_slack;  // filled by experiments
};

/// ε = 2^{−log²(dn)}, μ* = (√ε + 1 − (1−ε)^{dn})·2dn.
inline SlackBudget mu_star(std::uint32_t n, std::uint32_t d) {
  const double dn = static_cast<double>(n) * d;
  if (dn < 2) throw Error(ErrorCode::kInvalidArgument, "mu_star needs d*n >= 2");
  const double lg = std::log2(dn);
  SlackBudget b;
  b.epsilon = std::exp2(-lg * lg);
  const double tail = -std::expm1(dn * std::log1p(-b.epsilon));  // 1 − (1−ε)^{dn} without cancellation
  b.mu_star = (std::sqrt(b.epsilon) + tail) * 2 * dn;
  b.vacuous = b.mu_star >= 1;
  return b;
}

/// H : [d·n] × {0,1}^ell → {0,1}^L, entry (i,j,r) at flat index (i·n+j)·N + r.
/// The flat bit string places entry e's bit b at position e·L + b.
class MatrixH {
 public:
  MatrixH() = default;
  MatrixH(std::uint32_t d, std::uint32_t n, std::uint32_t ell, std::uint32_t L) : d_(d), n_(n), ell_(ell), L_(L) {
    CompressionParams{{n, d, L, 1}, ell}.validate();
    entries_.assign(std::uint64_t{d} * n << ell, 0);
  }
  explicit MatrixH(const CompressionParams& cp) : MatrixH(cp.base.d, cp.base.n, cp.ell, cp.base.L) {}

  std::uint32_t d() const { return d_; }
  std::uint32_t n() const { return n_; }
  std::uint32_t ell() const { return ell_; }
  std::uint32_t L() const { return L_; }
  std::uint64_t N() const { return std::uint64_t{1} << ell_; }
  std::uint64_t rows() const { return std::uint64_t{d_} * n_; }
  std::uint64_t size() const { return entries_.size(); }
  std::uint64_t total_bits() const { return entries_.size() * L_; }

  std::uint64_t index(std::uint32_t i, std::uint32_t j, std::uint64_t r) const {
    return (std::uint64_t{i} * n_ + j) * N() + r;
  }

  std::uint64_t entry_u64(std::uint32_t i, std::uint32_t j, std::uint64_t r) const { return entries_[index(i, j, r)]; }
  BitString entry(std::uint32_t i, std::uint32_t j, std::uint64_t r) const { return BitString(L_, entry_u64(i, j, r)); }

  void set_entry(std::uint32_t i, std::uint32_t j, std::uint64_t r, std::uint64_t value) {
    if (L_ < 64 && (value >> L_) != 0) throw Error(ErrorCode::kWidthMismatch, "entry wider than L");
    entries_[index(i, j, r)] = value;
  }
  void set_entry(std::uint32_t i, std::uint32_t j, std::uint64_t r, const BitString& value) {
    if (value.width() != L_)
      throw Error(ErrorCode::kWidthMismatch, "entry has " + std::to_string(value.width()) + " bits, expected " +
                                                 std::to_string(L_));
    entries_[index(i, j, r)] = value.to_u64();
  }

  std::vector<std::uint64_t>& flat_entries() { return entries_; }
  const std::vector<std::uint64_t>& flat_entries() const { return entries_; }

  /// Bit at flat position p (entry p / L, bit p % L).
  bool flat_bit(std::uint64_t p) const { return (entries_[p / L_] >> (p % L_)) & 1u; }
  void set_flat_bit(std::uint64_t p, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (p % L_);
    if (v)
      entries_[p / L_] |= mask;
    else
      entries_[p / L_] &= ~mask;
  }

  /// Smallest r with H(i,u,r) = R, if any.
  std::optional<std::uint64_t> map_h(std::uint32_t i, std::uint32_t u, std::uint64_t R) const {
    const std::uint64_t base = index(i, u, 0);
    for (std::uint64_t r = 0; r < N(); ++r)
      if (entries_[base + r] == R) return r;
    return std::nullopt;
  }

  bool row_equal(const MatrixH& other, std::uint32_t i, std::uint32_t j) const {
    const std::uint64_t base = index(i, j, 0);
    return std::equal(entries_.begin() + base, entries_.begin() + base + N(), other.entries_.begin() + base);
  }

  std::vector<std::uint64_t> row(std::uint32_t i, std::uint32_t j) const {
    const std::uint64_t base = index(i, j, 0);
    return {entries_.begin() + base, entries_.begin() + base + N()};
  }

  bool same_shape(const MatrixH& o) const { return d_ == o.d_ && n_ == o.n_ && ell_ == o.ell_ && L_ == o.L_; }

  /// Header (d, n, ell, L as u32 little-endian), then the flat bits packed
  /// LSB-first per byte, zero-padded to a byte boundary.
  void write(std::ostream& out) const {
    for (std::uint32_t v : {d_, n_, ell_, L_})
      for (int k = 0; k < 4; ++k) out.put(static_cast<char>((v >> (8 * k)) & 0xff));
    const std::uint64_t bits = total_bits();
    for (std::uint64_t byte = 0; byte < (bits + 7) / 8; ++byte) {
      unsigned char c = 0;
      for (unsigned b = 0; b < 8 && byte * 8 + b < bits; ++b) c |= static_cast<unsigned char>(flat_bit(byte * 8 + b)) << b;
      out.put(static_cast<char>(c));
    }
  }

  static MatrixH read(std::istream& in) {
    std::uint32_t header[4];
    for (auto& v : header) {
      v = 0;
      for (int k = 0; k < 4; ++k) {
        const int c = in.get();
        if (c == EOF) throw Error(ErrorCode::kInvalidArgument, ".hmat: truncated header");
        v |= static_cast<std::uint32_t>(c) << (8 * k);
      }
    }
    MatrixH h(header[0], header[1], header[2], header[3]);
    const std::uint64_t bits = h.total_bits();
    for (std::uint64_t byte = 0; byte < (bits + 7) / 8; ++byte) {
      const int c = in.get();
      if (c == EOF) throw Error(ErrorCode::kInvalidArgument, ".hmat: truncated body");
      for (unsigned b = 0; b < 8 && byte * 8 + b < bits; ++b) h.set_flat_bit(byte * 8 + b, (c >> b) & 1);
      if (byte == (bits + 7) / 8 - 1 && bits % 8 != 0 && (c >> (bits % 8)) != 0)
        throw Error(ErrorCode::kInvalidArgument, ".hmat: nonzero padding");
    }
    if (in.peek() != EOF) throw Error(ErrorCode::kInvalidArgument, ".hmat: trailing bytes");
    return h;
  }

  friend bool operator==(const MatrixH&, const MatrixH&) = default;
  friend auto operator<=>(const MatrixH&, const MatrixH&) = default;

 private:
  std::uint32_t d_ = 0, n_ = 0, ell_ = 0, L_ = 0;
  std::vector<std::uint64_t> entries_;
};

inline constexpr std::uint64_t kDefaultMatrixBitCap = std::uint64_t{1} << 30;

/// Uniform H: the flat bit string is one draw from the stream keyed by
/// (seed, matrix tag), so every entry is an independent uniform L-bit string.
inline MatrixH sample_matrix(const CompressionParams& cp, RngSeed seed, std::uint64_t bit_cap = kDefaultMatrixBitCap) {
  cp.validate();
  if (cp.total_bits() > bit_cap) throw CapExceeded("matrix bits d*n*N*L", cp.total_bits(), bit_cap);
  MatrixH h(cp);
  KeyedStream stream(derive_key(seed, tags::kMatrix));
  for (auto& e : h.flat_entries()) e = stream.bits(cp.base.L).to_u64();
  return h;
}

/// Every H in lexicographic order of the flat bit string (flat bit 0 is the
/// most significant digit of the family index).
class MatrixFamily {
 public:
  explicit MatrixFamily(const CompressionParams& cp, std::uint64_t max_bits = 24) : cp_(cp) {
    cp.validate();
    if (cp.total_bits() > max_bits) throw CapExceeded("family bits d*n*N*L", cp.total_bits(), max_bits);
  }

  std::uint64_t size() const { return std::uint64_t{1} << cp_.total_bits(); }

  MatrixH at(std::uint64_t index) const {
    MatrixH h(cp_);
    const std::uint64_t K = cp_.total_bits();
    for (std::uint64_t p = 0; p < K; ++p) h.set_flat_bit(p, (index >> (K - 1 - p)) & 1u);
    return h;
  }

  class iterator {
   public:
    using value_type = MatrixH;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    iterator(const MatrixFamily* f, std::uint64_t i) : family_(f), index_(i) {}
    MatrixH operator*() const { return family_->at(index_); }
    iterator& operator++() {
      ++index_;
      return *this;
    }
    iterator operator++(int) {
      iterator old = *this;
      ++index_;
      return old;
    }
    bool operator==(const iterator& o) const { return index_ == o.index_; }

   private:
    const MatrixFamily* family_ = nullptr;
    std::uint64_t index_ = 0;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size()}; }

 private:
  CompressionParams cp_;
};

inline MatrixFamily enumerate_family(const CompressionParams& cp) { return MatrixFamily(cp); }

/// Matrices with ell = L whose rows are permutations of {0,1}^L. Index digits
/// are row permutation ranks (Lehmer code), row 0 most significant.
class BijectiveFamily {
 public:
  BijectiveFamily(std::uint32_t d, std::uint32_t n, std::uint32_t L, std::uint64_t cap = kDefaultEnumerationCap)
      : d_(d), n_(n), L_(L) {
    CompressionParams{{n, d, L, 1}, L}.validate();
    if (L > 4) throw CapExceeded("bijective row count (2^L)!", UINT64_MAX, cap);
    const std::uint64_t N = std::uint64_t{1} << L;
    row_count_ = 1;
    for (std::uint64_t k = 2; k <= N; ++k) row_count_ *= k;
    size_ = 1;
    for (std::uint64_t s = 0; s < std::uint64_t{d} * n; ++s) {
      if (size_ > cap / row_count_) throw CapExceeded("bijective family size", UINT64_MAX, cap);
      size_ *= row_count_;
    }
  }

  std::uint64_t size() const { return size_; }

  MatrixH at(std::uint64_t index) const {
    MatrixH h(d_, n_, L_, L_);
    const std::uint64_t N = h.N();
    const std::uint64_t rows = h.rows();
    for (std::uint64_t s = rows; s-- > 0;) {
      std::uint64_t rank = index % row_count_;
      index /= row_count_;
      std::vector<std::uint64_t> pool(N);
      for (std::uint64_t k = 0; k < N; ++k) pool[k] = k;
      std::uint64_t f = row_count_;
      for (std::uint64_t r = 0; r < N; ++r) {
        f /= (N - r);
        const std::uint64_t q = rank / f;
        rank %= f;
        h.flat_entries()[s * N + r] = pool[q];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(q));
      }
    }
    return h;
  }

 private:
  std::uint32_t d_, n_, L_;
  std::uint64_t row_count_ = 1;
  std::uint64_t size_ = 1;
};

// ---------------------------------------------------------------------------
// Π_H

inline void require_shape(const ProtocolParams& p, const MatrixH& H) {
  if (H.d() != p.d || H.n() != p.n || H.L() != p.L)
    throw Error(ErrorCode::kShapeMismatch, "matrix shape (d=" + std::to_string(H.d()) + ",n=" + std::to_string(H.n()) +
                                               ",L=" + std::to_string(H.L()) + ") does not match protocol (d=" +
                                               std::to_string(p.d) + ",n=" + std::to_string(p.n) +
                                               ",L=" + std::to_string(p.L) + ")");
}

inline std::optional<BitString> map_h(const MatrixH& H, std::uint32_t i, std::uint32_t u, const BitString& R) {
  if (R.width() != H.L()) return std::nullopt;
  if (auto r = H.map_h(i, u, R.to_u64())) return BitString(H.ell(), *r);
  return std::nullopt;
}

/// Slot-wise MAP_H in transcript order; nullopt if some slot has no preimage.
inline std::optional<Transcript> map_transcript(const MatrixH& H, const Transcript& trans) {
  Transcript out;
  for (const auto& e : trans.entries()) {
    auto r = map_h(H, e.round, e.party, e.message);
    if (!r) return std::nullopt;
    out.append({e.round, e.party, std::move(*r), e.status});
  }
  return out;
}

/// H(Trans_H): every short message r in slot (i,j) becomes H(i,j,r).
inline Transcript lift(const MatrixH& H, const Transcript& short_trans) {
  Transcript out;
  for (const auto& e : short_trans.entries()) {
    if (e.message.width() != H.ell())
      throw Error(ErrorCode::kWidthMismatch, "short message has " + std::to_string(e.message.width()) +
                                                 " bits, expected " + std::to_string(H.ell()));
    out.append({e.round, e.party, H.entry(e.round, e.party, e.message.to_u64()), e.status});
  }
  return out;
}

/// Π_H: ell-bit uniform messages, out(T) = out_Π(H(T)).
inline ProtocolSpec compressed_protocol(const ProtocolSpec& spec, const MatrixH& H) {
  require_shape(spec.params, H);
  auto base = std::make_shared<const ProtocolSpec>(spec);
  auto mat = std::make_shared<const MatrixH>(H);
  ProtocolParams p = spec.params;
  p.L = H.ell();
  return make_spec(p, [base, mat](const Transcript& t) { return base->output(lift(*mat, t)); },
                   "compressed(" + spec.label + ",ell=" + std::to_string(H.ell()) + ")");
}

/// Output of every honest transcript in default order, indexed by the
/// concatenated slot messages (slot s = i·n + j at bits [s·L, (s+1)·L)).
inline std::vector<std::uint64_t> honest_output_table(const ProtocolSpec& spec,
                                                      std::uint64_t cap = kDefaultEnumerationCap) {
  const auto& p = spec.params;
  if (!spec.domain.uniform_bits()) throw Error(ErrorCode::kInvalidArgument, "honest_output_table needs uniform bits");
  const std::uint64_t bits = std::uint64_t{p.L} * p.slots();
  if (bits >= 40 || pow2_saturating(bits) > cap) throw CapExceeded("honest output table", pow2_saturating(bits), cap);
  Transcript t;
  for (std::uint32_t i = 0; i < p.d; ++i)
    for (std::uint32_t j = 0; j < p.n; ++j) t.append({i, j, BitString(p.L), SpeakerStatus::kHonest});
  auto& entries = t.mutable_entries();
  const std::uint64_t mask = p.L >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << p.L) - 1;
  std::vector<std::uint64_t> table(std::uint64_t{1} << bits);
  for (std::uint64_t x = 0; x < table.size(); ++x) {
    for (std::size_t s = 0; s < entries.size(); ++s) entries[s].message = BitString(p.L, (x >> (s * p.L)) & mask);
    table[x] = checked_output(spec, t).to_u64();
  }
  return table;
}

/// Output counts of Π_H over all 2^{ell·d·n} short tables, from a
/// precomputed base table. Honest runs speak in default order, so the lifted
/// transcript is fixed by the slot values alone.
inline std::map<std::uint64_t, std::uint64_t> compressed_honest_counts(const ProtocolParams& p,
                                                                      const std::vector<std::uint64_t>& table,
                                                                      const MatrixH& H,
                                                                      std::uint64_t cap = kDefaultEnumerationCap) {
  require_shape(p, H);
  const std::uint64_t slots = p.slots();
  const std::uint64_t short_bits = std::uint64_t{H.ell()} * slots;
  if (short_bits >= 40 || pow2_saturating(short_bits) > cap)
    throw CapExceeded("short transcript enumeration", pow2_saturating(short_bits), cap);
  const std::uint64_t N = H.N();
  std::vector<std::uint64_t> shifted(slots * N);
  for (std::uint64_t s = 0; s < slots; ++s)
    for (std::uint64_t r = 0; r < N; ++r) shifted[s * N + r] = H.flat_entries()[s * N + r] << (s * p.L);

  std::vector<std::uint64_t> digit(slots, 0);
  std::uint64_t idx = 0;
  for (std::uint64_t s = 0; s < slots; ++s) idx += shifted[s * N];
  std::map<std::uint64_t, std::uint64_t> counts;
  std::vector<std::uint64_t> dense(p.m <= 16 ? (std::size_t{1} << p.m) : 0, 0);
  const std::uint64_t total = std::uint64_t{1} << short_bits;
  for (std::uint64_t y = 0; y < total; ++y) {
    const std::uint64_t out = table[idx];
    if (!dense.empty())
      ++dense[out];
    else
      ++counts[out];
    for (std::uint64_t s = 0; s < slots; ++s) {  // odometer, slot 0 fastest
      const std::uint64_t old = digit[s];
      digit[s] = (old + 1) % N;
      idx += shifted[s * N + digit[s]] - shifted[s * N + old];
      if (digit[s] != 0) break;
    }
  }
  for (std::size_t x = 0; x < dense.size(); ++x)
    if (dense[x]) counts[x] = dense[x];
  return counts;
}

/// Exact honest output distribution of Π_H from a precomputed base table.
inline Distribution compressed_honest_distribution(const ProtocolParams& p, const std::vector<std::uint64_t>& table,
                                                   const MatrixH& H, std::uint64_t cap = kDefaultEnumerationCap) {
  const auto counts = compressed_honest_counts(p, table, H, cap);
  const unsigned short_bits = static_cast<unsigned>(std::uint64_t{H.ell()} * p.slots());
  Distribution dist(p.m);
  for (const auto& [out, c] : counts) dist.add(out, dyadic(c, short_bits));
  return dist;
}

namespace detail {

/// SD between count vectors over 2^a and 2^b equally likely tables (a <= b < 62)
/// is Σ|c·2^{b−a} − c′| / 2^{b+1}; returns the numerator.
inline std::uint64_t count_distance(const std::map<std::uint64_t, std::uint64_t>& short_counts, unsigned a,
                               const std::map<std::uint64_t, std::uint64_t>& long_counts, unsigned b) {
  if (a > b || b >= 62) throw Error(ErrorCode::kInvalidArgument, "count_distance needs a <= b < 62");
  std::uint64_t sum = 0;  // at most 2^{b+1}
  auto is = short_counts.begin();
  auto il = long_counts.begin();
  while (is != short_counts.end() || il != long_counts.end()) {
    if (il == long_counts.end() || (is != short_counts.end() && is->first < il->first)) {
      sum += is->second << (b - a);
      ++is;
    } else if (is == short_counts.end() || il->first < is->first) {
      sum += il->second;
      ++il;
    } else {
      const std::uint64_t x = is->second << (b - a), y = il->second;
      sum += x > y ? x - y : y - x;
      ++is;
      ++il;
    }
  }
  return sum;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Output simulation over H

struct ThresholdFraction {
  Rational threshold;
  std::uint64_t count = 0;
  double fraction = 0;
  stats::Interval ci;  // Wilson 95%
};

struct SimulationPlan {
  enum class Source { kAll, kSampled, kBijective };
  Source source = Source::kSampled;
  std::uint64_t samples = 500;
  RngSeed seed{0};
  std::vector<Rational> thresholds;
  unsigned workers = 1;
  std::uint64_t cap = kDefaultEnumerationCap;
};

struct SimulationReport {
  std::uint64_t matrices = 0;
  std::vector<Rational> sd;  // per H, in family / sample order
  Rational median;
  Rational quantile_two_thirds;  // smallest v with at least 2/3 of the SDs <= v
  Rational mean;
  Rational max;
  std::vector<ThresholdFraction> fractions;
};

inline Rational median_of(std::vector<Rational> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : Rational((v[k - 1] + v[k]) / 2);
}

inline std::vector<ThresholdFraction> fractions_at_or_below(const std::vector<Rational>& values,
                                                            const std::vector<Rational>& thresholds) {
  std::vector<ThresholdFraction> out;
  for (const auto& th : thresholds) {
    ThresholdFraction f;
    f.threshold = th;
    for (const auto& v : values) f.count += v <= th;
    f.fraction = values.empty() ? 0 : static_cast<double>(f.count) / static_cast<double>(values.size());
    f.ci = stats::wilson_interval(f.count, values.size());
    out.push_back(f);
  }
  return out;
}

/// Exact SD(out_{Π_H}, out_Π) for every H in the plan's source.
inline SimulationReport simulation_check(const ProtocolSpec& spec, const CompressionParams& cp,
                                         const SimulationPlan& plan) {
  cp.validate();
  if (!(cp.base == spec.params)) throw Error(ErrorCode::kShapeMismatch, "compression params do not match protocol");
  const auto table = honest_output_table(spec, plan.cap);
  std::map<std::uint64_t, std::uint64_t> base_counts;
  for (auto out : table) ++base_counts[out];
  const unsigned long_bits = static_cast<unsigned>(std::bit_width(table.size()) - 1);
  const unsigned short_bits = static_cast<unsigned>(std::uint64_t{cp.ell} * spec.params.slots());

  std::function<MatrixH(std::uint64_t)> matrix_at;
  std::uint64_t count = 0;
  std::optional<MatrixFamily> all;
  std::optional<BijectiveFamily> bij;
  switch (plan.source) {
    case SimulationPlan::Source::kAll:
      all.emplace(cp);
      count = all->size();
      matrix_at = [&](std::uint64_t k) { return all->at(k); };
      break;
    case SimulationPlan::Source::kBijective:
      if (cp.ell != cp.base.L) throw Error(ErrorCode::kInvalidArgument, "bijective rows need ell = L");
      bij.emplace(cp.base.d, cp.base.n, cp.base.L, plan.cap);
      count = bij->size();
      matrix_at = [&](std::uint64_t k) { return bij->at(k); };
      break;
    case SimulationPlan::Source::kSampled:
      count = plan.samples;
      matrix_at = [&](std::uint64_t k) { return sample_matrix(cp, stats::sample_seed(plan.seed, k)); };
      break;
  }

  // Every SD is a multiple of 2^{-(long_bits+1)}: order and average the numerators.
  std::vector<std::uint64_t> num(count);
  parallel_for(count, plan.workers, [&](std::uint64_t k) {
    num[k] = detail::count_distance(compressed_honest_counts(spec.params, table, matrix_at(k), plan.cap), short_bits,
                                    base_counts, long_bits);
  });
  const auto sd_of = [&](std::uint64_t x) { return x == 0 ? Rational(0) : dyadic(x, long_bits + 1); };

  SimulationReport report;
  report.matrices = count;
  report.sd.reserve(count);
  for (auto x : num) report.sd.push_back(sd_of(x));
  std::vector<std::uint64_t> sorted = num;
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty()) {
    const std::size_t k = sorted.size() / 2;
    report.median = sorted.size() % 2 ? sd_of(sorted[k]) : Rational((sd_of(sorted[k - 1]) + sd_of(sorted[k])) / 2);
    const std::size_t q = (2 * sorted.size() + 2) / 3;  // ceil(2·count/3)
    report.quantile_two_thirds = sd_of(sorted[q - 1]);
    report.max = sd_of(sorted.back());
    BigInt sum = 0;
    for (auto x : sorted) sum += x;
    report.mean = Rational(sum, BigInt(1) << (long_bits + 1)) / static_cast<long long>(sorted.size());
  }
  report.fractions = fractions_at_or_below(report.sd, plan.thresholds);
  return report;
}

// ---------------------------------------------------------------------------
// Security preservation over H

struct SecuritySweepReport {
  Rational base_value;
  std::vector<Rational> values;  // val(Π_H) per H in family order
  std::vector<std::pair<Rational, std::uint64_t>> cdf;  // (val(Π_H) − val(Π), #H at or below)
  std::vector<ThresholdFraction> within;                // per slack level
  std::optional<SlackBudget> budget;                     // μ*, for reference
  std::uint64_t max_states = 0;
};

/// Exact optimal adaptive value of Π and of Π_H for every H in the family.
inline SecuritySweepReport security_sweep(const ProtocolSpec& spec, const CompressionParams& cp,
                                          const SecurityParams& sec, const std::vector<Rational>& slacks,
                                          unsigned workers = 1, std::uint64_t cap = kDefaultGameTreeCap) {
  cp.validate();
  if (!(cp.base == spec.params)) throw Error(ErrorCode::kShapeMismatch, "compression params do not match protocol");
  const MatrixFamily family(cp);
  SecuritySweepReport report;
  const OptimalValue base = optimal_adaptive_value(spec, sec, cap);
  report.base_value = *base.report.exact_value;
  report.max_states = base.states;
  report.values.resize(family.size());
  std::vector<std::uint64_t> states(family.size());
  parallel_for(family.size(), workers, [&](std::uint64_t k) {
    const OptimalValue v = optimal_adaptive_value(compressed_protocol(spec, family.at(k)), sec, cap);
    report.values[k] = *v.report.exact_value;
    states[k] = v.states;
  });
  for (auto s : states) report.max_states = std::max(report.max_states, s);

  std::vector<Rational> deltas;
  for (const auto& v : report.values) deltas.push_back(v - report.base_value);
  std::map<Rational, std::uint64_t> hist;
  for (const auto& d : deltas) ++hist[d];
  std::uint64_t acc = 0;
  for (const auto& [d, c] : hist) report.cdf.emplace_back(d, acc += c);
  report.within = fractions_at_or_below(deltas, slacks);
  if (spec.params.slots() >= 2) report.budget = mu_star(spec.params.n, spec.params.d);
  return report;
}

}  // namespace forge
