#pragma once

// Distribution toolkit: statistical distance, entropy, KL divergence, the
// entropy-deficit-to-SD check, the counting claim and Chernoff estimation.
// Logarithms are base 2 throughout.

#include "forge/distribution.hpp"
#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/random.hpp"
#include "forge/rational.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace forge::stats {

inline void require_same_support(const Distribution& a, const Distribution& b) {
  if (a.width() != b.width())
    throw Error(ErrorCode::kSupportMismatch, "distributions over {0,1}^" + std::to_string(a.width()) + " and {0,1}^" +
                                                 std::to_string(b.width()));
}

/// ½·Σ|a(x) − b(x)|, exact.
inline Rational statistical_distance(const Distribution& a, const Distribution& b) {
  require_same_support(a, b);
  return total_variation(a.masses(), b.masses());
}

/// Σ p·log2(1/p) with 0·log(1/0) = 0.
inline HighFloat entropy(const Distribution& a) {
  HighFloat h = 0;
  for (const auto& [x, p] : a.masses()) {
    if (p <= 0) continue;
    const HighFloat hp = to_high(p);
    h -= hp * high_log2(hp);
  }
  return h;
}

/// Σ a(x)·log2(a(x)/b(x)); requires b(x) > 0 wherever a(x) > 0.
inline HighFloat kl_divergence(const Distribution& a, const Distribution& b) {
  require_same_support(a, b);
  HighFloat kl = 0;
  for (const auto& [x, p] : a.masses()) {
    if (p <= 0) continue;
    const Rational q = b.mass(x);
    if (q <= 0)
      throw Error(ErrorCode::kAbsoluteContinuityViolated, "b has no mass at element " + std::to_string(x));
    kl += to_high(p) * high_log2(to_high(Rational(p / q)));
  }
  return kl;
}

struct PinskerReport {
  HighFloat deficit;      // k − entropy
  Rational sd_to_uniform;
  HighFloat bound;        // sqrt(deficit / 2)
  bool holds = false;
};

/// If entropy(X) >= k − ε then SD(X, U_k) <= sqrt(ε/2); checks it with ε the
/// actual deficit.
inline PinskerReport pinsker_check(const Distribution& a) {
  if (!a.exact()) throw Error(ErrorCode::kInvalidArgument, "pinsker_check needs an exact distribution");
  PinskerReport r;
  r.deficit = HighFloat(a.width()) - entropy(a);
  if (r.deficit < 0) r.deficit = 0;  // rounding below the 2^-200 budget
  r.sd_to_uniform = statistical_distance(a, Distribution::uniform(a.width()));
  r.bound = boost::multiprecision::sqrt(r.deficit / 2);
  r.holds = to_high(r.sd_to_uniform) <= r.bound;
  return r;
}

struct ClaimViolation {
  std::vector<std::uint32_t> function;  // f(0), f(1), ...
  std::string what;
};

struct ClaimReport {
  std::uint64_t functions_checked = 0;
  std::vector<ClaimViolation> violations;
  Rational min_expectation;  // min over f of E_u[α_{f(u)}]
};

/// For every f: U → [M] with |U| = u_size checks E[α_{f(u)}] >= 1/M and
/// Pr[α_{f(u)} >= ε/M] >= 1 − ε for each ε in the grid, exactly.
inline ClaimReport claim_prob_verify(std::uint32_t u_size, std::uint32_t M, const std::vector<Rational>& eps_grid,
                                     std::uint64_t cap = kDefaultEnumerationCap) {
  if (u_size < 1 || M < 1) throw Error(ErrorCode::kInvalidArgument, "claim_prob_verify needs |U|, M >= 1");
  std::uint64_t functions = 1;
  for (std::uint32_t k = 0; k < u_size; ++k) {
    if (functions > cap / M) throw CapExceeded("counting-claim enumeration", UINT64_MAX, cap);
    functions *= M;
  }
  if (functions > cap) throw CapExceeded("counting-claim enumeration", functions, cap);

  ClaimReport report;
  report.min_expectation = 2;
  std::vector<std::uint32_t> f(u_size, 0);
  std::vector<std::uint32_t> preimages(M, 0);
  for (std::uint64_t idx = 0; idx < functions; ++idx) {
    std::fill(preimages.begin(), preimages.end(), 0);
    for (auto v : f) ++preimages[v];
    std::vector<Rational> alpha_of_u(u_size);
    Rational expectation = 0;
    for (std::uint32_t u = 0; u < u_size; ++u) {
      alpha_of_u[u] = Rational(preimages[f[u]], u_size);
      expectation += alpha_of_u[u];
    }
    expectation /= u_size;
    report.min_expectation = std::min(report.min_expectation, expectation);
    if (expectation < Rational(1, M))
      report.violations.push_back({f, "E[alpha_f(u)] = " + expectation.str() + " < 1/" + std::to_string(M)});
    for (const auto& eps : eps_grid) {
      std::uint32_t hits = 0;
      for (std::uint32_t u = 0; u < u_size; ++u)
        if (alpha_of_u[u] >= eps / M) ++hits;
      if (Rational(hits, u_size) < 1 - eps)
        report.violations.push_back({f, "Pr[alpha_f(u) >= eps/M] < 1 - eps at eps = " + eps.str()});
    }
    ++report.functions_checked;
    for (std::uint32_t k = 0; k < u_size; ++k) {  // next function, base-M odometer
      if (++f[k] < M) break;
      f[k] = 0;
    }
  }
  return report;
}

struct SampleConfig {
  std::uint64_t B = 1;
  double gamma = 0.01;

  /// Pr[|mean − p| >= γ] <= e^{−γ²B/3}.
  double bound() const { return std::exp(-gamma * gamma * static_cast<double>(B) / 3.0); }

  /// Two-sided radius γ with e^{−γ²B/3} = (1 − confidence)/2.
  static double radius(std::uint64_t B, double confidence) {
    return std::sqrt(3.0 * std::log(2.0 / (1.0 - confidence)) / static_cast<double>(B));
  }
};

/// One seeded run producing an m-bit outcome.
using Sampler = std::function<std::uint64_t(RngSeed)>;

inline RngSeed sample_seed(RngSeed seed, std::uint64_t index) { return RngSeed{derive_key(seed, tags::kSample, index)}; }

/// Outcome counts over B runs; run i uses sample_seed(seed, i), so the
/// result does not depend on the worker count.
inline std::map<std::uint64_t, std::uint64_t> sample_counts(const Sampler& sampler, std::uint64_t B, RngSeed seed,
                                                            unsigned workers = 1) {
  constexpr std::uint64_t kBatch = 4096;
  const std::uint64_t batches = (B + kBatch - 1) / kBatch;
  std::vector<std::map<std::uint64_t, std::uint64_t>> partial(batches);
  parallel_for(batches, workers, [&](std::uint64_t b) {
    const std::uint64_t hi = std::min(B, (b + 1) * kBatch);
    for (std::uint64_t i = b * kBatch; i < hi; ++i) ++partial[b][sampler(sample_seed(seed, i))];
  });
  std::map<std::uint64_t, std::uint64_t> counts;
  for (const auto& part : partial)
    for (const auto& [x, c] : part) counts[x] += c;
  return counts;
}

struct ChernoffEstimate {
  std::uint64_t hits = 0;
  std::uint64_t B = 0;
  double p_hat = 0;
  double gamma = 0;
  double bound = 0;
};

/// p̂_z = (1/B)·Σ X_i with X_i the indicator of outcome z in run i.
inline ChernoffEstimate chernoff_estimate(const Sampler& sampler, std::uint64_t z, const SampleConfig& cfg, RngSeed seed,
                                          unsigned workers = 1) {
  if (cfg.B < 1) throw Error(ErrorCode::kInvalidArgument, "B >= 1 required");
  const auto counts = sample_counts(sampler, cfg.B, seed, workers);
  ChernoffEstimate est;
  est.B = cfg.B;
  if (auto it = counts.find(z); it != counts.end()) est.hits = it->second;
  est.p_hat = static_cast<double>(est.hits) / static_cast<double>(cfg.B);
  est.gamma = cfg.gamma;
  est.bound = cfg.bound();
  return est;
}

struct Interval {
  double lo = 0;
  double hi = 0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 for 95%).
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0, 1};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

inline Distribution empirical_distribution(const Sampler& sampler, std::uint32_t width, std::uint64_t B, RngSeed seed,
                                           unsigned workers = 1) {
  if (B < 1) throw Error(ErrorCode::kInvalidArgument, "B >= 1 required");
  return Distribution::from_counts(width, sample_counts(sampler, B, seed, workers), B, DistributionKind::kEmpirical);
}

}  // namespace forge::stats
