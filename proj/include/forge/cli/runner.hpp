#pragma once

// Dispatches a parsed configuration to the library and renders the result:
// one JSON-lines record (report.json) plus .csv tables and .dat plot data.
// Result payloads depend only on the config text, never on the worker count.

#include "forge/cli/config.hpp"
#include "forge/compression.hpp"
#include "forge/json_io.hpp"
#include "forge/protocols.hpp"
#include "forge/publiccoin.hpp"
#include "forge/reduction.hpp"
#include "forge/stats.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef FORGE_VERSION
#define FORGE_VERSION "0.1.0"
#endif

namespace forge::cli {

using nlohmann::json;

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string content;
};

struct RunOptions {
  std::optional<unsigned> workers;          // overrides limits.workers
  std::optional<std::string> output_dir;    // overrides output_dir
};

struct RunOutcome {
  json record;  // the report.json line
  std::vector<Artifact> artifacts;
  int exit_code = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitCap = 2;

namespace detail {

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Shortest round-trip text for a double, so tables are byte-stable.
inline std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  std::string csv() const {
    std::string out = join(header_, ",") + "\n";
    for (const auto& r : rows_) out += join(r, ",") + "\n";
    return out;
  }
  /// Whitespace-separated columns with a header comment line.
  std::string dat() const {
    std::string out = "# " + join(header_, " ") + "\n";
    for (const auto& r : rows_) out += join(r, " ") + "\n";
    return out;
  }

 private:
  static std::string join(const std::vector<std::string>& cells, const char* sep) {
    std::string out;
    for (std::size_t k = 0; k < cells.size(); ++k) out += (k ? sep : "") + cells[k];
    return out;
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Context {
  const ExperimentConfig& cfg;
  unsigned workers;
  std::vector<Artifact>& artifacts;

  void add(std::string name, std::string content) { artifacts.push_back({std::move(name), std::move(content)}); }
};

inline json params_json(const ProtocolSpec& spec) {
  const auto& p = spec.params;
  return {{"label", spec.label}, {"n", p.n}, {"d", p.d}, {"L", p.L}, {"m", p.m}};
}

inline json fraction_json(const ThresholdFraction& f) {
  return {{"threshold", rational_json(f.threshold)},
          {"count", f.count},
          {"fraction", f.fraction},
          {"ci95", {f.ci.lo, f.ci.hi}}};
}

inline json budget_json(const SlackBudget& b) {
  json j{{"epsilon", b.epsilon}, {"mu_star", b.mu_star}, {"vacuous", b.vacuous}};
  if (b.measured_slack) j["measured_slack"] = *b.measured_slack;
  return j;
}

inline ProtocolSpec protocol_of(const ExperimentConfig& cfg) {
  return protocols::make_builtin(cfg.protocol->name, cfg.protocol->args);
}

inline SecurityParams security_of(const ExperimentConfig& cfg) {
  return SecurityParams{cfg.security->t, cfg.security->M, cfg.security->delta};
}

inline StrategyFactory strategy_factory(const std::string& name, const ProtocolSpec& spec,
                                        const std::vector<std::uint64_t>& M, std::uint32_t target) {
  if (name == "greedy_majority") return factory_of<GreedyMajorityStrategy>(target != 0);
  if (name == "last_speaker") return factory_of<LastSpeakerBiasStrategy>(spec, M);
  return factory_of<PassiveStrategy>();
}

/// Complete family for the configured ell; every member attacks Π_H with the
/// configured strategy (last_speaker unless stated otherwise).
inline std::shared_ptr<const ReductionFamily> complete_family(const ExperimentConfig& cfg, const ProtocolSpec& spec,
                                                              std::uint32_t ell) {
  const CompressionParams cp{spec.params, ell};
  std::vector<MatrixH> matrices;
  for (auto H : enumerate_family(cp)) matrices.push_back(std::move(H));
  const std::string strategy = cfg.adversary ? cfg.adversary->strategy : "last_speaker";
  const auto M = cfg.security->M;
  return make_family(spec, matrices, [strategy, M](const MatrixH&, const ProtocolSpec& compressed) {
    std::shared_ptr<AdversaryStrategy> s;
    if (strategy == "passive")
      s = std::make_shared<PassiveStrategy>();
    else
      s = std::make_shared<LastSpeakerBiasStrategy>(compressed, M);
    return s;
  });
}

// ---------------------------------------------------------------------------

inline json run_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ProtocolSpec spec = protocol_of(cfg);
  json r{{"protocol", params_json(spec)}};
  try {
    r["honest_distribution"] = to_json(enumerate_honest_outputs(spec, cfg.limits.cap));
  } catch (const CapExceeded& e) {
    r["honest_distribution"] = nullptr;
    r["honest_distribution_note"] = e.what();
  }
  if (cfg.sampling) {
    const auto& s = *cfg.sampling;
    r["empirical_distribution"] = to_json(stats::empirical_distribution(
        [&](RngSeed seed) { return run_honest(spec, seed).output.to_u64(); }, spec.params.m, s.B, RngSeed{cfg.seed},
        ctx.workers));
  }
  if (cfg.adversary && cfg.adversary->strategy != "passive") {
    const auto& a = *cfg.adversary;
    const auto& s = *cfg.sampling;
    const std::vector<std::uint64_t> M = cfg.security ? cfg.security->M : std::vector<std::uint64_t>{a.target};
    Table table({"t", "bias", "radius", "ci_lo", "ci_hi", "adversarial_mass", "honest_mass"});
    json rows = json::array();
    for (auto t : a.t) {
      SecurityParams sec{t, M, 0};
      const ValueReport v = value_of(spec, strategy_factory(a.strategy, spec, M, a.target), sec,
                                     SampledMode{s.B, RngSeed{cfg.seed}, s.confidence, ctx.workers});
      rows.push_back({{"t", t},
                      {"bias", v.value},
                      {"radius", v.radius},
                      {"ci95", {v.value - v.radius, v.value + v.radius}},
                      {"adversarial_mass", v.adversarial_mass},
                      {"honest_mass", v.honest_mass},
                      {"B", v.B}});
      table.row({std::to_string(t), num(v.value), num(v.radius), num(v.value - v.radius), num(v.value + v.radius),
                 num(v.adversarial_mass), num(v.honest_mass)});
    }
    r["adversary"] = {{"strategy", a.strategy}, {"M", M}, {"confidence", s.confidence}, {"runs", rows}};
    ctx.add("bias.csv", table.csv());
    ctx.add("bias.dat", table.dat());
  }
  return r;
}

inline json run_compress_sweep(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& c = *cfg.compression;
  const ProtocolSpec spec = protocol_of(cfg);
  json per_ell = json::array();
  Table summary({"ell", "median_sd", "mean_sd", "quantile_two_thirds_sd", "max_sd"});
  Table per_h({"ell", "matrix", "sd"});
  std::optional<Rational> previous;
  bool strictly_decreasing = true;
  for (auto ell : c.ell) {
    SimulationPlan plan;
    plan.source = c.source == "all" ? SimulationPlan::Source::kAll
                  : c.source == "bijective" ? SimulationPlan::Source::kBijective
                                            : SimulationPlan::Source::kSampled;
    plan.samples = c.samples;
    plan.seed = RngSeed{derive_key(RngSeed{cfg.seed}, tags::kMatrix, ell)};
    plan.thresholds = c.thresholds;
    plan.workers = ctx.workers;
    plan.cap = cfg.limits.cap;
    const SimulationReport rep = simulation_check(spec, CompressionParams{spec.params, ell}, plan);
    json fr = json::array();
    for (const auto& f : rep.fractions) fr.push_back(fraction_json(f));
    per_ell.push_back({{"ell", ell},
                       {"matrices", rep.matrices},
                       {"median_sd", rational_json(rep.median)},
                       {"mean_sd", rational_json(rep.mean)},
                       {"quantile_two_thirds_sd", rational_json(rep.quantile_two_thirds)},
                       {"max_sd", rational_json(rep.max)},
                       {"fractions", fr}});
    summary.row({std::to_string(ell), num(to_double(rep.median)), num(to_double(rep.mean)),
                 num(to_double(rep.quantile_two_thirds)), num(to_double(rep.max))});
    for (std::size_t k = 0; k < rep.sd.size(); ++k) per_h.row({std::to_string(ell), std::to_string(k), forge::to_string(rep.sd[k])});
    if (previous && !(rep.median < *previous)) strictly_decreasing = false;
    previous = rep.median;
  }
  ctx.add("compress.csv", per_h.csv());
  ctx.add("compress.dat", summary.dat());
  json r{{"protocol", params_json(spec)}, {"source", c.source}, {"per_ell", per_ell},
         {"median_strictly_decreasing", strictly_decreasing}};
  if (spec.params.slots() >= 2) r["slack_budget"] = budget_json(mu_star(spec.params.n, spec.params.d));
  return r;
}

inline json run_security_sweep(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ProtocolSpec spec = protocol_of(cfg);
  const SecurityParams sec = security_of(cfg);
  json per_ell = json::array();
  Table per_h({"ell", "matrix", "value", "delta"});
  Table cdf({"ell", "delta", "cumulative_fraction"});
  for (auto ell : cfg.compression->ell) {
    const SecuritySweepReport rep = security_sweep(spec, CompressionParams{spec.params, ell}, sec, cfg.security->slacks,
                                                   ctx.workers, cfg.limits.game_tree_cap);
    json within = json::array();
    for (const auto& f : rep.within) within.push_back(fraction_json(f));
    json cdf_j = json::array();
    for (const auto& [d, c] : rep.cdf) {
      cdf_j.push_back({rational_json(d), c});
      cdf.row({std::to_string(ell), num(to_double(d)), num(static_cast<double>(c) / rep.values.size())});
    }
    Rational max_value = rep.values.empty() ? Rational(0) : rep.values.front();
    for (std::size_t k = 0; k < rep.values.size(); ++k) {
      max_value = std::max(max_value, rep.values[k]);
      per_h.row({std::to_string(ell), std::to_string(k), forge::to_string(rep.values[k]),
                 forge::to_string(Rational(rep.values[k] - rep.base_value))});
    }
    json e{{"ell", ell},
           {"matrices", rep.values.size()},
           {"base_value", rational_json(rep.base_value)},
           {"max_compressed_value", rational_json(max_value)},
           {"cdf", cdf_j},
           {"within_slack", within},
           {"max_states", rep.max_states}};
    if (rep.budget) e["slack_budget"] = budget_json(*rep.budget);
    per_ell.push_back(e);
  }
  ctx.add("security.csv", per_h.csv());
  ctx.add("security_cdf.dat", cdf.dat());
  return {{"protocol", params_json(spec)}, {"t", sec.t}, {"M", sec.M}, {"per_ell", per_ell}};
}

inline json run_reduction(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ProtocolSpec spec = protocol_of(cfg);
  const SecurityParams sec = security_of(cfg);
  sec.validate(spec.params);
  const std::uint32_t ell = cfg.compression->ell.front();
  const auto family = complete_family(cfg, spec, ell);
  const auto& p = spec.params;
  const std::uint64_t honest_bits = std::uint64_t{p.L} * p.slots();
  if (honest_bits > 24) throw CapExceeded("honest assignments 2^{L*d*n}", pow2_saturating(honest_bits), 1u << 24);
  const std::uint64_t assignments = std::uint64_t{1} << honest_bits;

  // min over H of val(Π_H, A^H), exactly.
  std::vector<Rational> member_value(family->size());
  parallel_for(family->size(), ctx.workers, [&](std::uint64_t k) {
    const FamilyMember& m = (*family)[k];
    auto strategy = m.strategy;
    struct Shared final : AdversaryStrategy {
      std::shared_ptr<AdversaryStrategy> inner;
      AdversaryAction decide(const View& v, Chooser& c) override { return inner->decide(v, c); }
    };
    member_value[k] = *value_of(*m.compressed, [strategy] {
                         auto s = std::make_unique<Shared>();
                         s->inner = strategy;
                         return std::unique_ptr<AdversaryStrategy>(std::move(s));
                       },
                                sec, ExactMode{cfg.limits.cap})
                           .exact_value;
  });
  const Rational min_value = *std::min_element(member_value.begin(), member_value.end());
  const Rational honest = target_mass(enumerate_honest_outputs(spec, cfg.limits.cap), sec);

  // Measured: run k uses honest assignment k mod 2^{L·d·n} and its own coins.
  const std::uint64_t B = cfg.sampling->B;
  constexpr std::uint64_t kBatch = 1024;
  struct Tally {
    std::uint64_t hits = 0, halted = 0, hits_kept = 0, invalid = 0;
    std::uint64_t final_size_sum = 0;
  };
  std::vector<Tally> partial((B + kBatch - 1) / kBatch);
  parallel_for(partial.size(), ctx.workers, [&](std::uint64_t b) {
    Tally& t = partial[b];
    for (std::uint64_t k = b * kBatch; k < std::min(B, (b + 1) * kBatch); ++k) {
      FixedMessageRandomness rnd(k % assignments, p.n, p.L, stats::sample_seed(RngSeed{cfg.seed}, k));
      ReductionAdversary adversary(family);
      const RunResult run = run_with_adversary(spec, adversary, sec.t, rnd);
      const bool hit = sec.targets(run.output.to_u64());
      t.hits += hit;
      t.halted += run.halted;
      if (!run.halted) t.hits_kept += hit;
      t.invalid += adversary.invalid_replays();
      t.final_size_sum += adversary.consistent_set().members.size();
    }
  });
  Tally total;
  for (const auto& t : partial) {
    total.hits += t.hits;
    total.halted += t.halted;
    total.hits_kept += t.hits_kept;
    total.invalid += t.invalid;
    total.final_size_sum += t.final_size_sum;
  }
  const double measured = static_cast<double>(total.hits) / B - to_double(honest);
  const double slack = std::max(0.0, to_double(min_value) - measured);
  SlackBudget budget = p.slots() >= 2 ? mu_star(p.n, p.d) : SlackBudget{};
  budget.measured_slack = slack;

  json r{{"protocol", params_json(spec)},
         {"ell", ell},
         {"family_size", family->size()},
         {"t", sec.t},
         {"M", sec.M},
         {"min_member_value", rational_json(min_value)},
         {"max_member_value", rational_json(*std::max_element(member_value.begin(), member_value.end()))},
         {"honest_mass", rational_json(honest)},
         {"runs", B},
         {"measured_value", measured},
         {"measured_value_excluding_halted", static_cast<double>(total.hits_kept) / B - to_double(honest)},
         {"halted_runs", total.halted},
         {"halted_fraction", static_cast<double>(total.halted) / B},
         {"invalid_replays", total.invalid},
         {"mean_final_consistent_set", static_cast<double>(total.final_size_sum) / B},
         {"measured_slack", slack},
         {"slack_budget", budget_json(budget)}};

  // Exact reduction value and distance to the ideal run when enumerable.
  try {
    const OutcomeLaw real = exact_law([&](Randomness& rnd) { return reduction_run(spec, family, sec.t, rnd); },
                                      cfg.limits.cap);
    const OutcomeLaw ideal = exact_law([&](Randomness& rnd) { return ideal_run(spec, *family, sec.t, rnd); },
                                       cfg.limits.cap);
    Rational hit = 0, halted = 0;
    for (const auto& [o, pr] : real) {
      if (sec.targets(o.output.to_u64())) hit += pr;
      if (o.halted) halted += pr;
    }
    r["exact_value"] = rational_json(hit - honest);
    r["exact_halt_probability"] = rational_json(halted);
    r["sd_reduction_vs_ideal"] = rational_json(total_variation(transcript_law(real), transcript_law(ideal)));
  } catch (const CapExceeded& e) {
    r["exact_note"] = e.what();
  }
  Table values({"matrix", "value"});
  for (std::size_t k = 0; k < member_value.size(); ++k) values.row({std::to_string(k), forge::to_string(member_value[k])});
  ctx.add("reduction_members.csv", values.csv());
  return r;
}

inline json run_hybrid_chain(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ProtocolSpec spec = protocol_of(cfg);
  const SecurityParams sec = security_of(cfg);
  sec.validate(spec.params);
  const std::uint32_t ell = cfg.compression->ell.front();
  const auto family = complete_family(cfg, spec, ell);
  const std::uint64_t slots = spec.params.slots();
  std::vector<Law<Transcript>> levels;
  for (std::uint64_t k = 0; k <= slots; ++k)
    levels.push_back(transcript_law(exact_law(
        [&](Randomness& rnd) { return hybrid_experiment(k, spec, family, sec.t, rnd); }, cfg.limits.cap)));
  const auto real =
      transcript_law(exact_law([&](Randomness& rnd) { return reduction_run(spec, family, sec.t, rnd); }, cfg.limits.cap));
  const auto ideal =
      transcript_law(exact_law([&](Randomness& rnd) { return ideal_run(spec, *family, sec.t, rnd); }, cfg.limits.cap));
  const Rational end_to_end = total_variation(real, ideal);
  json steps = json::array();
  Table table({"k", "sd_to_previous", "sd_to_ideal", "sd_to_reduction"});
  Rational max_step = 0;
  for (std::uint64_t k = 0; k <= slots; ++k) {
    const Rational prev = k ? total_variation(levels[k - 1], levels[k]) : Rational(0);
    const Rational to_ideal = total_variation(levels[k], ideal);
    const Rational to_real = total_variation(levels[k], real);
    max_step = std::max(max_step, prev);
    steps.push_back({{"k", k},
                     {"sd_to_previous", rational_json(prev)},
                     {"sd_to_ideal", rational_json(to_ideal)},
                     {"sd_to_reduction", rational_json(to_real)}});
    table.row({std::to_string(k), num(to_double(prev)), num(to_double(to_ideal)), num(to_double(to_real))});
  }
  ctx.add("hybrid.dat", table.dat());
  ctx.add("hybrid.csv", table.csv());
  json r{{"protocol", params_json(spec)},
         {"ell", ell},
         {"family_size", family->size()},
         {"levels", steps},
         {"sd_reduction_vs_ideal", rational_json(end_to_end)},
         {"top_level_equals_reduction", levels.back() == real},
         {"level_zero_equals_ideal", levels.front() == ideal},
         {"max_adjacent_sd", rational_json(max_step)},
         {"adjacent_within_end_to_end", max_step <= end_to_end}};
  if (slots >= 2) r["slack_budget"] = budget_json(mu_star(spec.params.n, spec.params.d));
  return r;
}

/// Exact law of one transformed message: each of the (2^ell_r)! orderings.
inline Law<BitString> permutation_law(std::uint32_t ell_r, std::uint64_t cap) {
  Law<BitString> law;
  Explorer e(cap);
  e.explore([&](Explorer& x) { return sample_permutation_message(ell_r, x); },
            [&](const BitString& m, const Rational& pr) { law[m] += pr; });
  return law;
}

inline json run_publiccoin_check(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const GeneralProtocolSpec g = make_general_builtin(cfg.publiccoin->name, cfg.publiccoin->args);
  const ProtocolSpec transformed = public_coin_transform(g, cfg.limits.ell_r_cap);
  const Distribution original = enumerate_general_outputs(g, cfg.limits.cap);
  const Distribution after = enumerate_honest_outputs(transformed, cfg.limits.cap);
  const Law<BitString> perms = permutation_law(g.ell_r, cfg.limits.cap);
  bool uniform = true;
  const Rational expected = Rational(1, static_cast<long long>(perms.size()));
  for (const auto& [m, pr] : perms) uniform = uniform && pr == expected;
  std::uint64_t factorial = 1;
  for (std::uint64_t k = 2; k <= (std::uint64_t{1} << g.ell_r); ++k) factorial *= k;
  uniform = uniform && perms.size() == factorial;
  return {{"protocol", g.label},
          {"ell_r", g.ell_r},
          {"transformed_message_bits", transformed.params.L},
          {"rounds_original", g.params.d},
          {"rounds_transformed", transformed.params.d},
          {"original_distribution", to_json(original)},
          {"transformed_distribution", to_json(after)},
          {"sd", rational_json(stats::statistical_distance(original, after))},
          {"orderings", perms.size()},
          {"message_uniform", uniform}};
}

/// Random exact distribution over {0,1}^k with integer weights in [0, 1000).
inline Distribution random_distribution(std::uint32_t k, KeyedStream& s) {
  const std::uint64_t size = std::uint64_t{1} << k;
  std::vector<std::uint64_t> w(size);
  std::uint64_t total = 0;
  while (total == 0) {
    total = 0;
    for (auto& x : w) total += (x = s.below(1000));
  }
  Distribution d(k);
  for (std::uint64_t x = 0; x < size; ++x) d.add(x, Rational(static_cast<long long>(w[x]), static_cast<long long>(total)));
  return d;
}

inline json run_verify_claims(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& c = *cfg.claims;
  json cases = json::array();
  std::uint64_t violations = 0;
  for (const auto& [u, M] : c.cases) {
    const stats::ClaimReport rep = stats::claim_prob_verify(u, M, c.eps, cfg.limits.cap);
    violations += rep.violations.size();
    json v = json::array();
    for (const auto& x : rep.violations) v.push_back(x.what);
    cases.push_back({{"u_size", u},
                     {"M", M},
                     {"functions", rep.functions_checked},
                     {"min_expectation", rational_json(rep.min_expectation)},
                     {"violations", v}});
  }
  // Pinsker sweep and the KL-to-uniform identity.
  KeyedStream s(derive_key(RngSeed{cfg.seed}, tags::kSample));
  std::vector<Distribution> pool;
  for (std::uint64_t k = 0; k < c.pinsker_samples; ++k) pool.push_back(random_distribution(c.k, s));
  pool.push_back(Distribution::point(c.k, 0));
  pool.push_back(Distribution::uniform(c.k));
  {
    const std::uint64_t size = std::uint64_t{1} << c.k;
    Distribution near(c.k);
    for (std::uint64_t x = 0; x < size; ++x)
      near.add(x, Rational(1, static_cast<long long>(size)) + (x == 0 ? Rational(1, 1000000) : x == 1 ? Rational(-1, 1000000) : Rational(0)));
    pool.push_back(near);
  }
  std::uint64_t pinsker_fail = 0;
  HighFloat max_identity_error = 0;
  for (const auto& d : pool) {
    pinsker_fail += !stats::pinsker_check(d).holds;
    const HighFloat err = boost::multiprecision::abs(stats::kl_divergence(d, Distribution::uniform(c.k)) -
                                                     (HighFloat(c.k) - stats::entropy(d)));
    max_identity_error = std::max(max_identity_error, err);
  }
  const bool identity_ok = max_identity_error <= boost::multiprecision::ldexp(HighFloat(1), -200);
  return {{"claims", cases},
          {"violations", violations},
          {"pinsker", {{"distributions", pool.size()}, {"failures", pinsker_fail}, {"k", c.k}}},
          {"kl_identity_max_error_log2", identity_ok && max_identity_error == 0
                                             ? json(nullptr)
                                             : json(static_cast<double>(boost::multiprecision::log2(max_identity_error)))},
          {"kl_identity_within_budget", identity_ok}};
}

inline json run_chernoff(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = *cfg.sampling;
  const ProtocolSpec spec = protocol_of(cfg);
  const stats::ChernoffEstimate est = stats::chernoff_estimate(
      [&](RngSeed seed) { return run_honest(spec, seed).output.to_u64(); }, s.z, stats::SampleConfig{s.B, s.gamma},
      RngSeed{cfg.seed}, ctx.workers);
  json r{{"protocol", params_json(spec)}, {"z", s.z},         {"B", est.B},
         {"hits", est.hits},              {"p_hat", est.p_hat}, {"gamma", est.gamma},
         {"bound", est.bound}};
  try {
    const Rational exact = enumerate_honest_outputs(spec, cfg.limits.cap).mass(s.z);
    r["p_exact"] = rational_json(exact);
    r["within_gamma"] = std::abs(est.p_hat - to_double(exact)) <= est.gamma;
  } catch (const CapExceeded&) {
    r["p_exact"] = nullptr;
  }
  return r;
}

}  // namespace detail

inline std::string config_hash(const ExperimentConfig& cfg) { return detail::hex64(fnv1a64(cfg.text)); }

/// Runs the experiment; module errors become an "error" record with a
/// nonzero exit code (2 for cap errors).
inline RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  RunOutcome out;
  detail::Context ctx{cfg, std::max(1u, opts.workers.value_or(cfg.limits.workers)), out.artifacts};
  out.record = {{"experiment", to_string(cfg.experiment)},
                {"config_hash", config_hash(cfg)},
                {"seed", cfg.seed},
                {"version", FORGE_VERSION},
                {"started", detail::utc_now()}};
  try {
    json result;
    switch (cfg.experiment) {
      case ExperimentKind::kSimulate: result = detail::run_simulate(ctx); break;
      case ExperimentKind::kCompressSweep: result = detail::run_compress_sweep(ctx); break;
      case ExperimentKind::kSecuritySweep: result = detail::run_security_sweep(ctx); break;
      case ExperimentKind::kReduction: result = detail::run_reduction(ctx); break;
      case ExperimentKind::kHybridChain: result = detail::run_hybrid_chain(ctx); break;
      case ExperimentKind::kPublicCoinCheck: result = detail::run_publiccoin_check(ctx); break;
      case ExperimentKind::kVerifyClaims: result = detail::run_verify_claims(ctx); break;
      case ExperimentKind::kChernoff: result = detail::run_chernoff(ctx); break;
    }
    out.record["result"] = std::move(result);
  } catch (const CapExceeded& e) {
    out.record["error"] = {{"code", forge::to_string(e.code())}, {"message", e.what()}};
    out.exit_code = kExitCap;
  } catch (const Error& e) {
    out.record["error"] = {{"code", forge::to_string(e.code())}, {"message", e.what()}};
    out.exit_code = kExitFailure;
  } catch (const std::exception& e) {
    out.record["error"] = {{"code", "internal"}, {"message", e.what()}};
    out.exit_code = kExitFailure;
  }
  out.record["finished"] = detail::utc_now();
  return out;
}

/// Appends the record to report.json and writes the artifacts.
inline void write_outputs(const RunOutcome& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream report(dir / "report.json", std::ios::app | std::ios::binary);
    report << run.record.dump() << "\n";
    if (!report) throw Error(ErrorCode::kInvalidArgument, "cannot write " + (dir / "report.json").string());
  }
  for (const auto& a : run.artifacts) {
    std::ofstream f(dir / a.name, std::ios::binary | std::ios::trunc);
    f << a.content;
    if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + (dir / a.name).string());
  }
}

/// The deterministic part of a run: result payload plus artifact bytes.
inline std::string payload_bytes(const RunOutcome& run) {
  std::string out = run.record.contains("result") ? run.record["result"].dump() : run.record["error"].dump();
  for (const auto& a : run.artifacts) out += "\n--" + a.name + "\n" + a.content;
  return out;
}

}  // namespace forge::cli
