#pragma once

#include "forge/core.hpp"
#include "forge/parallel.hpp"
#include "forge/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>

namespace forge {

struct SecurityParams {
  std::uint32_t t = 0;
  std::vector<std::uint64_t> M;  // target set, elements of {0,1}^m
  Rational delta = 0;

  std::size_t s() const { return M.size(); }
  bool targets(std::uint64_t out) const { return std::find(M.begin(), M.end(), out) != M.end(); }

  void validate(const ProtocolParams& p) const {
    if (t > p.n) throw Error(ErrorCode::kInvalidArgument, "t must be <= n");
    if (M.empty()) throw Error(ErrorCode::kInvalidTargetSet, "target set M is empty");
    std::set<std::uint64_t> seen;
    for (auto x : M) {
      if (p.m < 64 && (x >> p.m) != 0)
        throw Error(ErrorCode::kInvalidTargetSet, "element " + std::to_string(x) + " is not an m-bit string");
      if (!seen.insert(x).second) throw Error(ErrorCode::kInvalidTargetSet, "duplicate element " + std::to_string(x));
    }
    if (delta < 0 || delta > 1) throw Error(ErrorCode::kInvalidArgument, "delta must lie in [0,1]");
  }
};

enum class ValueMethod { kExactEnumeration, kGameTree, kMonteCarlo };

inline const char* to_string(ValueMethod m) {
  switch (m) {
    case ValueMethod::kExactEnumeration: return "exact-enumeration";
    case ValueMethod::kGameTree: return "game-tree";
    case ValueMethod::kMonteCarlo: return "monte-carlo";
  }
  return "?";
}

/// Bias toward M: adversarial mass minus honest mass. Exact methods fill the
/// rational fields; Monte Carlo fills the estimates and a confidence radius.
struct ValueReport {
  ValueMethod method = ValueMethod::kExactEnumeration;
  std::optional<Rational> exact_value;
  std::optional<Rational> exact_adversarial_mass;
  std::optional<Rational> exact_honest_mass;
  double value = 0;
  double adversarial_mass = 0;
  double honest_mass = 0;
  std::uint64_t B = 0;
  double confidence = 0;
  double radius = 0;  // two-sided radius on `value`
  std::uint64_t halted_runs = 0;
  double adversarial_mass_excluding_halted = 0;
};

using StrategyFactory = std::function<std::unique_ptr<AdversaryStrategy>()>;

template <class S, class... Args>
StrategyFactory factory_of(Args... args) {
  return [=] { return std::unique_ptr<AdversaryStrategy>(new S(args...)); };
}

struct ExactMode {
  std::uint64_t cap = kDefaultEnumerationCap;
};
struct SampledMode {
  std::uint64_t B = 1;
  RngSeed seed;
  double confidence = 0.95;
  unsigned workers = 1;
};

inline Rational target_mass(const Distribution& dist, const SecurityParams& sec) {
  Rational m = 0;
  for (auto x : sec.M) m += dist.mass(x);
  return m;
}

/// Exact value: every honest message and every strategy coin is enumerated.
inline ValueReport value_of(const ProtocolSpec& spec, const StrategyFactory& make, const SecurityParams& sec,
                            ExactMode mode) {
  sec.validate(spec.params);
  auto strategy = make();
  Rational adversarial = 0;
  Rational adversarial_kept = 0;
  std::uint64_t halted_paths = 0;
  Explorer explorer(mode.cap);
  explorer.explore(
      [&](Explorer& e) {
        RunResult r = run_with_adversary(spec, *strategy, sec.t, e);
        return std::pair{sec.targets(r.output.to_u64()), r.halted};
      },
      [&](const std::pair<bool, bool>& hit, const Rational& pr) {
        if (hit.first) adversarial += pr;
        if (hit.second)
          ++halted_paths;
        else if (hit.first)
          adversarial_kept += pr;
      });
  const Rational honest = target_mass(enumerate_honest_outputs(spec, mode.cap), sec);
  ValueReport r;
  r.method = ValueMethod::kExactEnumeration;
  r.exact_adversarial_mass = adversarial;
  r.exact_honest_mass = honest;
  r.exact_value = adversarial - honest;
  r.value = to_double(*r.exact_value);
  r.adversarial_mass = to_double(adversarial);
  r.honest_mass = to_double(honest);
  r.halted_runs = halted_paths;
  r.adversarial_mass_excluding_halted = to_double(adversarial_kept);
  return r;
}

/// Monte Carlo value with common random numbers: run i uses the same honest
/// randomness for the adversarial and the honest execution.
inline ValueReport value_of(const ProtocolSpec& spec, const StrategyFactory& make, const SecurityParams& sec,
                            SampledMode mode) {
  sec.validate(spec.params);
  if (mode.B < 1) throw Error(ErrorCode::kInvalidArgument, "B >= 1 required");
  constexpr std::uint64_t kBatch = 1024;
  const std::uint64_t batches = (mode.B + kBatch - 1) / kBatch;
  struct Tally {
    std::uint64_t adversarial = 0, honest = 0, halted = 0, kept = 0;
  };
  std::vector<Tally> partial(batches);
  parallel_for(batches, mode.workers, [&](std::uint64_t b) {
    auto strategy = make();
    Tally& tally = partial[b];
    const std::uint64_t hi = std::min(mode.B, (b + 1) * kBatch);
    for (std::uint64_t i = b * kBatch; i < hi; ++i) {
      const RngSeed seed = stats::sample_seed(mode.seed, i);
      const RunResult adv = run_with_adversary(spec, *strategy, sec.t, seed);
      const RunResult hon = run_honest(spec, seed);
      const bool hit = sec.targets(adv.output.to_u64());
      tally.adversarial += hit;
      tally.honest += sec.targets(hon.output.to_u64());
      if (adv.halted)
        ++tally.halted;
      else
        tally.kept += hit;
    }
  });
  Tally total;
  for (const auto& t : partial) {
    total.adversarial += t.adversarial;
    total.honest += t.honest;
    total.halted += t.halted;
    total.kept += t.kept;
  }
  const double B = static_cast<double>(mode.B);
  ValueReport r;
  r.method = ValueMethod::kMonteCarlo;
  r.B = mode.B;
  r.confidence = mode.confidence;
  r.adversarial_mass = static_cast<double>(total.adversarial) / B;
  r.honest_mass = static_cast<double>(total.honest) / B;
  r.value = r.adversarial_mass - r.honest_mass;
  // Each mass lies within γ of its mean with probability >= 1 − (1−conf)/2.
  r.radius = 2 * stats::SampleConfig::radius(mode.B, 1 - (1 - mode.confidence) / 2);
  r.halted_runs = total.halted;
  r.adversarial_mass_excluding_halted = static_cast<double>(total.kept) / B;
  return r;
}

// ---------------------------------------------------------------------------
// Built-in strategies

/// Lets parties speak in ascending order; in the final round it corrupts the
/// last pending speaker (budget permitting) and sends the smallest message
/// that puts the output in M, or the zero message if none does.
class LastSpeakerBiasStrategy final : public AdversaryStrategy {
 public:
  LastSpeakerBiasStrategy(ProtocolSpec spec, std::vector<std::uint64_t> M)
      : spec_(std::make_shared<const ProtocolSpec>(std::move(spec))), M_(std::move(M)) {}

  AdversaryAction decide(const View& view, Chooser&) override {
    const auto& p = view.params;
    if (view.round + 1 != p.d || view.pending_count() != 1) return default_action(view);
    std::uint32_t u = 0;
    while (!view.pending(u)) ++u;
    if (!view.corrupted.contains(u))
      return view.budget_left() > 0 ? AdversaryAction::corrupt(u) : AdversaryAction::schedule(u);
    if (p.L >= 32) return AdversaryAction::send_as(u, BitString(p.L));
    Transcript probe = view.transcript;
    probe.append({view.round, u, BitString(p.L), SpeakerStatus::kCorrupted});
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << p.L); ++x) {
      probe.mutable_entries().back().message = BitString(p.L, x);
      const std::uint64_t out = spec_->output(probe).to_u64();
      if (std::find(M_.begin(), M_.end(), out) != M_.end()) return AdversaryAction::send_as(u, BitString(p.L, x));
    }
    return AdversaryAction::send_as(u, BitString(p.L));
  }

 private:
  std::shared_ptr<const ProtocolSpec> spec_;
  std::vector<std::uint64_t> M_;
};

/// Majority-coin attacker: lets honest parties speak in order and corrupts the
/// next speaker, sending target_bit, once the remaining speakers fit in the
/// remaining budget and the target bit still needs votes it can get.
class GreedyMajorityStrategy final : public AdversaryStrategy {
 public:
  explicit GreedyMajorityStrategy(bool target_bit) : target_(target_bit) {}

  AdversaryAction decide(const View& view, Chooser&) override {
    const std::uint32_t n = view.params.n;
    for (std::uint32_t p = 0; p < n; ++p)
      if (view.pending(p) && view.corrupted.contains(p)) return AdversaryAction::send_as(p, BitString(1, target_));
    std::uint32_t votes = 0;
    for (const auto& e : view.transcript.entries()) votes += e.message.get(0) == target_;
    const std::int64_t need = static_cast<std::int64_t>(n / 2 + 1) - votes;
    const std::uint32_t remaining = view.pending_count();
    std::uint32_t next = 0;
    while (!view.pending(next)) ++next;
    if (need > 0 && need <= remaining && remaining <= view.budget_left()) return AdversaryAction::corrupt(next);
    return AdversaryAction::schedule(next);
  }

 private:
  bool target_;
};

/// Corrupts a fixed set before the first message, then plays `inner`
/// (whose own corruption requests are replaced by default scheduling).
class StaticStrategy final : public AdversaryStrategy {
 public:
  StaticStrategy(std::vector<std::uint32_t> corrupt_set, std::shared_ptr<AdversaryStrategy> inner)
      : set_(std::move(corrupt_set)), inner_(std::move(inner)) {
    std::sort(set_.begin(), set_.end());
  }

  const std::vector<std::uint32_t>& corruption_set() const { return set_; }

  void begin(const ProtocolParams& p, std::uint32_t budget) override {
    if (set_.size() > budget) throw Error(ErrorCode::kBudgetExceeded, "static set larger than budget");
    inner_->begin(p, budget);
  }

  AdversaryAction decide(const View& view, Chooser& coins) override {
    for (auto p : set_)
      if (!view.corrupted.contains(p)) return AdversaryAction::corrupt(p);
    AdversaryAction a = inner_->decide(view, coins);
    return a.kind == AdversaryAction::Kind::kCorrupt ? default_action(view) : a;
  }

  void observe(const View& after, Chooser& coins) override { inner_->observe(after, coins); }

 private:
  std::vector<std::uint32_t> set_;
  std::shared_ptr<AdversaryStrategy> inner_;
};

// ---------------------------------------------------------------------------
// Policy tables

/// Canonical encoding of a view: transcript (order, statuses, messages) plus
/// the corrupted set. Round and within-round progress follow from these.
inline std::string view_key(const Transcript& transcript, const PartySet& corrupted) {
  std::string key = transcript.key();
  key.push_back('#');
  for (auto p : corrupted.members())
    for (int k = 0; k < 4; ++k) key.push_back(static_cast<char>((p >> (8 * k)) & 0xff));
  return key;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t view_hash(const View& view) { return fnv1a64(view_key(view.transcript, view.corrupted)); }

/// Deterministic policy: view hash → action.
class PolicyTable {
 public:
  void set(std::uint64_t hash, AdversaryAction action) { table_[hash] = std::move(action); }
  const AdversaryAction* find(std::uint64_t hash) const {
    auto it = table_.find(hash);
    return it == table_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return table_.size(); }
  const std::map<std::uint64_t, AdversaryAction>& entries() const { return table_; }

  nlohmann::json to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [hash, a] : table_) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
      nlohmann::json action;
      switch (a.kind) {
        case AdversaryAction::Kind::kCorrupt: action["kind"] = "corrupt"; break;
        case AdversaryAction::Kind::kScheduleHonest: action["kind"] = "schedule"; break;
        case AdversaryAction::Kind::kSendAs:
          action["kind"] = "send_as";
          action["message"] = a.message.bits();
          break;
      }
      action["party"] = a.party;
      entries.push_back({{"view", buf}, {"action", action}});
    }
    return {{"format", "forge-policy"}, {"version", 1}, {"entries", entries}};
  }

  static PolicyTable from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "forge-policy") throw Error(ErrorCode::kInvalidArgument, "not a policy file");
    PolicyTable t;
    for (const auto& e : j.at("entries")) {
      const std::uint64_t hash = std::stoull(e.at("view").get<std::string>(), nullptr, 16);
      const auto& a = e.at("action");
      const std::string kind = a.at("kind");
      const std::uint32_t party = a.at("party");
      if (kind == "corrupt") {
        t.set(hash, AdversaryAction::corrupt(party));
      } else if (kind == "schedule") {
        t.set(hash, AdversaryAction::schedule(party));
      } else if (kind == "send_as") {
        const std::string bits = a.at("message");
        BitString msg(static_cast<std::uint32_t>(bits.size()));
        for (std::uint32_t b = 0; b < bits.size(); ++b) msg.set(b, bits[b] == '1');
        t.set(hash, AdversaryAction::send_as(party, msg));
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown action kind '" + kind + "'");
      }
    }
    return t;
  }

 private:
  std::map<std::uint64_t, AdversaryAction> table_;
};

/// Replays a policy table; views missing from the table get default_action.
class TableStrategy final : public AdversaryStrategy {
 public:
  explicit TableStrategy(std::shared_ptr<const PolicyTable> table) : table_(std::move(table)) {}
  AdversaryAction decide(const View& view, Chooser&) override {
    if (const AdversaryAction* a = table_->find(view_hash(view))) return *a;
    return default_action(view);
  }

 private:
  std::shared_ptr<const PolicyTable> table_;
};

// ---------------------------------------------------------------------------
// Exact optimal adaptive adversary by backward induction

struct OptimalValue {
  ValueReport report;
  PolicyTable policy;
  std::uint64_t states = 0;
};

inline constexpr std::uint64_t kDefaultGameTreeCap = std::uint64_t{1} << 22;

namespace detail {

/// Values are integers scaled by 2^{L·d·n}; every node value is an exact
/// multiple of 2^{L·(messages so far)}, so halving by 2^L at honest nodes is exact.
class GameTreeSolver {
 public:
  GameTreeSolver(const ProtocolSpec& spec, const SecurityParams& sec, std::uint64_t cap)
      : spec_(spec), sec_(sec), cap_(cap), scale_bits_(spec.params.L * spec.params.slots()) {}

  std::uint64_t solve(ExecutionState& state) { return value(state); }
  PolicyTable& policy() { return policy_; }
  std::uint64_t states() const { return memo_.size(); }
  unsigned scale_bits() const { return static_cast<unsigned>(scale_bits_); }

 private:
  std::uint64_t value(ExecutionState& state) {
    const auto& p = spec_.params;
    if (state.transcript.size() == p.slots())
      return sec_.targets(checked_output(spec_, state.transcript).to_u64()) ? (std::uint64_t{1} << scale_bits_) : 0;
    const std::string key = view_key(state.transcript, state.corrupted);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= cap_) throw CapExceeded("game-tree states", memo_.size() + 1, cap_);

    std::optional<std::uint64_t> best;
    AdversaryAction best_action;
    auto consider = [&](const AdversaryAction& a, std::uint64_t v) {
      if (!best || v > *best) {
        best = v;
        best_action = a;
      }
    };
    const std::uint64_t messages = std::uint64_t{1} << p.L;
    for (std::uint32_t u = 0; u < p.n; ++u) {
      if (!state.spoken[u] && !state.corrupted.contains(u)) {
        unsigned __int128 sum = 0;
        for (std::uint64_t x = 0; x < messages; ++x) sum += with_message(state, u, BitString(p.L, x), false);
        consider(AdversaryAction::schedule(u), static_cast<std::uint64_t>(sum >> p.L));
      }
    }
    for (std::uint32_t u = 0; u < p.n; ++u) {
      if (!state.spoken[u] && state.corrupted.contains(u)) {
        for (std::uint64_t x = 0; x < messages; ++x)
          consider(AdversaryAction::send_as(u, BitString(p.L, x)), with_message(state, u, BitString(p.L, x), true));
      }
    }
    if (state.corrupted.size() < sec_.t) {
      for (std::uint32_t u = 0; u < p.n; ++u) {
        if (state.corrupted.contains(u)) continue;
        ExecutionState next = state;
        next.corrupted.insert(u);
        consider(AdversaryAction::corrupt(u), value(next));
      }
    }
    policy_.set(fnv1a64(key), best_action);
    memo_.emplace(key, *best);
    return *best;
  }

  std::uint64_t with_message(ExecutionState& state, std::uint32_t u, BitString msg, bool corrupted) {
    ExecutionState next = state;
    next.transcript.append({next.round, u, std::move(msg), corrupted ? SpeakerStatus::kCorrupted : SpeakerStatus::kHonest});
    next.spoken[u] = true;
    if (std::find(next.spoken.begin(), next.spoken.end(), false) == next.spoken.end()) {
      ++next.round;
      std::fill(next.spoken.begin(), next.spoken.end(), false);
    }
    return value(next);
  }

  const ProtocolSpec& spec_;
  const SecurityParams& sec_;
  std::uint64_t cap_;
  std::uint64_t scale_bits_;
  std::unordered_map<std::string, std::uint64_t> memo_;
  PolicyTable policy_;
};

}  // namespace detail

/// Supremum of the bias toward M over all adaptive rushing adversaries with
/// budget t: max at adversary decisions (corrupt / schedule / every SendAs
/// message), expectation over uniform honest messages.
inline OptimalValue optimal_adaptive_value(const ProtocolSpec& spec, const SecurityParams& sec,
                                           std::uint64_t cap = kDefaultGameTreeCap) {
  sec.validate(spec.params);
  if (!spec.domain.uniform_bits())
    throw Error(ErrorCode::kInvalidArgument, "game-tree solver needs uniform-bit honest messages");
  const std::uint64_t scale_bits = std::uint64_t{spec.params.L} * spec.params.slots();
  if (scale_bits + spec.params.L > 62) throw CapExceeded("game-tree value scale bits", scale_bits + spec.params.L, 62);

  detail::GameTreeSolver solver(spec, sec, cap);
  ExecutionState root = ExecutionState::initial(spec.params);
  const std::uint64_t scaled = solver.solve(root);

  OptimalValue out;
  out.states = solver.states();
  const Rational adversarial = dyadic(scaled, solver.scale_bits());
  const Rational honest = target_mass(enumerate_honest_outputs(spec, std::max(cap, kDefaultEnumerationCap)), sec);
  out.report.method = ValueMethod::kGameTree;
  out.report.exact_adversarial_mass = adversarial;
  out.report.exact_honest_mass = honest;
  out.report.exact_value = adversarial - honest;
  out.report.value = to_double(*out.report.exact_value);
  out.report.adversarial_mass = to_double(adversarial);
  out.report.honest_mass = to_double(honest);
  out.policy = std::move(solver.policy());
  return out;
}

}  // namespace forge
