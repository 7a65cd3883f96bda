#pragma once

// The reduction from an attack on Π_H (for many H) to an attack on Π: the
// adaptive adversary that tracks the set of matrices consistent with the run,
// its static variant, and the hybrid experiments between the reduction run
// and the ideal run.

#include "forge/compression.hpp"

#include <map>
#include <memory>
#include <optional>

namespace forge {

/// One matrix with its attack on Π_H. Strategies are shared between runs and
/// threads, so they must be pure functions of the view (no mutable state,
/// no use of coins).
struct FamilyMember {
  std::shared_ptr<const MatrixH> H;
  std::shared_ptr<const ProtocolSpec> compressed;
  std::shared_ptr<AdversaryStrategy> strategy;
};
using ReductionFamily = std::vector<FamilyMember>;

using MemberStrategyMaker =
    std::function<std::shared_ptr<AdversaryStrategy>(const MatrixH& H, const ProtocolSpec& compressed)>;

inline std::shared_ptr<const ReductionFamily> make_family(const ProtocolSpec& spec, const std::vector<MatrixH>& matrices,
                                                          const MemberStrategyMaker& make) {
  if (matrices.empty()) throw Error(ErrorCode::kEmptyFamily, "reduction family is empty");
  auto family = std::make_shared<ReductionFamily>();
  family->reserve(matrices.size());
  for (const auto& H : matrices) {
    if (!H.same_shape(matrices.front())) throw Error(ErrorCode::kShapeMismatch, "family matrices differ in shape");
    auto compressed = std::make_shared<const ProtocolSpec>(compressed_protocol(spec, H));
    auto strategy = make(H, *compressed);
    family->push_back({std::make_shared<const MatrixH>(H), std::move(compressed), std::move(strategy)});
  }
  return family;
}

/// What A^H does at the current position of the short run: the corruptions
/// it makes and the message-producing action that ends the step.
struct MemberStep {
  bool valid = false;
  std::vector<std::uint32_t> corruptions;
  AdversaryAction final;  // SendAs carries the short message r*

  bool sends() const { return final.kind == AdversaryAction::Kind::kSendAs; }
  friend auto operator<=>(const MemberStep&, const MemberStep&) = default;
  friend bool operator==(const MemberStep&, const MemberStep&) = default;
};

namespace detail {

/// Replays A^H on MAP_H of the long prefix. Invalid if the prefix does not map
/// or A^H's step is illegal (which a strategy respecting the rules never does).
inline MemberStep simulate_step(const FamilyMember& m, const View& view) {
  MemberStep step;
  const auto short_t = map_transcript(*m.H, view.transcript);
  if (!short_t) return step;
  const ProtocolParams& sp = m.compressed->params;
  PartySet corrupted = view.corrupted;
  KeyedStream unused(0);
  for (std::uint32_t guard = 0; guard <= sp.n; ++guard) {
    const View sv{sp, *short_t, corrupted, view.budget, view.round, view.spoken};
    AdversaryAction a = m.strategy->decide(sv, unused);
    if (a.party >= sp.n) return step;
    if (a.kind == AdversaryAction::Kind::kCorrupt) {
      if (corrupted.contains(a.party) || corrupted.size() >= view.budget) return step;
      corrupted.insert(a.party);
      step.corruptions.push_back(a.party);
      continue;
    }
    const bool send = a.kind == AdversaryAction::Kind::kSendAs;
    if (view.spoken[a.party] || send != corrupted.contains(a.party)) return step;
    if (send && a.message.width() != sp.L) return step;
    step.final = std::move(a);
    step.valid = true;
    return step;
  }
  return step;
}

struct StepGroupKey {
  MemberStep step;
  std::vector<std::uint64_t> row;  // row (i,u) of H*, only for SendAs steps

  friend auto operator<=>(const StepGroupKey&, const StepGroupKey&) = default;
};

/// Members grouped by the outcome of choosing them as H*: same step, and for
/// SendAs also the same row (i,u). Choosing H* uniformly and filtering equals
/// choosing a group with probability proportional to its size.
inline std::map<StepGroupKey, std::vector<std::uint32_t>> group_steps(const ReductionFamily& family,
                                                                      const std::vector<std::uint32_t>& members,
                                                                      const View& view, std::uint64_t* invalid) {
  std::map<StepGroupKey, std::vector<std::uint32_t>> groups;
  for (auto idx : members) {
    const FamilyMember& m = family[idx];
    MemberStep step = simulate_step(m, view);
    if (!step.valid) {
      if (invalid) ++*invalid;
      continue;
    }
    StepGroupKey key{std::move(step), {}};
    if (key.step.sends()) key.row = m.H->row(view.round, key.step.final.party);
    groups[std::move(key)].push_back(idx);
  }
  return groups;
}

/// Members of `group` with a preimage of R in row (i,u), grouped by that row.
inline std::map<std::vector<std::uint64_t>, std::vector<std::uint32_t>> rows_with_preimage(
    const ReductionFamily& family, const std::vector<std::uint32_t>& group, std::uint32_t i, std::uint32_t u,
    std::uint64_t R) {
  std::map<std::vector<std::uint64_t>, std::vector<std::uint32_t>> rows;
  for (auto idx : group) {
    const MatrixH& H = *family[idx].H;
    if (H.map_h(i, u, R)) rows[H.row(i, u)].push_back(idx);
  }
  return rows;
}

template <class Map>
std::vector<std::uint64_t> sizes_of(const Map& groups) {
  std::vector<std::uint64_t> w;
  w.reserve(groups.size());
  for (const auto& [key, members] : groups) w.push_back(members.size());
  return w;
}

}  // namespace detail

/// Matrices still consistent with the run after `slot` messages.
struct ConsistentSet {
  std::vector<std::uint32_t> members;  // indices into the family, ascending
  std::uint32_t round = 0;
  std::uint64_t slot = 0;
  Transcript history;
};

/// Attack on Π built from attacks on Π_H. Before each message: pick H*
/// uniformly from the consistent set, replay A^H* on MAP_H*(prefix), mirror
/// its corruptions, and either send H*(i,u,r*) for a corrupted party or let an
/// honest party speak. Afterwards keep only the matrices that agree with what
/// happened (for an honest message, via a uniformly drawn H′ that can explain
/// it). An empty set halts the attack; it then plays default actions.
class ReductionAdversary final : public AdversaryStrategy {
 public:
  explicit ReductionAdversary(std::shared_ptr<const ReductionFamily> family,
                              std::optional<std::vector<std::uint32_t>> initial = std::nullopt,
                              std::vector<std::uint32_t> precorrupt = {})
      : family_(std::move(family)), precorrupt_(std::move(precorrupt)) {
    if (!family_ || family_->empty()) throw Error(ErrorCode::kEmptyFamily, "reduction family is empty");
    if (initial) {
      initial_ = std::move(*initial);
      std::sort(initial_.begin(), initial_.end());
    } else {
      initial_.resize(family_->size());
      for (std::uint32_t k = 0; k < initial_.size(); ++k) initial_[k] = k;
    }
  }

  void begin(const ProtocolParams& p, std::uint32_t budget) override {
    for (const auto& m : *family_) {
      require_shape(p, *m.H);
      m.strategy->begin(m.compressed->params, budget);
    }
    set_ = ConsistentSet{initial_, 0, 0, {}};
    sizes_.assign(1, set_.members.size());
    halted_ = set_.members.empty();
    pending_.reset();
    invalid_ = 0;
  }

  AdversaryAction decide(const View& view, Chooser& coins) override {
    for (auto p : precorrupt_)
      if (!view.corrupted.contains(p)) return AdversaryAction::corrupt(p);
    if (halted_) return default_action(view);
    if (!pending_) {
      auto groups = detail::group_steps(*family_, set_.members, view, &invalid_);
      if (groups.empty()) {
        halted_ = true;
        return default_action(view);
      }
      const auto weights = detail::sizes_of(groups);
      auto it = std::next(groups.begin(), static_cast<std::ptrdiff_t>(coins.weighted(weights)));
      Pending p{it->first.step, std::move(it->second), 0, 0};
      if (p.step.sends()) {
        const MatrixH& hstar = *(*family_)[p.group.front()].H;
        p.R = hstar.entry_u64(view.round, p.step.final.party, p.step.final.message.to_u64());
      }
      pending_ = std::move(p);
    }
    Pending& p = *pending_;
    if (p.emitted < p.step.corruptions.size()) return AdversaryAction::corrupt(p.step.corruptions[p.emitted++]);
    if (p.step.sends()) return AdversaryAction::send_as(p.step.final.party, BitString(view.params.L, p.R));
    return AdversaryAction::schedule(p.step.final.party);
  }

  void observe(const View& after, Chooser& coins) override {
    set_.history = after.transcript;
    set_.round = after.round;
    set_.slot = after.transcript.size();
    if (halted_ || !pending_) return;
    Pending p = std::move(*pending_);
    pending_.reset();
    if (p.step.sends()) {
      set_.members = std::move(p.group);
    } else {
      const auto& e = after.transcript.back();
      auto rows = detail::rows_with_preimage(*family_, p.group, e.round, e.party, e.message.to_u64());
      if (rows.empty()) {
        set_.members.clear();
      } else {
        const auto weights = detail::sizes_of(rows);
        auto it = std::next(rows.begin(), static_cast<std::ptrdiff_t>(coins.weighted(weights)));
        set_.members = std::move(it->second);
      }
    }
    std::sort(set_.members.begin(), set_.members.end());
    sizes_.push_back(set_.members.size());
    if (set_.members.empty()) halted_ = true;
  }

  bool halted() const override { return halted_; }
  const ConsistentSet& consistent_set() const { return set_; }
  /// |ℋ| before the first message and after each message handled while active.
  const std::vector<std::uint64_t>& size_log() const { return sizes_; }
  /// Members whose A^H could not be replayed (0 whenever the strategies are legal).
  std::uint64_t invalid_replays() const { return invalid_; }

 private:
  struct Pending {
    MemberStep step;
    std::vector<std::uint32_t> group;
    std::size_t emitted = 0;
    std::uint64_t R = 0;  // long message H*(i,u,r*) for SendAs
  };

  std::shared_ptr<const ReductionFamily> family_;
  std::vector<std::uint32_t> initial_;
  std::vector<std::uint32_t> precorrupt_;
  ConsistentSet set_;
  std::vector<std::uint64_t> sizes_;
  std::optional<Pending> pending_;
  bool halted_ = false;
  std::uint64_t invalid_ = 0;
};

// ---------------------------------------------------------------------------
// Static corruptions

struct StaticReduction {
  std::vector<std::uint32_t> T_star;
  std::map<std::vector<std::uint32_t>, std::uint64_t> alpha;  // α(T) = #{H : T^H = T}
  std::vector<std::uint32_t> restricted;                      // {H : T^H = T*}
  std::shared_ptr<ReductionAdversary> adversary;
};

/// α(T) over the family, T* the most frequent set (smallest set on ties),
/// and the reduction over {H : T^H = T*} corrupting T* before any message.
inline StaticReduction reduction_adversary_static(std::shared_ptr<const ReductionFamily> family,
                                                  std::vector<std::vector<std::uint32_t>> corruption_sets,
                                                  std::uint32_t t) {
  if (!family || family->empty()) throw Error(ErrorCode::kEmptyFamily, "reduction family is empty");
  if (corruption_sets.size() != family->size())
    throw Error(ErrorCode::kInvalidArgument, "one corruption set per family member required");
  StaticReduction out;
  for (auto& T : corruption_sets) {
    std::sort(T.begin(), T.end());
    T.erase(std::unique(T.begin(), T.end()), T.end());
    if (T.size() > t) throw Error(ErrorCode::kBudgetExceeded, "corruption set larger than t");
    ++out.alpha[T];
  }
  std::uint64_t best = 0;
  for (const auto& [T, count] : out.alpha)
    if (count > best) {
      best = count;
      out.T_star = T;
    }
  for (std::uint32_t k = 0; k < corruption_sets.size(); ++k)
    if (corruption_sets[k] == out.T_star) out.restricted.push_back(k);
  out.adversary = std::make_shared<ReductionAdversary>(std::move(family), out.restricted, out.T_star);
  return out;
}

/// Same, reading T^H from members whose strategies are StaticStrategy.
inline StaticReduction reduction_adversary_static(std::shared_ptr<const ReductionFamily> family, std::uint32_t t) {
  if (!family || family->empty()) throw Error(ErrorCode::kEmptyFamily, "reduction family is empty");
  std::vector<std::vector<std::uint32_t>> sets;
  for (const auto& m : *family) {
    const auto* s = dynamic_cast<const StaticStrategy*>(m.strategy.get());
    if (!s) throw Error(ErrorCode::kInvalidArgument, "family member is not a static strategy");
    sets.push_back(s->corruption_set());
  }
  return reduction_adversary_static(std::move(family), std::move(sets), t);
}

// ---------------------------------------------------------------------------
// Hybrid experiments

struct HybridOutcome {
  Transcript transcript;
  BitString output;
  bool halted = false;

  friend auto operator<=>(const HybridOutcome&, const HybridOutcome&) = default;
  friend bool operator==(const HybridOutcome&, const HybridOutcome&) = default;
};

/// Trans_A: the full reduction run on Π.
inline HybridOutcome reduction_run(const ProtocolSpec& spec, std::shared_ptr<const ReductionFamily> family,
                                   std::uint32_t t, Randomness& rnd) {
  ReductionAdversary adversary(std::move(family));
  RunResult r = run_with_adversary(spec, adversary, t, rnd);
  return {std::move(r.transcript), std::move(r.output), r.halted};
}

/// Trans_ideal: H uniform from the family, Π_H against A^H, lifted by H.
inline HybridOutcome ideal_run(const ProtocolSpec& spec, const ReductionFamily& family, std::uint32_t t,
                               Randomness& rnd) {
  if (family.empty()) throw Error(ErrorCode::kEmptyFamily, "reduction family is empty");
  const FamilyMember& m = family[rnd.coins().below(family.size())];
  ExecutionState state = ExecutionState::initial(m.compressed->params);
  m.strategy->begin(m.compressed->params, t);
  execute(*m.compressed, m.strategy.get(), t, rnd, state, m.compressed->params.slots(), tags::kCompressedHonest);
  Transcript long_t = lift(*m.H, state.transcript);
  BitString out = checked_output(spec, long_t);
  return {std::move(long_t), std::move(out), false};
}

/// Exp^(k): the reduction for the first k messages, then H uniform from the
/// consistent set, the prefix mapped by MAP_H, and the rest played as Π_H
/// against A^H; returns H(Trans_H). If the set is already empty the halted
/// reduction run is continued instead.
inline HybridOutcome hybrid_experiment(std::uint64_t k, const ProtocolSpec& spec,
                                       std::shared_ptr<const ReductionFamily> family, std::uint32_t t,
                                       Randomness& rnd) {
  const auto& p = spec.params;
  if (k > p.slots()) throw Error(ErrorCode::kInvalidArgument, "hybrid level exceeds d*n");
  if (t > p.n) throw Error(ErrorCode::kInvalidArgument, "budget t exceeds n");
  ReductionAdversary adversary(family);
  adversary.begin(p, t);
  ExecutionState state = ExecutionState::initial(p);
  execute(spec, &adversary, t, rnd, state, k);
  if (adversary.halted()) {
    execute(spec, &adversary, t, rnd, state, p.slots());
    BitString out = checked_output(spec, state.transcript);
    return {std::move(state.transcript), std::move(out), true};
  }
  const auto& members = adversary.consistent_set().members;
  const FamilyMember& m = (*family)[members[rnd.coins().below(members.size())]];
  auto short_t = map_transcript(*m.H, state.transcript);
  if (!short_t) throw Error(ErrorCode::kEmptyConsistentSet, "consistent matrix does not map the prefix");
  ExecutionState short_state{std::move(*short_t), state.corrupted, state.round, state.spoken};
  m.strategy->begin(m.compressed->params, t);
  execute(*m.compressed, m.strategy.get(), t, rnd, short_state, p.slots(), tags::kCompressedHonest);
  Transcript long_t = lift(*m.H, short_state.transcript);
  BitString out = checked_output(spec, long_t);
  return {std::move(long_t), std::move(out), false};
}

using OutcomeLaw = Law<HybridOutcome>;

/// Exact law of an experiment over all honest messages and all coins.
template <class Fn>
OutcomeLaw exact_law(Fn&& experiment, std::uint64_t cap = kDefaultEnumerationCap) {
  OutcomeLaw law;
  Explorer explorer(cap);
  explorer.explore([&](Explorer& e) { return experiment(static_cast<Randomness&>(e)); },
                   [&](const HybridOutcome& o, const Rational& pr) { law[o] += pr; });
  return law;
}

/// Law of the transcript alone (drops the output and halt flag).
inline Law<Transcript> transcript_law(const OutcomeLaw& law) {
  Law<Transcript> out;
  for (const auto& [o, pr] : law) out[o.transcript] += pr;
  return out;
}

// ---------------------------------------------------------------------------
// Consistent-set shrinkage at an honest slot

struct ShrinkageCheck {
  bool honest_step = false;                  // false if H* groups at this view do not all schedule
  std::vector<Rational> expected_ratio;      // per honest message R: E|ℋ_after| / |ℋ_before|
  std::vector<std::pair<Rational, Rational>> probability_at_least;  // (ε, Pr_R[ratio >= bound(ε)])
  std::vector<Rational> bound;                                       // ε / (2^{NL}·4nN) per ε
  bool holds = false;
};

/// For every honest message R of the next slot, the expected fraction of
/// `members` that survives the step (over H* and H′), and whether it is at
/// least ε/(2^{NL}·4nN) with probability >= 1 − ε over R.
inline ShrinkageCheck honest_step_shrinkage(const ReductionFamily& family, const std::vector<std::uint32_t>& members,
                                            const View& view, const std::vector<Rational>& eps_grid) {
  if (members.empty()) throw Error(ErrorCode::kEmptyConsistentSet, "consistent set is empty");
  ShrinkageCheck out;
  const auto groups = detail::group_steps(family, members, view, nullptr);
  out.honest_step = !groups.empty();
  for (const auto& [key, g] : groups) out.honest_step = out.honest_step && !key.step.sends();
  if (!out.honest_step) return out;

  const MatrixH& any = *family[members.front()].H;
  const std::uint32_t L = view.params.L;
  const std::uint64_t messages = std::uint64_t{1} << L;
  const Rational total(static_cast<long long>(members.size()));
  for (std::uint64_t R = 0; R < messages; ++R) {
    Rational e = 0;
    for (const auto& [key, g] : groups) {
      const auto rows = detail::rows_with_preimage(family, g, view.round, key.step.final.party, R);
      std::uint64_t q = 0;
      for (const auto& [row, ms] : rows) q += ms.size();
      if (q == 0) continue;
      Rational inner = 0;  // E over H′ of the surviving count
      for (const auto& [row, ms] : rows) inner += Rational(static_cast<long long>(ms.size() * ms.size()), q);
      e += Rational(static_cast<long long>(g.size())) / total * inner / total;
    }
    out.expected_ratio.push_back(e);
  }
  const BigInt denom = (BigInt(1) << static_cast<unsigned>(any.N() * L)) * 4 * view.params.n * any.N();
  out.holds = true;
  for (const auto& eps : eps_grid) {
    const Rational bound = eps / Rational(denom);
    std::uint64_t hits = 0;
    for (const auto& r : out.expected_ratio) hits += r >= bound;
    const Rational pr(static_cast<long long>(hits), static_cast<long long>(messages));
    out.bound.push_back(bound);
    out.probability_at_least.emplace_back(eps, pr);
    out.holds = out.holds && pr >= 1 - eps;
  }
  return out;
}

}  // namespace forge
