#pragma once

// Synchronous full-information protocol model and the seeded execution
// engine. Every party speaks exactly once per round; within a round the
// adversary (if any) decides who speaks next.

#include "forge/bits.hpp"
#include "forge/distribution.hpp"
#include "forge/error.hpp"
#include "forge/random.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace forge {

struct ProtocolParams {
  std::uint32_t n = 1;  // parties
  std::uint32_t d = 1;  // rounds
  std::uint32_t L = 1;  // message bits
  std::uint32_t m = 1;  // output bits

  std::uint64_t slots() const { return std::uint64_t{d} * n; }
  friend bool operator==(const ProtocolParams&, const ProtocolParams&) = default;
};

enum class SpeakerStatus : std::uint8_t { kHonest = 0, kCorrupted = 1 };

struct TranscriptEntry {
  std::uint32_t round = 0;  // 0-based
  std::uint32_t party = 0;  // 0-based
  BitString message;
  SpeakerStatus status = SpeakerStatus::kHonest;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
  friend auto operator<=>(const TranscriptEntry&, const TranscriptEntry&) = default;
};

/// Messages in actual send order.
class Transcript {
 public:
  void append(TranscriptEntry entry) { entries_.push_back(std::move(entry)); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  std::vector<TranscriptEntry>& mutable_entries() { return entries_; }
  const TranscriptEntry& operator[](std::size_t k) const { return entries_[k]; }
  const TranscriptEntry& back() const { return entries_.back(); }

  /// Message of (round, party), nullptr if that slot has not happened.
  const BitString* find(std::uint32_t round, std::uint32_t party) const {
    for (const auto& e : entries_)
      if (e.round == round && e.party == party) return &e.message;
    return nullptr;
  }

  const BitString& message(std::uint32_t round, std::uint32_t party) const {
    if (const BitString* m = find(round, party)) return *m;
    throw Error(ErrorCode::kInvalidArgument, "transcript has no message for round " +
                                                 std::to_string(round) + ", party " + std::to_string(party));
  }

  Transcript prefix(std::size_t count) const {
    Transcript t;
    t.entries_.assign(entries_.begin(), entries_.begin() + std::min(count, entries_.size()));
    return t;
  }

  /// Canonical byte encoding: order, parties, statuses and message words.
  std::string key() const {
    std::string out;
    out.reserve(entries_.size() * 16);
    for (const auto& e : entries_) {
      append_u32(out, e.round);
      append_u32(out, e.party);
      out.push_back(static_cast<char>(e.status));
      append_u32(out, e.message.width());
      for (auto w : e.message.words()) append_u64(out, w);
    }
    return out;
  }

  /// Human-readable form: "r0:p1=01*|..." ('*' marks corrupted speakers).
  std::string str() const {
    std::string out;
    for (const auto& e : entries_) {
      if (!out.empty()) out += '|';
      out += "r" + std::to_string(e.round) + ":p" + std::to_string(e.party) + "=" + e.message.bits();
      if (e.status == SpeakerStatus::kCorrupted) out += '*';
    }
    return out;
  }

  friend bool operator==(const Transcript&, const Transcript&) = default;
  friend auto operator<=>(const Transcript& a, const Transcript& b) { return a.entries_ <=> b.entries_; }

 private:
  static void append_u32(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  static void append_u64(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }

  std::vector<TranscriptEntry> entries_;
};

/// Set of party indices in [0, n).
class PartySet {
 public:
  PartySet() = default;
  explicit PartySet(std::uint32_t n) : bits_(n, false) {}

  bool contains(std::uint32_t p) const { return p < bits_.size() && bits_[p]; }
  void insert(std::uint32_t p) {
    if (!bits_[p]) {
      bits_[p] = true;
      ++count_;
    }
  }
  std::uint32_t size() const { return count_; }
  std::uint32_t universe() const { return static_cast<std::uint32_t>(bits_.size()); }

  std::vector<std::uint32_t> members() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t p = 0; p < bits_.size(); ++p)
      if (bits_[p]) out.push_back(p);
    return out;
  }

  friend bool operator==(const PartySet&, const PartySet&) = default;
  friend auto operator<=>(const PartySet& a, const PartySet& b) { return a.members() <=> b.members(); }

 private:
  std::vector<bool> bits_;
  std::uint32_t count_ = 0;
};

/// Honest message distribution of a slot. Without a sampler a message is a
/// uniform `width`-bit string.
struct MessageDomain {
  std::uint32_t width = 0;
  std::function<BitString(Chooser&)> sampler;

  bool uniform_bits() const { return !sampler; }
  BitString sample(Chooser& chooser) const { return sampler ? sampler(chooser) : chooser.bits(width); }
};

using OutputMap = std::function<BitString(const Transcript&)>;

struct ProtocolSpec {
  ProtocolParams params;
  OutputMap output_map;
  std::string label;
  MessageDomain domain;  // width == params.L

  BitString output(const Transcript& t) const { return output_map(t); }
};

inline ProtocolSpec make_spec(ProtocolParams params, OutputMap output_map, std::string label) {
  ProtocolSpec spec{params, std::move(output_map), std::move(label), MessageDomain{params.L, {}}};
  return spec;
}

// ---------------------------------------------------------------------------
// Adversary interface

struct AdversaryAction {
  enum class Kind : std::uint8_t { kCorrupt = 0, kScheduleHonest = 1, kSendAs = 2 };

  Kind kind = Kind::kScheduleHonest;
  std::uint32_t party = 0;
  BitString message;  // SendAs only

  static AdversaryAction corrupt(std::uint32_t p) { return {Kind::kCorrupt, p, {}}; }
  static AdversaryAction schedule(std::uint32_t p) { return {Kind::kScheduleHonest, p, {}}; }
  static AdversaryAction send_as(std::uint32_t p, BitString msg) { return {Kind::kSendAs, p, std::move(msg)}; }

  bool produces_message() const { return kind != Kind::kCorrupt; }

  friend bool operator==(const AdversaryAction&, const AdversaryAction&) = default;
  friend auto operator<=>(const AdversaryAction&, const AdversaryAction&) = default;
};

inline std::string to_string(const AdversaryAction& a) {
  switch (a.kind) {
    case AdversaryAction::Kind::kCorrupt: return "corrupt(" + std::to_string(a.party) + ")";
    case AdversaryAction::Kind::kScheduleHonest: return "schedule(" + std::to_string(a.party) + ")";
    case AdversaryAction::Kind::kSendAs:
      return "send_as(" + std::to_string(a.party) + "," + a.message.bits() + ")";
  }
  return "?";
}

/// What the adversary sees before each decision: the full transcript so far
/// (full-information model), its corruptions and the within-round progress.
struct View {
  const ProtocolParams& params;
  const Transcript& transcript;
  const PartySet& corrupted;
  std::uint32_t budget;  // t
  std::uint32_t round;
  const std::vector<bool>& spoken;  // spoke in the current round

  std::uint32_t budget_left() const { return budget - corrupted.size(); }
  bool pending(std::uint32_t p) const { return !spoken[p]; }
  std::uint32_t pending_count() const {
    return static_cast<std::uint32_t>(std::count(spoken.begin(), spoken.end(), false));
  }
  bool complete() const { return transcript.size() == params.slots(); }
};

/// Default scheduling: lowest pending honest party; if only corrupted parties
/// are pending, the lowest of them sends the all-zero string.
inline AdversaryAction default_action(const View& view) {
  for (std::uint32_t p = 0; p < view.params.n; ++p)
    if (view.pending(p) && !view.corrupted.contains(p)) return AdversaryAction::schedule(p);
  for (std::uint32_t p = 0; p < view.params.n; ++p)
    if (view.pending(p)) return AdversaryAction::send_as(p, BitString(view.params.L));
  throw Error(ErrorCode::kScheduleViolation, "no pending party in round");
}

/// Adversary strategy. `decide` is consulted before every message slot and
/// again after each corruption until it yields a message-producing action.
class AdversaryStrategy {
 public:
  virtual ~AdversaryStrategy() = default;
  virtual void begin(const ProtocolParams&, std::uint32_t /*budget*/) {}
  virtual AdversaryAction decide(const View& view, Chooser& coins) = 0;
  virtual void observe(const View& /*after*/, Chooser& /*coins*/) {}
  /// True once the strategy gave up (it then plays default_action).
  virtual bool halted() const { return false; }
};

/// Never corrupts; honest parties speak in ascending order.
class PassiveStrategy final : public AdversaryStrategy {
 public:
  AdversaryAction decide(const View& view, Chooser&) override { return default_action(view); }
};

// ---------------------------------------------------------------------------
// Execution engine

struct ExecutionState {
  Transcript transcript;
  PartySet corrupted;
  std::uint32_t round = 0;
  std::vector<bool> spoken;

  static ExecutionState initial(const ProtocolParams& p) {
    ExecutionState s;
    s.corrupted = PartySet(p.n);
    s.spoken.assign(p.n, false);
    return s;
  }

  View view(const ProtocolParams& params, std::uint32_t budget) const {
    return View{params, transcript, corrupted, budget, round, spoken};
  }
};

struct RunResult {
  Transcript transcript;
  BitString output;
  PartySet corrupted;
  bool halted = false;
};

/// Applies one adversary action to the state, enforcing the corruption budget
/// and the once-per-round schedule. Returns true if a message was appended.
inline bool apply_action(const ProtocolSpec& spec, std::uint32_t budget, const AdversaryAction& action,
                         Randomness& rnd, std::uint64_t honest_tag, ExecutionState& state) {
  const auto& p = spec.params;
  if (action.party >= p.n)
    throw Error(ErrorCode::kScheduleViolation, "party " + std::to_string(action.party) + " out of range");
  switch (action.kind) {
    case AdversaryAction::Kind::kCorrupt:
      if (state.corrupted.contains(action.party))
        throw Error(ErrorCode::kScheduleViolation, "party " + std::to_string(action.party) + " already corrupted");
      if (state.corrupted.size() >= budget)
        throw Error(ErrorCode::kBudgetExceeded, "corruption number " + std::to_string(budget + 1) +
                                                    " exceeds budget " + std::to_string(budget));
      state.corrupted.insert(action.party);
      return false;
    case AdversaryAction::Kind::kScheduleHonest:
    case AdversaryAction::Kind::kSendAs: {
      const bool send = action.kind == AdversaryAction::Kind::kSendAs;
      if (state.spoken[action.party])
        throw Error(ErrorCode::kScheduleViolation,
                    "party " + std::to_string(action.party) + " already spoke in round " + std::to_string(state.round));
      if (send != state.corrupted.contains(action.party))
        throw Error(ErrorCode::kScheduleViolation,
                    send ? "SendAs for uncorrupted party " + std::to_string(action.party)
                         : "ScheduleHonest for corrupted party " + std::to_string(action.party));
      TranscriptEntry entry{state.round, action.party, {}, send ? SpeakerStatus::kCorrupted : SpeakerStatus::kHonest};
      if (send) {
        if (action.message.width() != p.L)
          throw Error(ErrorCode::kWidthMismatch, "SendAs message has " + std::to_string(action.message.width()) +
                                                     " bits, expected " + std::to_string(p.L));
        entry.message = action.message;
      } else {
        entry.message = spec.domain.sample(rnd.slot(honest_tag, state.round, action.party));
      }
      state.transcript.append(std::move(entry));
      state.spoken[action.party] = true;
      if (std::find(state.spoken.begin(), state.spoken.end(), false) == state.spoken.end()) {
        ++state.round;
        std::fill(state.spoken.begin(), state.spoken.end(), false);
      }
      return true;
    }
  }
  return false;
}

/// Advances `state` until `slot_limit` messages exist (or the run is complete).
/// A null adversary means honest execution in ascending party order.
inline void execute(const ProtocolSpec& spec, AdversaryStrategy* adversary, std::uint32_t budget, Randomness& rnd,
                    ExecutionState& state, std::uint64_t slot_limit, std::uint64_t honest_tag = tags::kHonest) {
  const auto& p = spec.params;
  slot_limit = std::min<std::uint64_t>(slot_limit, p.slots());
  while (state.transcript.size() < slot_limit) {
    bool appended = false;
    for (std::uint32_t guard = 0; !appended; ++guard) {
      if (guard > p.n) throw Error(ErrorCode::kBudgetExceeded, "adversary corrupts without bound");
      const View view = state.view(p, budget);
      const AdversaryAction action = adversary ? adversary->decide(view, rnd.coins()) : default_action(view);
      appended = apply_action(spec, budget, action, rnd, honest_tag, state);
    }
    if (adversary) adversary->observe(state.view(p, budget), rnd.coins());
  }
}

inline BitString checked_output(const ProtocolSpec& spec, const Transcript& t) {
  BitString out = spec.output(t);
  if (out.width() != spec.params.m)
    throw Error(ErrorCode::kWidthMismatch, "output width mismatch: got " + std::to_string(out.width()) +
                                               " bits, expected " + std::to_string(spec.params.m));
  return out;
}

inline RunResult run_honest(const ProtocolSpec& spec, Randomness& rnd) {
  ExecutionState state = ExecutionState::initial(spec.params);
  execute(spec, nullptr, 0, rnd, state, spec.params.slots());
  RunResult r{std::move(state.transcript), {}, std::move(state.corrupted), false};
  r.output = checked_output(spec, r.transcript);
  return r;
}

inline RunResult run_honest(const ProtocolSpec& spec, RngSeed seed) {
  SeededRandomness rnd(seed);
  return run_honest(spec, rnd);
}

inline RunResult run_with_adversary(const ProtocolSpec& spec, AdversaryStrategy& adversary, std::uint32_t t,
                                    Randomness& rnd) {
  if (t > spec.params.n) throw Error(ErrorCode::kInvalidArgument, "budget t exceeds n");
  adversary.begin(spec.params, t);
  ExecutionState state = ExecutionState::initial(spec.params);
  execute(spec, &adversary, t, rnd, state, spec.params.slots());
  RunResult r{std::move(state.transcript), {}, std::move(state.corrupted), adversary.halted()};
  r.output = checked_output(spec, r.transcript);
  return r;
}

inline RunResult run_with_adversary(const ProtocolSpec& spec, AdversaryStrategy& adversary, std::uint32_t t,
                                    RngSeed seed) {
  SeededRandomness rnd(seed);
  return run_with_adversary(spec, adversary, t, rnd);
}

/// Exact honest output distribution. Uniform-bit protocols are enumerated
/// directly over all 2^{L*d*n} message tables (fixed dyadic denominator);
/// other message domains go through choice-path enumeration.
inline Distribution enumerate_honest_outputs(const ProtocolSpec& spec, std::uint64_t cap = kDefaultEnumerationCap) {
  const auto& p = spec.params;
  if (!spec.domain.uniform_bits()) {
    Distribution dist(p.m);
    Explorer explorer(cap);
    explorer.explore([&](Explorer& e) { return run_honest(spec, e).output.to_u64(); },
                     [&](std::uint64_t out, const Rational& pr) { dist.add(out, pr); });
    return dist;
  }
  const std::uint64_t total_bits = std::uint64_t{p.L} * p.slots();
  const std::uint64_t states = pow2_saturating(total_bits);
  if (total_bits >= 63 || states > cap) throw CapExceeded("honest output enumeration", states, cap);

  Transcript t;
  for (std::uint32_t i = 0; i < p.d; ++i)
    for (std::uint32_t j = 0; j < p.n; ++j) t.append({i, j, BitString(p.L), SpeakerStatus::kHonest});
  auto& entries = t.mutable_entries();
  std::vector<std::uint64_t> value(entries.size(), 0);
  const std::uint64_t slot_size = std::uint64_t{1} << p.L;

  std::map<std::uint64_t, std::uint64_t> counts;
  for (std::uint64_t x = 0; x < states; ++x) {
    ++counts[checked_output(spec, t).to_u64()];
    for (std::size_t s = 0; s < entries.size(); ++s) {  // odometer step
      value[s] = (value[s] + 1) % slot_size;
      entries[s].message = BitString(p.L, value[s]);
      if (value[s] != 0) break;
    }
  }
  Distribution dist(p.m);
  for (const auto& [out, c] : counts) dist.add(out, dyadic(c, static_cast<unsigned>(total_bits)));
  return dist;
}

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Structural and behavioural checks; never throws.
inline std::vector<Diagnostic> validate_protocol(const ProtocolSpec& spec, std::uint32_t probes = 8) {
  std::vector<Diagnostic> out;
  const auto& p = spec.params;
  if (p.n < 1) out.push_back({"n", "n ≥ 1 required"});
  if (p.d < 1) out.push_back({"d", "d ≥ 1 required"});
  if (p.L < 1) out.push_back({"L", "L ≥ 1 required"});
  if (p.m < 1) out.push_back({"m", "m ≥ 1 required"});
  if (p.m > 63) out.push_back({"m", "m ≤ 63 required"});
  if (spec.domain.width != p.L) out.push_back({"domain", "message domain width differs from L"});
  if (!spec.output_map) out.push_back({"output_map", "output map missing"});
  if (!out.empty()) return out;

  for (std::uint32_t k = 0; k < probes; ++k) {
    try {
      SeededRandomness rnd(RngSeed{derive_key(RngSeed{k}, tags::kProbe)});
      ExecutionState state = ExecutionState::initial(p);
      execute(spec, nullptr, 0, rnd, state, p.slots());
      const BitString a = spec.output(state.transcript);
      if (a.width() != p.m) {
        out.push_back({"output_map", "output width mismatch: got " + std::to_string(a.width()) + " bits, expected " +
                                         std::to_string(p.m)});
        break;
      }
      if (spec.output(state.transcript) != a) {
        out.push_back({"output_map", "output map is not deterministic"});
        break;
      }
    } catch (const std::exception& e) {
      out.push_back({"output_map", std::string("output map failed on probe: ") + e.what()});
      break;
    }
  }
  return out;
}

}  // namespace forge
