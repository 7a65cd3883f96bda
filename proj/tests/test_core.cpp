#include "forge/core.hpp"
#include "forge/protocols.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace forge;

namespace {

ProtocolSpec constant_spec(std::uint32_t m) {
  return make_spec({2, 2, 2, m}, [m](const Transcript&) { return BitString(m); }, "constant");
}

// Lets P0 speak, corrupts P1 and sends the bit that makes the XOR zero.
class ForceZero final : public AdversaryStrategy {
 public:
  AdversaryAction decide(const View& v, Chooser&) override {
    if (v.transcript.empty()) return AdversaryAction::schedule(0);
    if (!v.corrupted.contains(1)) return AdversaryAction::corrupt(1);
    return AdversaryAction::send_as(1, BitString(1, v.transcript[0].message.get(0)));
  }
};

// Reverses the default order; never corrupts.
class Reverse final : public AdversaryStrategy {
 public:
  AdversaryAction decide(const View& v, Chooser&) override {
    for (std::uint32_t p = v.params.n; p-- > 0;)
      if (v.pending(p)) return AdversaryAction::schedule(p);
    throw std::logic_error("nothing pending");
  }
};

class Scripted final : public AdversaryStrategy {
 public:
  explicit Scripted(std::vector<AdversaryAction> script) : script_(std::move(script)) {}
  AdversaryAction decide(const View& v, Chooser&) override {
    return k_ < script_.size() ? script_[k_++] : default_action(v);
  }

 private:
  std::vector<AdversaryAction> script_;
  std::size_t k_ = 0;
};

}  // namespace

TEST(RunHonest, XorOfTwoBits) {
  const auto spec = protocols::make_xor_coin(2, 1, 1);
  for (std::uint64_t s = 0; s < 64; ++s) {
    const RunResult r = run_honest(spec, RngSeed{s});
    ASSERT_EQ(r.transcript.size(), 2u);
    EXPECT_EQ(r.output.get(0), r.transcript[0].message.get(0) ^ r.transcript[1].message.get(0));
  }
}

TEST(RunHonest, ConstantOutput) {
  const auto spec = constant_spec(3);
  for (std::uint64_t s = 0; s < 16; ++s) EXPECT_EQ(run_honest(spec, RngSeed{s}).output, BitString(3));
}

TEST(RunHonest, ReplayDeterminism) {
  const auto spec = protocols::make_xor_selection(3, 2, 5, 3);
  for (std::uint64_t s = 0; s < 32; ++s) {
    const RunResult a = run_honest(spec, RngSeed{s});
    const RunResult b = run_honest(spec, RngSeed{s});
    EXPECT_EQ(a.transcript, b.transcript);
    EXPECT_EQ(a.transcript.key(), b.transcript.key());
    EXPECT_EQ(a.output, b.output);
  }
  EXPECT_NE(run_honest(spec, RngSeed{1}).transcript, run_honest(spec, RngSeed{2}).transcript);
}

TEST(RunHonest, ScheduleCompletenessAndDefaultOrder) {
  const auto spec = protocols::make_xor_coin(3, 4, 2);
  const RunResult r = run_honest(spec, RngSeed{9});
  ASSERT_EQ(r.transcript.size(), 12u);
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(r.transcript[k].round, k / 3);
    EXPECT_EQ(r.transcript[k].party, k % 3);
    EXPECT_EQ(r.transcript[k].status, SpeakerStatus::kHonest);
  }
}

TEST(RunHonest, PerSlotMessagesExactlyUniformOverExhaustiveRandomness) {
  // L·d·n = 4: enumerate every honest randomness path.
  const auto spec = protocols::make_xor_coin(2, 1, 2);
  std::map<std::pair<std::uint32_t, std::uint64_t>, Rational> law;
  Explorer e(1 << 10);
  e.explore([&](Explorer& x) { return run_honest(spec, x).transcript; },
            [&](const Transcript& t, const Rational& p) {
              for (const auto& entry : t.entries()) law[{entry.party, entry.message.to_u64()}] += p;
            });
  ASSERT_EQ(law.size(), 8u);
  for (const auto& [key, p] : law) EXPECT_EQ(p, Rational(1, 4)) << key.first << "/" << key.second;
}

TEST(RunWithAdversary, PassiveMatchesHonest) {
  const auto spec = protocols::make_xor_selection(3, 2, 3, 2);
  PassiveStrategy passive;
  for (std::uint64_t s = 0; s < 32; ++s) {
    const RunResult a = run_with_adversary(spec, passive, 0, RngSeed{s});
    const RunResult b = run_honest(spec, RngSeed{s});
    EXPECT_EQ(a.transcript, b.transcript);
    EXPECT_EQ(a.output, b.output);
  }
}

TEST(RunWithAdversary, ForceXorZeroOnEverySeed) {
  const auto spec = protocols::make_xor_coin(2, 1, 1);
  for (std::uint64_t s = 0; s < 200; ++s) {
    ForceZero adv;
    const RunResult r = run_with_adversary(spec, adv, 1, RngSeed{s});
    EXPECT_EQ(r.output.to_u64(), 0u);
    EXPECT_EQ(r.corrupted.members(), std::vector<std::uint32_t>{1});
    EXPECT_EQ(r.transcript[1].status, SpeakerStatus::kCorrupted);
  }
}

TEST(RunWithAdversary, ReorderingWithoutCorruptionKeepsDistribution) {
  const auto spec = protocols::make_majority_coin(3);
  Distribution reordered(1);
  Explorer e(1 << 10);
  e.explore(
      [&](Explorer& x) {
        Reverse adv;
        return run_with_adversary(spec, adv, 0, x).output.to_u64();
      },
      [&](std::uint64_t out, const Rational& p) { reordered.add(out, p); });
  EXPECT_EQ(reordered, enumerate_honest_outputs(spec));
  Reverse adv;
  const RunResult r = run_with_adversary(spec, adv, 0, RngSeed{3});
  EXPECT_EQ(r.transcript[0].party, 2u);
  EXPECT_EQ(r.transcript[2].party, 0u);
}

TEST(RunWithAdversary, BudgetExceeded) {
  const auto spec = protocols::make_xor_coin(3, 1, 1);
  Scripted adv({AdversaryAction::corrupt(0), AdversaryAction::corrupt(1)});
  try {
    run_with_adversary(spec, adv, 1, RngSeed{0});
    FAIL() << "expected BudgetExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
}

TEST(RunWithAdversary, ScheduleViolations) {
  const auto spec = protocols::make_xor_coin(2, 2, 1);
  auto code_of = [&](std::vector<AdversaryAction> script, std::uint32_t t) {
    Scripted adv(std::move(script));
    try {
      run_with_adversary(spec, adv, t, RngSeed{0});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of({AdversaryAction::schedule(0), AdversaryAction::schedule(0)}, 0), ErrorCode::kScheduleViolation);
  EXPECT_EQ(code_of({AdversaryAction::send_as(0, BitString(1))}, 1), ErrorCode::kScheduleViolation);
  EXPECT_EQ(code_of({AdversaryAction::corrupt(0), AdversaryAction::schedule(0)}, 1), ErrorCode::kScheduleViolation);
  EXPECT_EQ(code_of({AdversaryAction::corrupt(0), AdversaryAction::corrupt(0)}, 2), ErrorCode::kScheduleViolation);
  EXPECT_EQ(code_of({AdversaryAction::corrupt(0), AdversaryAction::send_as(0, BitString(2))}, 1),
            ErrorCode::kWidthMismatch);
  EXPECT_EQ(code_of({AdversaryAction::schedule(5)}, 0), ErrorCode::kScheduleViolation);
}

TEST(RunWithAdversary, CorruptAfterSpeakingKeepsPastMessages) {
  const auto spec = protocols::make_xor_coin(2, 2, 1);
  Scripted adv({AdversaryAction::schedule(0), AdversaryAction::schedule(1), AdversaryAction::corrupt(0),
                AdversaryAction::send_as(0, BitString(1, 1))});
  const RunResult r = run_with_adversary(spec, adv, 1, RngSeed{4});
  const RunResult h = run_honest(spec, RngSeed{4});
  EXPECT_EQ(r.transcript[0], h.transcript[0]);
  EXPECT_EQ(r.transcript[0].status, SpeakerStatus::kHonest);
  EXPECT_EQ(r.transcript[2].status, SpeakerStatus::kCorrupted);
  EXPECT_EQ(r.transcript[2].message, BitString(1, 1));
}

TEST(RunWithAdversary, RushingSameRoundCorruption) {
  const auto spec = protocols::make_xor_coin(3, 1, 1);
  Scripted adv({AdversaryAction::schedule(2), AdversaryAction::corrupt(0), AdversaryAction::send_as(0, BitString(1)),
                AdversaryAction::schedule(1)});
  const RunResult r = run_with_adversary(spec, adv, 1, RngSeed{1});
  EXPECT_EQ(r.transcript[0].party, 2u);
  EXPECT_EQ(r.transcript[1].party, 0u);
  EXPECT_EQ(r.transcript[2].party, 1u);
}

TEST(RunWithAdversary, BudgetAboveNRejected) {
  PassiveStrategy passive;
  EXPECT_THROW(run_with_adversary(protocols::make_xor_coin(2, 1, 1), passive, 3, RngSeed{0}), Error);
}

TEST(EnumerateHonest, Examples) {
  EXPECT_EQ(enumerate_honest_outputs(protocols::make_xor_coin(2, 1, 1)), Distribution::uniform(1));
  EXPECT_EQ(enumerate_honest_outputs(protocols::make_majority_coin(3)), Distribution::uniform(1));
  EXPECT_EQ(enumerate_honest_outputs(protocols::make_leader_election_mod_n(2, 2)), Distribution::uniform(1));
}

TEST(EnumerateHonest, MatchesDirectLoop) {
  // leader_election(3, L=2): count (a+b+c) mod 3 over 64 tables.
  std::array<int, 3> counts{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) ++counts[(a % 3 + b % 3 + c % 3) % 3];
  const Distribution d = enumerate_honest_outputs(protocols::make_leader_election_mod_n(3, 2));
  for (int x = 0; x < 3; ++x) EXPECT_EQ(d.mass(x), Rational(counts[x], 64));
  EXPECT_EQ(d.mass(3), 0);
  EXPECT_EQ(d.total(), 1);
}

TEST(EnumerateHonest, CapExceeded) {
  try {
    enumerate_honest_outputs(protocols::make_xor_coin(5, 1, 5), 1 << 20);
    FAIL();
  } catch (const CapExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
    EXPECT_NE(std::string(e.what()).find("33554432"), std::string::npos) << e.what();
  }
}

TEST(ValidateProtocol, Examples) {
  EXPECT_TRUE(validate_protocol(protocols::make_xor_coin(2, 1, 1)).empty());

  auto bad_d = protocols::make_xor_coin(2, 1, 1);
  bad_d.params.d = 0;
  auto diags = validate_protocol(bad_d);
  ASSERT_FALSE(diags.empty());
  EXPECT_EQ(diags[0].message, "d ≥ 1 required");

  auto wide = make_spec({2, 1, 1, 1}, [](const Transcript&) { return BitString(2); }, "wide");
  diags = validate_protocol(wide);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("output width mismatch"), std::string::npos);

  int calls = 0;
  auto flaky = make_spec({1, 1, 1, 1}, [&calls](const Transcript&) { return BitString(1, ++calls % 2); }, "flaky");
  diags = validate_protocol(flaky);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("not deterministic"), std::string::npos);

  auto throwing = make_spec({1, 1, 1, 1}, [](const Transcript&) -> BitString { throw std::runtime_error("boom"); }, "t");
  EXPECT_EQ(validate_protocol(throwing).size(), 1u);
}

TEST(BitString, SliceAndHex) {
  BitString b(70);
  b.assign_slice(3, 5, 0b10110);
  EXPECT_EQ(b.slice(3, 5), 0b10110u);
  EXPECT_EQ(b.popcount(), 3u);
  b.set(69, true);
  EXPECT_TRUE(b.get(69));
  EXPECT_EQ(BitString(4, 0xA).bits(), "0101");  // LSB first
  EXPECT_EQ(BitString(4, 0xA) ^= BitString(4, 0xF), BitString(4, 0x5));
}

TEST(Random, DistinctPathsDiffer) {
  std::set<std::uint64_t> keys;
  for (std::uint32_t r = 0; r < 8; ++r)
    for (std::uint32_t p = 0; p < 8; ++p) keys.insert(derive_key(RngSeed{1}, tags::kHonest, r, p));
  EXPECT_EQ(keys.size(), 64u);
  EXPECT_EQ(derive_key(RngSeed{1}, tags::kHonest, 2, 3), derive_key(RngSeed{1}, tags::kHonest, 2, 3));
}

TEST(Random, ExplorerWeightsSumToOne) {
  Rational total = 0;
  std::map<std::size_t, Rational> law;
  Explorer e(100);
  e.explore(
      [](Explorer& x) {
        const std::uint64_t w[] = {1, 0, 3};
        return x.weighted(w) * 10 + x.below(3);
      },
      [&](std::size_t v, const Rational& p) {
        law[v] += p;
        total += p;
      });
  EXPECT_EQ(total, 1);
  EXPECT_EQ(law.size(), 6u);
  EXPECT_EQ(law[0], Rational(1, 12));
  EXPECT_EQ(law[21], Rational(1, 4));
}
