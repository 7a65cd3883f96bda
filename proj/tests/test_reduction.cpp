#include "forge/reduction.hpp"
#include "forge/protocols.hpp"

#include <gtest/gtest.h>

using namespace forge;
using namespace forge::protocols;

namespace {

std::vector<MatrixH> all_matrices(const CompressionParams& cp) {
  std::vector<MatrixH> out;
  for (auto H : enumerate_family(cp)) out.push_back(std::move(H));
  return out;
}

std::shared_ptr<const ReductionFamily> passive_family(const ProtocolSpec& spec, std::uint32_t ell) {
  return make_family(spec, all_matrices({spec.params, ell}),
                     [](const MatrixH&, const ProtocolSpec&) { return std::make_shared<PassiveStrategy>(); });
}

std::shared_ptr<const ReductionFamily> last_speaker_family(const ProtocolSpec& spec, std::uint32_t ell,
                                                           std::vector<std::uint64_t> M) {
  return make_family(spec, all_matrices({spec.params, ell}), [M](const MatrixH&, const ProtocolSpec& compressed) {
    return std::make_shared<LastSpeakerBiasStrategy>(compressed, M);
  });
}

Rational output_mass(const OutcomeLaw& law, std::uint64_t target) {
  Rational s = 0;
  for (const auto& [o, pr] : law)
    if (o.output.to_u64() == target) s += pr;
  return s;
}

Law<Transcript> honest_transcripts(const ProtocolSpec& spec) {
  return transcript_law(exact_law([&](Randomness& rnd) {
    PassiveStrategy passive;
    RunResult r = run_with_adversary(spec, passive, 0, rnd);
    return HybridOutcome{std::move(r.transcript), std::move(r.output), false};
  }));
}

}  // namespace

TEST(Reduction, PassiveFamilyIsHonest) {
  const auto spec = make_xor_coin(1, 1, 1);
  const auto family = passive_family(spec, 1);
  ASSERT_EQ(family->size(), 4u);
  const auto law = exact_law([&](Randomness& rnd) { return reduction_run(spec, family, 1, rnd); });
  for (const auto& [o, pr] : law) EXPECT_FALSE(o.halted);
  EXPECT_EQ(transcript_law(law), honest_transcripts(spec));
  for (std::uint64_t s = 0; s < 50; ++s) {
    ReductionAdversary adv(family);
    const RunResult r = run_with_adversary(spec, adv, 1, RngSeed{s});
    EXPECT_EQ(r.corrupted.size(), 0u);
    EXPECT_FALSE(r.halted);
  }
}

TEST(Reduction, LastSpeakerFamilyBeatsWorstMember) {
  const auto spec = make_xor_coin(2, 1, 2);
  const std::vector<std::uint64_t> M{0};
  const auto family = last_speaker_family(spec, 1, M);
  ASSERT_EQ(family->size(), 256u);

  Rational worst = 2;
  for (const auto& m : *family) {
    const auto compressed = m.compressed;
    const Rational v =
        *value_of(*compressed, factory_of<LastSpeakerBiasStrategy>(*compressed, M), {1, M, 0}, ExactMode{})
             .exact_value;
    worst = std::min(worst, v);
  }
  const auto law = exact_law([&](Randomness& rnd) { return reduction_run(spec, family, 1, rnd); });
  Rational halted = 0;
  for (const auto& [o, pr] : law)
    if (o.halted) halted += pr;
  EXPECT_EQ(halted, 0);
  const Rational value = output_mass(law, 0) - Rational(1, 2);
  EXPECT_GE(value, worst);
  EXPECT_EQ(value, Rational(1, 4));
}

TEST(Reduction, ConsistentSetOnlyShrinks) {
  const auto spec = make_xor_coin(2, 1, 2);
  const auto family = last_speaker_family(spec, 1, {0});
  for (std::uint64_t s = 0; s < 100; ++s) {
    ReductionAdversary adv(family);
    const RunResult r = run_with_adversary(spec, adv, 1, RngSeed{s});
    EXPECT_LE(r.corrupted.size(), 1u);
    EXPECT_EQ(adv.invalid_replays(), 0u);
    const auto& log = adv.size_log();
    ASSERT_FALSE(log.empty());
    EXPECT_EQ(log.front(), 256u);
    for (std::size_t i = 1; i < log.size(); ++i) EXPECT_LE(log[i], log[i - 1]);
    if (!adv.halted()) {
      // every survivor maps the whole run
      for (auto k : adv.consistent_set().members) EXPECT_TRUE(map_transcript(*(*family)[k].H, r.transcript));
    }
  }
}

TEST(StaticReduction, PicksMostFrequentSet) {
  const auto spec = make_xor_coin(2, 1, 1);
  const auto family = passive_family(spec, 1);
  ASSERT_EQ(family->size(), 16u);
  std::vector<std::vector<std::uint32_t>> sets;
  for (std::uint32_t k = 0; k < 16; ++k) sets.push_back(k < 10 ? std::vector<std::uint32_t>{1} : std::vector<std::uint32_t>{0});
  const StaticReduction st = reduction_adversary_static(family, sets, 1);
  EXPECT_EQ(st.T_star, std::vector<std::uint32_t>{1});
  EXPECT_EQ(st.alpha.at({1}), 10u);
  EXPECT_EQ(st.alpha.at({0}), 6u);
  EXPECT_EQ(st.restricted.size(), 10u);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const RunResult r = run_with_adversary(spec, *st.adversary, 1, RngSeed{s});
    EXPECT_EQ(r.corrupted.members(), std::vector<std::uint32_t>{1});
  }
}

TEST(StaticReduction, PigeonholeOverRandomSets) {
  const auto spec = make_xor_coin(2, 1, 1);
  const auto family = passive_family(spec, 1);
  const std::vector<std::vector<std::uint32_t>> choices = {{}, {0}, {1}, {0, 1}};
  KeyedStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<std::uint32_t>> sets;
    for (std::size_t k = 0; k < family->size(); ++k) sets.push_back(choices[rng.below(choices.size())]);
    const StaticReduction st = reduction_adversary_static(family, sets, 2);
    EXPECT_GE(st.alpha.at(st.T_star) * choices.size(), family->size());
    for (const auto& [T, c] : st.alpha) EXPECT_LE(c, st.alpha.at(st.T_star));
  }
}

TEST(StaticReduction, Errors) {
  const auto spec = make_xor_coin(2, 1, 1);
  const auto family = passive_family(spec, 1);
  try {
    make_family(spec, {}, [](const MatrixH&, const ProtocolSpec&) { return std::make_shared<PassiveStrategy>(); });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyFamily);
  }
  EXPECT_THROW(reduction_adversary_static(family, std::vector<std::vector<std::uint32_t>>(16, {0, 1}), 1), Error);
  EXPECT_THROW(reduction_adversary_static(family, 1), Error);  // passive members are not static
}

TEST(Hybrid, PassiveLevelsCoincide) {
  const auto spec = make_xor_coin(2, 1, 1);
  const auto family = passive_family(spec, 1);
  const auto honest = honest_transcripts(spec);
  for (std::uint64_t k = 0; k <= spec.params.slots(); ++k)
    EXPECT_EQ(transcript_law(exact_law([&](Randomness& rnd) { return hybrid_experiment(k, spec, family, 1, rnd); })),
              honest)
        << "k=" << k;
}

TEST(Hybrid, EndpointsMatchReductionAndIdeal) {
  const auto spec = make_xor_coin(2, 1, 2);
  const auto family = last_speaker_family(spec, 1, {0});
  const auto level = [&](std::uint64_t k) {
    return transcript_law(exact_law([&](Randomness& rnd) { return hybrid_experiment(k, spec, family, 1, rnd); }));
  };
  const auto real = transcript_law(exact_law([&](Randomness& rnd) { return reduction_run(spec, family, 1, rnd); }));
  const auto ideal = transcript_law(exact_law([&](Randomness& rnd) { return ideal_run(spec, *family, 1, rnd); }));
  EXPECT_EQ(level(spec.params.slots()), real);
  EXPECT_EQ(level(0), ideal);
  EXPECT_THROW(hybrid_experiment(3, spec, family, 1, *std::make_unique<SeededRandomness>(RngSeed{0})), Error);
}

TEST(Shrinkage, HoldsAtInitialView) {
  const auto spec = make_xor_coin(2, 1, 2);
  const auto family = passive_family(spec, 1);
  std::vector<std::uint32_t> members(family->size());
  for (std::uint32_t k = 0; k < members.size(); ++k) members[k] = k;
  const ExecutionState state = ExecutionState::initial(spec.params);
  const View view{spec.params, state.transcript, state.corrupted, 1, state.round, state.spoken};
  const ShrinkageCheck c = honest_step_shrinkage(*family, members, view, {Rational(1, 2), Rational(1, 8)});
  EXPECT_TRUE(c.honest_step);
  ASSERT_EQ(c.expected_ratio.size(), 4u);
  for (const auto& r : c.expected_ratio) {
    EXPECT_GT(r, 0);
    EXPECT_LE(r, 1);
  }
  EXPECT_TRUE(c.holds);
}
