#include "forge/publiccoin.hpp"
#include "forge/stats.hpp"

#include <gtest/gtest.h>

using namespace forge;

namespace {

Law<BitString> permutations(std::uint32_t ell_r) {
  Law<BitString> law;
  Explorer e(1 << 20);
  e.explore([&](Explorer& x) { return sample_permutation_message(ell_r, x); },
            [&](const BitString& m, const Rational& p) { law[m] += p; });
  return law;
}

BitString listing(std::uint32_t ell_r, const std::vector<std::uint64_t>& order) {
  BitString m(static_cast<std::uint32_t>(order.size() * ell_r));
  for (std::size_t k = 0; k < order.size(); ++k) m.assign_slice(static_cast<std::uint32_t>(k * ell_r), ell_r, order[k]);
  return m;
}

void expect_preserved(const GeneralProtocolSpec& g) {
  const ProtocolSpec pc = public_coin_transform(g);
  EXPECT_EQ(pc.params.n, g.params.n);
  EXPECT_EQ(pc.params.d, g.params.d);
  EXPECT_EQ(pc.params.m, g.params.m);
  EXPECT_EQ(pc.params.L, (1u << g.ell_r) * g.ell_r);
  const Distribution before = enumerate_general_outputs(g);
  const Distribution after = enumerate_honest_outputs(pc);
  EXPECT_EQ(stats::statistical_distance(before, after), 0) << g.label;
  EXPECT_EQ(before, after) << g.label;
}

}  // namespace

TEST(PublicCoin, AndProtocol) {
  const auto g = make_and_protocol();
  const Distribution d = enumerate_general_outputs(g);
  EXPECT_EQ(d.mass(0), Rational(3, 4));
  EXPECT_EQ(d.mass(1), Rational(1, 4));
  expect_preserved(g);
}

TEST(PublicCoin, DistributionPreserved) {
  expect_preserved(make_fresh_slices(2, 1, 1));
  expect_preserved(make_fresh_slices(2, 2, 1));
  expect_preserved(make_fresh_slices(1, 1, 2));
  expect_preserved(make_parity_reveal(2, 1));
  expect_preserved(make_parity_reveal(3, 1));
  expect_preserved(make_parity_reveal(1, 2));
}

TEST(PublicCoin, ParityRevealExample) {
  // r_0 = 0b11, r_1 = 0b01: parities 0, 1; round 2 bits 1^1, 1^1.
  const auto g = make_parity_reveal(2, 2);
  const Transcript t = run_general(g, {BitString(2, 0b11), BitString(2, 0b01)});
  EXPECT_EQ(t.message(0, 0).to_u64(), 0u);
  EXPECT_EQ(t.message(0, 1).to_u64(), 1u);
  EXPECT_EQ(t.message(1, 0).to_u64(), 0u);
  EXPECT_EQ(t.message(1, 1).to_u64(), 0u);
  EXPECT_EQ(g.output_map(t).to_u64(), 0u);
}

TEST(Permutation, UniformOverOrderings) {
  const auto one = permutations(1);
  ASSERT_EQ(one.size(), 2u);
  for (const auto& [m, p] : one) EXPECT_EQ(p, Rational(1, 2));
  const auto two = permutations(2);
  ASSERT_EQ(two.size(), 24u);
  for (const auto& [m, p] : two) {
    EXPECT_EQ(p, Rational(1, 24));
    std::set<std::uint64_t> seen;
    for (std::uint32_t k = 0; k < 4; ++k) seen.insert(m.slice(2 * k, 2));
    EXPECT_EQ(seen.size(), 4u);
  }
}

TEST(Permutation, EveryStringListedOnce) {
  SeededRandomness rnd(RngSeed{4});
  for (int i = 0; i < 50; ++i) {
    const BitString m = sample_permutation_message(3, rnd.coins());
    ASSERT_EQ(m.width(), 24u);
    std::set<std::uint64_t> seen;
    for (std::uint32_t k = 0; k < 8; ++k) seen.insert(m.slice(3 * k, 3));
    EXPECT_EQ(seen.size(), 8u);
  }
}

TEST(GoodRandomness, Examples) {
  const auto g = make_and_protocol();
  Transcript prefix;
  prefix.append({0, 0, BitString(1, 1), SpeakerStatus::kHonest});
  EXPECT_TRUE(is_good_randomness(g, prefix, 0, BitString(1, 1)));
  EXPECT_FALSE(is_good_randomness(g, prefix, 0, BitString(1, 0)));
  EXPECT_TRUE(is_good_randomness(g, prefix, 1, BitString(1, 0)));
  EXPECT_TRUE(is_good_randomness(g, Transcript{}, 0, BitString(1, 0)));
}

TEST(Decode, TakesFirstGoodString) {
  const auto g = make_and_protocol();
  Transcript listed;
  listed.append({0, 0, listing(1, {1, 0}), SpeakerStatus::kHonest});
  listed.append({0, 1, listing(1, {1, 0}), SpeakerStatus::kHonest});
  listed.append({1, 0, listing(1, {0, 1}), SpeakerStatus::kHonest});  // r=0 contradicts round 0
  listed.append({1, 1, listing(1, {0, 1}), SpeakerStatus::kHonest});
  const PublicCoinDecode d = decode_public_coin(g, listed);
  EXPECT_EQ(d.fallbacks, 0u);
  EXPECT_EQ(d.reconstructed.message(1, 0).to_u64(), 1u);
  EXPECT_EQ(d.reconstructed.message(1, 1).to_u64(), 1u);
  EXPECT_EQ(g.output_map(d.reconstructed).to_u64(), 1u);
}

TEST(Decode, FallsBackToZero) {
  const auto g = make_and_protocol();
  Transcript listed;
  listed.append({0, 0, listing(1, {1, 0}), SpeakerStatus::kHonest});
  listed.append({0, 1, listing(1, {0, 0}), SpeakerStatus::kCorrupted});
  listed.append({1, 0, listing(1, {1, 0}), SpeakerStatus::kHonest});
  listed.append({1, 1, listing(1, {1, 1}), SpeakerStatus::kCorrupted});  // nothing reproduces round 0
  const PublicCoinDecode d = decode_public_coin(g, listed);
  EXPECT_EQ(d.fallbacks, 1u);
  EXPECT_EQ(d.reconstructed.message(1, 1).to_u64(), 0u);
  Transcript bad;
  bad.append({0, 0, BitString(3), SpeakerStatus::kHonest});
  EXPECT_THROW(decode_public_coin(g, bad), Error);
}

TEST(PublicCoin, Caps) {
  EXPECT_THROW(public_coin_transform(make_parity_reveal(2, 9)), CapExceeded);
  EXPECT_NO_THROW(public_coin_transform(make_parity_reveal(2, 9), 9));
  EXPECT_THROW(enumerate_general_outputs(make_parity_reveal(3, 4), 1000), CapExceeded);
  EXPECT_THROW(make_general_builtin("lightest_bin", {}), Error);
  EXPECT_EQ(make_general_builtin("parity_reveal", {{"n", 3}, {"ell_r", 1}}).params.n, 3u);
}
