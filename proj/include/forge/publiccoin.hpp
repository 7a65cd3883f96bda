#pragma once

// Turning a protocol whose parties hold private randomness into a public-coin
// protocol with the same output distribution and round count. Each party
// publishes a uniformly random ordering of all its possible random strings;
// the output map recovers the original messages by taking, per party, the
// first listed string consistent with what that party said before.

#include "forge/core.hpp"

#include <map>
#include <memory>
#include <numeric>

namespace forge {

/// m_{i,j} = f(Trans_{i−1}, i, j, r_j): `previous` holds every message of
/// rounds < i; r_j is party j's ell_r-bit private string, fixed for the run.
using MessageFunction =
    std::function<BitString(const Transcript& previous, std::uint32_t round, std::uint32_t party, const BitString& r)>;

struct GeneralProtocolSpec {
  ProtocolParams params;  // L: message length
  std::uint32_t ell_r = 1;
  MessageFunction message;
  OutputMap output_map;
  std::string label;
};

inline constexpr std::uint32_t kDefaultRandomnessCap = 8;

/// Messages of rounds < round, in transcript order.
inline Transcript rounds_before(const Transcript& t, std::uint32_t round) {
  Transcript out;
  for (const auto& e : t.entries())
    if (e.round < round) out.append(e);
  return out;
}

inline BitString checked_message(const GeneralProtocolSpec& g, const Transcript& previous, std::uint32_t round,
                                 std::uint32_t party, const BitString& r) {
  BitString m = g.message(previous, round, party, r);
  if (m.width() != g.params.L)
    throw Error(ErrorCode::kWidthMismatch, "message function returned " + std::to_string(m.width()) +
                                               " bits, expected " + std::to_string(g.params.L));
  return m;
}

/// True iff replaying u's message functions with r reproduces every message u
/// sent in the prefix.
inline bool is_good_randomness(const GeneralProtocolSpec& g, const Transcript& prefix, std::uint32_t u,
                               const BitString& r) {
  for (const auto& e : prefix.entries()) {
    if (e.party != u) continue;
    if (checked_message(g, rounds_before(prefix, e.round), e.round, u, r) != e.message) return false;
  }
  return true;
}

/// Honest run of g with the given private strings (one per party).
inline Transcript run_general(const GeneralProtocolSpec& g, const std::vector<BitString>& randomness) {
  Transcript t;
  for (std::uint32_t i = 0; i < g.params.d; ++i) {
    const Transcript previous = t;
    for (std::uint32_t j = 0; j < g.params.n; ++j)
      t.append({i, j, checked_message(g, previous, i, j, randomness[j]), SpeakerStatus::kHonest});
  }
  return t;
}

/// Exact honest output distribution of g over all private strings.
inline Distribution enumerate_general_outputs(const GeneralProtocolSpec& g, std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t bits = std::uint64_t{g.ell_r} * g.params.n;
  if (bits >= 63 || pow2_saturating(bits) > cap) throw CapExceeded("private randomness enumeration", pow2_saturating(bits), cap);
  std::map<std::uint64_t, std::uint64_t> counts;
  std::vector<BitString> r(g.params.n);
  const std::uint64_t mask = (std::uint64_t{1} << g.ell_r) - 1;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << bits); ++x) {
    for (std::uint32_t j = 0; j < g.params.n; ++j) r[j] = BitString(g.ell_r, (x >> (j * g.ell_r)) & mask);
    const BitString out = g.output_map(run_general(g, r));
    if (out.width() != g.params.m) throw Error(ErrorCode::kWidthMismatch, "output width mismatch");
    ++counts[out.to_u64()];
  }
  Distribution dist(g.params.m);
  for (const auto& [out, c] : counts) dist.add(out, dyadic(c, static_cast<unsigned>(bits)));
  return dist;
}

/// Uniform ordering of all 2^ell_r strings by Fisher–Yates, concatenated with
/// entry k at bits [k·ell_r, (k+1)·ell_r).
inline BitString sample_permutation_message(std::uint32_t ell_r, Chooser& chooser) {
  const std::uint64_t K = std::uint64_t{1} << ell_r;
  std::vector<std::uint64_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  for (std::uint64_t k = K - 1; k > 0; --k) std::swap(order[k], order[chooser.below(k + 1)]);
  BitString msg(static_cast<std::uint32_t>(K * ell_r));
  for (std::uint64_t k = 0; k < K; ++k) msg.assign_slice(static_cast<std::uint32_t>(k * ell_r), ell_r, order[k]);
  return msg;
}

struct PublicCoinDecode {
  Transcript reconstructed;  // transcript of g
  std::uint32_t fallbacks = 0;  // slots with no good listed string (decoded as all-zero)
};

/// Rebuilds g's transcript from a transcript of the transformed protocol.
/// Within a round, messages depend only on earlier rounds, so slots are
/// decoded in send order against the rounds decoded so far.
inline PublicCoinDecode decode_public_coin(const GeneralProtocolSpec& g, const Transcript& listed) {
  PublicCoinDecode out;
  const std::uint64_t K = std::uint64_t{1} << g.ell_r;
  std::uint32_t round = 0;
  Transcript previous;
  for (const auto& e : listed.entries()) {
    if (e.round != round) {
      round = e.round;
      previous = rounds_before(out.reconstructed, round);
    }
    if (e.message.width() != K * g.ell_r) throw Error(ErrorCode::kWidthMismatch, "listed message has wrong width");
    std::optional<BitString> message;
    for (std::uint64_t k = 0; k < K && !message; ++k) {
      const BitString r(g.ell_r, e.message.slice(static_cast<std::uint32_t>(k * g.ell_r), g.ell_r));
      if (is_good_randomness(g, previous, e.party, r)) message = checked_message(g, previous, e.round, e.party, r);
    }
    if (!message) {
      message = BitString(g.params.L);
      ++out.fallbacks;
    }
    out.reconstructed.append({e.round, e.party, std::move(*message), e.status});
  }
  return out;
}

/// Π′: same n, d, m; messages are 2^ell_r·ell_r bits; output = g's output on
/// the decoded transcript.
inline ProtocolSpec public_coin_transform(const GeneralProtocolSpec& g,
                                          std::uint32_t ell_r_cap = kDefaultRandomnessCap) {
  if (g.ell_r < 1) throw Error(ErrorCode::kInvalidArgument, "ell_r >= 1 required");
  if (g.ell_r > ell_r_cap) throw CapExceeded("private randomness bits ell_r", g.ell_r, ell_r_cap);
  auto base = std::make_shared<const GeneralProtocolSpec>(g);
  const std::uint32_t width = static_cast<std::uint32_t>((std::uint64_t{1} << g.ell_r) * g.ell_r);
  ProtocolParams p = g.params;
  p.L = width;
  ProtocolSpec spec = make_spec(p, [base](const Transcript& t) { return base->output_map(decode_public_coin(*base, t).reconstructed); },
                                "public_coin(" + g.label + ")");
  const std::uint32_t ell_r = g.ell_r;
  spec.domain = MessageDomain{width, [ell_r](Chooser& c) { return sample_permutation_message(ell_r, c); }};
  return spec;
}

// ---------------------------------------------------------------------------
// Registered general protocols

/// n=2, d=2, one private bit each. Round 1: both send their bit. Round 2:
/// party 0 sends the AND of the round-1 bits, party 1 repeats its bit. The
/// output is party 0's round-2 message.
inline GeneralProtocolSpec make_and_protocol() {
  GeneralProtocolSpec g;
  g.params = {2, 2, 1, 1};
  g.ell_r = 1;
  g.label = "and_protocol";
  g.message = [](const Transcript& prev, std::uint32_t round, std::uint32_t party, const BitString& r) {
    if (round == 0 || party == 1) return r;
    return BitString(1, prev.message(0, 0).get(0) & prev.message(0, 1).get(0));
  };
  g.output_map = [](const Transcript& t) { return t.message(1, 0); };
  return g;
}

/// Already public-coin: party j's round-i message is slice i of r_j (ell_r = d·L);
/// output is the XOR of the first bits of all messages.
inline GeneralProtocolSpec make_fresh_slices(std::uint32_t n, std::uint32_t d, std::uint32_t L) {
  GeneralProtocolSpec g;
  g.params = {n, d, L, 1};
  g.ell_r = d * L;
  g.label = "fresh_slices(n=" + std::to_string(n) + ",d=" + std::to_string(d) + ",L=" + std::to_string(L) + ")";
  g.message = [L](const Transcript&, std::uint32_t round, std::uint32_t, const BitString& r) {
    return BitString(L, r.slice(round * L, L));
  };
  g.output_map = [](const Transcript& t) {
    bool bit = false;
    for (const auto& e : t.entries()) bit ^= e.message.get(0);
    return BitString(1, bit);
  };
  return g;
}

/// d=2, L=1: round 1 reveals parity(r_j), round 2 reveals bit 0 of r_j
/// XORed with the parity of round 1. Output bit 0 = XOR of round-2 messages,
/// bit 1 = AND of round-1 messages.
inline GeneralProtocolSpec make_parity_reveal(std::uint32_t n, std::uint32_t ell_r) {
  GeneralProtocolSpec g;
  g.params = {n, 2, 1, 2};
  g.ell_r = ell_r;
  g.label = "parity_reveal(n=" + std::to_string(n) + ",ell_r=" + std::to_string(ell_r) + ")";
  g.message = [](const Transcript& prev, std::uint32_t round, std::uint32_t, const BitString& r) {
    if (round == 0) return BitString(1, r.parity());
    bool p = false;
    for (const auto& e : prev.entries()) p ^= e.message.get(0);
    return BitString(1, r.get(0) ^ p);
  };
  g.output_map = [n](const Transcript& t) {
    bool x = false, all = true;
    for (std::uint32_t j = 0; j < n; ++j) {
      x ^= t.message(1, j).get(0);
      all = all && t.message(0, j).get(0);
    }
    return BitString(2, (x ? 1u : 0u) | (all ? 2u : 0u));
  };
  return g;
}

inline const std::vector<std::string>& general_builtin_names() {
  static const std::vector<std::string> names = {"and_protocol", "fresh_slices", "parity_reveal"};
  return names;
}

inline GeneralProtocolSpec make_general_builtin(const std::string& name,
                                                const std::map<std::string, std::uint32_t>& args) {
  auto get = [&](const char* key, std::uint32_t fallback) {
    auto it = args.find(key);
    return it == args.end() ? fallback : it->second;
  };
  if (name == "and_protocol") return make_and_protocol();
  if (name == "fresh_slices") return make_fresh_slices(get("n", 2), get("d", 1), get("L", 1));
  if (name == "parity_reveal") return make_parity_reveal(get("n", 2), get("ell_r", 2));
  throw Error(ErrorCode::kInvalidArgument, "unknown general protocol '" + name + "'");
}

}  // namespace forge
