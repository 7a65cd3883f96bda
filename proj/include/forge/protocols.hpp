#pragma once

#include "forge/core.hpp"

#include <bit>
#include <map>
#include <string>

namespace forge::protocols {

/// m = 1; output is the XOR of every transcript bit.
inline ProtocolSpec make_xor_coin(std::uint32_t n, std::uint32_t d, std::uint32_t L) {
  if (n < 1 || d < 1 || L < 1) throw Error(ErrorCode::kInvalidArgument, "xor_coin needs n, d, L >= 1");
  return make_spec({n, d, L, 1},
                   [](const Transcript& t) {
                     bool bit = false;
                     for (const auto& e : t.entries()) bit ^= e.message.parity();
                     return BitString(1, bit ? 1 : 0);
                   },
                   "xor_coin(n=" + std::to_string(n) + ",d=" + std::to_string(d) + ",L=" + std::to_string(L) + ")");
}

/// One round, one bit per party, output the majority bit.
inline ProtocolSpec make_majority_coin(std::uint32_t n) {
  if (n % 2 == 0) throw Error(ErrorCode::kEvenN, "majority_coin requires odd n, got " + std::to_string(n));
  return make_spec({n, 1, 1, 1},
                   [n](const Transcript& t) {
                     std::uint32_t ones = 0;
                     for (const auto& e : t.entries()) ones += e.message.get(0);
                     return BitString(1, 2 * ones > n ? 1 : 0);
                   },
                   "majority_coin(n=" + std::to_string(n) + ")");
}

/// Bitwise XOR of the first m bits of every message.
inline ProtocolSpec make_xor_selection(std::uint32_t n, std::uint32_t d, std::uint32_t L, std::uint32_t m) {
  if (m > L) throw Error(ErrorCode::kWidthMismatch, "xor_selection needs m <= L");
  if (n < 1 || d < 1 || m < 1) throw Error(ErrorCode::kInvalidArgument, "xor_selection needs n, d, m >= 1");
  return make_spec({n, d, L, m},
                   [m](const Transcript& t) {
                     std::uint64_t acc = 0;
                     for (const auto& e : t.entries()) acc ^= e.message.slice(0, m);
                     return BitString(m, acc);
                   },
                   "xor_selection(n=" + std::to_string(n) + ",d=" + std::to_string(d) + ",L=" + std::to_string(L) +
                       ",m=" + std::to_string(m) + ")");
}

/// Output bits for a leader index in [0, n).
inline std::uint32_t leader_width(std::uint32_t n) {
  return n <= 2 ? 1 : static_cast<std::uint32_t>(std::bit_width(n - 1));
}

/// One round; leader = (sum of messages as integers) mod n, little-endian in
/// ceil(log2 n) bits.
inline ProtocolSpec make_leader_election_mod_n(std::uint32_t n, std::uint32_t L) {
  if (n < 1 || L < 1 || L > 63) throw Error(ErrorCode::kInvalidArgument, "leader_election_mod_n needs n >= 1, 1 <= L <= 63");
  const std::uint32_t m = leader_width(n);
  return make_spec({n, 1, L, m},
                   [n, m](const Transcript& t) {
                     std::uint64_t sum = 0;
                     for (const auto& e : t.entries()) sum = (sum + e.message.to_u64() % n) % n;
                     return BitString(m, sum);
                   },
                   "leader_election_mod_n(n=" + std::to_string(n) + ",L=" + std::to_string(L) + ")");
}

/// Registered constructor names.
inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"xor_coin", "majority_coin", "xor_selection",
                                                 "leader_election_mod_n"};
  return names;
}

/// Builds a registered protocol from a parameter record. Missing parameters
/// default to 1 (m for xor_selection defaults to L).
inline ProtocolSpec make_builtin(const std::string& name, const std::map<std::string, std::uint32_t>& args) {
  auto get = [&](const char* key, std::uint32_t fallback) {
    auto it = args.find(key);
    return it == args.end() ? fallback : it->second;
  };
  if (name == "xor_coin") return make_xor_coin(get("n", 1), get("d", 1), get("L", 1));
  if (name == "majority_coin") return make_majority_coin(get("n", 1));
  if (name == "xor_selection") return make_xor_selection(get("n", 1), get("d", 1), get("L", 1), get("m", get("L", 1)));
  if (name == "leader_election_mod_n") return make_leader_election_mod_n(get("n", 1), get("L", 1));
  throw Error(ErrorCode::kInvalidArgument, "unknown protocol '" + name + "'");
}

}  // namespace forge::protocols
