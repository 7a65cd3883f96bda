#pragma once

// JSON encodings shared by reports and fixtures.

#include "forge/distribution.hpp"
#include "forge/rational.hpp"

#include <json.hpp>

#include <cstdio>

namespace forge {

inline nlohmann::json rational_json(const Rational& r) { return to_string(r); }

inline std::string hex_of(std::uint64_t x, std::uint32_t width) {
  const unsigned digits = std::max(1u, (width + 3) / 4);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llx", static_cast<int>(digits), static_cast<unsigned long long>(x));
  return buf;
}

/// {width, kind, samples?, entries: [[hex, numerator, log2 denominator], ...]}.
/// Entries whose denominator is not a power of two are written as
/// [hex, numerator, null, denominator].
inline nlohmann::json to_json(const Distribution& d) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [x, p] : d.masses()) {
    const std::string num = boost::multiprecision::numerator(p).str();
    if (auto e = dyadic_exponent(p))
      entries.push_back({hex_of(x, d.width()), num, *e});
    else
      entries.push_back({hex_of(x, d.width()), num, nullptr, boost::multiprecision::denominator(p).str()});
  }
  nlohmann::json j{{"width", d.width()}, {"kind", d.exact() ? "exact" : "empirical"}, {"entries", entries}};
  if (!d.exact()) j["samples"] = d.samples();
  return j;
}

inline Distribution distribution_from_json(const nlohmann::json& j) {
  const std::uint32_t width = j.at("width");
  const std::string kind = j.at("kind");
  Distribution d(width, kind == "exact" ? DistributionKind::kExact : DistributionKind::kEmpirical,
                 j.value("samples", std::uint64_t{0}));
  for (const auto& e : j.at("entries")) {
    const std::uint64_t x = std::stoull(e.at(0).get<std::string>(), nullptr, 16);
    const BigInt num(e.at(1).get<std::string>());
    if (!e.at(2).is_null())
      d.add(x, dyadic(num, e.at(2).get<unsigned>()));
    else
      d.add(x, Rational(num, BigInt(e.at(3).get<std::string>())));
  }
  return d;
}

}  // namespace forge
