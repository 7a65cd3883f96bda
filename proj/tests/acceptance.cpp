// One PASS/FAIL line per acceptance criterion. Every experiment is driven
// through the same config path as the CLI; the final criterion re-runs all
// of them with eight workers and compares payloads byte for byte.

#include "forge/forge.hpp"
#include "fixture_io.hpp"

#include <chrono>
#include <cstdio>
#include <deque>
#include <functional>
#include <sstream>

using namespace forge;
using namespace forge::cli;
using json = nlohmann::json;

namespace {

struct Run {
  std::string label;
  ExperimentConfig cfg;
  RunOutcome outcome;
};

std::deque<Run> g_runs;  // everything criterion 10 replays; stable references
int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const RunOutcome& run(const std::string& label, const std::string& text) {
  const ParseResult parsed = parse_config(text);
  if (!parsed.ok()) {
    std::string diag;
    for (const auto& e : parsed.errors) diag += e.str() + "; ";
    throw std::runtime_error(label + ": " + diag);
  }
  RunOutcome out = run_experiment(*parsed.config, {1u, {}});
  if (out.exit_code != kExitOk) throw std::runtime_error(label + ": " + out.record.dump());
  g_runs.push_back({label, *parsed.config, std::move(out)});
  return g_runs.back().outcome;
}

Rational rational_of(const json& j) {
  const auto r = parse_rational(j.get<std::string>());
  if (!r) throw std::runtime_error("not a rational: " + j.dump());
  return *r;
}

const RunOutcome& find_run(const std::string& label) {
  for (const auto& r : g_runs)
    if (r.label == label) return r.outcome;
  throw std::runtime_error("no run labelled " + label);
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

void criterion(int n, double limit_seconds, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  const double elapsed = seconds_since(t0);
  if (limit_seconds > 0 && elapsed > limit_seconds) {
    v.pass = false;
    v.detail += "; over the runtime limit";
  }
  if (!v.pass) ++g_failures;
  std::printf("%s criterion %d: %s [%.1fs, limit %.0fs]\n", v.pass ? "PASS" : "FAIL", n, v.detail.c_str(), elapsed,
              limit_seconds);
  std::fflush(stdout);
}

std::string protocol_section(const std::string& name, const std::map<std::string, std::uint32_t>& args) {
  std::string s = "[protocol]\nname = " + name + "\n";
  for (const auto& [k, v] : args) s += k + " = " + std::to_string(v) + "\n";
  return s;
}

// Builtins with L <= 2 and d·n <= 4.
std::vector<std::pair<std::string, std::map<std::string, std::uint32_t>>> small_builtins() {
  std::vector<std::pair<std::string, std::map<std::string, std::uint32_t>>> out;
  for (std::uint32_t L = 1; L <= 2; ++L)
    for (std::uint32_t n = 1; n <= 4; ++n)
      for (std::uint32_t d = 1; d * n <= 4; ++d) {
        out.push_back({"xor_coin", {{"n", n}, {"d", d}, {"L", L}}});
        for (std::uint32_t m = 1; m <= L; ++m) out.push_back({"xor_selection", {{"n", n}, {"d", d}, {"L", L}, {"m", m}}});
      }
  for (std::uint32_t n : {1u, 3u}) out.push_back({"majority_coin", {{"n", n}}});
  for (std::uint32_t L = 1; L <= 2; ++L)
    for (std::uint32_t n = 1; n <= 4; ++n) out.push_back({"leader_election_mod_n", {{"n", n}, {"L", L}}});
  return out;
}

}  // namespace

int main() {
  criterion(1, 10, [] {
    std::uint64_t matrices = 0;
    Rational worst = 0;
    const auto suite = small_builtins();
    for (const auto& [name, args] : suite) {
      const std::uint32_t L = args.count("L") ? args.at("L") : 1;
      const auto& out = run("identity " + name, "experiment = compress-sweep\n" + protocol_section(name, args) +
                                                    "[compression]\nell = " + std::to_string(L) +
                                                    "\nsource = bijective\n");
      for (const auto& e : out.record["result"]["per_ell"]) {
        matrices += e["matrices"].get<std::uint64_t>();
        worst = std::max(worst, rational_of(e["max_sd"]));
      }
    }
    return Verdict{worst == 0, std::to_string(suite.size()) + " protocols, " + std::to_string(matrices) +
                                   " bijective matrices, max SD " + to_string(worst)};
  });

  criterion(2, 120, [] {
    const auto& out = run("compress sweep",
                          "experiment = compress-sweep\nseed = 1\n[protocol]\nname = xor_coin\nn = 2\nd = 1\nL = 4\n"
                          "[compression]\nell = [1, 2, 3, 4]\nsamples = 500\nthresholds = [1/100]\n");
    const json& r = out.record["result"];
    std::ostringstream detail;
    detail << "medians";
    for (const auto& e : r["per_ell"]) detail << " " << e["median_sd"].get<std::string>();
    const json& last = r["per_ell"].back()["fractions"][0];
    const double fraction = last["fraction"];
    detail << "; strictly decreasing " << (r["median_strictly_decreasing"].get<bool>() ? "yes" : "no")
           << "; ell=4 fraction SD<=1/100 " << fraction << " (95% CI " << last["ci95"][0].get<double>() << ".."
           << last["ci95"][1].get<double>() << ", need >= 2/3)";
    return Verdict{r["median_strictly_decreasing"].get<bool>() && fraction >= 2.0 / 3.0, detail.str()};
  });

  criterion(3, 60, [] {
    const auto& out = run("security sweep L=1",
                          "experiment = security-sweep\n[protocol]\nname = xor_coin\nn = 2\nd = 1\nL = 1\n"
                          "[compression]\nell = 1\nsource = all\n[security]\nt = 1\nM = [0]\nslacks = [0]\n");
    const json& e = out.record["result"]["per_ell"][0];
    const bool l1 = e["matrices"] == 16 && e["base_value"] == "1/2" &&
                    rational_of(e["max_compressed_value"]) <= Rational(1, 2) && e["within_slack"][0]["fraction"] == 1.0;

    const auto spec = protocols::make_xor_coin(2, 1, 2);
    const SecurityParams sec{1, {0}, 0};
    const auto sweep = security_sweep(spec, {spec.params, 1}, sec, {0, Rational(1, 4)}, 1);
    const auto stored = fixture::read(fixture::kSecuritySweepL2);
    const bool archived = stored && *stored == fixture::security_sweep_text(spec, 1, sec, sweep);
    return Verdict{l1 && archived, "L=1: 16 matrices, max val(Pi_H) " + e["max_compressed_value"].get<std::string>() +
                                       " vs val(Pi) 1/2, fraction within slack 0 = " +
                                       std::to_string(e["within_slack"][0]["fraction"].get<double>()) +
                                       "; L=2 fixture " + (archived ? "byte-identical" : "MISMATCH")};
  });

  criterion(4, 300, [] {
    const auto& out = run("reduction",
                          "experiment = reduction\nseed = 3\n[protocol]\nname = xor_coin\nn = 2\nd = 1\nL = 2\n"
                          "[compression]\nell = 1\n[security]\nt = 1\nM = [0]\n[adversary]\nstrategy = last_speaker\n"
                          "[sampling]\nB = 10000\n");
    const json& r = out.record["result"];
    const double measured = r["measured_value"], slack = r["measured_slack"], halted = r["halted_fraction"];
    const double floor = rational_of(r["min_member_value"]).convert_to<double>();
    std::ostringstream d;
    d << r["family_size"] << " matrices, " << r["runs"] << " runs: measured val " << measured << " >= min_H val "
      << floor << " - slack " << slack << "; halts " << halted << "; exact val " << r["exact_value"].get<std::string>();
    return Verdict{r["runs"] == 10000 && measured >= floor - slack && slack <= 0.05 && halted < 0.01, d.str()};
  });

  criterion(5, 300, [] {
    const auto& out = run("hybrid chain",
                          "experiment = hybrid-chain\n[protocol]\nname = xor_coin\nn = 2\nd = 1\nL = 2\n"
                          "[compression]\nell = 1\n[security]\nt = 1\nM = [0]\n");
    const json& r = out.record["result"];
    const bool ok = r["top_level_equals_reduction"] && r["level_zero_equals_ideal"] && r["adjacent_within_end_to_end"];
    return Verdict{ok, std::to_string(r["levels"].size()) + " levels; top = reduction " +
                           (r["top_level_equals_reduction"].get<bool>() ? "yes" : "no") + ", level 0 = ideal " +
                           (r["level_zero_equals_ideal"].get<bool>() ? "yes" : "no") + ", max adjacent SD " +
                           r["max_adjacent_sd"].get<std::string>() + ", end-to-end SD " +
                           r["sd_reduction_vs_ideal"].get<std::string>()};
  });

  const std::string claims_cfg =
      "experiment = verify-claims\nseed = 11\n[claims]\ncases = [2x2, 3x2, 3x3, 4x2]\n"
      "eps = [1/10, 1/4, 1/2, 9/10]\npinsker_samples = 1000\nk = 3\n";
  criterion(6, 10, [&] {
    const json& r = run("claims", claims_cfg).record["result"];
    std::uint64_t functions = 0;
    for (const auto& c : r["claims"]) functions += c["functions"].get<std::uint64_t>();
    return Verdict{r["claims"].size() == 4 && r["violations"] == 0,
                   std::to_string(functions) + " functions over 4 cases, " + r["violations"].dump() + " violations"};
  });

  criterion(7, 10, [&] {
    const json& r = find_run("claims").record["result"];
    const json& p = r["pinsker"];
    const bool ok = p["k"] == 3 && p["distributions"].get<std::uint64_t>() >= 1000 && p["failures"] == 0 &&
                    r["kl_identity_within_budget"];
    return Verdict{ok, p["distributions"].dump() + " distributions over {0,1}^3, " + p["failures"].dump() +
                           " failures; KL identity max error 2^" +
                           std::to_string(r["kl_identity_max_error_log2"].get<double>()) + " (budget 2^-200)"};
  });

  criterion(8, 60, [] {
    std::ostringstream d;
    bool ok = true;
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"and_protocol", ""},
        {"fresh_slices", "n = 2\nd = 1\nL = 2\n"},
        {"parity_reveal", "n = 2\nell_r = 2\n"},
        {"parity_reveal", "n = 3\nell_r = 1\n"}};
    for (const auto& [name, args] : cases) {
      const json& r =
          run("publiccoin " + name, "experiment = publiccoin-check\n[publiccoin]\nname = " + name + "\n" + args)
              .record["result"];
      const bool uniform_needed = r["ell_r"] == 1;
      ok = ok && r["sd"] == "0" && r["ell_r"].get<int>() <= 2 && (!uniform_needed || r["message_uniform"]);
      d << r["protocol"].get<std::string>() << " SD " << r["sd"].get<std::string>();
      if (uniform_needed) d << " uniform " << (r["message_uniform"].get<bool>() ? "yes" : "no");
      d << "; ";
    }
    return Verdict{ok, d.str()};
  });

  criterion(9, 120, [] {
    const json& r = run("majority bias",
                        "experiment = simulate\nseed = 9\n[protocol]\nname = majority_coin\nn = 101\n"
                        "[adversary]\nstrategy = greedy_majority\nt = [0, 5, 10]\ntarget = 1\n[sampling]\nB = 100000\n")
                        .record["result"]["adversary"]["runs"];
    bool ok = r.size() == 3 && std::abs(r[0]["bias"].get<double>()) <= 0.01;
    std::ostringstream d;
    d << "n=101:";
    for (std::size_t k = 0; k < r.size(); ++k) {
      d << " t=" << r[k]["t"] << " bias " << r[k]["bias"].get<double>() << " [" << r[k]["ci95"][0].get<double>()
        << ", " << r[k]["ci95"][1].get<double>() << "]";
      if (k > 0)
        ok = ok && r[k]["bias"].get<double>() > r[k - 1]["bias"].get<double>() &&
             r[k]["ci95"][0].get<double>() > r[k - 1]["ci95"][1].get<double>();
    }
    return Verdict{ok, d.str()};
  });

  criterion(10, 0, [] {
    std::size_t same = 0;
    std::string differing;
    for (const auto& r : g_runs) {
      const RunOutcome again = run_experiment(r.cfg, {8u, {}});
      if (payload_bytes(again) == payload_bytes(r.outcome))
        ++same;
      else
        differing += " " + r.label;
    }
    return Verdict{same == g_runs.size(), std::to_string(same) + "/" + std::to_string(g_runs.size()) +
                                              " runs byte-identical at 1 and 8 workers" +
                                              (differing.empty() ? "" : "; differ:" + differing)};
  });

  std::printf("%d of 10 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
