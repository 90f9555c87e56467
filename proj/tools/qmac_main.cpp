// SPDX-License-Identifier: Apache-2.0
//
// qmac: run the secure-computation protocols, verify them exhaustively, and
// sweep parameter grids.  Reports are JSON (CSV for sweep summaries).
//
// Exit codes: 0 ok, 2 config error, 3 internal assertion, 4 enumeration
// limit exceeded, 5 verification failure.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmac/report.hpp"

namespace {

using nlohmann::json;
using namespace qmac;
using channel::SimMode;
using protocols::CommonRandomness;
using protocols::DataMatrix;
using protocols::ProtocolRun;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;
constexpr int kExitLimit = 4;
constexpr int kExitVerification = 5;

struct Options {
  std::string protocol;
  std::optional<std::uint32_t> d, p, r, k;
  std::optional<std::uint64_t> instances;
  std::string mode = "abstract";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> limit;
  std::uint64_t sample = 0;
  std::string out;
  std::string format = "json";
  std::string a, b;
  std::optional<std::uint32_t> z;
  std::vector<std::string> w;
  std::string d_list, k_list;
};

std::uint64_t default_limit() {
  if (const char* env = std::getenv("QMAC_SECCOMP_LIMIT")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
    throw ConfigError("QMAC_SECCOMP_LIMIT must be a positive integer");
  }
  return 100'000'000;
}

SimMode parse_mode(const std::string& mode) {
  if (mode == "abstract") return SimMode::kAbstract;
  if (mode == "quantum") return SimMode::kQuantumVerified;
  throw ConfigError("mode must be 'abstract' or 'quantum'");
}

std::vector<std::uint32_t> parse_u32_list(const std::string& text) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const std::uint32_t lo = std::uint32_t(std::stoul(item.substr(0, dots)));
      const std::uint32_t hi = std::uint32_t(std::stoul(item.substr(dots + 2)));
      if (hi < lo) throw ConfigError("bad range: " + item);
      for (std::uint32_t v = lo; v <= hi; ++v) out.push_back(v);
    } else if (!item.empty()) {
      out.push_back(std::uint32_t(std::stoul(item)));
    }
  }
  return out;
}

std::uint32_t parse_bit(const std::string& text, const char* what) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  throw ConfigError(std::string(what) + " must be 0 or 1");
}

// two-bit vectors: "10" = [1,0]; single digits 0..3 also accepted
std::uint32_t parse_two_bits(const std::string& text, const char* what) {
  if (text.size() == 2 && (text[0] == '0' || text[0] == '1') &&
      (text[1] == '0' || text[1] == '1'))
    return std::uint32_t(2 * (text[0] - '0') + (text[1] - '0'));
  if (text.size() == 1 && text[0] >= '0' && text[0] <= '3')
    return std::uint32_t(text[0] - '0');
  throw ConfigError(std::string(what) + " must be two bits, e.g. 10");
}

// (p, r) with p^r = d, or nothing if d is not a prime power
std::optional<std::pair<std::uint32_t, std::uint32_t>> prime_power(std::uint32_t d) {
  for (std::uint32_t p = 2; p <= d; ++p) {
    if (!algebra::is_prime(p)) continue;
    if (d % p != 0) continue;
    std::uint32_t v = d, r = 0;
    while (v % p == 0) {
      v /= p;
      ++r;
    }
    if (v == 1) return std::make_pair(p, r);
    return std::nullopt;
  }
  return std::nullopt;
}

struct ProtocolInfo {
  const char* id;
  const char* params;
  const char* summary;
};

const std::vector<ProtocolInfo>& protocol_table() {
  static const std::vector<ProtocolInfo> kTable = {
      {"qs2-and-cited", "--a --b [--z 1..3]",
       "2-user AND via one Bell pair over Z_2, three masked input maps"},
      {"qs2-and-new", "--a --b [--z 1..2]",
       "2-user AND via one additive-channel use over Z_3"},
      {"qsk-sum", "--d --k [--instances N] [--w ...]",
       "secure modulo-d sum of K inputs at rate 2/K"},
      {"qsk-prod", "--d | --p --r, --k [--w ...]",
       "secure GF(p^r) product of K inputs, two-phase scheme"},
      {"qsk-and", "--k [--w ...]", "K-user AND (QSK-Prod over GF(2))"},
      {"dot-demo", "--a --b [--r mask]",
       "2-bit dot product over F_11 (expand-and-randomize)"},
      {"broken-qsk-sum", "--d --k",
       "negative control: sum scheme with zeroed randomness"},
      {"corrupt-decode-qsk-sum", "--d --k",
       "negative control: sum scheme with an off-by-one decoder"},
  };
  return kTable;
}

bool known_protocol(const std::string& id) {
  for (const auto& info : protocol_table())
    if (id == info.id) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Cells: a protocol instance plus live field storage for verification
// ---------------------------------------------------------------------------

using FamilyVariant =
    std::variant<verify::SumFamily, verify::ProdFamily, verify::Qs2CitedFamily,
                 verify::Qs2NewFamily, verify::DotDemoFamily>;

struct Cell {
  std::shared_ptr<algebra::FieldSpec> field;  // keeps ProdFamily's spec alive
  std::unique_ptr<FamilyVariant> family;
  std::uint32_t d = 0, K = 0;
};

std::pair<std::uint32_t, std::uint32_t> field_params(const Options& opt) {
  if (opt.p) {
    const std::uint32_t r = opt.r.value_or(1);
    return {*opt.p, r};
  }
  if (!opt.d) throw ConfigError("this protocol needs --d or --p/--r");
  const auto pr = prime_power(*opt.d);
  if (!pr) throw ConfigError("d = " + std::to_string(*opt.d) + " is not a prime power");
  return *pr;
}

Cell make_cell(const std::string& proto, const Options& opt) {
  Cell cell;
  cell.family = std::make_unique<FamilyVariant>(verify::Qs2CitedFamily{});
  if (proto == "qs2-and-cited") {
    *cell.family = verify::Qs2CitedFamily{};
    cell.d = 2;
    cell.K = 2;
  } else if (proto == "qs2-and-new") {
    *cell.family = verify::Qs2NewFamily{};
    cell.d = 2;
    cell.K = 2;
  } else if (proto == "dot-demo") {
    *cell.family = verify::DotDemoFamily{};
    cell.d = 2;
    cell.K = 2;
  } else if (proto == "qsk-sum" || proto == "broken-qsk-sum" ||
             proto == "corrupt-decode-qsk-sum") {
    if (!opt.d || !opt.k) throw ConfigError(proto + " needs --d and --k");
    auto variant = verify::SumFamily::Variant::kStandard;
    if (proto == "broken-qsk-sum") variant = verify::SumFamily::Variant::kZeroRandomness;
    if (proto == "corrupt-decode-qsk-sum")
      variant = verify::SumFamily::Variant::kCorruptDecode;
    *cell.family = verify::SumFamily(*opt.d, *opt.k, variant);
    cell.d = *opt.d;
    cell.K = *opt.k;
  } else if (proto == "qsk-prod" || proto == "qsk-and") {
    if (!opt.k) throw ConfigError(proto + " needs --k");
    std::uint32_t p = 2, r = 1;
    if (proto == "qsk-prod") std::tie(p, r) = field_params(opt);
    cell.field = std::make_shared<algebra::FieldSpec>(algebra::build_field(p, r));
    *cell.family = verify::ProdFamily(*cell.field, *opt.k, proto == "qsk-and");
    cell.d = cell.field->order();
    cell.K = *opt.k;
  } else {
    throw ConfigError("unknown protocol: " + proto);
  }
  return cell;
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file: " + out_path);
    f << text << "\n";
    std::cout << "wrote " << out_path << "\n";
  }
}

json config_echo(const std::string& proto, const Options& opt) {
  json j{{"protocol", proto},
         {"mode", opt.mode},
         {"seed", opt.seed},
         {"format", opt.format}};
  if (opt.d) j["d"] = *opt.d;
  if (opt.p) j["p"] = *opt.p;
  if (opt.r) j["r"] = *opt.r;
  if (opt.k) j["k"] = *opt.k;
  if (opt.instances) j["instances"] = *opt.instances;
  if (opt.limit) j["limit"] = *opt.limit;
  if (opt.sample) j["sample"] = opt.sample;
  return j;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   t0)
      .count();
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

std::vector<std::vector<std::uint32_t>> parse_instances(
    const Options& opt, std::uint32_t K, std::uint32_t alphabet,
    std::uint32_t L, SeededRng& rng) {
  std::vector<std::vector<std::uint32_t>> instances;
  if (!opt.w.empty()) {
    for (const std::string& text : opt.w) {
      auto vals = parse_u32_list(text);
      if (vals.size() != K)
        throw ConfigError("--w needs exactly K=" + std::to_string(K) + " values");
      for (auto v : vals)
        if (v >= alphabet) throw ConfigError("--w value out of alphabet");
      instances.push_back(std::move(vals));
    }
  } else {
    const std::uint64_t n = opt.instances.value_or(L);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::vector<std::uint32_t> inst(K);
      for (auto& v : inst) v = std::uint32_t(rng.uniform_below(alphabet));
      instances.push_back(std::move(inst));
    }
  }
  return instances;
}

int cmd_run(const std::string& proto, const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimMode mode = parse_mode(opt.mode);
  const bool padding = mode == SimMode::kQuantumVerified;  // enabled explicitly here
  SeededRng rng(opt.seed);
  std::vector<ProtocolRun> runs;

  if (proto == "qs2-and-cited" || proto == "qs2-and-new") {
    const std::uint32_t a = parse_bit(opt.a.empty() ? "0" : opt.a, "--a");
    const std::uint32_t b = parse_bit(opt.b.empty() ? "0" : opt.b, "--b");
    CommonRandomness rand;
    if (opt.z) {
      rand.components.push_back({"Z", {*opt.z}});
    } else {
      rand = proto == "qs2-and-cited" ? protocols::sample_qs2_and_cited(opt.seed)
                                      : protocols::sample_qs2_and_new(opt.seed);
    }
    runs.push_back(proto == "qs2-and-cited"
                       ? protocols::run_qs2_and_cited(a, b, rand, mode, padding)
                       : protocols::run_qs2_and_new(a, b, rand, mode, padding));
  } else if (proto == "dot-demo") {
    const std::uint32_t a = parse_two_bits(opt.a.empty() ? "00" : opt.a, "--a");
    const std::uint32_t b = parse_two_bits(opt.b.empty() ? "00" : opt.b, "--b");
    CommonRandomness rand;
    if (opt.r) {
      rand.components.push_back({"R", {*opt.r}});
    } else {
      rand = protocols::sample_dot_demo(opt.seed);
    }
    runs.push_back(protocols::run_dot_demo(a, b, rand, mode, padding));
  } else if (proto == "qsk-sum" || proto == "broken-qsk-sum" ||
             proto == "corrupt-decode-qsk-sum") {
    if (!opt.d || !opt.k) throw ConfigError(proto + " needs --d and --k");
    const std::uint32_t d = *opt.d, K = *opt.k;
    const std::uint32_t L = protocols::sum_instances(K);
    auto instances = parse_instances(opt, K, d, L, rng);
    if (instances.size() % L != 0)
      throw ConfigError("odd K needs an even number of instances");
    for (std::size_t i = 0; i < instances.size(); i += L) {
      std::vector<std::uint32_t> entries(std::size_t(K) * L);
      for (std::uint32_t l = 0; l < L; ++l)
        for (std::uint32_t k = 0; k < K; ++k)
          entries[std::size_t(k) * L + l] = instances[i + l][k];
      DataMatrix w(K, L, d, entries);
      if (proto == "broken-qsk-sum") {
        runs.push_back(protocols::run_broken_qsk_sum(d, K, w, mode));
      } else {
        auto rand = protocols::sample_qsk_sum(d, K, rng.next_u64());
        runs.push_back(proto == "qsk-sum"
                           ? protocols::run_qsk_sum(d, K, w, rand, mode, padding)
                           : protocols::run_corrupt_decode_qsk_sum(d, K, w, rand, mode));
      }
    }
  } else if (proto == "qsk-prod" || proto == "qsk-and") {
    if (!opt.k) throw ConfigError(proto + " needs --k");
    std::uint32_t p = 2, rdeg = 1;
    if (proto == "qsk-prod") std::tie(p, rdeg) = field_params(opt);
    const algebra::FieldSpec field = algebra::build_field(p, rdeg);
    const std::uint32_t K = *opt.k;
    const std::uint32_t L = protocols::sum_instances(K);
    auto instances = parse_instances(opt, K, field.order(), L, rng);
    if (instances.size() % L != 0)
      throw ConfigError("odd K processes product instances in pairs");
    for (std::size_t i = 0; i < instances.size(); i += L) {
      std::vector<std::uint32_t> entries(std::size_t(K) * L);
      for (std::uint32_t l = 0; l < L; ++l)
        for (std::uint32_t k = 0; k < K; ++k)
          entries[std::size_t(k) * L + l] = instances[i + l][k];
      DataMatrix w(K, L, field.order(), entries);
      auto rand = protocols::sample_qsk_prod(field, K, rng.next_u64());
      ProtocolRun run = proto == "qsk-and"
                            ? protocols::run_qsk_and(K, w, rand, mode, padding)
                            : protocols::run_qsk_prod(field, K, w, rand, mode, padding);
      runs.push_back(std::move(run));
    }
  } else {
    throw ConfigError("unknown protocol: " + proto);
  }

  if (runs.empty()) throw ConfigError("nothing to run (zero instances)");
  json jruns = json::array();
  channel::CostLedger total;
  std::uint64_t total_instances = 0;
  for (const ProtocolRun& run : runs) {
    jruns.push_back(report::to_json(run));
    total.merge(run.ledger);
    total_instances += run.L;
  }
  json out{{"schema_version", report::kSchemaVersion},
           {"tool_version", report::kToolVersion},
           {"config", config_echo(proto, opt)},
           {"runs", jruns},
           {"aggregate_rate",
            report::rate_expression(total, total_instances, runs.front().d_ref)},
           {"timing_ms", elapsed_ms(t0)}};
  emit(out.dump(2), opt.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

verify::VerifyOptions verify_options(const Options& opt) {
  verify::VerifyOptions v;
  v.limit = opt.limit.value_or(default_limit());
  v.sample_size = opt.sample;
  v.sample_seed = opt.seed == 0 ? 1 : opt.seed;
  return v;
}

verify::VerificationOutcome verify_cell(Cell& cell, const verify::VerifyOptions& vopts) {
  return std::visit([&](auto& fam) { return verify::verify_all(fam, vopts); },
                    *cell.family);
}

int cmd_verify(const std::string& proto, const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Cell cell = make_cell(proto, opt);
  verify::VerificationOutcome outcome = verify_cell(cell, verify_options(opt));
  json out = report::to_json(outcome);
  out["config"] = config_echo(proto, opt);
  out["timing_ms"] = elapsed_ms(t0);
  emit(out.dump(2), opt.out);
  return outcome.all_pass() ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  std::uint32_t d = 0, K = 0;
  bool ok = false;  // cell executed
  std::string error;
  verify::VerificationOutcome outcome;
};

int cmd_sweep(const std::string& proto, const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::uint32_t> ds =
      opt.d_list.empty() ? std::vector<std::uint32_t>{opt.d.value_or(0)}
                         : parse_u32_list(opt.d_list);
  std::vector<std::uint32_t> ks =
      opt.k_list.empty() ? std::vector<std::uint32_t>{opt.k.value_or(0)}
                         : parse_u32_list(opt.k_list);
  const bool needs_d = proto == "qsk-sum" || proto == "qsk-prod" ||
                       proto == "broken-qsk-sum" ||
                       proto == "corrupt-decode-qsk-sum";
  if (!needs_d) ds = {2};
  const bool needs_k = needs_d || proto == "qsk-and";
  if (!needs_k) ks = {2};
  if ((needs_d && (ds.empty() || ds[0] == 0)) || (needs_k && (ks.empty() || ks[0] == 0))) {
    // an explicitly empty grid is fine; a missing one is not
    if (opt.d_list.empty() && opt.k_list.empty())
      throw ConfigError("sweep needs --d and/or --k lists");
    ds.erase(std::remove(ds.begin(), ds.end(), 0u), ds.end());
    ks.erase(std::remove(ks.begin(), ks.end(), 0u), ks.end());
  }

  struct Task {
    std::uint32_t d, K;
  };
  std::vector<Task> grid;
  for (std::uint32_t d : ds)
    for (std::uint32_t k : ks) grid.push_back({d, k});

  const verify::VerifyOptions vopts = verify_options(opt);
  std::vector<SweepRow> rows(grid.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= grid.size()) return;
        i = next++;
      }
      SweepRow& row = rows[i];
      row.d = grid[i].d;
      row.K = grid[i].K;
      try {
        Options cell_opt = opt;
        cell_opt.d = grid[i].d;
        cell_opt.k = grid[i].K;
        cell_opt.p.reset();
        cell_opt.r.reset();
        Cell cell = make_cell(proto, cell_opt);
        row.outcome = verify_cell(cell, vopts);
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const std::size_t nworkers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                            std::max<std::size_t>(grid.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < nworkers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  bool all_pass = true;
  for (const SweepRow& row : rows)
    all_pass = all_pass && row.ok && row.outcome.all_pass();

  if (opt.format == "csv") {
    std::ostringstream csv;
    csv << std::setprecision(17);
    csv << "protocol,d,K,rate,upper_bound,lower_bound,correct,secure,cmi_zero,"
           "all_pass,error\n";
    for (const SweepRow& row : rows) {
      csv << proto << "," << row.d << "," << row.K << ",";
      if (row.ok) {
        const auto& o = row.outcome;
        csv << o.rate.achieved << "," << o.rate.upper_bound << ",";
        if (o.rate.lower_bound) csv << *o.rate.lower_bound;
        csv << "," << (o.correctness.pass ? 1 : 0) << ","
            << (o.security.secure ? 1 : 0) << "," << (o.cmi.exactly_zero ? 1 : 0)
            << "," << (o.all_pass() ? 1 : 0) << ",";
      } else {
        csv << ",,,,,,0," << "\"" << row.error << "\"";
      }
      csv << "\n";
    }
    emit(csv.str(), opt.out);
  } else {
    json jrows = json::array();
    for (const SweepRow& row : rows) {
      json r{{"protocol", proto}, {"d", row.d}, {"K", row.K}};
      if (row.ok) {
        r["outcome"] = report::to_json(row.outcome);
        r["all_pass"] = row.outcome.all_pass();
      } else {
        r["error"] = row.error;
        r["all_pass"] = false;
      }
      jrows.push_back(std::move(r));
    }
    json out{{"schema_version", report::kSchemaVersion},
             {"tool_version", report::kToolVersion},
             {"config", config_echo(proto, opt)},
             {"rows", jrows},
             {"all_pass", all_pass},
             {"timing_ms", elapsed_ms(t0)}};
    emit(out.dump(2), opt.out);
  }
  return all_pass ? kExitOk : kExitVerification;
}

int cmd_list(const Options& opt) {
  if (opt.format == "json") {
    json out = json::array();
    for (const auto& info : protocol_table())
      out.push_back(json{{"id", info.id},
                         {"params", info.params},
                         {"summary", info.summary}});
    emit(out.dump(2), opt.out);
  } else {
    std::ostringstream text;
    for (const auto& info : protocol_table())
      text << info.id << "\n    " << info.summary << "\n    options: "
           << info.params << "\n";
    emit(text.str(), opt.out);
  }
  return kExitOk;
}

std::string resolve_protocol(const Options& opt) {
  if (opt.protocol.empty()) throw ConfigError("no protocol given");
  if (!known_protocol(opt.protocol))
    throw ConfigError("unknown protocol: " + opt.protocol);
  return opt.protocol;
}

void add_common(CLI::App* sub, Options& opt, bool with_lists) {
  sub->add_option("protocol,--protocol", opt.protocol,
                  "protocol id (see list-protocols)");
  if (with_lists) {
    sub->add_option("--d", opt.d_list, "dimension list, e.g. 2,3,4 or 2..5");
    sub->add_option("--k", opt.k_list, "user-count list, e.g. 2..5");
  } else {
    sub->add_option("--d", opt.d, "alphabet size / field order");
    sub->add_option("--k", opt.k, "number of users K");
  }
  sub->add_option("--p", opt.p, "field characteristic (with --r)");
  if (!with_lists)
    sub->add_option("--r", opt.r,
                    "field extension degree; for dot-demo, the mask R");
  sub->add_option("--seed", opt.seed, "randomness seed");
  sub->add_option("--limit", opt.limit,
                  "enumeration budget (default 1e8 or QMAC_SECCOMP_LIMIT)");
  sub->add_option("--out", opt.out, "write the report to this file");
  sub->add_option("--format", opt.format, "json or csv (sweep only)")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure K-user computation over an ideal quantum MAC"};
  app.require_subcommand(1);

  Options run_opt, verify_opt, sweep_opt, list_opt;

  CLI::App* run = app.add_subcommand("run", "execute one protocol and print the run");
  add_common(run, run_opt, false);
  run->add_option("--instances", run_opt.instances, "number of data instances");
  run->add_option("--mode", run_opt.mode, "abstract | quantum")
      ->check(CLI::IsMember({"abstract", "quantum"}));
  run->add_option("--a", run_opt.a, "Alice input (bit, or two bits for dot-demo)");
  run->add_option("--b", run_opt.b, "Bob input");
  run->add_option("--z", run_opt.z, "shared randomness Z for the QS2-AND schemes");
  run->add_option("--w", run_opt.w,
                  "one data instance as K comma-separated values (repeatable)");

  CLI::App* ver = app.add_subcommand(
      "verify", "exhaustive correctness + security + CMI + rate checks");
  add_common(ver, verify_opt, false);
  ver->add_option("--sample", verify_opt.sample,
                  "sampled correctness only (non-exhaustive)");
  ver->add_option("--mode", verify_opt.mode,
                  "echoed only; verification enumerates abstractly");

  CLI::App* sweep = app.add_subcommand("sweep", "verify across a parameter grid");
  add_common(sweep, sweep_opt, true);
  sweep->add_option("--sample", sweep_opt.sample, "sampled mode per cell");

  CLI::App* list = app.add_subcommand("list-protocols", "list protocol ids");
  list->add_option("--format", list_opt.format, "json or text");
  list->add_option("--out", list_opt.out, "write to file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(resolve_protocol(run_opt), run_opt);
    if (ver->parsed()) return cmd_verify(resolve_protocol(verify_opt), verify_opt);
    if (sweep->parsed()) return cmd_sweep(resolve_protocol(sweep_opt), sweep_opt);
    if (list->parsed()) return cmd_list(list_opt);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const LimitExceeded& e) {
    std::cerr << "limit exceeded: " << e.what() << "\n";
    return kExitLimit;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
