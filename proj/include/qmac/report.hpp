// SPDX-License-Identifier: Apache-2.0
//
// JSON report schema.  Counts and distributions are serialized as integers
// (count vectors plus a denominator); rates carry an exact symbolic form
// (instances over a sum of count * log_ref(dimension) terms) next to the
// double approximation.  Keys are emitted sorted, so identical inputs give
// identical bytes.
#pragma once

#include <string>

#include <json.hpp>

#include "qmac/channel.hpp"
#include "qmac/protocols.hpp"
#include "qmac/verify.hpp"

namespace qmac::report {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";
inline constexpr const char* kToolVersion = "0.1.0";

inline json rate_expression(const channel::CostLedger& ledger,
                            std::uint64_t instances, std::uint32_t d_ref) {
  json terms = json::array();
  for (auto [dim, count] : ledger.entries())
    terms.push_back(json::array({dim, count}));
  return json{{"numerator_instances", instances},
              {"denominator_log_terms", terms},
              {"reference_base", d_ref},
              {"approx", channel::ledger_rate(ledger, instances, d_ref)}};
}

inline json to_json(const verify::RateReport& r) {
  channel::CostLedger led;
  for (auto [dim, count] : r.cost_entries) led.charge(dim, count);
  json j{{"achieved", rate_expression(led, r.instances, r.d_ref)},
         {"upper_bound", r.upper_bound},
         {"tight", r.tight},
         {"pass", r.pass}};
  if (r.lower_bound) j["lower_bound"] = *r.lower_bound;
  return j;
}

inline json to_json(const protocols::CommonRandomness& rand) {
  json comps = json::object();
  for (const auto& [name, values] : rand.components) comps[name] = values;
  json j{{"components", comps}};
  if (rand.seeded) j["seed"] = rand.seed;
  return j;
}

inline json to_json(const protocols::ProtocolRun& run) {
  json transcript = json::array();
  for (const auto& u : run.transcript) {
    json e{{"dimension", u.dimension}, {"output", u.output}};
    if (u.user_b < 0) {
      e["users"] = json::array({u.user_a});
      e["inputs"] = json::array({u.input_a});
    } else {
      e["users"] = json::array({u.user_a, u.user_b});
      e["inputs"] = json::array({u.input_a, u.input_b});
    }
    transcript.push_back(e);
  }
  json ledger_entries = json::array();
  for (auto [dim, count] : run.ledger.entries())
    ledger_entries.push_back(json::array({dim, count}));
  return json{
      {"protocol", run.protocol},
      {"d", run.d_ref},
      {"K", run.K},
      {"L", run.L},
      {"mode", run.mode == channel::SimMode::kAbstract ? "abstract" : "quantum-verified"},
      {"data", json{{"K", run.data.K},
                    {"L", run.data.L},
                    {"alphabet", run.data.alphabet},
                    {"entries", run.data.entries}}},
      {"randomness", to_json(run.randomness)},
      {"transcript", transcript},
      {"decoded", run.decoded},
      {"ledger", json{{"entries", ledger_entries},
                      {"physical_qudits", run.physical_qudits},
                      {"paper_rate_divergent", run.paper_rate_divergent}}},
      {"rate", rate_expression(run.ledger, run.L, run.d_ref)}};
}

inline json to_json(const verify::CorrectnessReport& r) {
  json j{{"evaluated", r.evaluated},
         {"pass", r.pass},
         {"exhaustive", r.exhaustive},
         {"evaluations", r.evaluations},
         {"data_points", r.data_points}};
  if (r.witness) {
    j["witness"] = json{{"data", r.witness->data},
                        {"segment_randomness", r.witness->segment_rand},
                        {"decoded", r.witness->decoded},
                        {"truth", r.witness->truth}};
  }
  return j;
}

inline json to_json(const verify::SecurityReport& r) {
  json groups = json::array();
  for (const auto& g : r.groups) {
    json segs = json::array();
    for (const auto& s : g.segments) {
      json counts = json::array();
      for (auto [t, c] : s.counts) counts.push_back(json::array({t, c}));
      segs.push_back(json{{"denominator", s.denominator}, {"counts", counts}});
    }
    groups.push_back(json{{"f_value", g.f_value},
                          {"members", g.members},
                          {"representative", g.representative},
                          {"segments", segs}});
  }
  json j{{"evaluated", r.evaluated},
         {"secure", r.secure},
         {"evaluations", r.evaluations},
         {"groups", groups}};
  if (r.witness) {
    j["witness"] = json{{"f_value", r.witness->f_value},
                        {"data_ref", r.witness->data_ref},
                        {"data_other", r.witness->data_other},
                        {"segment", r.witness->segment},
                        {"transcript_index", r.witness->transcript_index},
                        {"count_ref", r.witness->count_ref},
                        {"denominator_ref", r.witness->denom_ref},
                        {"count_other", r.witness->count_other},
                        {"denominator_other", r.witness->denom_other}};
  }
  return j;
}

inline json to_json(const verify::CmiReport& r) {
  return json{{"evaluated", r.evaluated},
              {"exactly_zero", r.exactly_zero},
              {"dits", r.dits},
              {"evaluations", r.evaluations}};
}

inline json to_json(const verify::VerificationOutcome& out) {
  return json{{"schema_version", kSchemaVersion},
              {"tool_version", kToolVersion},
              {"protocol", out.protocol},
              {"d", out.d},
              {"K", out.K},
              {"L", out.L},
              {"enumeration_size", out.enumeration_size},
              {"correctness", to_json(out.correctness)},
              {"security", to_json(out.security)},
              {"cmi", to_json(out.cmi)},
              {"rate", to_json(out.rate)},
              {"all_pass", out.all_pass()}};
}

inline json run_report(const protocols::ProtocolRun& run) {
  json j = to_json(run);
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  return j;
}

}  // namespace qmac::report
