// SPDX-License-Identifier: Apache-2.0
//
// Drives the installed binary end to end: exit codes, report schema, and
// byte determinism (identical config + seed, modulo the timing field).
#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef QMAC_BIN
#error "QMAC_BIN must point at the qmac binary"
#endif

namespace {

using nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string out_path = "/tmp/qmac_cli_test_" +
                               std::to_string(::getpid()) + "_" +
                               std::to_string(counter++) + ".out";
  const std::string cmd =
      std::string(QMAC_BIN) + " " + args + " > " + out_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(out_path);
  std::stringstream ss;
  ss << f.rdbuf();
  res.stdout_text = ss.str();
  std::remove(out_path.c_str());
  return res;
}

json strip_timing(const std::string& text) {
  json j = json::parse(text);
  j.erase("timing_ms");
  return j;
}

}  // namespace

TEST_CASE("run: qs2-and-new example") {
  CliResult r = run_cli("run qs2-and-new --a 1 --b 1 --z 2");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.stdout_text);
  CHECK(j["schema_version"] == "1");
  CHECK(j["runs"][0]["decoded"][0] == 1);
}

TEST_CASE("run: dot-demo example") {
  CliResult r = run_cli("run dot-demo --a 10 --b 10 --r 1");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.stdout_text);
  CHECK(j["runs"][0]["transcript"][0]["output"] == 10);
  CHECK(j["runs"][0]["decoded"][0] == 1);
}

TEST_CASE("run: qsk-sum rate example") {
  CliResult r = run_cli("run qsk-sum --d 3 --k 5 --instances 2 --seed 7");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.stdout_text);
  CHECK(j["aggregate_rate"]["approx"] == 0.4);
}

TEST_CASE("run: quantum mode cross-checks the transcript") {
  CliResult abstract = run_cli("run qsk-sum --d 3 --k 4 --seed 5 --mode abstract");
  CliResult quantum = run_cli("run qsk-sum --d 3 --k 4 --seed 5 --mode quantum");
  REQUIRE(abstract.exit_code == 0);
  REQUIRE(quantum.exit_code == 0);
  json ja = json::parse(abstract.stdout_text);
  json jq = json::parse(quantum.stdout_text);
  CHECK(ja["runs"][0]["transcript"] == jq["runs"][0]["transcript"]);
  CHECK(ja["runs"][0]["decoded"] == jq["runs"][0]["decoded"]);
  CHECK(jq["runs"][0]["ledger"]["physical_qudits"].get<int>() > 0);
}

TEST_CASE("reports are byte-deterministic modulo timing") {
  CliResult a = run_cli("verify qsk-sum --d 3 --k 3 --seed 9");
  CliResult b = run_cli("verify qsk-sum --d 3 --k 3 --seed 9");
  REQUIRE(a.exit_code == 0);
  CHECK(strip_timing(a.stdout_text).dump() == strip_timing(b.stdout_text).dump());

  CliResult c = run_cli("run qsk-prod --d 4 --k 2 --seed 3");
  CliResult d = run_cli("run qsk-prod --d 4 --k 2 --seed 3");
  REQUIRE(c.exit_code == 0);
  CHECK(strip_timing(c.stdout_text).dump() == strip_timing(d.stdout_text).dump());
}

TEST_CASE("exit codes") {
  CHECK(run_cli("verify qsk-sum --d 2 --k 3").exit_code == 0);
  CHECK(run_cli("verify broken-qsk-sum --d 2 --k 4").exit_code == 5);
  CHECK(run_cli("verify corrupt-decode-qsk-sum --d 2 --k 2").exit_code == 5);
  CHECK(run_cli("verify qsk-sum --d 5 --k 5 --limit 1000").exit_code == 4);
  CHECK(run_cli("verify qsk-sum --k 3").exit_code == 2);         // missing --d
  CHECK(run_cli("verify qsk-prod --d 6 --k 2").exit_code == 2);  // 6 is not a prime power
  CHECK(run_cli("run nonsense-protocol").exit_code == 2);
  CHECK(run_cli("run qs2-and-new --a 7 --b 0").exit_code == 2);
}

TEST_CASE("verify report carries exact count vectors") {
  CliResult r = run_cli("verify qs2-and-cited");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.stdout_text);
  CHECK(j["all_pass"] == true);
  const auto& groups = j["security"]["groups"];
  REQUIRE(groups.size() == 2);
  CHECK(groups[0]["segments"][0]["denominator"] == 3);
  for (const auto& entry : groups[0]["segments"][0]["counts"])
    CHECK(entry[1] == 1);
  CHECK(j["cmi"]["exactly_zero"] == true);
}

TEST_CASE("sweep: grid shape, csv, and empty grid") {
  CliResult r = run_cli("sweep qsk-sum --d 2,3 --k 2..4");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.stdout_text);
  CHECK(j["rows"].size() == 6);
  CHECK(j["all_pass"] == true);

  CliResult csv = run_cli("sweep qsk-prod --d 3,5,7 --k 2 --format csv");
  REQUIRE(csv.exit_code == 0);
  std::stringstream ss(csv.stdout_text);
  std::string line;
  std::getline(ss, line);
  CHECK(line ==
        "protocol,d,K,rate,upper_bound,lower_bound,correct,secure,cmi_zero,"
        "all_pass,error");
  int rows = 0;
  while (std::getline(ss, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  CliResult empty = run_cli("sweep qsk-sum --d \"\" --k 2");
  CHECK(empty.exit_code == 0);
  CHECK(json::parse(empty.stdout_text)["rows"].empty());

  CliResult broken = run_cli("sweep broken-qsk-sum --d 2 --k 4");
  CHECK(broken.exit_code == 5);
}

TEST_CASE("verify: sampling mode is reported as non-exhaustive") {
  CliResult r = run_cli("verify qsk-sum --d 4 --k 4 --sample 200 --limit 10");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.stdout_text);
  CHECK(j["correctness"]["exhaustive"] == false);
  CHECK(j["correctness"]["pass"] == true);
  CHECK(j["security"]["evaluated"] == false);
}
