// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite.  Each criterion is one test case; a listener
// prints a single PASS/FAIL line per criterion as it finishes.
#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <vector>

#include "qmac/channel.hpp"
#include "qmac/protocols.hpp"
#include "qmac/quditsim.hpp"
#include "qmac/rng.hpp"
#include "qmac/verify.hpp"

using namespace qmac;
using channel::SimMode;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CriterionListener : Catch::EventListenerBase {
  using Catch::EventListenerBase::EventListenerBase;
  void testCaseEnded(const Catch::TestCaseStats& stats) override {
    std::printf("%s  %s\n",
                stats.totals.assertions.allPassed() ? "[PASS]" : "[FAIL]",
                stats.testInfo->name.c_str());
    std::fflush(stdout);
  }
};
CATCH_REGISTER_LISTENER(CriterionListener)

verify::VerifyOptions big_limit() {
  verify::VerifyOptions opts;
  opts.limit = 6'000'000'000ULL;
  return opts;
}

}  // namespace

TEST_CASE("criterion 1: 2-sum quantum oracle, d in 2..5, all inputs, <10s") {
  const auto t0 = Clock::now();
  for (std::uint32_t d = 2; d <= 5; ++d)
    for (std::uint32_t a1 = 0; a1 < d; ++a1)
      for (std::uint32_t a2 = 0; a2 < d; ++a2)
        for (std::uint32_t b1 = 0; b1 < d; ++b1)
          for (std::uint32_t b2 = 0; b2 < d; ++b2) {
            using namespace quditsim;
            PureState s = bell_pair(d);
            s = apply_local(s, pauli_z(d, a2, 0));
            s = apply_local(s, pauli_x(d, a1, 0));
            s = apply_local(s, pauli_z(d, b2, 1));
            s = apply_local(s, pauli_x(d, -std::int64_t(b1), 1));
            const BellMeasurement m = measure_bell_basis(s);
            REQUIRE(m.probability((a1 + b1) % d, (a2 + b2) % d) >= 1.0 - 1e-9);
          }
  REQUIRE(seconds_since(t0) < 10.0);
}

TEST_CASE("criterion 2: Bell-basis Gram matrix is the identity, d in 2..7") {
  for (std::uint32_t d = 2; d <= 7; ++d) {
    std::vector<quditsim::PureState> basis;
    for (std::uint32_t x = 0; x < d; ++x)
      for (std::uint32_t y = 0; y < d; ++y)
        basis.push_back(quditsim::bell_basis_state(d, x, y));
    double deviation = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const auto g = inner_product(basis[i], basis[j]);
        const auto want = i == j ? quditsim::Complex(1, 0) : quditsim::Complex(0, 0);
        deviation = std::max(deviation, std::abs(g - want));
      }
    REQUIRE(deviation < 1e-9);
  }
}

TEST_CASE("criterion 3: QS2-AND (cited) correctness, F=0 distribution, rate 0.5") {
  verify::VerificationOutcome out = verify::verify_all(verify::Qs2CitedFamily{});
  REQUIRE(out.correctness.pass);
  REQUIRE(out.correctness.exhaustive);
  REQUIRE(out.correctness.evaluations == 12);  // 4 data x 3 randomness
  REQUIRE(out.security.secure);

  // F=0: uniform over exactly {(0,0),(1,0),(0,1)}; transcript packs y1 + 2*y2
  bool found_f0 = false;
  for (const auto& g : out.security.groups) {
    if (g.f_value != std::vector<std::uint32_t>{0}) continue;
    found_f0 = true;
    REQUIRE(g.segments[0].denominator == 3);
    const std::vector<std::pair<std::uint64_t, std::uint64_t>> want = {
        {0, 1}, {1, 1}, {2, 1}};  // (0,0), (1,0), (0,1), one each
    REQUIRE(g.segments[0].counts == want);
  }
  REQUIRE(found_f0);
  REQUIRE(out.rate.achieved == 0.5);  // exactly, 1 instance per 2 qubits
  REQUIRE(out.rate.pass);
}

TEST_CASE("criterion 4: QS2-AND (new) correctness, F=0 uniform on {1,2}, rate 1/log2(3)") {
  verify::VerificationOutcome out = verify::verify_all(verify::Qs2NewFamily{});
  REQUIRE(out.correctness.pass);
  REQUIRE(out.correctness.evaluations == 8);  // 4 data x 2 randomness
  REQUIRE(out.security.secure);
  for (const auto& g : out.security.groups) {
    if (g.f_value != std::vector<std::uint32_t>{0}) continue;
    REQUIRE(g.segments[0].denominator == 2);
    const std::vector<std::pair<std::uint64_t, std::uint64_t>> want = {{1, 1},
                                                                       {2, 1}};
    REQUIRE(g.segments[0].counts == want);
  }
  REQUIRE(std::abs(out.rate.achieved - 1.0 / std::log2(3.0)) <= 1e-12);
  REQUIRE(out.rate.pass);
}

TEST_CASE("criterion 5: QSK-Sum exhaustive for d,K in 2..5: correct, secure, CMI=0, rate 2/K, <5min") {
  const auto t0 = Clock::now();
  for (std::uint32_t d = 2; d <= 5; ++d)
    for (std::uint32_t K = 2; K <= 5; ++K) {
      INFO("d=" << d << " K=" << K);
      verify::SumFamily fam(d, K);
      verify::VerificationOutcome out = verify::verify_all(fam, big_limit());
      REQUIRE(out.correctness.pass);
      REQUIRE(out.correctness.exhaustive);
      REQUIRE(out.security.secure);
      REQUIRE(out.cmi.evaluated);
      REQUIRE(out.cmi.exactly_zero);
      REQUIRE(out.cmi.dits == 0.0);
      // rate exactly 2/K: L*K = 2*uses with every use of dimension d
      REQUIRE(out.rate.achieved == 2.0 / double(K));
      REQUIRE(out.rate.cost_entries ==
              std::vector<std::pair<std::uint32_t, std::uint64_t>>{
                  {d, protocols::sum_uses(K)}});
      REQUIRE(std::uint64_t(out.L) * K == 2 * protocols::sum_uses(K));
      REQUIRE(out.rate.tight);
    }
  REQUIRE(seconds_since(t0) < 300.0);
}

TEST_CASE("criterion 6: QSK-Prod exhaustive for d in {2,3,4,5,7,8,9}, K in {2,3}, <10min") {
  const auto t0 = Clock::now();
  for (std::uint32_t d : {2u, 3u, 4u, 5u, 7u, 8u, 9u})
    for (std::uint32_t K : {2u, 3u}) {
      INFO("d=" << d << " K=" << K);
      std::uint32_t p = 0, r = 0, v = d;
      for (std::uint32_t q = 2; q <= d; ++q)
        if (v % q == 0) {
          p = q;
          while (v % q == 0) {
            v /= q;
            ++r;
          }
          break;
        }
      REQUIRE(v == 1);
      const algebra::FieldSpec field = algebra::build_field(p, r);
      verify::ProdFamily fam(field, K);
      verify::VerificationOutcome out = verify::verify_all(fam, big_limit());
      REQUIRE(out.correctness.pass);
      REQUIRE(out.correctness.exhaustive);
      REQUIRE(out.security.secure);
      REQUIRE(out.cmi.exactly_zero);

      const std::uint32_t bp = algebra::bertrand_prime(K);
      const double logd = std::log(double(d));
      const double want_rate =
          (2.0 / K) / (std::log(double(bp)) / logd +
                       (d > 2 ? std::log(double(d - 1)) / logd : 0.0));
      REQUIRE(std::abs(out.rate.achieved - want_rate) <= 1e-12);
      REQUIRE(out.rate.lower_bound.has_value());
      REQUIRE(out.rate.achieved >= *out.rate.lower_bound - 1e-12);
      REQUIRE(out.rate.achieved <= 2.0 / double(K) + 1e-12);
      REQUIRE(out.rate.pass);
    }
  REQUIRE(seconds_since(t0) < 600.0);
}

TEST_CASE("criterion 7: qsk-and(K=2) and qs2-and-new agree on decode and rate") {
  using namespace protocols;
  for (std::uint32_t a = 0; a < 2; ++a)
    for (std::uint32_t b = 0; b < 2; ++b)
      for (std::uint32_t z = 1; z <= 2; ++z) {
        CommonRandomness new_rand;
        new_rand.components.push_back({"Z", {z}});
        ProtocolRun lhs = run_qs2_and_new(a, b, new_rand);

        CommonRandomness prod_rand;
        prod_rand.components.push_back({"R", {z}});
        prod_rand.components.push_back({"ZI", {0}});
        prod_rand.components.push_back({"WT", {1, 1}});
        ProtocolRun rhs = run_qsk_and(2, DataMatrix::column(2, {a, b}), prod_rand);

        REQUIRE(lhs.decoded == rhs.decoded);
        REQUIRE(lhs.transcript.size() == rhs.transcript.size());
        REQUIRE(lhs.transcript[0].output == rhs.transcript[0].output);
        REQUIRE(lhs.rate() == rhs.rate());  // both 1/log2(3)
      }
}

TEST_CASE("criterion 8: dot-product demo, all 16 x 5 cases, uniform over S_F, rate 1/log2(11)") {
  verify::VerificationOutcome out = verify::verify_all(verify::DotDemoFamily{});
  REQUIRE(out.correctness.pass);
  REQUIRE(out.correctness.evaluations == 80);  // 16 data x 5 masks
  REQUIRE(out.security.secure);
  REQUIRE(out.cmi.exactly_zero);

  const std::set<std::uint64_t> s1 = {2, 6, 7, 8, 10};
  const std::set<std::uint64_t> s0 = {1, 3, 4, 5, 9};
  bool saw0 = false, saw1 = false;
  for (const auto& g : out.security.groups) {
    const bool f1 = g.f_value == std::vector<std::uint32_t>{1};
    (f1 ? saw1 : saw0) = true;
    REQUIRE(g.members == (f1 ? 6 : 10));
    std::set<std::uint64_t> support;
    for (const auto& [t, c] : g.segments[0].counts) {
      support.insert(t);
      REQUIRE(c == 1);  // uniform over S_F
    }
    REQUIRE(support == (f1 ? s1 : s0));
  }
  REQUIRE(saw0);
  REQUIRE(saw1);
  REQUIRE(std::abs(out.rate.achieved - 1.0 / std::log2(11.0)) <= 1e-12);
}

TEST_CASE("criterion 9: negative controls rejected with concrete witnesses") {
  verify::SecurityReport broken = verify::check_security_exhaustive(
      verify::SumFamily(2, 4, verify::SumFamily::Variant::kZeroRandomness));
  REQUIRE_FALSE(broken.secure);
  REQUIRE(broken.witness.has_value());
  REQUIRE(broken.witness->data_ref != broken.witness->data_other);
  REQUIRE(verify::conditional_mutual_information(
              verify::SumFamily(2, 4, verify::SumFamily::Variant::kZeroRandomness))
              .exactly_zero == false);

  verify::CorrectnessReport corrupt = verify::check_correctness_exhaustive(
      verify::SumFamily(3, 2, verify::SumFamily::Variant::kCorruptDecode));
  REQUIRE_FALSE(corrupt.pass);
  REQUIRE(corrupt.witness.has_value());
  REQUIRE(corrupt.witness->decoded != corrupt.witness->truth);
}

TEST_CASE("criterion 10: 10^4 random channel uses agree across modes, d in 2..5") {
  SeededRng rng(20240816);
  std::uint64_t uses = 0;
  for (std::uint32_t d = 2; d <= 5; ++d) {
    channel::ChannelSession abstract(SimMode::kAbstract);
    channel::ChannelSession quantum(SimMode::kQuantumVerified, true);
    for (int i = 0; i < 2500; ++i) {
      const auto a = std::uint32_t(rng.uniform_below(d));
      const auto b = std::uint32_t(rng.uniform_below(d));
      REQUIRE(abstract.use(0, 1, d, a, b) == quantum.use(0, 1, d, a, b));
      ++uses;
    }
    abstract.close();
    quantum.close();
    REQUIRE(abstract.transcript() == quantum.transcript());
  }
  REQUIRE(uses == 10000);
}
