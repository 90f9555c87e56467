// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "qmac/protocols.hpp"

using namespace qmac::protocols;
using qmac::algebra::FieldSpec;
using qmac::algebra::build_field;
using qmac::channel::SimMode;

namespace {

CommonRandomness z_only(std::vector<std::uint32_t> z) {
  CommonRandomness r;
  r.components.push_back({"Z", std::move(z)});
  return r;
}

CommonRandomness prod_rand(std::vector<std::uint32_t> rv,
                           std::vector<std::uint32_t> z1,
                           std::vector<std::uint32_t> z2,
                           std::vector<std::uint32_t> wt) {
  CommonRandomness r;
  r.components.push_back({"R", std::move(rv)});
  r.components.push_back({"ZI", std::move(z1)});
  if (!z2.empty()) r.components.push_back({"ZII", std::move(z2)});
  r.components.push_back({"WT", std::move(wt)});
  return r;
}

std::vector<std::uint32_t> outputs(const ProtocolRun& run) {
  std::vector<std::uint32_t> y;
  for (const auto& u : run.transcript) y.push_back(u.output);
  return y;
}

std::uint32_t sum_truth(std::uint32_t d, const DataMatrix& w, std::uint32_t l) {
  std::uint32_t s = 0;
  for (std::uint32_t k = 0; k < w.K; ++k) s = (s + w.at(k, l)) % d;
  return s;
}

}  // namespace

TEST_CASE("qs2-and-cited: table rows and decode") {
  CommonRandomness z2;
  z2.components.push_back({"Z", {2}});
  ProtocolRun r = run_qs2_and_cited(1, 1, z2);
  CHECK(outputs(r) == std::vector<std::uint32_t>{1, 1});  // (B, A+B+1)
  CHECK(r.decoded == std::vector<std::uint32_t>{1});

  CommonRandomness z1;
  z1.components.push_back({"Z", {1}});
  ProtocolRun r2 = run_qs2_and_cited(0, 0, z1);
  CHECK(outputs(r2) == std::vector<std::uint32_t>{0, 0});
  CHECK(r2.decoded == std::vector<std::uint32_t>{0});

  CHECK(r.ledger.count_for(2) == 2);  // 2 qubits
  CHECK(r.rate() == 0.5);
}

TEST_CASE("qs2-and-cited: F=0 outputs are uniform over {(0,0),(0,1),(1,0)}") {
  for (std::uint32_t a = 0; a < 2; ++a)
    for (std::uint32_t b = 0; b < 2; ++b) {
      if (a == 1 && b == 1) continue;
      std::set<std::vector<std::uint32_t>> seen;
      for (std::uint32_t z = 1; z <= 3; ++z) {
        CommonRandomness rnd;
        rnd.components.push_back({"Z", {z}});
        ProtocolRun run = run_qs2_and_cited(a, b, rnd);
        CHECK(run.decoded[0] == 0);
        seen.insert(outputs(run));
      }
      // three distinct outputs over three Z values = uniform
      CHECK(seen == std::set<std::vector<std::uint32_t>>{
                        {0, 0}, {0, 1}, {1, 0}});
    }
}

TEST_CASE("qs2-and-new: examples, uniformity, rate") {
  CommonRandomness z2;
  z2.components.push_back({"Z", {2}});
  ProtocolRun r = run_qs2_and_new(1, 1, z2);
  CHECK(outputs(r) == std::vector<std::uint32_t>{0});
  CHECK(r.decoded == std::vector<std::uint32_t>{1});

  CommonRandomness z1;
  z1.components.push_back({"Z", {1}});
  ProtocolRun r2 = run_qs2_and_new(1, 0, z1);
  CHECK(outputs(r2) == std::vector<std::uint32_t>{1});
  CHECK(r2.decoded == std::vector<std::uint32_t>{0});

  for (std::uint32_t a = 0; a < 2; ++a)
    for (std::uint32_t b = 0; b < 2; ++b) {
      if (a == 1 && b == 1) continue;
      std::set<std::uint32_t> ys;
      for (std::uint32_t z = 1; z <= 2; ++z) {
        CommonRandomness rnd;
        rnd.components.push_back({"Z", {z}});
        ys.insert(outputs(run_qs2_and_new(a, b, rnd))[0]);
      }
      CHECK(ys == std::set<std::uint32_t>{1, 2});
    }

  CHECK(r.ledger.count_for(3) == 1);
  CHECK(r.rate() == Catch::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
}

TEST_CASE("qsk-sum even: examples") {
  // d=5, K=4, W=(1,2,3,4): F = 10 mod 5 = 0 for any valid Z
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    ProtocolRun r = run_qsk_sum(5, 4, DataMatrix::column(5, {1, 2, 3, 4}),
                                sample_qsk_sum(5, 4, seed));
    CHECK(r.decoded == std::vector<std::uint32_t>{0});
  }

  // d=2, K=2, W=(1,1): Z_1 = 0 forced, transcript [0]
  ProtocolRun r2 =
      run_qsk_sum(2, 2, DataMatrix::column(2, {1, 1}), z_only({0}));
  CHECK(outputs(r2) == std::vector<std::uint32_t>{0});
  CHECK(r2.decoded == std::vector<std::uint32_t>{0});

  // d=3, K=4, W=(1,1,1,1), Z=(2,1): transcript (1,0), F=1
  ProtocolRun r3 =
      run_qsk_sum(3, 4, DataMatrix::column(3, {1, 1, 1, 1}), z_only({2, 1}));
  CHECK(outputs(r3) == std::vector<std::uint32_t>{1, 0});
  CHECK(r3.decoded == std::vector<std::uint32_t>{1});
  CHECK(r3.ledger.count_for(3) == 2);  // K/2 qudits

  // constraint violations rejected
  CHECK_THROWS_AS(
      run_qsk_sum(3, 4, DataMatrix::column(3, {0, 0, 0, 0}), z_only({1, 1})),
      qmac::ConfigError);
  CHECK_THROWS_AS(run_qsk_sum_even(3, 3, DataMatrix::column(3, {0, 0, 0}),
                                   z_only({0, 0, 0})),
                  qmac::ConfigError);
}

TEST_CASE("qsk-sum odd: examples") {
  // d=2, K=3, W(.,1)=(1,0,1), W(.,2)=(0,1,1), Z_0=0 -> F=(0,0)
  DataMatrix w1(3, 2, 2, {1, 0, 0, 1, 1, 1});  // user-major (k,l)
  ProtocolRun r = run_qsk_sum(2, 3, w1, z_only({0, 0, 0}));
  CHECK(r.decoded == std::vector<std::uint32_t>{0, 0});
  CHECK(r.ledger.count_for(2) == 3);  // K qudits for two instances

  // d=3, K=3, W(.,1)=(1,1,1), W(.,2)=(2,2,2), Z_0=1:
  // Y_1=1, Y_2=1, Y_3=2, F=(0,0)
  DataMatrix w2(3, 2, 3, {1, 2, 1, 2, 1, 2});
  ProtocolRun r2 = run_qsk_sum(3, 3, w2, z_only({1, 0, 0}));
  CHECK(outputs(r2) == std::vector<std::uint32_t>{1, 1, 2});
  CHECK(r2.decoded == std::vector<std::uint32_t>{0, 0});

  // d=2, K=5: transcript length 5
  DataMatrix w3(5, 2, 2, std::vector<std::uint32_t>(10, 1));
  ProtocolRun r3 = run_qsk_sum(2, 5, w3, sample_qsk_sum(2, 5, 7));
  CHECK(r3.transcript.size() == 5);

  CHECK_THROWS_AS(run_qsk_sum_odd(2, 4, DataMatrix(4, 1, 2, {0, 0, 0, 0}),
                                  z_only({0, 0})),
                  qmac::ConfigError);
}

TEST_CASE("qsk-sum: K=1 pass-through") {
  ProtocolRun r = run_qsk_sum(5, 1, DataMatrix::column(5, {3}), z_only({}));
  CHECK(r.decoded == std::vector<std::uint32_t>{3});
  CHECK(r.transcript.size() == 1);
  CHECK(r.transcript[0].user_b == -1);
  CHECK(r.ledger.count_for(5) == 1);
}

TEST_CASE("qsk-sum: exhaustive correctness at small scale") {
  for (std::uint32_t d = 2; d <= 3; ++d)
    for (std::uint32_t K = 1; K <= 5; ++K) {
      const std::uint32_t L = sum_instances(K);
      const std::uint32_t cells = K * L;
      const std::uint32_t nfree = sum_z_free(K);
      std::uint64_t ndata = 1, nz = 1;
      for (std::uint32_t c = 0; c < cells; ++c) ndata *= d;
      for (std::uint32_t c = 0; c < nfree; ++c) nz *= d;
      for (std::uint64_t di = 0; di < ndata; ++di) {
        std::vector<std::uint32_t> entries(cells);
        std::uint64_t v = di;
        for (std::uint32_t c = 0; c < cells; ++c) {
          entries[c] = std::uint32_t(v % d);
          v /= d;
        }
        DataMatrix w(K, L, d, entries);
        for (std::uint64_t zi = 0; zi < nz; ++zi) {
          std::vector<std::uint32_t> free(nfree);
          std::uint64_t u = zi;
          for (std::uint32_t c = 0; c < nfree; ++c) {
            free[c] = std::uint32_t(u % d);
            u /= d;
          }
          ProtocolRun r =
              run_qsk_sum(d, K, w, z_only(sum_z_from_free(d, K, free)));
          for (std::uint32_t l = 0; l < L; ++l)
            REQUIRE(r.decoded[l] == sum_truth(d, w, l));
        }
      }
    }
}

TEST_CASE("qsk-sum: rate is 2/K in paper accounting") {
  for (std::uint32_t d = 2; d <= 5; ++d)
    for (std::uint32_t K = 2; K <= 5; ++K) {
      const std::uint32_t L = sum_instances(K);
      DataMatrix w(K, L, d, std::vector<std::uint32_t>(std::size_t(K) * L, 0));
      ProtocolRun r = run_qsk_sum(d, K, w, sample_qsk_sum(d, K, 1));
      CHECK(r.ledger.count_for(d) == sum_uses(K));
      CHECK(r.rate() == 2.0 / double(K));
    }
}

TEST_CASE("qsk-prod: examples") {
  FieldSpec f3 = build_field(3, 1);
  ProtocolRun r = run_qsk_prod(f3, 2, DataMatrix::column(3, {2, 2}),
                               sample_qsk_prod(f3, 2, 11));
  CHECK(r.decoded == std::vector<std::uint32_t>{1});  // 4 mod 3

  FieldSpec f4 = build_field(2, 2);
  ProtocolRun r2 = run_qsk_prod(f4, 2, DataMatrix::column(4, {2, 2}),
                                sample_qsk_prod(f4, 2, 5));
  CHECK(r2.decoded == std::vector<std::uint32_t>{3});  // x*x = x+1

  // GF(5), K=3, W=(2,0,3) twice: F=(0,0); the Phase-I sums sweep Z_5\{0}
  FieldSpec f5 = build_field(5, 1);
  DataMatrix w(3, 2, 5, {2, 2, 0, 0, 3, 3});
  std::set<std::uint32_t> phase1_sums;
  for (std::uint32_t rv = 1; rv <= 4; ++rv) {
    ProtocolRun pr = run_qsk_prod(
        f5, 3, w,
        prod_rand({rv, 1}, {0, 0, 0}, {0, 0, 0}, {1, 1, 1, 1, 1, 1}));
    CHECK(pr.decoded == std::vector<std::uint32_t>{0, 0});
    std::uint32_t f_i[2];
    auto y = outputs(pr);
    sum_scheme_decode(5, 3, y.data(), f_i);
    phase1_sums.insert(f_i[0]);
  }
  CHECK(phase1_sums == std::set<std::uint32_t>{1, 2, 3, 4});
}

TEST_CASE("qsk-prod: exhaustive correctness at small scale") {
  for (auto [p, rr] : std::vector<std::pair<std::uint32_t, std::uint32_t>>{
           {2, 1}, {3, 1}, {2, 2}, {5, 1}}) {
    FieldSpec f = build_field(p, rr);
    const std::uint32_t d = f.order();
    for (std::uint32_t K = 2; K <= 3; ++K) {
      const ProdShape s = ProdShape::of(f, K);
      const std::uint32_t cells = K * s.L;
      std::uint64_t ndata = 1;
      for (std::uint32_t c = 0; c < cells; ++c) ndata *= d;
      for (std::uint64_t di = 0; di < ndata; ++di) {
        std::vector<std::uint32_t> entries(cells);
        std::uint64_t v = di;
        for (std::uint32_t c = 0; c < cells; ++c) {
          entries[c] = std::uint32_t(v % d);
          v /= d;
        }
        DataMatrix w(K, s.L, d, entries);
        // a few sampled randomness draws per data point
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
          ProtocolRun run =
              run_qsk_prod(f, K, w, sample_qsk_prod(f, K, seed * 977 + di));
          for (std::uint32_t l = 0; l < s.L; ++l) {
            std::uint32_t truth = 1;
            for (std::uint32_t k = 0; k < K; ++k)
              truth = f.mul_index(truth, w.at(k, l));
            REQUIRE(run.decoded[l] == truth);
          }
        }
      }
    }
  }
}

TEST_CASE("qsk-prod: ledger matches K/2 log p + K/2 log(d-1) per computation") {
  for (auto [p, rr] : std::vector<std::pair<std::uint32_t, std::uint32_t>>{
           {2, 1}, {3, 1}, {2, 2}, {5, 1}, {7, 1}, {2, 3}, {3, 2}}) {
    FieldSpec f = build_field(p, rr);
    const std::uint32_t d = f.order();
    for (std::uint32_t K = 2; K <= 3; ++K) {
      const ProdShape s = ProdShape::of(f, K);
      DataMatrix w(K, s.L, d,
                   std::vector<std::uint32_t>(std::size_t(K) * s.L, 1));
      ProtocolRun run = run_qsk_prod(f, K, w, sample_qsk_prod(f, K, 3));
      std::map<std::uint32_t, std::uint64_t> want_counts;
      want_counts[s.p] += sum_uses(K);
      if (s.phase2) want_counts[s.m] += sum_uses(K);  // may collide with p
      for (auto [dim, n] : want_counts) CHECK(run.ledger.count_for(dim) == n);
      CHECK(run.ledger.total_uses() == sum_uses(K) * (s.phase2 ? 2 : 1));
      const double want =
          (2.0 / K) / (std::log(double(s.p)) / std::log(double(d)) +
                       (d > 2 ? std::log(double(d - 1)) / std::log(double(d))
                              : 0.0));
      CHECK(run.rate() == Catch::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("qsk-prod: zero inputs leave the Phase-II group element uniform") {
  FieldSpec f4 = build_field(2, 2);
  // K=2, W=(0, 2): enumerate the decoy for user 0 and Z^II
  std::map<std::uint32_t, int> counts;
  for (std::uint32_t wt0 = 1; wt0 < 4; ++wt0)
    for (std::uint32_t wt1 = 1; wt1 < 4; ++wt1) {
      ProtocolRun run = run_qsk_prod(f4, 2, DataMatrix::column(4, {0, 2}),
                                     prod_rand({1}, {0}, {0}, {wt0, wt1}));
      CHECK(run.decoded == std::vector<std::uint32_t>{0});
      auto y = outputs(run);
      std::uint32_t s;
      sum_scheme_decode(3, 2, y.data() + 1, &s);
      counts[f4.exp_index(s)]++;
    }
  REQUIRE(counts.size() == 3);  // all of F_4^x
  for (auto& [elem, n] : counts) CHECK(n == 3);
}

TEST_CASE("qsk-and equals logical AND and matches qs2-and-new for K=2") {
  ProtocolRun r = run_qsk_and(3, DataMatrix(3, 2, 2, {1, 1, 1, 1, 1, 1}),
                              sample_qsk_prod(build_field(2, 1), 3, 2));
  CHECK(r.decoded == std::vector<std::uint32_t>{1, 1});
  ProtocolRun r2 = run_qsk_and(3, DataMatrix(3, 2, 2, {1, 1, 0, 0, 1, 1}),
                               sample_qsk_prod(build_field(2, 1), 3, 2));
  CHECK(r2.decoded == std::vector<std::uint32_t>{0, 0});

  // K=2: identical transcript, decode, and rate to qs2-and-new, for every
  // input pair and every shared-randomness value (Z = R in {1,2})
  for (std::uint32_t a = 0; a < 2; ++a)
    for (std::uint32_t b = 0; b < 2; ++b)
      for (std::uint32_t z = 1; z <= 2; ++z) {
        CommonRandomness rz;
        rz.components.push_back({"Z", {z}});
        ProtocolRun lhs = run_qs2_and_new(a, b, rz);
        ProtocolRun rhs = run_qsk_and(2, DataMatrix::column(2, {a, b}),
                                      prod_rand({z}, {0}, {}, {1, 1}));
        REQUIRE(outputs(lhs) == outputs(rhs));
        REQUIRE(lhs.decoded == rhs.decoded);
        REQUIRE(lhs.rate() == rhs.rate());
      }
}

TEST_CASE("dot-product demo") {
  CommonRandomness r1;
  r1.components.push_back({"R", {1}});
  ProtocolRun r = run_dot_demo(2, 2, r1);  // A=[1,0], B=[1,0]
  CHECK(outputs(r) == std::vector<std::uint32_t>{10});
  CHECK(r.decoded == std::vector<std::uint32_t>{1});

  ProtocolRun r2 = run_dot_demo(3, 3, r1);  // A=[1,1], B=[1,1]: 0+4=4
  CHECK(outputs(r2) == std::vector<std::uint32_t>{4});
  CHECK(r2.decoded == std::vector<std::uint32_t>{0});

  CHECK(r.rate() == Catch::Approx(1.0 / std::log2(11.0)).epsilon(1e-12));

  // exhaustive: decode equals the dot product; Y lands in S_F
  const std::set<std::uint32_t> s0(kDotS0.begin(), kDotS0.end());
  const std::set<std::uint32_t> s1(kDotS1.begin(), kDotS1.end());
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = 0; b < 4; ++b)
      for (std::uint32_t rv : kDotMask) {
        CommonRandomness rnd;
        rnd.components.push_back({"R", {rv}});
        ProtocolRun run = run_dot_demo(a, b, rnd);
        const std::uint32_t truth = dot_demo_truth(a, b);
        REQUIRE(run.decoded[0] == truth);
        REQUIRE((truth == 1 ? s1 : s0).count(outputs(run)[0]) == 1);
      }
}

TEST_CASE("broken variants behave as designed") {
  // zeroed randomness still decodes correctly (the flaw is secrecy, not
  // correctness)
  ProtocolRun r =
      run_broken_qsk_sum(2, 4, DataMatrix::column(2, {1, 0, 1, 0}));
  CHECK(r.decoded == std::vector<std::uint32_t>{0});

  // the corrupted decoder is off by one
  ProtocolRun r2 = run_corrupt_decode_qsk_sum(
      3, 2, DataMatrix::column(3, {1, 1}), z_only({0}));
  CHECK(r2.decoded == std::vector<std::uint32_t>{0});  // true F = 2
}

TEST_CASE("protocol runs are deterministic and mode-equivalent") {
  DataMatrix w(3, 2, 3, {1, 2, 0, 1, 2, 2});
  CommonRandomness z = sample_qsk_sum(3, 3, 42);
  ProtocolRun a = run_qsk_sum(3, 3, w, z);
  ProtocolRun b = run_qsk_sum(3, 3, w, z);
  CHECK(a.transcript == b.transcript);
  CHECK(a.decoded == b.decoded);

  ProtocolRun q = run_qsk_sum(3, 3, w, z, SimMode::kQuantumVerified,
                              /*allow_padding=*/true);
  CHECK(q.transcript == a.transcript);
  CHECK(q.decoded == a.decoded);
  CHECK(q.paper_rate_divergent);       // rows 1-3 pair three distinct pairs
  CHECK(q.physical_qudits == 3 + 3);   // one padded Bell pair per lone use

  // without padding the odd-K scheme cannot close a quantum session
  CHECK_THROWS_AS(run_qsk_sum(3, 3, w, z, SimMode::kQuantumVerified),
                  qmac::UnpairedUseError);

  // even K pairs nothing within one run either (one use per pair)
  ProtocolRun qe = run_qsk_sum(3, 4, DataMatrix::column(3, {1, 1, 1, 1}),
                               z_only({2, 1}), SimMode::kQuantumVerified, true);
  CHECK(outputs(qe) == std::vector<std::uint32_t>{1, 0});

  // the cited QS2-AND is exactly one Bell pair, no padding needed
  CommonRandomness z3;
  z3.components.push_back({"Z", {3}});
  ProtocolRun qc = run_qs2_and_cited(1, 0, z3, SimMode::kQuantumVerified);
  CHECK_FALSE(qc.paper_rate_divergent);
  CHECK(qc.physical_qudits == 2);
}

TEST_CASE("qsk_sum_batch shapes") {
  std::vector<std::vector<std::uint32_t>> six(6, {1, 2, 0, 1});
  CHECK(qsk_sum_batch(3, 4, six, 9).size() == 6);

  std::vector<std::vector<std::uint32_t>> six3(6, {1, 2, 0});
  auto runs = qsk_sum_batch(3, 3, six3, 9);
  CHECK(runs.size() == 3);
  for (const auto& r : runs) CHECK(r.L == 2);

  std::vector<std::vector<std::uint32_t>> five(5, {1, 2, 0});
  CHECK_THROWS_AS(qsk_sum_batch(3, 3, five, 9), qmac::ConfigError);

  std::vector<std::vector<std::uint32_t>> one(4, {2});
  CHECK(qsk_sum_batch(5, 1, one, 9).size() == 4);
}
