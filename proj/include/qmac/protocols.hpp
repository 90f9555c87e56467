// SPDX-License-Identifier: Apache-2.0
//
// The five protocol constructions: cited and new QS2-AND, QSK-Sum (even and
// odd user counts), QSK-Prod with its two phases, and the dot-product demo,
// plus deliberately broken variants for the checkers to reject.  Protocol
// logic is templated on a channel executor so the recording session and the
// exhaustive-verification fast path share one implementation.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qmac/algebra.hpp"
#include "qmac/channel.hpp"
#include "qmac/errors.hpp"
#include "qmac/rng.hpp"

namespace qmac::protocols {

using algebra::add_mod;
using algebra::neg_mod;
using algebra::sub_mod;

// ---------------------------------------------------------------------------
// Data and randomness carriers
// ---------------------------------------------------------------------------

// K users by L instances, user-major storage; entries are alphabet indices
// (residues for Z_d, element indices for a field).
struct DataMatrix {
  std::uint32_t K = 0;
  std::uint32_t L = 0;
  std::uint32_t alphabet = 0;
  std::vector<std::uint32_t> entries;

  DataMatrix() = default;
  DataMatrix(std::uint32_t k, std::uint32_t l, std::uint32_t alpha,
             std::vector<std::uint32_t> e)
      : K(k), L(l), alphabet(alpha), entries(std::move(e)) {
    if (entries.size() != std::size_t(K) * L)
      throw ConfigError("DataMatrix: entry count mismatch");
    for (std::uint32_t v : entries)
      if (v >= alphabet) throw ConfigError("DataMatrix: entry out of alphabet");
  }

  // Single-instance convenience (L=1).
  static DataMatrix column(std::uint32_t alpha, std::vector<std::uint32_t> w) {
    const std::uint32_t k = std::uint32_t(w.size());
    return DataMatrix(k, 1, alpha, std::move(w));
  }

  std::uint32_t at(std::uint32_t k, std::uint32_t l) const {
    return entries[std::size_t(k) * L + l];
  }

  friend bool operator==(const DataMatrix&, const DataMatrix&) = default;
};

struct CommonRandomness {
  std::uint64_t seed = 0;
  bool seeded = false;
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> components;

  const std::vector<std::uint32_t>& get(const std::string& name) const {
    for (const auto& [n, v] : components)
      if (n == name) return v;
    throw ConfigError("CommonRandomness: no component named " + name);
  }
  bool has(const std::string& name) const {
    for (const auto& [n, v] : components)
      if (n == name) return true;
    return false;
  }

  friend bool operator==(const CommonRandomness&, const CommonRandomness&) = default;
};

// One finished protocol execution: inputs, randomness, everything the server
// saw, the book cost, and the decoded result.
struct ProtocolRun {
  std::string protocol;
  std::uint32_t d_ref = 2;  // rate reference dimension
  std::uint32_t K = 0;
  std::uint32_t L = 0;
  DataMatrix data;
  CommonRandomness randomness;
  std::vector<channel::ChannelUse> transcript;
  channel::CostLedger ledger;
  std::uint64_t physical_qudits = 0;
  bool paper_rate_divergent = false;
  std::vector<std::uint32_t> decoded;
  channel::SimMode mode = channel::SimMode::kAbstract;

  double rate() const { return channel::ledger_rate(ledger, L, d_ref); }
};

// ---------------------------------------------------------------------------
// Channel executors
// ---------------------------------------------------------------------------

// Wraps a ChannelSession for ProtocolRun production.
struct SessionChan {
  channel::ChannelSession& session;
  std::uint32_t use(int ua, int ub, std::uint32_t d, std::uint32_t a,
                    std::uint32_t b) {
    return session.use(ua, ub, d, a, b);
  }
  std::uint32_t direct(int u, std::uint32_t d, std::uint32_t w) {
    return session.direct(u, d, w);
  }
};

// Append-only output buffer for enumeration loops; inputs are trusted to be
// reduced already.
struct BufferChan {
  std::uint32_t* out;
  std::size_t n = 0;
  std::uint32_t use(int, int, std::uint32_t d, std::uint32_t a, std::uint32_t b) {
    std::uint32_t s = a + b;
    if (s >= d) s -= d;
    out[n++] = s;
    return s;
  }
  std::uint32_t direct(int, std::uint32_t, std::uint32_t w) {
    out[n++] = w;
    return w;
  }
};

// ---------------------------------------------------------------------------
// QSK-Sum scheme core (shared by QSK-Prod phases)
// ---------------------------------------------------------------------------
//
// K even: user pairs (2i-1, 2i) send W_{2i-1}+W_{2i}+Z_i in one use each,
// with Z_1+...+Z_{K/2} = 0; one instance per run.  K odd: the first three
// users share three uses that couple two data instances through Z_0, the
// remaining pairs use the channel twice (once per instance); two instances
// per run with Z_1(l)+...+Z_{(K-1)/2}(l) = 0.  K=1 is a direct send.
//
// Full randomness layout ("Z" component):
//   even K: [Z_1, ..., Z_{K/2}]
//   odd K:  [Z_0, Z_1(1), Z_1(2), ..., Z_m(1), Z_m(2)], m = (K-1)/2
//   K = 1:  []

inline std::uint32_t sum_instances(std::uint32_t K) {
  if (K < 1) throw ConfigError("qsk_sum: K must be >= 1");
  return (K >= 3 && K % 2 == 1) ? 2 : 1;
}

inline std::uint32_t sum_uses(std::uint32_t K) {
  if (K == 1) return 1;
  return K % 2 == 0 ? K / 2 : K;
}

inline std::uint32_t sum_z_len(std::uint32_t K) {
  if (K == 1) return 0;
  return K % 2 == 0 ? K / 2 : K;  // odd: 1 + 2m = K
}

inline std::uint32_t sum_z_free(std::uint32_t K) {
  if (K <= 2) return 0;
  return K % 2 == 0 ? K / 2 - 1 : K - 2;
}

inline void validate_sum_randomness(std::uint32_t d, std::uint32_t K,
                                    const std::vector<std::uint32_t>& z) {
  if (z.size() != sum_z_len(K))
    throw ConfigError("qsk_sum: randomness length mismatch");
  for (std::uint32_t v : z)
    if (v >= d) throw ConfigError("qsk_sum: randomness out of range");
  if (K == 1) return;
  if (K % 2 == 0) {
    std::uint32_t s = 0;
    for (std::uint32_t v : z) s = add_mod(s, v, d);
    if (s != 0) throw ConfigError("qsk_sum: Z_1+...+Z_{K/2} must be 0");
  } else {
    for (std::uint32_t l = 0; l < 2; ++l) {
      std::uint32_t s = 0;
      for (std::uint32_t i = 1; i <= (K - 1) / 2; ++i)
        s = add_mod(s, z[std::size_t(2) * i - 1 + l], d);
      if (s != 0) throw ConfigError("qsk_sum: Z_1(l)+...+Z_m(l) must be 0");
    }
  }
}

// Expands free components (canonical order: even K: Z_2..Z_{K/2};
// odd K: Z_0, then Z_i(1), Z_i(2) for i = 2..m) into the full layout.
// Allocation-free core for enumeration loops.
inline void sum_z_fill(std::uint32_t d, std::uint32_t K,
                       const std::uint32_t* free, std::uint32_t* z) {
  if (K == 1) return;
  if (K % 2 == 0) {
    std::uint32_t s = 0;
    for (std::uint32_t i = 1; i < K / 2; ++i) {
      z[i] = free[i - 1];
      s = add_mod(s, z[i], d);
    }
    z[0] = neg_mod(s, d);
    return;
  }
  z[0] = free[0];  // Z_0
  const std::uint32_t m = (K - 1) / 2;
  for (std::uint32_t l = 0; l < 2; ++l) {
    std::uint32_t s = 0;
    for (std::uint32_t i = 2; i <= m; ++i) {
      z[std::size_t(2) * i - 1 + l] = free[1 + 2 * (i - 2) + l];
      s = add_mod(s, z[std::size_t(2) * i - 1 + l], d);
    }
    z[std::size_t(1) + l] = neg_mod(s, d);  // Z_1(l)
  }
}

inline std::vector<std::uint32_t> sum_z_from_free(
    std::uint32_t d, std::uint32_t K, const std::vector<std::uint32_t>& free) {
  if (free.size() != sum_z_free(K))
    throw ConfigError("qsk_sum: free randomness length mismatch");
  std::vector<std::uint32_t> z(sum_z_len(K), 0);
  sum_z_fill(d, K, free.data(), z.data());
  return z;
}

// W is K x L(K) user-major; z is the full layout; transcript order is
// Y_1..Y_K (odd) or Y_1..Y_{K/2} (even).
template <class Chan>
void sum_scheme_execute(Chan& ch, std::uint32_t d, std::uint32_t K,
                        const std::uint32_t* W, const std::uint32_t* z) {
  if (K == 1) {
    ch.direct(0, d, W[0]);
    return;
  }
  if (K % 2 == 0) {
    for (std::uint32_t i = 0; i < K / 2; ++i)
      ch.use(int(2 * i), int(2 * i + 1), d, add_mod(W[2 * i], z[i], d),
             W[2 * i + 1]);
    return;
  }
  const std::uint32_t m = (K - 1) / 2;
  const auto w = [&](std::uint32_t user, std::uint32_t l) {  // 1-based user
    return W[std::size_t(user - 1) * 2 + l - 1];
  };
  const std::uint32_t z0 = z[0];
  const auto z_i = [&](std::uint32_t i, std::uint32_t l) {  // i in 1..m
    return z[std::size_t(2) * i - 1 + (l - 1)];
  };
  // users 1,2: W_1(1)-W_1(2) and W_2(1)+Z_0+Z_1(1)
  ch.use(0, 1, d, sub_mod(w(1, 1), w(1, 2), d),
         add_mod(w(2, 1), add_mod(z0, z_i(1, 1), d), d));
  // users 2,3: W_2(2)+Z_0+Z_1(2) and W_3(2)-W_3(1)
  ch.use(1, 2, d, add_mod(w(2, 2), add_mod(z0, z_i(1, 2), d), d),
         sub_mod(w(3, 2), w(3, 1), d));
  // users 1,3: W_1(2) and W_3(1)-Z_0
  ch.use(0, 2, d, w(1, 2), sub_mod(w(3, 1), z0, d));
  // users 2i, 2i+1 carry instance 1 then instance 2, for i = 2..m
  for (std::uint32_t i = 2; i <= m; ++i)
    ch.use(int(2 * i - 1), int(2 * i), d, add_mod(w(2 * i, 1), z_i(i, 1), d),
           w(2 * i + 1, 1));
  for (std::uint32_t i = 2; i <= m; ++i)
    ch.use(int(2 * i - 1), int(2 * i), d, add_mod(w(2 * i, 2), z_i(i, 2), d),
           w(2 * i + 1, 2));
}

// Recovers F^(L) from the channel outputs alone.
inline void sum_scheme_decode(std::uint32_t d, std::uint32_t K,
                              const std::uint32_t* y, std::uint32_t* f_out) {
  if (K == 1) {
    f_out[0] = y[0];
    return;
  }
  if (K % 2 == 0) {
    std::uint32_t s = 0;
    for (std::uint32_t i = 0; i < K / 2; ++i) s = add_mod(s, y[i], d);
    f_out[0] = s;
    return;
  }
  const std::uint32_t m = (K - 1) / 2;
  std::uint32_t f1 = add_mod(y[0], y[2], d);  // Y_1 + Y_3
  std::uint32_t f2 = add_mod(y[1], y[2], d);  // Y_2 + Y_3
  for (std::uint32_t j = 0; j < m - 1; ++j) {
    f1 = add_mod(f1, y[3 + j], d);
    f2 = add_mod(f2, y[3 + (m - 1) + j], d);
  }
  f_out[0] = f1;
  f_out[1] = f2;
}

// ---------------------------------------------------------------------------
// QS2-AND, cited scheme: one 2-sum over Z_2, three Z-indexed input maps
// ---------------------------------------------------------------------------

template <class Chan>
void qs2_and_cited_execute(Chan& ch, std::uint32_t a, std::uint32_t b,
                           std::uint32_t z) {
  std::uint32_t a1, a2, b1, b2;
  switch (z) {
    case 1: a1 = a; a2 = 0; b1 = 0; b2 = b; break;
    case 2: a1 = 0; a2 = a; b1 = b; b2 = (b + 1) % 2; break;
    case 3: a1 = (a + 1) % 2; a2 = a; b1 = b; b2 = 0; break;
    default: throw ConfigError("qs2_and_cited: Z must be in {1,2,3}");
  }
  ch.use(0, 1, 2, a1, b1);
  ch.use(0, 1, 2, a2, b2);
}

inline std::uint32_t qs2_and_cited_decode(const std::uint32_t* y) {
  return (y[0] == 1 && y[1] == 1) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// QS2-AND, new scheme: one use over Z_3 with inputs Z(1-A), Z(1-B)
// ---------------------------------------------------------------------------

template <class Chan>
void qs2_and_new_execute(Chan& ch, std::uint32_t a, std::uint32_t b,
                         std::uint32_t z) {
  if (z != 1 && z != 2) throw ConfigError("qs2_and_new: Z must be in {1,2}");
  // inputs Z(1-A) and Z(1-B) over Z_3
  ch.use(0, 1, 3, (z * (a == 0 ? 1u : 0u)) % 3, (z * (b == 0 ? 1u : 0u)) % 3);
}

inline std::uint32_t qs2_and_new_decode(const std::uint32_t* y) {
  return y[0] == 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// QSK-Prod: Phase I masks the zero pattern over Z_p (K < p < 2K), Phase II
// sums discrete logs over Z_{d-1}; zero inputs are replaced by uniform
// nonzero decoys so a zero product reveals nothing else.
// ---------------------------------------------------------------------------

struct ProdShape {
  std::uint32_t K = 0, L = 0, d = 0, p = 0, m = 0;  // m = d-1
  bool phase2 = false;                              // skipped when d = 2
  std::uint32_t uses_p = 0, uses_m = 0;

  static ProdShape of(const algebra::FieldSpec& f, std::uint32_t K) {
    if (K < 1) throw ConfigError("qsk_prod: K must be >= 1");
    ProdShape s;
    s.K = K;
    s.L = sum_instances(K);
    s.d = f.order();
    s.m = f.group_order();
    s.p = K >= 2 ? algebra::bertrand_prime(K) : 0;
    s.phase2 = s.d > 2 && K >= 2;
    s.uses_p = K >= 2 ? sum_uses(K) : 1;
    s.uses_m = s.phase2 ? sum_uses(K) : 0;
    return s;
  }
};

// Phase inputs from data and randomness.  W entries are field indices;
// r_vals holds R(1)..R(L) in 1..p-1; wt holds K x L decoy indices in 1..d-1.
inline void prod_phase1_inputs(const algebra::FieldSpec& f, const ProdShape& s,
                               const std::uint32_t* W, const std::uint32_t* r_vals,
                               std::uint32_t* x_out) {
  for (std::uint32_t k = 0; k < s.K; ++k)
    for (std::uint32_t l = 0; l < s.L; ++l)
      x_out[std::size_t(k) * s.L + l] =
          W[std::size_t(k) * s.L + l] != 0
              ? 0
              : r_vals[l];  // R * (1 - 1(W_k)) mod p
  (void)f;
}

inline void prod_phase2_inputs(const algebra::FieldSpec& f, const ProdShape& s,
                               const std::uint32_t* W, const std::uint32_t* wt,
                               std::uint32_t* u_out) {
  for (std::uint32_t k = 0; k < s.K; ++k)
    for (std::uint32_t l = 0; l < s.L; ++l) {
      const std::uint32_t w = W[std::size_t(k) * s.L + l];
      u_out[std::size_t(k) * s.L + l] =
          f.dlog_index(w != 0 ? w : wt[std::size_t(k) * s.L + l]);
    }
}

template <class Chan>
void qsk_prod_execute(Chan& ch, const algebra::FieldSpec& f, const ProdShape& s,
                      const std::uint32_t* W, const std::uint32_t* r_vals,
                      const std::uint32_t* z1, const std::uint32_t* z2,
                      const std::uint32_t* wt) {
  if (s.K == 1) {  // identity: the product of one element is itself
    ch.direct(0, s.d, W[0]);
    return;
  }
  std::vector<std::uint32_t> buf(std::size_t(s.K) * s.L);
  prod_phase1_inputs(f, s, W, r_vals, buf.data());
  sum_scheme_execute(ch, s.p, s.K, buf.data(), z1);
  if (s.phase2) {
    prod_phase2_inputs(f, s, W, wt, buf.data());
    sum_scheme_execute(ch, s.m, s.K, buf.data(), z2);
  }
}

// Decode: F(l) = 0 unless the Phase-I sum is 0, in which case the Phase-II
// sum is a discrete log of the product (for d=2 the product is 1 itself).
inline void qsk_prod_decode(const algebra::FieldSpec& f, const ProdShape& s,
                            const std::uint32_t* y, std::uint32_t* f_out) {
  if (s.K == 1) {
    f_out[0] = y[0];
    return;
  }
  std::array<std::uint32_t, 2> and_sum{}, log_sum{};
  sum_scheme_decode(s.p, s.K, y, and_sum.data());
  if (s.phase2) sum_scheme_decode(s.m, s.K, y + s.uses_p, log_sum.data());
  for (std::uint32_t l = 0; l < s.L; ++l) {
    if (and_sum[l] != 0) {
      f_out[l] = 0;
    } else if (s.phase2) {
      f_out[l] = f.exp_index(log_sum[l]);
    } else {
      f_out[l] = 1;  // d = 2: all inputs nonzero means the product is 1
    }
  }
}

// ---------------------------------------------------------------------------
// Dot-product demo over F_11: fixed expand maps, multiplicative mask R drawn
// from the squares mod 11, one channel use computing R(A'+B').
// ---------------------------------------------------------------------------

inline constexpr std::array<std::uint32_t, 4> kDotMapA = {1, 6, 2, 0};
inline constexpr std::array<std::uint32_t, 4> kDotMapB = {3, 2, 8, 4};
inline constexpr std::array<std::uint32_t, 5> kDotMask = {1, 3, 4, 5, 9};
inline constexpr std::array<std::uint32_t, 5> kDotS0 = {1, 3, 4, 5, 9};
inline constexpr std::array<std::uint32_t, 5> kDotS1 = {2, 6, 7, 8, 10};

template <class Chan>
void dot_demo_execute(Chan& ch, std::uint32_t a, std::uint32_t b,
                      std::uint32_t r) {
  if (a >= 4 || b >= 4) throw ConfigError("dot_demo: inputs are two bits each");
  bool ok = false;
  for (std::uint32_t v : kDotMask) ok = ok || v == r;
  if (!ok) throw ConfigError("dot_demo: R must be one of {1,3,4,5,9}");
  ch.use(0, 1, 11, (r * kDotMapA[a]) % 11, (r * kDotMapB[b]) % 11);
}

inline std::uint32_t dot_demo_decode(const std::uint32_t* y) {
  if (y[0] == 0) throw InternalError("dot_demo: Y = 0 is unreachable");
  for (std::uint32_t v : kDotS1)
    if (v == y[0]) return 1;
  return 0;
}

inline std::uint32_t dot_demo_truth(std::uint32_t a, std::uint32_t b) {
  // a = 2*A1 + A2, b = 2*B1 + B2
  return ((a >> 1) * (b >> 1) + (a & 1) * (b & 1)) % 2;
}

// ---------------------------------------------------------------------------
// Randomness sampling (seeded, deterministic draw order)
// ---------------------------------------------------------------------------

inline CommonRandomness sample_qs2_and_cited(std::uint64_t seed) {
  SeededRng rng(seed);
  CommonRandomness r;
  r.seed = seed;
  r.seeded = true;
  r.components.push_back({"Z", {std::uint32_t(1 + rng.uniform_below(3))}});
  return r;
}

inline CommonRandomness sample_qs2_and_new(std::uint64_t seed) {
  SeededRng rng(seed);
  CommonRandomness r;
  r.seed = seed;
  r.seeded = true;
  r.components.push_back({"Z", {std::uint32_t(1 + rng.uniform_below(2))}});
  return r;
}

inline CommonRandomness sample_qsk_sum(std::uint32_t d, std::uint32_t K,
                                       std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<std::uint32_t> free(sum_z_free(K));
  for (auto& v : free) v = std::uint32_t(rng.uniform_below(d));
  CommonRandomness r;
  r.seed = seed;
  r.seeded = true;
  r.components.push_back({"Z", sum_z_from_free(d, K, free)});
  return r;
}

inline CommonRandomness sample_qsk_prod(const algebra::FieldSpec& f,
                                        std::uint32_t K, std::uint64_t seed) {
  const ProdShape s = ProdShape::of(f, K);
  SeededRng rng(seed);
  CommonRandomness r;
  r.seed = seed;
  r.seeded = true;
  if (K < 2) return r;
  std::vector<std::uint32_t> rv(s.L);
  for (auto& v : rv) v = std::uint32_t(1 + rng.uniform_below(s.p - 1));
  r.components.push_back({"R", std::move(rv)});
  std::vector<std::uint32_t> f1(sum_z_free(K));
  for (auto& v : f1) v = std::uint32_t(rng.uniform_below(s.p));
  r.components.push_back({"ZI", sum_z_from_free(s.p, K, f1)});
  if (s.phase2) {
    std::vector<std::uint32_t> f2(sum_z_free(K));
    for (auto& v : f2) v = std::uint32_t(rng.uniform_below(s.m));
    r.components.push_back({"ZII", sum_z_from_free(s.m, K, f2)});
  }
  std::vector<std::uint32_t> wt(std::size_t(K) * s.L);
  for (auto& v : wt) v = std::uint32_t(1 + rng.uniform_below(s.d - 1));
  r.components.push_back({"WT", std::move(wt)});
  return r;
}

inline CommonRandomness sample_dot_demo(std::uint64_t seed) {
  SeededRng rng(seed);
  CommonRandomness r;
  r.seed = seed;
  r.seeded = true;
  r.components.push_back({"R", {kDotMask[rng.uniform_below(5)]}});
  return r;
}

// ---------------------------------------------------------------------------
// ProtocolRun producers
// ---------------------------------------------------------------------------

namespace detail {

inline ProtocolRun finish(std::string protocol, std::uint32_t d_ref,
                          std::uint32_t K, std::uint32_t L, DataMatrix data,
                          CommonRandomness rand, channel::ChannelSession& s,
                          std::vector<std::uint32_t> decoded) {
  s.close();
  ProtocolRun run;
  run.protocol = std::move(protocol);
  run.d_ref = d_ref;
  run.K = K;
  run.L = L;
  run.data = std::move(data);
  run.randomness = std::move(rand);
  run.transcript = s.transcript();
  run.ledger = s.ledger();
  run.physical_qudits = s.physical_qudits();
  run.paper_rate_divergent = s.paper_rate_divergent();
  run.decoded = std::move(decoded);
  run.mode = s.mode();
  return run;
}

inline std::vector<std::uint32_t> outputs_of(const channel::ChannelSession& s) {
  std::vector<std::uint32_t> y;
  y.reserve(s.transcript().size());
  for (const auto& u : s.transcript()) y.push_back(u.output);
  return y;
}

}  // namespace detail

inline ProtocolRun run_qs2_and_cited(std::uint32_t a, std::uint32_t b,
                                     const CommonRandomness& rand,
                                     channel::SimMode mode = channel::SimMode::kAbstract,
                                     bool allow_padding = false) {
  if (a > 1 || b > 1) throw ConfigError("qs2_and_cited: inputs are bits");
  channel::ChannelSession s(mode, allow_padding);
  SessionChan ch{s};
  qs2_and_cited_execute(ch, a, b, rand.get("Z").at(0));
  auto y = detail::outputs_of(s);
  return detail::finish("qs2-and-cited", 2, 2, 1,
                        DataMatrix(2, 1, 2, {a, b}), rand, s,
                        {qs2_and_cited_decode(y.data())});
}

inline ProtocolRun run_qs2_and_new(std::uint32_t a, std::uint32_t b,
                                   const CommonRandomness& rand,
                                   channel::SimMode mode = channel::SimMode::kAbstract,
                                   bool allow_padding = false) {
  if (a > 1 || b > 1) throw ConfigError("qs2_and_new: inputs are bits");
  channel::ChannelSession s(mode, allow_padding);
  SessionChan ch{s};
  qs2_and_new_execute(ch, a, b, rand.get("Z").at(0));
  auto y = detail::outputs_of(s);
  return detail::finish("qs2-and-new", 2, 2, 1, DataMatrix(2, 1, 2, {a, b}),
                        rand, s, {qs2_and_new_decode(y.data())});
}

inline ProtocolRun run_qsk_sum(std::uint32_t d, std::uint32_t K,
                               const DataMatrix& W, const CommonRandomness& rand,
                               channel::SimMode mode = channel::SimMode::kAbstract,
                               bool allow_padding = false) {
  if (d < 2) throw ConfigError("qsk_sum: d must be >= 2");
  const std::uint32_t L = sum_instances(K);
  if (W.K != K || W.L != L || W.alphabet != d)
    throw ConfigError("qsk_sum: data shape mismatch");
  const auto& z = rand.get("Z");
  validate_sum_randomness(d, K, z);
  channel::ChannelSession s(mode, allow_padding);
  SessionChan ch{s};
  sum_scheme_execute(ch, d, K, W.entries.data(), z.data());
  auto y = detail::outputs_of(s);
  std::vector<std::uint32_t> f(L);
  sum_scheme_decode(d, K, y.data(), f.data());
  return detail::finish("qsk-sum", d, K, L, W, rand, s, std::move(f));
}

inline ProtocolRun run_qsk_sum_even(std::uint32_t d, std::uint32_t K,
                                    const DataMatrix& W,
                                    const CommonRandomness& rand,
                                    channel::SimMode mode = channel::SimMode::kAbstract,
                                    bool allow_padding = false) {
  if (K < 2 || K % 2 != 0) throw ConfigError("qsk_sum_even: K must be even");
  return run_qsk_sum(d, K, W, rand, mode, allow_padding);
}

inline ProtocolRun run_qsk_sum_odd(std::uint32_t d, std::uint32_t K,
                                   const DataMatrix& W,
                                   const CommonRandomness& rand,
                                   channel::SimMode mode = channel::SimMode::kAbstract,
                                   bool allow_padding = false) {
  if (K < 3 || K % 2 != 1)
    throw ConfigError("qsk_sum_odd: K must be odd and >= 3");
  return run_qsk_sum(d, K, W, rand, mode, allow_padding);
}

inline ProtocolRun run_qsk_prod(const algebra::FieldSpec& f, std::uint32_t K,
                                const DataMatrix& W, const CommonRandomness& rand,
                                channel::SimMode mode = channel::SimMode::kAbstract,
                                bool allow_padding = false) {
  const ProdShape shape = ProdShape::of(f, K);
  if (W.K != K || W.L != shape.L || W.alphabet != shape.d)
    throw ConfigError("qsk_prod: data shape mismatch");
  static const std::vector<std::uint32_t> kEmpty;
  const std::uint32_t* rv = nullptr;
  const std::uint32_t* z1 = nullptr;
  const std::uint32_t* z2 = nullptr;
  const std::uint32_t* wt = nullptr;
  if (K >= 2) {
    const auto& r_comp = rand.get("R");
    if (r_comp.size() != shape.L) throw ConfigError("qsk_prod: R length mismatch");
    for (std::uint32_t v : r_comp)
      if (v < 1 || v >= shape.p) throw ConfigError("qsk_prod: R out of Z_p \\ {0}");
    const auto& z1_comp = rand.get("ZI");
    validate_sum_randomness(shape.p, K, z1_comp);
    const auto& z2_comp = shape.phase2 ? rand.get("ZII") : kEmpty;
    if (shape.phase2) validate_sum_randomness(shape.m, K, z2_comp);
    const auto& wt_comp = rand.get("WT");
    if (wt_comp.size() != std::size_t(K) * shape.L)
      throw ConfigError("qsk_prod: WT length mismatch");
    for (std::uint32_t v : wt_comp)
      if (v < 1 || v >= shape.d) throw ConfigError("qsk_prod: WT must be nonzero");
    rv = r_comp.data();
    z1 = z1_comp.data();
    z2 = z2_comp.data();
    wt = wt_comp.data();
  }
  channel::ChannelSession s(mode, allow_padding);
  SessionChan ch{s};
  qsk_prod_execute(ch, f, shape, W.entries.data(), rv, z1, z2, wt);
  auto y = detail::outputs_of(s);
  std::vector<std::uint32_t> out(shape.L);
  qsk_prod_decode(f, shape, y.data(), out.data());
  return detail::finish("qsk-prod", shape.d, K, shape.L, W, rand, s,
                        std::move(out));
}

// QSK-AND is QSK-Prod over GF(2).
inline ProtocolRun run_qsk_and(std::uint32_t K, const DataMatrix& W,
                               const CommonRandomness& rand,
                               channel::SimMode mode = channel::SimMode::kAbstract,
                               bool allow_padding = false) {
  const algebra::FieldSpec f2 = algebra::build_field(2, 1);
  ProtocolRun run = run_qsk_prod(f2, K, W, rand, mode, allow_padding);
  run.protocol = "qsk-and";
  return run;
}

inline ProtocolRun run_dot_demo(std::uint32_t a, std::uint32_t b,
                                const CommonRandomness& rand,
                                channel::SimMode mode = channel::SimMode::kAbstract,
                                bool allow_padding = false) {
  channel::ChannelSession s(mode, allow_padding);
  SessionChan ch{s};
  dot_demo_execute(ch, a, b, rand.get("R").at(0));
  auto y = detail::outputs_of(s);
  return detail::finish("dot-demo", 2, 2, 1, DataMatrix(2, 1, 4, {a, b}), rand,
                        s, {dot_demo_decode(y.data())});
}

// Broken variants the checkers must reject: the first runs the sum scheme
// with all randomness forced to zero, the second corrupts the decode map.
inline ProtocolRun run_broken_qsk_sum(std::uint32_t d, std::uint32_t K,
                                      const DataMatrix& W,
                                      channel::SimMode mode = channel::SimMode::kAbstract) {
  CommonRandomness zeroed;
  zeroed.components.push_back({"Z", std::vector<std::uint32_t>(sum_z_len(K), 0)});
  ProtocolRun run = run_qsk_sum(d, K, W, zeroed, mode);
  run.protocol = "broken-qsk-sum";
  return run;
}

inline ProtocolRun run_corrupt_decode_qsk_sum(std::uint32_t d, std::uint32_t K,
                                              const DataMatrix& W,
                                              const CommonRandomness& rand,
                                              channel::SimMode mode = channel::SimMode::kAbstract) {
  ProtocolRun run = run_qsk_sum(d, K, W, rand, mode);
  run.protocol = "corrupt-decode-qsk-sum";
  for (auto& v : run.decoded) v = add_mod(v, 1, d);  // off-by-one decode bug
  return run;
}

// ---------------------------------------------------------------------------
// Batch orchestration: even K (and K=1) runs one instance per ProtocolRun,
// odd K >= 3 pairs consecutive instances; an odd tail is rejected.
// ---------------------------------------------------------------------------

inline std::vector<ProtocolRun> qsk_sum_batch(
    std::uint32_t d, std::uint32_t K,
    const std::vector<std::vector<std::uint32_t>>& instances,
    std::uint64_t seed, channel::SimMode mode = channel::SimMode::kAbstract,
    bool allow_padding = false) {
  const std::uint32_t L = sum_instances(K);
  if (instances.size() % L != 0)
    throw ConfigError("qsk_sum: odd K needs an even number of instances");
  std::vector<ProtocolRun> runs;
  SeededRng seeder(seed);
  for (std::size_t i = 0; i < instances.size(); i += L) {
    std::vector<std::uint32_t> entries(std::size_t(K) * L);
    for (std::uint32_t l = 0; l < L; ++l) {
      if (instances[i + l].size() != K)
        throw ConfigError("qsk_sum: instance has wrong user count");
      for (std::uint32_t k = 0; k < K; ++k)
        entries[std::size_t(k) * L + l] = instances[i + l][k];
    }
    runs.push_back(run_qsk_sum(d, K, DataMatrix(K, L, d, entries),
                               sample_qsk_sum(d, K, seeder.next_u64()), mode,
                               allow_padding));
  }
  return runs;
}

}  // namespace qmac::protocols
