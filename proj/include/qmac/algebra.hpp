// SPDX-License-Identifier: Apache-2.0
//
// Exact modular and finite-field arithmetic at desk scale: Z_d elements,
// GF(p^r) construction with a fixed generator, and the discrete-log
// isomorphism F_d^x -> Z_{d-1} used to turn products into sums.
#pragma once

#include <cstdint>
#include <vector>

#include "qmac/errors.hpp"

namespace qmac::algebra {

// ---------------------------------------------------------------------------
// Z_d
// ---------------------------------------------------------------------------

inline std::uint32_t add_mod(std::uint32_t a, std::uint32_t b, std::uint32_t m) {
  std::uint32_t s = a + b;
  return s >= m ? s - m : s;
}

inline std::uint32_t sub_mod(std::uint32_t a, std::uint32_t b, std::uint32_t m) {
  return a >= b ? a - b : a + m - b;
}

inline std::uint32_t neg_mod(std::uint32_t a, std::uint32_t m) {
  return a == 0 ? 0 : m - a;
}

inline std::uint32_t mul_mod(std::uint32_t a, std::uint32_t b, std::uint32_t m) {
  return static_cast<std::uint32_t>((std::uint64_t(a) * b) % m);
}

// One residue together with its modulus.  Protocol alphabets always have
// modulus >= 2; modulus 1 (the trivial ring, every value 0) is allowed so
// that dlog over GF(2) has a home in Z_{d-1} = Z_1.
struct Zmod {
  std::uint32_t value = 0;
  std::uint32_t modulus = 1;

  Zmod() = default;
  Zmod(std::uint32_t v, std::uint32_t m) : value(v), modulus(m) {
    if (m < 1) throw ConfigError("Zmod: modulus must be >= 1");
    if (v >= m) throw ConfigError("Zmod: value out of range");
  }

  // Reduces any integer (possibly negative) into [0, m).
  static Zmod reduce(std::int64_t v, std::uint32_t m) {
    if (m < 1) throw ConfigError("Zmod: modulus must be >= 1");
    std::int64_t r = v % static_cast<std::int64_t>(m);
    if (r < 0) r += m;
    return Zmod(static_cast<std::uint32_t>(r), m);
  }

  friend bool operator==(const Zmod&, const Zmod&) = default;
};

inline Zmod check_same_modulus(const Zmod& a, const Zmod& b) {
  if (a.modulus != b.modulus) throw ConfigError("Zmod: modulus mismatch");
  return a;
}

inline Zmod operator+(const Zmod& a, const Zmod& b) {
  check_same_modulus(a, b);
  return Zmod(add_mod(a.value, b.value, a.modulus), a.modulus);
}

inline Zmod operator-(const Zmod& a, const Zmod& b) {
  check_same_modulus(a, b);
  return Zmod(sub_mod(a.value, b.value, a.modulus), a.modulus);
}

inline Zmod operator-(const Zmod& a) {
  return Zmod(neg_mod(a.value, a.modulus), a.modulus);
}

inline Zmod operator*(const Zmod& a, const Zmod& b) {
  check_same_modulus(a, b);
  return Zmod(mul_mod(a.value, b.value, a.modulus), a.modulus);
}

// ---------------------------------------------------------------------------
// Primes
// ---------------------------------------------------------------------------

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t q = 3; q * q <= n; q += 2)
    if (n % q == 0) return false;
  return true;
}

// Smallest prime p with K < p < 2K.  Existence for K >= 2 is the
// Bertrand-Chebyshev theorem; picking the smallest minimizes log_d(p).
inline std::uint32_t bertrand_prime(std::uint32_t k) {
  if (k < 2) throw ConfigError("bertrand_prime: K must be >= 2");
  for (std::uint32_t p = k + 1; p < 2 * k; ++p)
    if (is_prime(p)) return p;
  throw InternalError("bertrand_prime: no prime in (K, 2K)");
}

// ---------------------------------------------------------------------------
// GF(p^r)
// ---------------------------------------------------------------------------

// Elements are indexed 0..d-1; index = sum coeff_i * p^i where coeff_i is the
// coefficient of x^i in the polynomial representation.  Index order is the
// canonical element order everywhere (degree-major lexicographic).
class FieldSpec;

struct FieldElement {
  std::uint32_t index = 0;
  const FieldSpec* spec = nullptr;

  friend bool operator==(const FieldElement&, const FieldElement&) = default;
};

class FieldSpec {
 public:
  static constexpr std::uint32_t kDefaultOrderLimit = 4096;

  // Deterministic construction: the lexicographically smallest monic
  // irreducible polynomial and the smallest generator in index order.
  static FieldSpec build(std::uint32_t p, std::uint32_t r,
                         std::uint32_t order_limit = kDefaultOrderLimit) {
    if (!is_prime(p)) throw ConfigError("build_field: p is not prime");
    if (r < 1) throw ConfigError("build_field: r must be >= 1");
    std::uint64_t d = 1;
    for (std::uint32_t i = 0; i < r; ++i) {
      d *= p;
      if (d > order_limit)
        throw ConfigError("build_field: p^r exceeds the configured limit");
    }
    FieldSpec f;
    f.p_ = p;
    f.r_ = r;
    f.d_ = static_cast<std::uint32_t>(d);
    f.find_irreducible();
    f.find_generator();
    f.build_dlog_tables();
    return f;
  }

  std::uint32_t characteristic() const { return p_; }
  std::uint32_t extension_degree() const { return r_; }
  std::uint32_t order() const { return d_; }

  // Non-leading coefficients of the monic modulus polynomial
  // x^r + c_{r-1} x^{r-1} + ... + c_0, as (c_0, ..., c_{r-1}).
  const std::vector<std::uint32_t>& modulus_polynomial() const { return irred_; }

  FieldElement element(std::uint32_t index) const {
    if (index >= d_) throw ConfigError("FieldSpec: element index out of range");
    return FieldElement{index, this};
  }
  FieldElement zero() const { return FieldElement{0, this}; }
  FieldElement one() const { return FieldElement{1, this}; }
  FieldElement generator() const { return FieldElement{gen_, this}; }

  std::vector<std::uint32_t> coefficients(std::uint32_t index) const {
    std::vector<std::uint32_t> c(r_);
    for (std::uint32_t i = 0; i < r_; ++i) {
      c[i] = index % p_;
      index /= p_;
    }
    return c;
  }

  // Index-level arithmetic (hot paths work on raw indices).
  std::uint32_t add_index(std::uint32_t a, std::uint32_t b) const {
    std::uint32_t out = 0, w = 1;
    for (std::uint32_t i = 0; i < r_; ++i) {
      out += add_mod(a % p_, b % p_, p_) * w;
      a /= p_;
      b /= p_;
      w *= p_;
    }
    return out;
  }

  std::uint32_t neg_index(std::uint32_t a) const {
    std::uint32_t out = 0, w = 1;
    for (std::uint32_t i = 0; i < r_; ++i) {
      out += neg_mod(a % p_, p_) * w;
      a /= p_;
      w *= p_;
    }
    return out;
  }

  std::uint32_t mul_index(std::uint32_t a, std::uint32_t b) const {
    // Schoolbook product then reduction by the monic modulus polynomial.
    std::vector<std::uint32_t> ca = coefficients(a), cb = coefficients(b);
    std::vector<std::uint32_t> prod(2 * r_ - 1, 0);
    for (std::uint32_t i = 0; i < r_; ++i) {
      if (ca[i] == 0) continue;
      for (std::uint32_t j = 0; j < r_; ++j)
        prod[i + j] = (prod[i + j] + std::uint64_t(ca[i]) * cb[j]) % p_;
    }
    for (std::uint32_t deg = 2 * r_ - 2; deg >= r_; --deg) {
      std::uint32_t lead = prod[deg];
      if (lead != 0) {
        prod[deg] = 0;
        // x^deg = -(sum_i c_i x^{deg-r+i})
        for (std::uint32_t i = 0; i < r_; ++i)
          prod[deg - r_ + i] =
              sub_mod(prod[deg - r_ + i], mul_mod(lead, irred_[i], p_), p_);
      }
      if (deg == r_) break;
    }
    std::uint32_t out = 0, w = 1;
    for (std::uint32_t i = 0; i < r_; ++i) {
      out += prod[i] * w;
      w *= p_;
    }
    return out;
  }

  std::uint32_t pow_index(std::uint32_t a, std::uint64_t e) const {
    std::uint32_t acc = 1;
    while (e > 0) {
      if (e & 1) acc = mul_index(acc, a);
      a = mul_index(a, a);
      e >>= 1;
    }
    return acc;
  }

  // Discrete log of a nonzero element, in Z_{d-1}.
  std::uint32_t dlog_index(std::uint32_t a) const {
    if (a == 0) throw ConfigError("dlog: zero has no discrete log");
    return dlog_[a];
  }

  // g^e for 0 <= e < d-1 (for GF(2) the exponent group is Z_1 = {0}).
  std::uint32_t exp_index(std::uint32_t e) const {
    if (e >= group_order()) throw ConfigError("dlog_inverse: exponent out of range");
    return exp_[e];
  }

  std::uint32_t inv_index(std::uint32_t a) const {
    if (a == 0) throw ConfigError("field_inv: zero is not invertible");
    std::uint32_t e = dlog_[a];
    return exp_[e == 0 ? 0 : group_order() - e];
  }

  std::uint32_t group_order() const { return d_ - 1 == 0 ? 1 : d_ - 1; }

  friend bool operator==(const FieldSpec& a, const FieldSpec& b) {
    return a.p_ == b.p_ && a.r_ == b.r_ && a.irred_ == b.irred_ &&
           a.gen_ == b.gen_;
  }

 private:
  // Divisibility test of the monic polynomial with non-leading coefficients
  // `poly` (degree r_) by the monic polynomial `div` (degree deg, non-leading
  // coefficients in div[0..deg-1]).
  bool divisible_by(const std::vector<std::uint32_t>& poly,
                    const std::vector<std::uint32_t>& div,
                    std::uint32_t deg) const {
    std::vector<std::uint32_t> rem(poly);
    rem.push_back(1);  // leading coefficient of the degree-r_ monic
    for (std::uint32_t top = r_; top >= deg; --top) {
      std::uint32_t lead = rem[top];
      if (lead != 0) {
        rem[top] = 0;
        for (std::uint32_t i = 0; i < deg; ++i)
          rem[top - deg + i] = sub_mod(rem[top - deg + i],
                                       mul_mod(lead, div[i], p_), p_);
      }
      if (top == deg) break;
    }
    for (std::uint32_t i = 0; i < deg; ++i)
      if (rem[i] != 0) return false;
    return true;
  }

  void find_irreducible() {
    irred_.assign(r_, 0);
    if (r_ == 1) return;  // modulus x; elements are constants mod p
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < r_; ++i) total *= p_;
    for (std::uint64_t t = 0; t < total; ++t) {
      std::uint64_t v = t;
      for (std::uint32_t i = 0; i < r_; ++i) {
        irred_[i] = static_cast<std::uint32_t>(v % p_);
        v /= p_;
      }
      if (is_irreducible()) return;
    }
    throw InternalError("build_field: no irreducible polynomial found");
  }

  bool is_irreducible() const {
    // Trial division by every monic polynomial of degree 1..r/2.
    for (std::uint32_t deg = 1; deg <= r_ / 2; ++deg) {
      std::uint64_t total = 1;
      for (std::uint32_t i = 0; i < deg; ++i) total *= p_;
      std::vector<std::uint32_t> div(deg);
      for (std::uint64_t t = 0; t < total; ++t) {
        std::uint64_t v = t;
        for (std::uint32_t i = 0; i < deg; ++i) {
          div[i] = static_cast<std::uint32_t>(v % p_);
          v /= p_;
        }
        if (divisible_by(irred_, div, deg)) return false;
      }
    }
    return true;
  }

  void find_generator() {
    const std::uint32_t n = group_order();
    if (n == 1) {
      gen_ = 1;
      return;
    }
    std::vector<std::uint32_t> prime_factors;
    std::uint32_t m = n;
    for (std::uint32_t q = 2; q * q <= m; ++q) {
      if (m % q == 0) {
        prime_factors.push_back(q);
        while (m % q == 0) m /= q;
      }
    }
    if (m > 1) prime_factors.push_back(m);
    for (std::uint32_t e = 1; e < d_; ++e) {
      bool primitive = true;
      for (std::uint32_t q : prime_factors) {
        if (pow_index(e, n / q) == 1) {
          primitive = false;
          break;
        }
      }
      if (primitive) {
        gen_ = e;
        return;
      }
    }
    throw InternalError("build_field: no generator found");
  }

  void build_dlog_tables() {
    const std::uint32_t n = group_order();
    dlog_.assign(d_, 0);
    exp_.assign(n, 0);
    std::vector<bool> seen(d_, false);
    std::uint32_t cur = 1;
    for (std::uint32_t e = 0; e < n; ++e) {
      if (seen[cur]) throw InternalError("build_field: generator order too small");
      seen[cur] = true;
      dlog_[cur] = e;
      exp_[e] = cur;
      cur = mul_index(cur, gen_);
    }
    if (cur != 1) throw InternalError("build_field: generator order mismatch");
  }

  std::uint32_t p_ = 0, r_ = 0, d_ = 0, gen_ = 1;
  std::vector<std::uint32_t> irred_;  // c_0..c_{r-1} of the monic modulus
  std::vector<std::uint32_t> dlog_;   // nonzero element index -> exponent
  std::vector<std::uint32_t> exp_;    // exponent -> element index
};

inline FieldSpec build_field(std::uint32_t p, std::uint32_t r,
                             std::uint32_t order_limit = FieldSpec::kDefaultOrderLimit) {
  return FieldSpec::build(p, r, order_limit);
}

inline const FieldSpec& check_same_spec(const FieldElement& a, const FieldElement& b) {
  if (a.spec == nullptr || b.spec == nullptr)
    throw ConfigError("FieldElement: unbound element");
  if (!(*a.spec == *b.spec)) throw ConfigError("FieldElement: field spec mismatch");
  return *a.spec;
}

inline FieldElement field_add(const FieldElement& a, const FieldElement& b) {
  const FieldSpec& f = check_same_spec(a, b);
  return FieldElement{f.add_index(a.index, b.index), &f};
}

inline FieldElement field_neg(const FieldElement& a) {
  return FieldElement{a.spec->neg_index(a.index), a.spec};
}

inline FieldElement field_mul(const FieldElement& a, const FieldElement& b) {
  const FieldSpec& f = check_same_spec(a, b);
  return FieldElement{f.mul_index(a.index, b.index), &f};
}

inline FieldElement field_inv(const FieldElement& a) {
  return FieldElement{a.spec->inv_index(a.index), a.spec};
}

// The isomorphism F_d^x -> Z_{d-1}: dlog(u) + dlog(v) = dlog(uv).
inline Zmod dlog(const FieldSpec& f, const FieldElement& u) {
  if (u.spec == nullptr || !(*u.spec == f))
    throw ConfigError("dlog: element not in this field");
  return Zmod(f.dlog_index(u.index), f.group_order());
}

inline FieldElement dlog_inverse(const FieldSpec& f, const Zmod& e) {
  if (e.modulus != f.group_order())
    throw ConfigError("dlog_inverse: exponent has wrong modulus");
  return FieldElement{f.exp_index(e.value), &f};
}

inline std::uint32_t indicator(const FieldElement& w) { return w.index != 0 ? 1 : 0; }
inline std::uint32_t indicator(std::uint32_t w) { return w != 0 ? 1 : 0; }

}  // namespace qmac::algebra
