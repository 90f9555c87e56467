// SPDX-License-Identifier: Apache-2.0
//
// Dense state-vector simulation of small composite qudit systems.  Every
// state reachable in the protocols is pure conditioned on classical values,
// so amplitudes (not density matrices) are enough.  Conventions:
// omega = exp(2*pi*i/d), X|j> = |j+1 mod d>, Z|j> = omega^j |j>, and
// subsystem 0 is the most significant digit of the basis index.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qmac/errors.hpp"

namespace qmac::quditsim {

using Complex = std::complex<double>;

inline constexpr double kTol = 1e-9;

struct BellLabel {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  friend bool operator==(const BellLabel&, const BellLabel&) = default;
};

inline Complex root_of_unity(std::uint32_t d, std::uint64_t exponent) {
  const double angle =
      2.0 * std::numbers::pi * double(exponent % d) / double(d);
  return {std::cos(angle), std::sin(angle)};
}

class PureState {
 public:
  PureState(std::vector<std::uint32_t> dims, std::vector<Complex> amps)
      : dims_(std::move(dims)), amps_(std::move(amps)) {
    std::size_t n = 1;
    for (std::uint32_t d : dims_) {
      if (d < 2) throw ConfigError("PureState: subsystem dimension must be >= 2");
      n *= d;
    }
    if (amps_.size() != n) throw ConfigError("PureState: amplitude length mismatch");
    if (std::abs(squared_norm() - 1.0) > kTol)
      throw ConfigError("PureState: state is not normalized");
  }

  const std::vector<std::uint32_t>& dims() const { return dims_; }
  const std::vector<Complex>& amplitudes() const { return amps_; }
  std::size_t size() const { return amps_.size(); }

  double squared_norm() const {
    double s = 0;
    for (const Complex& a : amps_) s += std::norm(a);
    return s;
  }

  friend Complex inner_product(const PureState& a, const PureState& b) {
    if (a.dims_ != b.dims_) throw ConfigError("inner_product: dimension mismatch");
    Complex s = 0;
    for (std::size_t i = 0; i < a.amps_.size(); ++i)
      s += std::conj(a.amps_[i]) * b.amps_[i];
    return s;
  }

 private:
  std::vector<std::uint32_t> dims_;
  std::vector<Complex> amps_;
};

// A d x d unitary acting on one named subsystem.  Unitarity is checked on
// construction (rows orthonormal within kTol).
struct LocalUnitary {
  std::uint32_t target = 0;
  std::uint32_t dim = 0;
  std::vector<Complex> matrix;  // row-major

  LocalUnitary(std::uint32_t target_, std::uint32_t dim_, std::vector<Complex> m)
      : target(target_), dim(dim_), matrix(std::move(m)) {
    if (matrix.size() != std::size_t(dim) * dim)
      throw ConfigError("LocalUnitary: matrix size mismatch");
    for (std::uint32_t i = 0; i < dim; ++i)
      for (std::uint32_t j = 0; j < dim; ++j) {
        Complex s = 0;
        for (std::uint32_t k = 0; k < dim; ++k)
          s += matrix[i * dim + k] * std::conj(matrix[j * dim + k]);
        const Complex want = i == j ? Complex(1, 0) : Complex(0, 0);
        if (std::abs(s - want) > kTol)
          throw ConfigError("LocalUnitary: matrix is not unitary");
      }
  }
};

// u * v as operators (v acts first), on the same subsystem.
inline LocalUnitary compose(const LocalUnitary& u, const LocalUnitary& v) {
  if (u.dim != v.dim || u.target != v.target)
    throw ConfigError("compose: incompatible unitaries");
  const std::uint32_t d = u.dim;
  std::vector<Complex> m(std::size_t(d) * d, Complex(0, 0));
  for (std::uint32_t i = 0; i < d; ++i)
    for (std::uint32_t k = 0; k < d; ++k) {
      const Complex uik = u.matrix[i * d + k];
      if (uik == Complex(0, 0)) continue;
      for (std::uint32_t j = 0; j < d; ++j)
        m[i * d + j] += uik * v.matrix[k * d + j];
    }
  return LocalUnitary(u.target, d, std::move(m));
}

// X^a: |j> -> |j+a mod d>.
inline LocalUnitary pauli_x(std::uint32_t d, std::int64_t a, std::uint32_t target = 0) {
  std::int64_t shift = a % std::int64_t(d);
  if (shift < 0) shift += d;
  std::vector<Complex> m(std::size_t(d) * d, Complex(0, 0));
  for (std::uint32_t j = 0; j < d; ++j)
    m[std::size_t((j + shift) % d) * d + j] = Complex(1, 0);
  return LocalUnitary(target, d, std::move(m));
}

// Z^b: |j> -> omega^{jb} |j>.
inline LocalUnitary pauli_z(std::uint32_t d, std::int64_t b, std::uint32_t target = 0) {
  std::int64_t ph = b % std::int64_t(d);
  if (ph < 0) ph += d;
  std::vector<Complex> m(std::size_t(d) * d, Complex(0, 0));
  for (std::uint32_t j = 0; j < d; ++j)
    m[std::size_t(j) * d + j] = root_of_unity(d, std::uint64_t(j) * std::uint64_t(ph));
  return LocalUnitary(target, d, std::move(m));
}

// (I x ... x u x ... x I) |state>
inline PureState apply_local(const PureState& state, const LocalUnitary& u) {
  const auto& dims = state.dims();
  if (u.target >= dims.size()) throw ConfigError("apply_local: no such subsystem");
  if (dims[u.target] != u.dim) throw ConfigError("apply_local: dimension mismatch");

  std::size_t post = 1;
  for (std::size_t s = u.target + 1; s < dims.size(); ++s) post *= dims[s];
  std::size_t pre = state.size() / (post * u.dim);

  std::vector<Complex> out(state.size(), Complex(0, 0));
  const auto& in = state.amplitudes();
  std::vector<Complex> col(u.dim);
  for (std::size_t o = 0; o < pre; ++o)
    for (std::size_t inr = 0; inr < post; ++inr) {
      for (std::uint32_t j = 0; j < u.dim; ++j)
        col[j] = in[(o * u.dim + j) * post + inr];
      for (std::uint32_t i = 0; i < u.dim; ++i) {
        Complex s = 0;
        for (std::uint32_t j = 0; j < u.dim; ++j)
          s += u.matrix[i * u.dim + j] * col[j];
        out[(o * u.dim + i) * post + inr] = s;
      }
    }
  return PureState(dims, std::move(out));
}

// |phi^{0,0}> = (1/sqrt d) sum_i |i>|i>
inline PureState bell_pair(std::uint32_t d) {
  if (d < 2) throw ConfigError("bell_pair: d must be >= 2");
  std::vector<Complex> amps(std::size_t(d) * d, Complex(0, 0));
  const double a = 1.0 / std::sqrt(double(d));
  for (std::uint32_t i = 0; i < d; ++i) amps[std::size_t(i) * d + i] = Complex(a, 0);
  return PureState({d, d}, std::move(amps));
}

// |phi^{x,y}> = (X^x Z^y (x) I) |phi^{0,0}>
inline PureState bell_basis_state(std::uint32_t d, std::uint32_t x, std::uint32_t y) {
  if (x >= d || y >= d) throw ConfigError("bell_basis_state: label out of range");
  PureState s = apply_local(bell_pair(d), pauli_z(d, y, 0));
  return apply_local(s, pauli_x(d, x, 0));
}

// Outcome distribution of a Bell-basis measurement on a two-qudit state.
class BellMeasurement {
 public:
  BellMeasurement(std::uint32_t d, std::vector<double> probs)
      : d_(d), probs_(std::move(probs)) {}

  std::uint32_t d() const { return d_; }
  double probability(std::uint32_t x, std::uint32_t y) const {
    if (x >= d_ || y >= d_) throw ConfigError("BellMeasurement: label out of range");
    return probs_[std::size_t(x) * d_ + y];
  }
  const std::vector<double>& probabilities() const { return probs_; }

  // The unique label carrying all the probability mass; anything else in
  // these protocols means the simulator itself is broken.
  BellLabel deterministic_outcome() const {
    for (std::uint32_t x = 0; x < d_; ++x)
      for (std::uint32_t y = 0; y < d_; ++y)
        if (probability(x, y) > 1.0 - kTol) return BellLabel{x, y};
    throw InternalError("BellMeasurement: outcome is not deterministic");
  }

 private:
  std::uint32_t d_;
  std::vector<double> probs_;
};

inline BellMeasurement measure_bell_basis(const PureState& state) {
  const auto& dims = state.dims();
  if (dims.size() != 2 || dims[0] != dims[1])
    throw ConfigError("measure_bell_basis: need two subsystems of equal dimension");
  const std::uint32_t d = dims[0];
  std::vector<double> probs(std::size_t(d) * d, 0.0);
  double total = 0;
  for (std::uint32_t x = 0; x < d; ++x)
    for (std::uint32_t y = 0; y < d; ++y) {
      const Complex amp = inner_product(bell_basis_state(d, x, y), state);
      const double pr = std::norm(amp);
      probs[std::size_t(x) * d + y] = pr;
      total += pr;
    }
  if (std::abs(total - 1.0) > kTol)
    throw InternalError("measure_bell_basis: probabilities do not sum to 1");
  return BellMeasurement(d, std::move(probs));
}

// Equality up to a global phase (Bob's operator ordering introduces one).
inline bool equal_up_to_phase(const PureState& a, const PureState& b,
                              double tol = kTol) {
  if (a.dims() != b.dims()) return false;
  std::size_t ref = 0;
  double best = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::norm(a.amplitudes()[i]) > best) {
      best = std::norm(a.amplitudes()[i]);
      ref = i;
    }
  if (best < tol) return false;
  const Complex phase = b.amplitudes()[ref] / a.amplitudes()[ref];
  if (std::abs(std::abs(phase) - 1.0) > tol) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(phase * a.amplitudes()[i] - b.amplitudes()[i]) > tol) return false;
  return true;
}

}  // namespace qmac::quditsim
