// SPDX-License-Identifier: Apache-2.0
//
// Exhaustive correctness, exact distribution-equality security checking,
// conditional mutual information, and rate reconciliation.
//
// A protocol cell is described by a "family": the data alphabet per cell,
// the truth function, and one or more independent randomness segments, each
// writing its own slice of the transcript.  Segments with independent
// randomness let a two-phase protocol be checked exactly without walking the
// full randomness cross product: the joint transcript distribution is the
// product of the per-segment distributions, so equality of every segment
// distribution is equality of the joint.  JointFamily collapses segments
// back into one cross-product segment and is used as a cross-check oracle.
//
// Distributions are exact integer count vectors; equality is checked by
// cross-multiplication, never through floats.  Enumeration order is
// canonical (data index ascending, randomness index ascending) so witnesses
// and reports are byte-stable.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qmac/algebra.hpp"
#include "qmac/channel.hpp"
#include "qmac/errors.hpp"
#include "qmac/protocols.hpp"
#include "qmac/rng.hpp"

namespace qmac::verify {

using protocols::BufferChan;

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::uint64_t limit = 100'000'000;  // max segment evaluations per pass
  std::uint64_t sample_size = 0;      // nonzero: sampled (non-exhaustive) mode
  std::uint64_t sample_seed = 1;
};

struct CorrectnessWitness {
  std::vector<std::uint32_t> data;
  std::vector<std::uint64_t> segment_rand;  // one representative per segment
  std::vector<std::uint32_t> decoded;
  std::vector<std::uint32_t> truth;
};

struct CorrectnessReport {
  bool evaluated = false;
  bool pass = false;
  bool exhaustive = false;
  std::uint64_t evaluations = 0;
  std::uint64_t data_points = 0;
  std::optional<CorrectnessWitness> witness;
};

struct SegmentDistribution {
  std::uint64_t denominator = 0;  // randomness points for the reference tuple
  std::vector<std::pair<std::uint64_t, std::uint64_t>> counts;  // (transcript, count)
};

struct GroupDistribution {
  std::vector<std::uint32_t> f_value;
  std::uint64_t members = 0;
  std::vector<std::uint32_t> representative;  // first data tuple in the group
  std::vector<SegmentDistribution> segments;
};

struct SecurityWitness {
  std::vector<std::uint32_t> f_value;
  std::vector<std::uint32_t> data_ref;
  std::vector<std::uint32_t> data_other;
  std::uint32_t segment = 0;
  std::uint64_t transcript_index = 0;
  std::uint64_t count_ref = 0, denom_ref = 0;
  std::uint64_t count_other = 0, denom_other = 0;
};

struct SecurityReport {
  bool evaluated = false;
  bool secure = false;
  std::uint64_t evaluations = 0;
  std::vector<GroupDistribution> groups;
  std::optional<SecurityWitness> witness;
};

struct CmiReport {
  bool evaluated = false;
  bool exactly_zero = false;  // exact integer-arithmetic verdict
  double dits = 0.0;          // value in log_d units (0 when exactly_zero)
  std::uint64_t evaluations = 0;
};

struct RateReport {
  std::uint64_t instances = 0;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> cost_entries;
  std::uint32_t d_ref = 2;
  double achieved = 0.0;
  double upper_bound = 0.0;  // 2/K
  std::optional<double> lower_bound;
  bool tight = false;
  bool pass = false;
};

struct VerificationOutcome {
  std::string protocol;
  std::uint32_t d = 0, K = 0, L = 0;
  std::uint64_t enumeration_size = 0;
  CorrectnessReport correctness;
  SecurityReport security;
  CmiReport cmi;
  RateReport rate;

  bool all_pass() const {
    return correctness.pass && (!security.evaluated || security.secure) &&
           (!cmi.evaluated || cmi.exactly_zero) && rate.pass;
  }
};

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

// QSK-Sum and its deliberately broken variants.
struct SumFamily {
  enum class Variant { kStandard, kZeroRandomness, kCorruptDecode };

  SumFamily(std::uint32_t d, std::uint32_t K, Variant variant = Variant::kStandard)
      : d_(d), K_(K), variant_(variant) {
    if (d < 2) throw ConfigError("SumFamily: d must be >= 2");
    L_ = protocols::sum_instances(K);
    nfree_ = variant == Variant::kZeroRandomness ? 0 : protocols::sum_z_free(K);
    rand_ = 1;
    for (std::uint32_t i = 0; i < nfree_; ++i) rand_ *= d;
    cell_dims_.assign(protocols::sum_uses(K), d);
    zfull_.assign(protocols::sum_z_len(K), 0);
    free_.assign(std::max<std::uint32_t>(protocols::sum_z_free(K), 1), 0);
  }

  std::string id() const {
    switch (variant_) {
      case Variant::kZeroRandomness: return "broken-qsk-sum";
      case Variant::kCorruptDecode: return "corrupt-decode-qsk-sum";
      default: return "qsk-sum";
    }
  }
  std::uint32_t K() const { return K_; }
  std::uint32_t L() const { return L_; }
  std::uint32_t out_alpha() const { return d_; }
  std::uint32_t d_ref() const { return d_; }
  std::vector<std::uint32_t> data_dims() const {
    return std::vector<std::uint32_t>(std::size_t(K_) * L_, d_);
  }
  std::uint32_t n_segments() const { return 1; }
  const std::vector<std::uint32_t>& segment_cell_dims(std::uint32_t) const {
    return cell_dims_;
  }
  std::uint64_t segment_rand_size(std::uint32_t) const { return rand_; }
  std::uint64_t segment_rand_max(std::uint32_t) const { return rand_; }
  std::uint64_t enumeration_size(std::uint64_t ndata) const { return ndata * rand_; }

  void prepare(const std::uint32_t* data) {
    data_ = data;
    for (std::uint32_t l = 0; l < L_; ++l) {
      std::uint32_t s = 0;
      for (std::uint32_t k = 0; k < K_; ++k)
        s = algebra::add_mod(s, data_[std::size_t(k) * L_ + l], d_);
      truth_[l] = s;
    }
  }
  void truth(std::uint32_t* f_out) const {
    for (std::uint32_t l = 0; l < L_; ++l) f_out[l] = truth_[l];
  }

  std::uint64_t run_segment(std::uint32_t, std::uint64_t r, std::uint32_t* out) {
    for (std::uint32_t i = 0; i < nfree_; ++i) {
      free_[i] = std::uint32_t(r % d_);
      r /= d_;
    }
    if (variant_ != Variant::kZeroRandomness)
      protocols::sum_z_fill(d_, K_, free_.data(), zfull_.data());
    BufferChan ch{out};
    protocols::sum_scheme_execute(ch, d_, K_, data_, zfull_.data());
    std::array<std::uint32_t, 2> f{};
    protocols::sum_scheme_decode(d_, K_, out, f.data());
    if (variant_ == Variant::kCorruptDecode)
      for (std::uint32_t l = 0; l < L_; ++l) f[l] = algebra::add_mod(f[l], 1, d_);
    return std::uint64_t(f[0]) + std::uint64_t(f[1]) * d_;
  }

  void combine(const std::uint64_t* digests, std::uint32_t* f_out) const {
    f_out[0] = std::uint32_t(digests[0] % d_);
    if (L_ > 1) f_out[1] = std::uint32_t(digests[0] / d_ % d_);
  }

  channel::CostLedger ledger() const {
    channel::CostLedger led;
    led.charge(d_, protocols::sum_uses(K_));
    return led;
  }
  std::optional<double> rate_lower_bound() const { return std::nullopt; }

 private:
  std::uint32_t d_, K_, L_ = 1, nfree_ = 0;
  Variant variant_;
  std::uint64_t rand_ = 1;
  std::vector<std::uint32_t> cell_dims_, zfull_, free_;
  const std::uint32_t* data_ = nullptr;
  std::array<std::uint32_t, 2> truth_{};
};

// QSK-Prod (and QSK-AND as its GF(2) special case).  Segment 0 is Phase I
// over Z_p with randomness (R(1..L), Z^I); segment 1 is Phase II over
// Z_{d-1} with randomness (Z^II, decoy logs at the zero data positions).
struct ProdFamily {
  ProdFamily(const algebra::FieldSpec& field, std::uint32_t K,
             bool as_and = false)
      : field_(&field), s_(protocols::ProdShape::of(field, K)), as_and_(as_and) {
    nfree_ = protocols::sum_z_free(K);
    if (s_.K >= 2) {
      rand0_ = 1;
      for (std::uint32_t l = 0; l < s_.L; ++l) rand0_ *= (s_.p - 1);
      for (std::uint32_t i = 0; i < nfree_; ++i) rand0_ *= s_.p;
      cells0_.assign(protocols::sum_uses(K), s_.p);
      z1_.assign(protocols::sum_z_len(K), 0);
      if (s_.phase2) {
        rand1_base_ = 1;
        for (std::uint32_t i = 0; i < nfree_; ++i) rand1_base_ *= s_.m;
        rand1_max_ = rand1_base_;
        for (std::uint32_t c = 0; c < s_.K * s_.L; ++c) rand1_max_ *= s_.m;
        cells1_.assign(protocols::sum_uses(K), s_.m);
        z2_.assign(protocols::sum_z_len(K), 0);
      }
    } else {
      rand0_ = 1;
      cells0_.assign(1, s_.d);
    }
    free_.assign(std::max<std::uint32_t>(nfree_, 1), 0);
    inputs_.assign(std::size_t(s_.K) * s_.L, 0);
    fixed_log_.assign(std::size_t(s_.K) * s_.L, 0);
    rvals_.assign(std::max<std::uint32_t>(s_.L, 1), 1);
  }

  std::string id() const { return as_and_ ? "qsk-and" : "qsk-prod"; }
  std::uint32_t K() const { return s_.K; }
  std::uint32_t L() const { return s_.L; }
  std::uint32_t out_alpha() const { return s_.d; }
  std::uint32_t d_ref() const { return s_.d; }
  const algebra::FieldSpec& field() const { return *field_; }
  const protocols::ProdShape& shape() const { return s_; }
  std::vector<std::uint32_t> data_dims() const {
    return std::vector<std::uint32_t>(std::size_t(s_.K) * s_.L, s_.d);
  }
  std::uint32_t n_segments() const { return s_.phase2 ? 2 : 1; }
  const std::vector<std::uint32_t>& segment_cell_dims(std::uint32_t seg) const {
    return seg == 0 ? cells0_ : cells1_;
  }
  std::uint64_t segment_rand_size(std::uint32_t seg) const {
    if (seg == 0) return rand0_;
    std::uint64_t n = rand1_base_;
    for (std::uint32_t i = 0; i < n_zeros_; ++i) n *= s_.m;
    return n;
  }
  std::uint64_t segment_rand_max(std::uint32_t seg) const {
    return seg == 0 ? rand0_ : rand1_max_;
  }
  std::uint64_t enumeration_size(std::uint64_t ndata) const {
    std::uint64_t total = ndata * rand0_;
    if (s_.phase2) {
      // sum over data of m^{zeros}: each cell contributes (d-1) + m choices
      std::uint64_t sum_mz = 1;
      for (std::uint32_t c = 0; c < s_.K * s_.L; ++c)
        sum_mz *= std::uint64_t(s_.d - 1) + s_.m;
      total += rand1_base_ * sum_mz;
    }
    return total;
  }

  void prepare(const std::uint32_t* data) {
    data_ = data;
    n_zeros_ = 0;
    zero_pos_.clear();
    for (std::uint32_t c = 0; c < s_.K * s_.L; ++c) {
      if (data[c] == 0) {
        zero_pos_.push_back(c);
        ++n_zeros_;
      } else {
        fixed_log_[c] = field_->dlog_index(data[c]);
      }
    }
    for (std::uint32_t l = 0; l < s_.L; ++l) {
      std::uint32_t prod = 1;
      for (std::uint32_t k = 0; k < s_.K; ++k)
        prod = field_->mul_index(prod, data[std::size_t(k) * s_.L + l]);
      truth_[l] = prod;
    }
  }
  void truth(std::uint32_t* f_out) const {
    for (std::uint32_t l = 0; l < s_.L; ++l) f_out[l] = truth_[l];
  }

  std::uint64_t run_segment(std::uint32_t seg, std::uint64_t r, std::uint32_t* out) {
    if (s_.K == 1) {
      BufferChan ch{out};
      protocols::qsk_prod_execute(ch, *field_, s_, data_, nullptr, nullptr,
                                  nullptr, nullptr);
      return out[0];
    }
    if (seg == 0) {
      for (std::uint32_t l = 0; l < s_.L; ++l) {
        rvals_[l] = std::uint32_t(1 + r % (s_.p - 1));
        r /= (s_.p - 1);
      }
      for (std::uint32_t i = 0; i < nfree_; ++i) {
        free_[i] = std::uint32_t(r % s_.p);
        r /= s_.p;
      }
      protocols::sum_z_fill(s_.p, s_.K, free_.data(), z1_.data());
      for (std::uint32_t k = 0; k < s_.K; ++k)
        for (std::uint32_t l = 0; l < s_.L; ++l) {
          const std::uint32_t c = k * s_.L + l;
          inputs_[c] = data_[c] != 0 ? 0 : rvals_[l];
        }
      BufferChan ch{out};
      protocols::sum_scheme_execute(ch, s_.p, s_.K, inputs_.data(), z1_.data());
      std::array<std::uint32_t, 2> f{};
      protocols::sum_scheme_decode(s_.p, s_.K, out, f.data());
      std::uint64_t bits = 0;
      for (std::uint32_t l = 0; l < s_.L; ++l)
        bits |= std::uint64_t(f[l] == 0 ? 1 : 0) << l;
      return bits;
    }
    // Phase II
    for (std::uint32_t i = 0; i < nfree_; ++i) {
      free_[i] = std::uint32_t(r % s_.m);
      r /= s_.m;
    }
    protocols::sum_z_fill(s_.m, s_.K, free_.data(), z2_.data());
    for (std::uint32_t c = 0; c < s_.K * s_.L; ++c) inputs_[c] = fixed_log_[c];
    for (std::uint32_t zp : zero_pos_) {
      inputs_[zp] = std::uint32_t(r % s_.m);  // decoy's discrete log
      r /= s_.m;
    }
    BufferChan ch{out};
    protocols::sum_scheme_execute(ch, s_.m, s_.K, inputs_.data(), z2_.data());
    std::array<std::uint32_t, 2> f{};
    protocols::sum_scheme_decode(s_.m, s_.K, out, f.data());
    return std::uint64_t(f[0]) + std::uint64_t(f[1]) * s_.m;
  }

  void combine(const std::uint64_t* digests, std::uint32_t* f_out) const {
    if (s_.K == 1) {
      f_out[0] = std::uint32_t(digests[0]);
      return;
    }
    for (std::uint32_t l = 0; l < s_.L; ++l) {
      const bool and_bit = (digests[0] >> l) & 1;
      if (!and_bit) {
        f_out[l] = 0;
      } else if (s_.phase2) {
        const std::uint32_t sum =
            std::uint32_t(l == 0 ? digests[1] % s_.m : digests[1] / s_.m % s_.m);
        f_out[l] = field_->exp_index(sum);
      } else {
        f_out[l] = 1;
      }
    }
  }

  channel::CostLedger ledger() const {
    channel::CostLedger led;
    if (s_.K == 1) {
      led.charge(s_.d, 1);
      return led;
    }
    led.charge(s_.p, protocols::sum_uses(s_.K));
    if (s_.phase2) led.charge(s_.m, protocols::sum_uses(s_.K));
    return led;
  }

  std::optional<double> rate_lower_bound() const {
    if (s_.K < 2) return std::nullopt;
    const double logd = std::log(double(s_.d));
    const double denom = std::log(double(2 * s_.K - 1)) / logd +
                         (s_.d > 2 ? std::log(double(s_.d - 1)) / logd : 0.0);
    return (2.0 / s_.K) / denom;
  }

 private:
  const algebra::FieldSpec* field_;
  protocols::ProdShape s_;
  bool as_and_;
  std::uint32_t nfree_ = 0, n_zeros_ = 0;
  std::uint64_t rand0_ = 1, rand1_base_ = 1, rand1_max_ = 1;
  std::vector<std::uint32_t> cells0_, cells1_, z1_, z2_, free_, inputs_,
      fixed_log_, rvals_, zero_pos_;
  const std::uint32_t* data_ = nullptr;
  std::array<std::uint32_t, 2> truth_{};
};

// The two QS2-AND schemes and the dot-product demo are small single-segment
// families with hand-rolled tables.
struct Qs2CitedFamily {
  std::string id() const { return "qs2-and-cited"; }
  std::uint32_t K() const { return 2; }
  std::uint32_t L() const { return 1; }
  std::uint32_t out_alpha() const { return 2; }
  std::uint32_t d_ref() const { return 2; }
  std::vector<std::uint32_t> data_dims() const { return {2, 2}; }
  std::uint32_t n_segments() const { return 1; }
  const std::vector<std::uint32_t>& segment_cell_dims(std::uint32_t) const {
    static const std::vector<std::uint32_t> kCells = {2, 2};
    return kCells;
  }
  std::uint64_t segment_rand_size(std::uint32_t) const { return 3; }
  std::uint64_t segment_rand_max(std::uint32_t) const { return 3; }
  std::uint64_t enumeration_size(std::uint64_t ndata) const { return ndata * 3; }
  void prepare(const std::uint32_t* data) { data_ = data; }
  void truth(std::uint32_t* f_out) const { f_out[0] = data_[0] & data_[1]; }
  std::uint64_t run_segment(std::uint32_t, std::uint64_t r, std::uint32_t* out) {
    BufferChan ch{out};
    protocols::qs2_and_cited_execute(ch, data_[0], data_[1], std::uint32_t(r) + 1);
    return protocols::qs2_and_cited_decode(out);
  }
  void combine(const std::uint64_t* digests, std::uint32_t* f_out) const {
    f_out[0] = std::uint32_t(digests[0]);
  }
  channel::CostLedger ledger() const {
    channel::CostLedger led;
    led.charge(2, 2);
    return led;
  }
  std::optional<double> rate_lower_bound() const { return std::nullopt; }

 private:
  const std::uint32_t* data_ = nullptr;
};

struct Qs2NewFamily {
  std::string id() const { return "qs2-and-new"; }
  std::uint32_t K() const { return 2; }
  std::uint32_t L() const { return 1; }
  std::uint32_t out_alpha() const { return 2; }
  std::uint32_t d_ref() const { return 2; }
  std::vector<std::uint32_t> data_dims() const { return {2, 2}; }
  std::uint32_t n_segments() const { return 1; }
  const std::vector<std::uint32_t>& segment_cell_dims(std::uint32_t) const {
    static const std::vector<std::uint32_t> kCells = {3};
    return kCells;
  }
  std::uint64_t segment_rand_size(std::uint32_t) const { return 2; }
  std::uint64_t segment_rand_max(std::uint32_t) const { return 2; }
  std::uint64_t enumeration_size(std::uint64_t ndata) const { return ndata * 2; }
  void prepare(const std::uint32_t* data) { data_ = data; }
  void truth(std::uint32_t* f_out) const { f_out[0] = data_[0] & data_[1]; }
  std::uint64_t run_segment(std::uint32_t, std::uint64_t r, std::uint32_t* out) {
    BufferChan ch{out};
    protocols::qs2_and_new_execute(ch, data_[0], data_[1], std::uint32_t(r) + 1);
    return protocols::qs2_and_new_decode(out);
  }
  void combine(const std::uint64_t* digests, std::uint32_t* f_out) const {
    f_out[0] = std::uint32_t(digests[0]);
  }
  channel::CostLedger ledger() const {
    channel::CostLedger led;
    led.charge(3, 1);
    return led;
  }
  std::optional<double> rate_lower_bound() const { return std::nullopt; }

 private:
  const std::uint32_t* data_ = nullptr;
};

struct DotDemoFamily {
  std::string id() const { return "dot-demo"; }
  std::uint32_t K() const { return 2; }
  std::uint32_t L() const { return 1; }
  std::uint32_t out_alpha() const { return 2; }
  std::uint32_t d_ref() const { return 2; }
  std::vector<std::uint32_t> data_dims() const { return {4, 4}; }
  std::uint32_t n_segments() const { return 1; }
  const std::vector<std::uint32_t>& segment_cell_dims(std::uint32_t) const {
    static const std::vector<std::uint32_t> kCells = {11};
    return kCells;
  }
  std::uint64_t segment_rand_size(std::uint32_t) const { return 5; }
  std::uint64_t segment_rand_max(std::uint32_t) const { return 5; }
  std::uint64_t enumeration_size(std::uint64_t ndata) const { return ndata * 5; }
  void prepare(const std::uint32_t* data) { data_ = data; }
  void truth(std::uint32_t* f_out) const {
    f_out[0] = protocols::dot_demo_truth(data_[0], data_[1]);
  }
  std::uint64_t run_segment(std::uint32_t, std::uint64_t r, std::uint32_t* out) {
    BufferChan ch{out};
    protocols::dot_demo_execute(ch, data_[0], data_[1], protocols::kDotMask[r]);
    return protocols::dot_demo_decode(out);
  }
  void combine(const std::uint64_t* digests, std::uint32_t* f_out) const {
    f_out[0] = std::uint32_t(digests[0]);
  }
  channel::CostLedger ledger() const {
    channel::CostLedger led;
    led.charge(11, 1);
    return led;
  }
  std::optional<double> rate_lower_bound() const { return std::nullopt; }

 private:
  const std::uint32_t* data_ = nullptr;
};

// Collapses a multi-segment family into one segment whose randomness is the
// full cross product.  Used as the unfactorized oracle in tests and as the
// fallback when a joint distribution is explicitly requested.
template <class Inner>
struct JointFamily {
  explicit JointFamily(Inner inner) : inner_(std::move(inner)) {
    for (std::uint32_t s = 0; s < inner_.n_segments(); ++s) {
      const auto& dims = inner_.segment_cell_dims(s);
      cells_.insert(cells_.end(), dims.begin(), dims.end());
    }
    digests_.assign(inner_.n_segments(), 0);
    fbuf_.assign(inner_.L(), 0);
  }

  std::string id() const { return inner_.id() + "-joint"; }
  std::uint32_t K() const { return inner_.K(); }
  std::uint32_t L() const { return inner_.L(); }
  std::uint32_t out_alpha() const { return inner_.out_alpha(); }
  std::uint32_t d_ref() const { return inner_.d_ref(); }
  std::vector<std::uint32_t> data_dims() const { return inner_.data_dims(); }
  std::uint32_t n_segments() const { return 1; }
  const std::vector<std::uint32_t>& segment_cell_dims(std::uint32_t) const {
    return cells_;
  }
  std::uint64_t segment_rand_size(std::uint32_t) const {
    std::uint64_t n = 1;
    for (std::uint32_t s = 0; s < inner_.n_segments(); ++s)
      n *= inner_.segment_rand_size(s);
    return n;
  }
  std::uint64_t segment_rand_max(std::uint32_t) const {
    std::uint64_t n = 1;
    for (std::uint32_t s = 0; s < inner_.n_segments(); ++s)
      n *= inner_.segment_rand_max(s);
    return n;
  }
  std::uint64_t enumeration_size(std::uint64_t ndata) const {
    // upper bound: every tuple could reach the maximal randomness size
    return ndata * segment_rand_max(0);
  }
  void prepare(const std::uint32_t* data) { inner_.prepare(data); }
  void truth(std::uint32_t* f_out) const { inner_.truth(f_out); }
  std::uint64_t run_segment(std::uint32_t, std::uint64_t r, std::uint32_t* out) {
    std::uint32_t* cursor = out;
    for (std::uint32_t s = 0; s < inner_.n_segments(); ++s) {
      const std::uint64_t ds = inner_.segment_rand_size(s);
      digests_[s] = inner_.run_segment(s, r % ds, cursor);
      cursor += inner_.segment_cell_dims(s).size();
      r /= ds;
    }
    inner_.combine(digests_.data(), fbuf_.data());
    std::uint64_t packed = 0;
    for (std::uint32_t l = inner_.L(); l-- > 0;)
      packed = packed * inner_.out_alpha() + fbuf_[l];
    return packed;
  }
  void combine(const std::uint64_t* digests, std::uint32_t* f_out) const {
    std::uint64_t v = digests[0];
    for (std::uint32_t l = 0; l < inner_.L(); ++l) {
      f_out[l] = std::uint32_t(v % inner_.out_alpha());
      v /= inner_.out_alpha();
    }
  }
  channel::CostLedger ledger() const { return inner_.ledger(); }
  std::optional<double> rate_lower_bound() const {
    return inner_.rate_lower_bound();
  }

 private:
  Inner inner_;
  std::vector<std::uint32_t> cells_;
  std::vector<std::uint64_t> digests_;
  std::vector<std::uint32_t> fbuf_;
};

// ---------------------------------------------------------------------------
// Enumeration engine
// ---------------------------------------------------------------------------

namespace detail {

struct GroupState {
  std::vector<std::uint32_t> f_value;
  std::vector<std::uint32_t> representative;
  std::uint64_t members = 0;
  // reference distribution (first member) per segment
  std::vector<SegmentDistribution> ref;
  // dense scaled aggregates per segment, for the CMI route
  std::vector<std::vector<std::uint64_t>> agg;
};

template <class Fam>
class Engine {
 public:
  Engine(Fam& fam, const VerifyOptions& opts) : fam_(fam), opts_(opts) {
    data_dims_ = fam_.data_dims();
    ndata_ = 1;
    for (std::uint32_t dim : data_dims_) ndata_ *= dim;
    nseg_ = fam_.n_segments();
    L_ = fam_.L();
    for (std::uint32_t s = 0; s < nseg_; ++s) {
      const auto& dims = fam_.segment_cell_dims(s);
      std::uint64_t space = 1;
      for (std::uint32_t dim : dims) space *= dim;
      cellspace_.push_back(space);
      ncells_.push_back(std::uint32_t(dims.size()));
      counts_.emplace_back(space, 0);
      touched_.emplace_back();
    }
    tbuf_.assign(*std::max_element(ncells_.begin(), ncells_.end()), 0);
    data_.assign(data_dims_.size(), 0);
    fbuf_.assign(L_, 0);
    enumeration_size_ = fam_.enumeration_size(ndata_);
  }

  std::uint64_t enumeration_size() const { return enumeration_size_; }
  std::uint64_t ndata() const { return ndata_; }

  void require_within_limit() const {
    if (enumeration_size_ > opts_.limit)
      throw LimitExceeded(
          "enumeration size " + std::to_string(enumeration_size_) +
          " exceeds the limit " + std::to_string(opts_.limit) +
          " (shrink d/K, raise the limit, or use sampling mode)");
  }

  // Pass 1: correctness, security (reference comparison), aggregates.
  void pass_main(bool want_corr, bool want_sec, bool want_agg,
                 CorrectnessReport* corr, SecurityReport* sec) {
    std::fill(data_.begin(), data_.end(), 0);
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> digests(nseg_);
    std::uint64_t evals = 0;
    for (std::uint64_t di = 0; di < ndata_; ++di, advance_data()) {
      fam_.prepare(data_.data());
      fam_.truth(fbuf_.data());
      GroupState& g = group_for(fbuf_);
      const bool first_member = g.members == 0;
      ++g.members;
      if (first_member) g.representative = data_;

      for (std::uint32_t s = 0; s < nseg_; ++s) {
        const std::uint64_t dsz = fam_.segment_rand_size(s);
        evals += dsz;
        if (want_corr) digests[s].clear();
        fill_counts(s, dsz, want_corr ? &digests[s] : nullptr);

        if (want_sec || want_agg) {
          if (first_member) {
            store_reference(g, s, dsz);
          } else if (want_sec && sec->secure) {
            compare_with_reference(g, s, dsz, sec);
          }
          if (want_agg) accumulate(g, s, dsz);
        }
        clear_counts(s);
      }

      if (want_corr && corr->pass) check_combinations(digests, corr);
    }
    if (corr) corr->evaluations = evals;
    if (sec) sec->evaluations = evals;
  }

  // Pass 2: the conditional-independence route.  Checks, in exact integer
  // arithmetic, that every tuple's conditional distribution equals the
  // group-aggregate distribution; on failure accumulates the positive CMI
  // value in log_{d_ref} units.
  void pass_cmi(CmiReport* cmi) {
    // per-group sparse supports from the dense aggregates
    struct Support {
      std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> seg;
    };
    std::vector<Support> supports(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      supports[gi].seg.resize(nseg_);
      for (std::uint32_t s = 0; s < nseg_; ++s)
        for (std::uint64_t t = 0; t < cellspace_[s]; ++t)
          if (groups_[gi].agg[s][t] != 0)
            supports[gi].seg[s].push_back({t, groups_[gi].agg[s][t]});
    }

    bool zero = true;
    double value = 0.0;
    std::uint64_t evals = 0;
    const double log_dref = std::log(double(fam_.d_ref()));
    std::fill(data_.begin(), data_.end(), 0);
    for (std::uint64_t di = 0; di < ndata_; ++di, advance_data()) {
      fam_.prepare(data_.data());
      fam_.truth(fbuf_.data());
      const std::uint64_t fkey = pack_f(fbuf_);
      const std::size_t gi = group_index_.at(fkey);
      const GroupState& g = groups_[gi];
      for (std::uint32_t s = 0; s < nseg_; ++s) {
        const std::uint64_t dsz = fam_.segment_rand_size(s);
        const std::uint64_t scale = fam_.segment_rand_max(s) / dsz;
        evals += dsz;
        fill_counts(s, dsz, nullptr);
        // p(t|w) = c/dsz must equal p(t|f) = A(t) / (members * rand_max)
        for (const auto& [t, a] : supports[gi].seg[s]) {
          const std::uint64_t c = counts_[s][t];
          if (c * scale * g.members != a) {
            zero = false;
            const double p_t_w = double(c) / double(dsz);
            const double p_t_f =
                double(a) / (double(g.members) * double(fam_.segment_rand_max(s)));
            if (p_t_w > 0)
              value += (1.0 / double(ndata_)) * p_t_w *
                       (std::log(p_t_w / p_t_f) / log_dref);
          }
        }
        clear_counts(s);
      }
    }
    cmi->evaluated = true;
    cmi->exactly_zero = zero;
    cmi->dits = zero ? 0.0 : value;
    cmi->evaluations = evals;
  }

  // Sampled, non-exhaustive correctness spot check.
  void pass_sampled(CorrectnessReport* corr) {
    SeededRng rng(opts_.sample_seed);
    std::uint64_t evals = 0;
    std::vector<std::uint64_t> digests(nseg_), rsel(nseg_);
    std::vector<std::uint32_t> decoded(L_), truth(L_);
    for (std::uint64_t i = 0; i < opts_.sample_size; ++i) {
      const std::uint64_t di = rng.uniform_below(ndata_);
      std::uint64_t v = di;
      for (std::size_t c = 0; c < data_.size(); ++c) {
        data_[c] = std::uint32_t(v % data_dims_[c]);
        v /= data_dims_[c];
      }
      fam_.prepare(data_.data());
      fam_.truth(truth.data());
      for (std::uint32_t s = 0; s < nseg_; ++s) {
        rsel[s] = rng.uniform_below(fam_.segment_rand_size(s));
        digests[s] = fam_.run_segment(s, rsel[s], tbuf_.data());
        ++evals;
      }
      fam_.combine(digests.data(), decoded.data());
      if (decoded != truth && corr->pass) {
        corr->pass = false;
        corr->witness = CorrectnessWitness{data_, rsel, decoded, truth};
      }
      ++corr->data_points;
    }
    corr->evaluated = true;
    corr->exhaustive = false;
    corr->evaluations = evals;
  }

  std::vector<GroupDistribution> group_report() const {
    std::vector<GroupDistribution> out;
    out.reserve(groups_.size());
    for (const GroupState& g : groups_) {
      GroupDistribution gd;
      gd.f_value = g.f_value;
      gd.members = g.members;
      gd.representative = g.representative;
      gd.segments = g.ref;
      out.push_back(std::move(gd));
    }
    return out;
  }

  void enable_aggregates() {
    want_agg_storage_ = true;
  }

 private:
  void advance_data() {
    for (std::size_t c = 0; c < data_.size(); ++c) {
      if (++data_[c] < data_dims_[c]) return;
      data_[c] = 0;
    }
  }

  std::uint64_t pack_f(const std::vector<std::uint32_t>& f) const {
    std::uint64_t key = 0;
    for (std::uint32_t l = L_; l-- > 0;)
      key = key * fam_.out_alpha() + f[l];
    return key;
  }

  GroupState& group_for(const std::vector<std::uint32_t>& f) {
    const std::uint64_t key = pack_f(f);
    auto it = group_index_.find(key);
    if (it == group_index_.end()) {
      it = group_index_.emplace(key, groups_.size()).first;
      groups_.emplace_back();
      groups_.back().f_value = f;
      if (want_agg_storage_) {
        groups_.back().agg.resize(nseg_);
        for (std::uint32_t s = 0; s < nseg_; ++s)
          groups_.back().agg[s].assign(cellspace_[s], 0);
      }
    }
    return groups_[it->second];
  }

  // Enumerates one segment's randomness, filling the dense count vector and
  // (optionally) the digest set with a representative randomness index.
  void fill_counts(std::uint32_t s, std::uint64_t dsz,
                   std::vector<std::pair<std::uint64_t, std::uint64_t>>* digests) {
    const auto& dims = fam_.segment_cell_dims(s);
    for (std::uint64_t r = 0; r < dsz; ++r) {
      const std::uint64_t digest = fam_.run_segment(s, r, tbuf_.data());
      std::uint64_t t = 0, w = 1;
      for (std::uint32_t c = 0; c < ncells_[s]; ++c) {
        t += std::uint64_t(tbuf_[c]) * w;
        w *= dims[c];
      }
      if (counts_[s][t]++ == 0) touched_[s].push_back(t);
      if (digests) {
        bool found = false;
        for (auto& [dg, r0] : *digests)
          if (dg == digest) {
            found = true;
            break;
          }
        if (!found) digests->push_back({digest, r});
      }
    }
  }

  void clear_counts(std::uint32_t s) {
    for (std::uint64_t t : touched_[s]) counts_[s][t] = 0;
    touched_[s].clear();
  }

  void store_reference(GroupState& g, std::uint32_t s, std::uint64_t dsz) {
    if (g.ref.size() <= s) g.ref.resize(nseg_);
    g.ref[s].denominator = dsz;
    auto& vec = g.ref[s].counts;
    vec.clear();
    vec.reserve(touched_[s].size());
    for (std::uint64_t t : touched_[s]) vec.push_back({t, counts_[s][t]});
    std::sort(vec.begin(), vec.end());
  }

  void compare_with_reference(const GroupState& g, std::uint32_t s,
                              std::uint64_t dsz, SecurityReport* sec) {
    const SegmentDistribution& ref = g.ref[s];
    // c_w(t) / dsz == c_ref(t) / denom_ref, via cross multiplication; equal
    // supports are implied by matching every reference entry plus equal
    // support sizes.
    std::size_t matched = 0;
    for (const auto& [t, cref] : ref.counts) {
      const std::uint64_t c = counts_[s][t];
      if (c != 0) ++matched;
      if (c * ref.denominator != cref * dsz) {
        sec->secure = false;
        SecurityWitness w;
        w.f_value = g.f_value;
        w.data_ref = g.representative;
        w.data_other = data_;
        w.segment = s;
        w.transcript_index = t;
        w.count_ref = cref;
        w.denom_ref = ref.denominator;
        w.count_other = c;
        w.denom_other = dsz;
        sec->witness = w;
        return;
      }
    }
    if (matched != touched_[s].size()) {
      // some transcript occurs for this tuple but never for the reference
      std::uint64_t t_extra = 0;
      for (std::uint64_t t : touched_[s]) {
        bool in_ref = false;
        for (const auto& [tr, c] : ref.counts)
          if (tr == t) {
            in_ref = true;
            break;
          }
        if (!in_ref) {
          t_extra = t;
          break;
        }
      }
      sec->secure = false;
      SecurityWitness w;
      w.f_value = g.f_value;
      w.data_ref = g.representative;
      w.data_other = data_;
      w.segment = s;
      w.transcript_index = t_extra;
      w.count_ref = 0;
      w.denom_ref = ref.denominator;
      w.count_other = counts_[s][t_extra];
      w.denom_other = dsz;
      sec->witness = w;
    }
  }

  void accumulate(GroupState& g, std::uint32_t s, std::uint64_t dsz) {
    const std::uint64_t scale = fam_.segment_rand_max(s) / dsz;
    if (scale * dsz != fam_.segment_rand_max(s))
      throw InternalError("verify: randomness sizes must divide the maximum");
    for (std::uint64_t t : touched_[s]) g.agg[s][t] += counts_[s][t] * scale;
  }

  void check_combinations(
      const std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>>& digests,
      CorrectnessReport* corr) {
    std::vector<std::uint32_t> idx(nseg_, 0);
    std::vector<std::uint64_t> dg(nseg_), rsel(nseg_);
    std::vector<std::uint32_t> decoded(L_), truth(L_);
    fam_.truth(truth.data());
    while (true) {
      for (std::uint32_t s = 0; s < nseg_; ++s) {
        dg[s] = digests[s][idx[s]].first;
        rsel[s] = digests[s][idx[s]].second;
      }
      fam_.combine(dg.data(), decoded.data());
      if (decoded != truth) {
        corr->pass = false;
        corr->witness = CorrectnessWitness{data_, rsel, decoded, truth};
        return;
      }
      std::uint32_t s = 0;
      for (; s < nseg_; ++s) {
        if (++idx[s] < digests[s].size()) break;
        idx[s] = 0;
      }
      if (s == nseg_) return;
    }
  }

  Fam& fam_;
  const VerifyOptions& opts_;
  std::vector<std::uint32_t> data_dims_, data_, tbuf_, fbuf_;
  std::vector<std::uint32_t> ncells_;
  std::vector<std::uint64_t> cellspace_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::vector<std::vector<std::uint64_t>> touched_;
  std::uint64_t ndata_ = 0, enumeration_size_ = 0;
  std::uint32_t nseg_ = 0, L_ = 0;
  bool want_agg_storage_ = false;

  std::unordered_map<std::uint64_t, std::size_t> group_index_;
  std::vector<GroupState> groups_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// The four operations
// ---------------------------------------------------------------------------

template <class Fam>
CorrectnessReport check_correctness_exhaustive(Fam fam, const VerifyOptions& opts = {}) {
  detail::Engine<Fam> eng(fam, opts);
  CorrectnessReport corr;
  corr.evaluated = true;
  corr.pass = true;
  if (opts.sample_size > 0) {
    eng.pass_sampled(&corr);
    return corr;
  }
  eng.require_within_limit();
  corr.exhaustive = true;
  corr.data_points = eng.ndata();
  eng.pass_main(/*corr=*/true, /*sec=*/false, /*agg=*/false, &corr, nullptr);
  return corr;
}

template <class Fam>
SecurityReport check_security_exhaustive(Fam fam, const VerifyOptions& opts = {}) {
  if (opts.sample_size > 0)
    throw ConfigError("check_security: distribution equality needs exhaustive mode");
  detail::Engine<Fam> eng(fam, opts);
  eng.require_within_limit();
  SecurityReport sec;
  sec.evaluated = true;
  sec.secure = true;
  eng.pass_main(/*corr=*/false, /*sec=*/true, /*agg=*/false, nullptr, &sec);
  sec.groups = eng.group_report();
  return sec;
}

template <class Fam>
CmiReport conditional_mutual_information(Fam fam, const VerifyOptions& opts = {}) {
  if (opts.sample_size > 0)
    throw ConfigError("conditional_mutual_information: needs exhaustive mode");
  detail::Engine<Fam> eng(fam, opts);
  eng.require_within_limit();
  eng.enable_aggregates();
  eng.pass_main(/*corr=*/false, /*sec=*/false, /*agg=*/true, nullptr, nullptr);
  CmiReport cmi;
  eng.pass_cmi(&cmi);
  return cmi;
}

template <class Fam>
RateReport reconcile_rate(const Fam& fam) {
  const channel::CostLedger led = fam.ledger();
  RateReport r;
  r.instances = fam.L();
  r.cost_entries = led.entries();
  r.d_ref = fam.d_ref();
  r.achieved = channel::ledger_rate(led, fam.L(), fam.d_ref());
  r.upper_bound = 2.0 / double(fam.K());
  r.lower_bound = fam.rate_lower_bound();
  r.tight = r.achieved == r.upper_bound;
  r.pass = r.achieved <= r.upper_bound + 1e-12 &&
           (!r.lower_bound || r.achieved >= *r.lower_bound - 1e-12);
  return r;
}

// One full verification: a main pass (correctness + security + aggregates)
// and the conditional-independence pass, plus rate reconciliation.
template <class Fam>
VerificationOutcome verify_all(Fam fam, const VerifyOptions& opts = {}) {
  VerificationOutcome out;
  out.protocol = fam.id();
  out.d = fam.d_ref();
  out.K = fam.K();
  out.L = fam.L();
  out.rate = reconcile_rate(fam);

  detail::Engine<Fam> eng(fam, opts);
  out.enumeration_size = eng.enumeration_size();
  out.correctness.evaluated = true;
  out.correctness.pass = true;
  if (opts.sample_size > 0) {
    eng.pass_sampled(&out.correctness);
    return out;  // security and CMI stay unevaluated in sampling mode
  }
  eng.require_within_limit();
  out.correctness.exhaustive = true;
  out.correctness.data_points = eng.ndata();
  out.security.evaluated = true;
  out.security.secure = true;
  eng.enable_aggregates();
  eng.pass_main(true, true, true, &out.correctness, &out.security);
  out.security.groups = eng.group_report();
  eng.pass_cmi(&out.cmi);
  return out;
}

}  // namespace qmac::verify
