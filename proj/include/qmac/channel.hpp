// SPDX-License-Identifier: Apache-2.0
//
// The modulo-d 2-sum protocol and its additive-channel view.  One channel
// use between a user pair delivers a+b mod d at a book cost of 1 qudit; the
// underlying quantum primitive delivers two such sums per Bell pair, so
// quantum-verified sessions batch same-pair uses two at a time.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "qmac/errors.hpp"
#include "qmac/quditsim.hpp"

namespace qmac::channel {

enum class SimMode { kAbstract, kQuantumVerified };

struct TwoSumResult {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  friend bool operator==(const TwoSumResult&, const TwoSumResult&) = default;
};

inline void check_input(std::uint32_t v, std::uint32_t d, const char* what) {
  if (d < 2) throw ConfigError("channel: dimension must be >= 2");
  if (v >= d) throw ConfigError(std::string("channel: ") + what + " out of range");
}

inline TwoSumResult two_sum_abstract(std::uint32_t d, std::uint32_t a1,
                                     std::uint32_t a2, std::uint32_t b1,
                                     std::uint32_t b2) {
  check_input(a1, d, "A1");
  check_input(a2, d, "A2");
  check_input(b1, d, "B1");
  check_input(b2, d, "B2");
  return TwoSumResult{(a1 + b1) % d, (a2 + b2) % d};
}

// Full simulation: X^{A1} Z^{A2} on Alice's half, X^{-B1} Z^{B2} on Bob's,
// then a Bell-basis measurement, which must be deterministic.
inline TwoSumResult two_sum_quantum(std::uint32_t d, std::uint32_t a1,
                                    std::uint32_t a2, std::uint32_t b1,
                                    std::uint32_t b2) {
  check_input(a1, d, "A1");
  check_input(a2, d, "A2");
  check_input(b1, d, "B1");
  check_input(b2, d, "B2");
  using namespace quditsim;
  PureState s = bell_pair(d);
  s = apply_local(s, pauli_z(d, a2, 0));
  s = apply_local(s, pauli_x(d, a1, 0));
  s = apply_local(s, pauli_z(d, b2, 1));
  s = apply_local(s, pauli_x(d, -std::int64_t(b1), 1));  // X^{-B1} = X^{d-B1}
  BellLabel out = measure_bell_basis(s).deterministic_outcome();
  return TwoSumResult{out.x, out.y};
}

// Paper accounting: (dimension, qudit count) entries, 1 qudit per channel
// use.  Rate denominators are measured in d-dits of a reference dimension.
class CostLedger {
 public:
  void charge(std::uint32_t dimension, std::uint64_t count = 1) {
    if (dimension < 1) throw ConfigError("CostLedger: bad dimension");
    counts_[dimension] += count;
  }

  void merge(const CostLedger& other) {
    for (auto [dim, n] : other.counts_) counts_[dim] += n;
  }

  bool empty() const { return counts_.empty(); }

  std::vector<std::pair<std::uint32_t, std::uint64_t>> entries() const {
    return {counts_.begin(), counts_.end()};
  }

  std::uint64_t count_for(std::uint32_t dimension) const {
    auto it = counts_.find(dimension);
    return it == counts_.end() ? 0 : it->second;
  }

  std::uint64_t total_uses() const {
    std::uint64_t n = 0;
    for (auto [dim, c] : counts_) n += c;
    return n;
  }

  // sum count * log_d(dimension); dimension-1 entries carry no information
  // and contribute zero.
  double total_dits(std::uint32_t d_ref) const {
    if (d_ref < 2) throw ConfigError("CostLedger: reference dimension must be >= 2");
    double total = 0;
    for (auto [dim, c] : counts_) {
      if (dim == 1) continue;
      total += double(c) * (dim == d_ref ? 1.0 : std::log(double(dim)) / std::log(double(d_ref)));
    }
    return total;
  }

  friend bool operator==(const CostLedger&, const CostLedger&) = default;

 private:
  std::map<std::uint32_t, std::uint64_t> counts_;
};

// computations per qudit: L / sum count*log_d(dimension)
inline double ledger_rate(const CostLedger& ledger, std::uint64_t L,
                          std::uint32_t d_ref) {
  if (ledger.empty()) throw ConfigError("ledger_rate: empty ledger");
  if (L < 1) throw ConfigError("ledger_rate: L must be >= 1");
  return double(L) / ledger.total_dits(d_ref);
}

// One additive-channel invocation as seen by the server.
struct ChannelUse {
  int user_a = 0;
  int user_b = 0;  // -1 marks the degenerate single-user direct send
  std::uint32_t dimension = 0;
  std::uint32_t input_a = 0;
  std::uint32_t input_b = 0;
  std::uint32_t output = 0;
  friend bool operator==(const ChannelUse&, const ChannelUse&) = default;
};

// Owns the transcript, the paper-accounting ledger, and (in quantum-verified
// mode) the pairing queue plus a physical-qudit counter so the two cost
// accountings can be compared.  Single-owner, mutated sequentially.
class ChannelSession {
 public:
  explicit ChannelSession(SimMode mode = SimMode::kAbstract,
                          bool allow_padding = false)
      : mode_(mode), allow_padding_(allow_padding) {}

  SimMode mode() const { return mode_; }

  std::uint32_t use(int user_a, int user_b, std::uint32_t d, std::uint32_t a,
                    std::uint32_t b) {
    require_open();
    if (user_a < 0 || user_b < 0 || user_a == user_b)
      throw ConfigError("ChannelSession: users must be distinct");
    check_input(a, d, "input A");
    check_input(b, d, "input B");
    const std::uint32_t y = (a + b) % d;
    ledger_.charge(d);
    transcript_.push_back(ChannelUse{user_a, user_b, d, a, b, y});
    if (mode_ == SimMode::kQuantumVerified) {
      const PairKey key{std::min(user_a, user_b), std::max(user_a, user_b), d};
      auto it = pending_.find(key);
      if (it == pending_.end()) {
        pending_.emplace(key, transcript_.size() - 1);
      } else {
        realize_pair(transcript_[it->second], transcript_.back());
        pending_.erase(it);
      }
    }
    return y;
  }

  // Degenerate single-user transmission (the K=1 pass-through).
  std::uint32_t direct(int user, std::uint32_t d, std::uint32_t w) {
    require_open();
    if (user < 0) throw ConfigError("ChannelSession: bad user index");
    check_input(w, d, "input");
    ledger_.charge(d);
    transcript_.push_back(ChannelUse{user, -1, d, w, 0, w});
    if (mode_ == SimMode::kQuantumVerified) physical_qudits_ += 1;
    return w;
  }

  // A full 2-sum between one pair: two channel uses, flushed immediately.
  TwoSumResult run_two_sum(int user_a, int user_b, std::uint32_t d,
                           std::pair<std::uint32_t, std::uint32_t> alice,
                           std::pair<std::uint32_t, std::uint32_t> bob) {
    const std::uint32_t x = use(user_a, user_b, d, alice.first, bob.first);
    const std::uint32_t y = use(user_a, user_b, d, alice.second, bob.second);
    return TwoSumResult{x, y};
  }

  // Flushes the pairing queue and refuses further uses.  An unpaired use is
  // an error unless padding was enabled; padding realizes the lone use with
  // a zero partner input, which costs one extra physical qudit and makes the
  // paper-accounted and simulated costs diverge.
  void close() {
    if (closed_) return;
    if (!pending_.empty()) {
      if (!allow_padding_)
        throw UnpairedUseError(
            "ChannelSession: unpaired channel use at close (enable padding "
            "to realize it with a zero-input partner)");
      for (auto& [key, idx] : pending_) {
        const ChannelUse& first = transcript_[idx];
        TwoSumResult got = two_sum_quantum(first.dimension, first.input_a, 0,
                                           first.input_b, 0);
        if (got.x != first.output || got.y != 0)
          throw InternalError("ChannelSession: padded 2-sum disagrees");
        physical_qudits_ += 2;
        paper_rate_divergent_ = true;
      }
      pending_.clear();
    }
    closed_ = true;
  }

  const std::vector<ChannelUse>& transcript() const { return transcript_; }
  const CostLedger& ledger() const { return ledger_; }
  std::uint64_t physical_qudits() const { return physical_qudits_; }
  bool paper_rate_divergent() const { return paper_rate_divergent_; }
  bool closed() const { return closed_; }

 private:
  using PairKey = std::tuple<int, int, std::uint32_t>;

  void require_open() const {
    if (closed_) throw ConfigError("ChannelSession: session is closed");
  }

  void realize_pair(const ChannelUse& first, const ChannelUse& second) {
    TwoSumResult got =
        two_sum_quantum(first.dimension, first.input_a, second.input_a,
                        first.input_b, second.input_b);
    if (got.x != first.output || got.y != second.output)
      throw InternalError(
          "ChannelSession: quantum-verified 2-sum disagrees with the "
          "additive channel");
    physical_qudits_ += 2;
  }

  SimMode mode_;
  bool allow_padding_;
  bool closed_ = false;
  bool paper_rate_divergent_ = false;
  CostLedger ledger_;
  std::vector<ChannelUse> transcript_;
  std::map<PairKey, std::size_t> pending_;
  std::uint64_t physical_qudits_ = 0;
};

// The channel-module entry point for one isolated 2-sum.
inline TwoSumResult run_two_sum(std::uint32_t d,
                                std::pair<std::uint32_t, std::uint32_t> alice,
                                std::pair<std::uint32_t, std::uint32_t> bob,
                                SimMode mode, CostLedger* ledger = nullptr) {
  if (ledger) ledger->charge(d, 2);
  if (mode == SimMode::kQuantumVerified)
    return two_sum_quantum(d, alice.first, alice.second, bob.first, bob.second);
  return two_sum_abstract(d, alice.first, alice.second, bob.first, bob.second);
}

}  // namespace qmac::channel
