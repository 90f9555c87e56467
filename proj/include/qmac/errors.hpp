// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qmac {

// Bad parameters or inconsistent configuration supplied by the caller.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A condition that can only arise from a bug in the simulator itself,
// e.g. a Bell measurement that is not deterministic when it must be.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

// An exhaustive enumeration would exceed the configured evaluation budget.
struct LimitExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A session was closed while a channel use was still waiting for its
// partner and padding was not enabled.
struct UnpairedUseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qmac
