// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace scomcp {

// Precondition / API-misuse failures surfaced by the contracts in each module.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training stages must run in order 0 -> 1 -> 2 -> 3.
struct StageOrderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scene generation ran out of rejection-sampling retries.
struct PlacementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scomcp
