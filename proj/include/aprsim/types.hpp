// Copyright 2026 The aprsim developers.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file types.hpp
 * Shared scalar types, tolerances and error categories.
 */
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace aprsim {

using cplx = std::complex<double>;

/// Tolerance for single algebraic identities (norms, unitarity, overlaps).
inline constexpr double tol_algebraic = 1e-12;

/// Tolerance for quantities that accumulate error across a multi-stage
/// simulation pipeline.
inline constexpr double tol_pipeline = 1e-10;

/// Hard cap on dense register width. The experiment needs 12 polarization
/// qubits; anything past 14 indicates a caller bug, not a bigger problem.
inline constexpr int max_qubits = 14;

/// Raised for invalid user-facing configuration: out-of-range parameters,
/// malformed layout files, inconsistent wiring.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when closed-form enumeration would exceed its branch budget.
/// Callers should retry with Monte Carlo sampling instead.
class enumeration_budget_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative solver hits its iteration cap without meeting
/// its convergence criterion and no usable estimate exists.
class convergence_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace aprsim
