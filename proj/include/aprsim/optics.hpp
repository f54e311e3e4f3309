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
 * @file optics.hpp
 * Jones matrices for wave plates and detector-resolved models of a
 * polarizing beam splitter.
 *
 * Wave plate conventions, with theta the fast-axis angle from horizontal:
 *
 *   HWP(theta) = [[cos 2t,  sin 2t], [sin 2t, -cos 2t]]
 *   QWP(theta) = R(theta) diag(1, i) R(-theta)
 *
 * so HWP(pi/8) is exactly the Hadamard, HWP(0) flips the sign of |V>, and
 * QWP(pi/4) maps |H> to e^{i pi/4} |L>.
 *
 * Beam splitter geometry: the PBS transmits H and reflects V. Output port
 * L continues the transmitted beam of input a, output port R continues the
 * transmitted beam of input b. Each port ends in polarization-resolving
 * detection, giving four detector slots ordered (LH, LV, RH, RV).
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "aprsim/state.hpp"
#include "aprsim/types.hpp"

namespace aprsim {

/// Half-wave plate with fast axis at angle theta (radians).
inline Eigen::Matrix2cd hwp(double theta) {
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    return (Eigen::Matrix2cd() << c, s, s, -c).finished();
}

/// Quarter-wave plate with fast axis at angle theta (radians).
inline Eigen::Matrix2cd qwp(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2cd rot;
    rot << c, -s, s, c;
    Eigen::Matrix2cd retard;
    retard << 1.0, 0.0, 0.0, cplx(0.0, 1.0);
    return rot * retard * rot.transpose();
}

/// Half-wave plate at 22.5 degrees, i.e. the Hadamard, in exact arithmetic.
inline Eigen::Matrix2cd hwp_hadamard() {
    const double r = 1.0 / std::sqrt(2.0);
    return (Eigen::Matrix2cd() << r, r, r, -r).finished();
}

/// Which input of a two-port beam splitter a lone photon arrives on.
enum class InputPort { A, B };

/// One term of a detector-resolved beam splitter branch decomposition:
/// photon counts per detector slot (LH, LV, RH, RV), the downstream
/// register once the involved qubits are consumed, and the branch
/// probability. Probabilities over a full decomposition sum to the squared
/// norm of the input.
struct DetectorBranch {
    std::array<int, 4> clicks;
    PureState state;
    double prob;
};

namespace detail {

/// Two-qubit product ket in the pair convention of project_out_pair:
/// entry m addresses (bit of first qubit) + 2 * (bit of second qubit).
inline Eigen::Vector4cd pair_ket(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) {
    Eigen::Vector4cd out;
    for (int m = 0; m < 4; ++m)
        out(m) = a((m & 1) ? 1 : 0) * b((m & 2) ? 1 : 0);
    return out;
}

inline const std::vector<Eigen::Vector4cd> kParallelSpan{
    pair_ket(kets::H, kets::H), pair_ket(kets::V, kets::V)};

inline void push_branch(std::vector<DetectorBranch>& out, std::array<int, 4> clicks,
                        Projection&& proj, double weight) {
    const double p = weight * proj.prob;
    if (p <= 0.0)
        return;
    out.push_back({clicks, std::move(proj.state), p});
}

} // namespace detail

/**
 * @brief Post-selects two photons meeting at a polarizing beam splitter on
 * leaving through different output ports.
 *
 * A coincidence at the outputs occurs exactly when the photons carry equal
 * polarizations, so in post-selection the device acts as the projector onto
 * span{|HH>, |VV>}. Both photons stay in the register. Returns the kept
 * branch and its probability.
 */
inline Projection pbs_postselect(const PureState& psi, int qa, int qb) {
    return psi.project_span_pair(qa, qb, detail::kParallelSpan);
}

/**
 * @brief Detector-resolved branches of two photons meeting at a bare PBS.
 *
 * Since routing and detection both act in the H/V basis, every branch is a
 * product-basis projection and photon distinguishability plays no role.
 * Equal polarizations exit through separate ports, opposite polarizations
 * bunch into one port and fire both of its detectors.
 */
inline std::vector<DetectorBranch> pbs_apply(const PureState& psi, int qa, int qb) {
    using namespace detail;
    std::vector<DetectorBranch> out;
    push_branch(out, {1, 0, 1, 0}, psi.project_out_pair(qa, qb, pair_ket(kets::H, kets::H)), 1.0);
    push_branch(out, {0, 1, 0, 1}, psi.project_out_pair(qa, qb, pair_ket(kets::V, kets::V)), 1.0);
    push_branch(out, {1, 1, 0, 0}, psi.project_out_pair(qa, qb, pair_ket(kets::H, kets::V)), 1.0);
    push_branch(out, {0, 0, 1, 1}, psi.project_out_pair(qa, qb, pair_ket(kets::V, kets::H)), 1.0);
    return out;
}

/// Lone photon at a bare PBS: H passes, V crosses, detector labels follow
/// deterministically from the port geometry.
inline std::vector<DetectorBranch> pbs_apply_single(const PureState& psi, int q,
                                                    InputPort port) {
    using namespace detail;
    std::vector<DetectorBranch> out;
    if (port == InputPort::A) {
        push_branch(out, {1, 0, 0, 0}, psi.project_out(q, kets::H), 1.0);
        push_branch(out, {0, 0, 0, 1}, psi.project_out(q, kets::V), 1.0);
    } else {
        push_branch(out, {0, 0, 1, 0}, psi.project_out(q, kets::H), 1.0);
        push_branch(out, {0, 1, 0, 0}, psi.project_out(q, kets::V), 1.0);
    }
    return out;
}

} // namespace aprsim
