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
 * @file pcm.hpp
 * Passive-choice measurement station: a PBS sandwiched between half-wave
 * plates at 22.5 degrees on every input and output line, with polarization
 * resolving detection behind both output ports.
 *
 * The wave plates move routing into the D/A basis. Two-photon coincidences
 * then herald a Bell-state projection (onto Phi+ for equal detected
 * polarizations, Psi+ for opposite ones), while a single detector click
 * performs a D/A measurement of whichever photon arrived. Which of the two
 * roles the station plays is decided passively by the photon arrival
 * pattern, not by a switch.
 *
 * Port and detector naming follows optics.hpp: input a transmits toward
 * port L, input b toward port R, detector slots are (LH, LV, RH, RV). In
 * the repeater layouts input a always carries the GHZ-resource photon.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "aprsim/optics.hpp"
#include "aprsim/state.hpp"
#include "aprsim/types.hpp"

namespace aprsim {

/**
 * @brief Detector-resolved branch decomposition of two photons entering a
 * passive-choice station, one per input.
 *
 * The interference contrast v interpolates between fully indistinguishable
 * photons (v = 1) and fully distinguishable ones (v = 0). Coincidence
 * branches at contrast v apply the Bell-projection Kraus operators
 * <Phi+|/sqrt2 or <Psi+|/sqrt2; the distinguishable remainder routes each
 * photon independently, which randomizes the detected polarization labels.
 * Bunching branches are insensitive to v and either fire one detector
 * twice or both detectors of one port.
 *
 * Branch probabilities sum to the squared norm of the input. The two
 * station qubits are consumed; branch states hold the rest of the register.
 */
inline std::vector<DetectorBranch> cpbs_apply(const PureState& psi, int qa, int qb,
                                              double v = 1.0) {
    using namespace detail;
    if (v < 0.0 || v > 1.0)
        throw std::invalid_argument("interference contrast must lie in [0, 1]");
    std::vector<DetectorBranch> out;

    // Coherent coincidences: both photons transmit or both reflect, and the
    // two histories interfere in the detected polarization labels.
    push_branch(out, {1, 0, 1, 0}, psi.project_out_pair(qa, qb, kets::phi_plus), v / 2.0);
    push_branch(out, {0, 1, 0, 1}, psi.project_out_pair(qa, qb, kets::phi_plus), v / 2.0);
    push_branch(out, {1, 0, 0, 1}, psi.project_out_pair(qa, qb, kets::psi_plus), v / 2.0);
    push_branch(out, {0, 1, 1, 0}, psi.project_out_pair(qa, qb, kets::psi_plus), v / 2.0);

    // Distinguishable coincidences: the photons route independently in the
    // D/A basis and each picks a detector at random behind its port.
    if (v < 1.0) {
        for (const auto& bra : {pair_ket(kets::D, kets::D), pair_ket(kets::A, kets::A)}) {
            for (const auto& clicks : std::vector<std::array<int, 4>>{
                     {1, 0, 1, 0}, {1, 0, 0, 1}, {0, 1, 1, 0}, {0, 1, 0, 1}})
                push_branch(out, clicks, psi.project_out_pair(qa, qb, bra), (1.0 - v) / 4.0);
        }
    }

    // Bunching: both photons leave through one port with orthogonal
    // polarizations there, so each fires either detector independently.
    const auto left = pair_ket(kets::D, kets::A);
    push_branch(out, {2, 0, 0, 0}, psi.project_out_pair(qa, qb, left), 0.25);
    push_branch(out, {0, 2, 0, 0}, psi.project_out_pair(qa, qb, left), 0.25);
    push_branch(out, {1, 1, 0, 0}, psi.project_out_pair(qa, qb, left), 0.5);
    const auto right = pair_ket(kets::A, kets::D);
    push_branch(out, {0, 0, 2, 0}, psi.project_out_pair(qa, qb, right), 0.25);
    push_branch(out, {0, 0, 0, 2}, psi.project_out_pair(qa, qb, right), 0.25);
    push_branch(out, {0, 0, 1, 1}, psi.project_out_pair(qa, qb, right), 0.5);
    return out;
}

/**
 * @brief Lone photon entering a passive-choice station.
 *
 * The input wave plate turns D/A into the routing basis, so the photon
 * reaches port L on its D component and port R on its A component when it
 * arrives on input a; input b swaps the ports. The output wave plate
 * leaves the routed photon diagonal again, so it picks either detector of
 * its port with equal probability.
 */
inline std::vector<DetectorBranch> cpbs_apply_single(const PureState& psi, int q,
                                                     InputPort port) {
    using namespace detail;
    std::vector<DetectorBranch> out;
    const bool a_side = port == InputPort::A;
    // D component toward L from input a, toward R from input b.
    {
        Projection d = psi.project_out(q, kets::D);
        Projection d2 = d;
        push_branch(out, a_side ? std::array<int, 4>{1, 0, 0, 0} : std::array<int, 4>{0, 0, 1, 0},
                    std::move(d), 0.5);
        push_branch(out, a_side ? std::array<int, 4>{0, 1, 0, 0} : std::array<int, 4>{0, 0, 0, 1},
                    std::move(d2), 0.5);
    }
    {
        Projection a = psi.project_out(q, kets::A);
        Projection a2 = a;
        push_branch(out, a_side ? std::array<int, 4>{0, 0, 1, 0} : std::array<int, 4>{1, 0, 0, 0},
                    std::move(a), 0.5);
        push_branch(out, a_side ? std::array<int, 4>{0, 0, 0, 1} : std::array<int, 4>{0, 1, 0, 0},
                    std::move(a2), 0.5);
    }
    return out;
}

/// Measurement role a passive-choice station announces for one pulse.
enum class PcmTag {
    BellPhiPlus,
    BellPsiPlus,
    SingleLeft,
    SingleRight,
    NoDecision,
};

inline const char* tag_name(PcmTag t) {
    switch (t) {
        case PcmTag::BellPhiPlus: return "phi_plus";
        case PcmTag::BellPsiPlus: return "psi_plus";
        case PcmTag::SingleLeft: return "single_left";
        case PcmTag::SingleRight: return "single_right";
        case PcmTag::NoDecision: return "no_decision";
    }
    return "?";
}

inline PcmTag tag_from_name(const std::string& s) {
    if (s == "phi_plus") return PcmTag::BellPhiPlus;
    if (s == "psi_plus") return PcmTag::BellPsiPlus;
    if (s == "single_left") return PcmTag::SingleLeft;
    if (s == "single_right") return PcmTag::SingleRight;
    if (s == "no_decision") return PcmTag::NoDecision;
    throw config_error("unknown station tag: " + s);
}

/// Threshold detector readings for one pulse at one station, slot order
/// (LH, LV, RH, RV). Threshold detectors cannot count photons, so a
/// double hit on one slot reads the same as a single hit.
struct ClickPattern {
    bool lh = false, lv = false, rh = false, rv = false;

    static ClickPattern from_counts(const std::array<int, 4>& n) {
        return {n[0] > 0, n[1] > 0, n[2] > 0, n[3] > 0};
    }
    int total() const { return int(lh) + int(lv) + int(rh) + int(rv); }
};

/// Station verdict: the announced tag plus the Pauli correction ('I', 'X'
/// or 'Z') that downstream processing owes to the stored pair when this
/// outcome occurs inside the repeater protocol. NoDecision carries '-'.
struct PcmOutcome {
    PcmTag tag;
    char correction;
};

/**
 * @brief Classifies one pulse of detector readings.
 *
 * One click per port announces a Bell projection: equal detected
 * polarizations mean Phi+ (no correction), opposite ones mean Psi+ (X).
 * A single click announces a D/A measurement of a lone photon: port L is
 * the D outcome (no correction), port R is the A outcome (Z). Anything
 * else, including both detectors of one port firing, is NoDecision.
 */
inline PcmOutcome classify(const ClickPattern& c) {
    const int left = int(c.lh) + int(c.lv);
    const int right = int(c.rh) + int(c.rv);
    if (left == 1 && right == 1) {
        const bool equal = (c.lh && c.rh) || (c.lv && c.rv);
        return equal ? PcmOutcome{PcmTag::BellPhiPlus, 'I'}
                     : PcmOutcome{PcmTag::BellPsiPlus, 'X'};
    }
    if (left + right == 1) {
        return left == 1 ? PcmOutcome{PcmTag::SingleLeft, 'I'}
                         : PcmOutcome{PcmTag::SingleRight, 'Z'};
    }
    return {PcmTag::NoDecision, '-'};
}

/**
 * @brief Applies a decisive station outcome to a register, as used when
 * composing swap chains by hand.
 *
 * Bell tags consume (ghz_qubit, partner_qubit); single tags consume only
 * ghz_qubit and require partner_qubit = -1. The Pauli correction owed by
 * the outcome is applied to correction_target first (pass -1 to skip it),
 * which commutes with the projection since the qubits are distinct.
 * Consumed qubits leave the register, so indices above them shift down.
 */
inline Projection apply_outcome(const PureState& psi, const PcmOutcome& outcome,
                                int ghz_qubit, int partner_qubit,
                                int correction_target) {
    const bool bell =
        outcome.tag == PcmTag::BellPhiPlus || outcome.tag == PcmTag::BellPsiPlus;
    if (outcome.tag == PcmTag::NoDecision)
        throw std::invalid_argument("NoDecision has no projective action");
    if (!bell && partner_qubit != -1)
        throw std::invalid_argument("single-click outcomes take no partner qubit");
    if (correction_target >= 0 &&
        (correction_target == ghz_qubit || correction_target == partner_qubit))
        throw std::invalid_argument("correction target overlaps measured qubits");

    PureState work = psi;
    if (correction_target >= 0) {
        if (outcome.correction == 'X')
            work.apply_single(correction_target, kPauliX);
        else if (outcome.correction == 'Z')
            work.apply_single(correction_target, kPauliZ);
    }
    switch (outcome.tag) {
        case PcmTag::BellPhiPlus:
            return work.project_out_pair(ghz_qubit, partner_qubit, kets::phi_plus);
        case PcmTag::BellPsiPlus:
            return work.project_out_pair(ghz_qubit, partner_qubit, kets::psi_plus);
        case PcmTag::SingleLeft:
            return work.project_out(ghz_qubit, kets::D);
        case PcmTag::SingleRight:
            return work.project_out(ghz_qubit, kets::A);
        default:
            break;
    }
    throw std::logic_error("unreachable");
}

/// POVM of the station over the two input qubits, basis index
/// m = (bit of input a) + 2 * (bit of input b).
struct PcmPovm {
    std::map<PcmTag, Eigen::Matrix4cd> elements;
};

/**
 * @brief Analytic station POVM at interference contrast v.
 *
 * Derived by summing cpbs_apply branch probabilities per announced tag.
 * The bunching terms make the single-click elements half-weight product
 * projectors, and the element sum is the identity for every v.
 */
inline PcmPovm ideal_povm(double v) {
    using detail::pair_ket;
    if (v < 0.0 || v > 1.0)
        throw std::invalid_argument("interference contrast must lie in [0, 1]");
    auto proj4 = [](const Eigen::Vector4cd& k) -> Eigen::Matrix4cd {
        return k * k.adjoint();
    };
    const Eigen::Matrix4cd dephased =
        0.5 * (proj4(pair_ket(kets::D, kets::D)) + proj4(pair_ket(kets::A, kets::A)));
    PcmPovm povm;
    povm.elements[PcmTag::BellPhiPlus] = v * proj4(kets::phi_plus) + (1.0 - v) * dephased;
    povm.elements[PcmTag::BellPsiPlus] = v * proj4(kets::psi_plus) + (1.0 - v) * dephased;
    povm.elements[PcmTag::SingleLeft] = 0.5 * proj4(pair_ket(kets::D, kets::A));
    povm.elements[PcmTag::SingleRight] = 0.5 * proj4(pair_ket(kets::A, kets::D));
    povm.elements[PcmTag::NoDecision] = 0.5 * proj4(pair_ket(kets::D, kets::A)) +
                                        0.5 * proj4(pair_ket(kets::A, kets::D));
    return povm;
}

} // namespace aprsim
