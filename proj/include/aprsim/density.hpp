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
 * @file density.hpp
 * Mixed-state helpers on top of Eigen: fidelities, matrix square roots
 * and partial traces. Density matrices use the same little-endian qubit
 * convention as PureState.
 */
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <vector>

#include "aprsim/state.hpp"
#include "aprsim/types.hpp"

namespace aprsim {

/// Positive-semidefinite square root via spectral decomposition. Small
/// negative eigenvalues from roundoff are clamped to zero.
inline Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

/// Fidelity <psi|rho|psi> between a density matrix and a pure reference.
inline double fidelity(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& psi) {
    if (rho.rows() != psi.size())
        throw std::invalid_argument("dimension mismatch in fidelity");
    return std::real(psi.dot(rho * psi));
}

inline double fidelity(const Eigen::MatrixXcd& rho, const PureState& psi) {
    return fidelity(rho, psi.amplitudes());
}

/// Uhlmann fidelity [tr sqrt(sqrt(a) b sqrt(a))]^2 between two unit-trace
/// positive operators. Also used on normalized POVM elements, where both
/// arguments are divided by their traces first.
inline double uhlmann_fidelity(Eigen::MatrixXcd a, Eigen::MatrixXcd b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("dimension mismatch in uhlmann_fidelity");
    a /= a.trace().real();
    b /= b.trace().real();
    const Eigen::MatrixXcd sa = psd_sqrt(a);
    const Eigen::MatrixXcd inner = psd_sqrt(sa * b * sa);
    const double root = inner.trace().real();
    return root * root;
}

/// Partial trace of a multi-qubit density matrix onto the listed qubits;
/// output qubit j corresponds to keep[j].
inline Eigen::MatrixXcd partial_trace(const Eigen::MatrixXcd& rho, int num_qubits,
                                      const std::vector<int>& keep) {
    const Eigen::Index dim = Eigen::Index(1) << num_qubits;
    if (rho.rows() != dim || rho.cols() != dim)
        throw std::invalid_argument("density matrix does not match qubit count");
    std::vector<bool> kept(static_cast<size_t>(num_qubits), false);
    for (int q : keep) {
        if (q < 0 || q >= num_qubits)
            throw std::invalid_argument("qubit index out of range");
        kept[static_cast<size_t>(q)] = true;
    }
    std::vector<int> rest;
    for (int q = 0; q < num_qubits; ++q)
        if (!kept[static_cast<size_t>(q)])
            rest.push_back(q);

    const Eigen::Index dout = Eigen::Index(1) << keep.size();
    const Eigen::Index drest = Eigen::Index(1) << rest.size();
    auto expand = [&](Eigen::Index out, Eigen::Index rem) {
        Eigen::Index i = 0;
        for (size_t j = 0; j < keep.size(); ++j)
            i |= ((out >> j) & 1) << keep[j];
        for (size_t j = 0; j < rest.size(); ++j)
            i |= ((rem >> j) & 1) << rest[j];
        return i;
    };
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dout, dout);
    for (Eigen::Index r = 0; r < dout; ++r)
        for (Eigen::Index c = 0; c < dout; ++c)
            for (Eigen::Index rem = 0; rem < drest; ++rem)
                out(r, c) += rho(expand(r, rem), expand(c, rem));
    return out;
}

/// Projector |psi><psi| onto a pure state.
inline Eigen::MatrixXcd projector(const Eigen::VectorXcd& psi) {
    return psi * psi.adjoint();
}

inline Eigen::MatrixXcd projector(const PureState& psi) {
    return projector(psi.amplitudes());
}

/// Maximally mixed state on n qubits.
inline Eigen::MatrixXcd maximally_mixed(int num_qubits) {
    const Eigen::Index d = Eigen::Index(1) << num_qubits;
    return Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
}

} // namespace aprsim
