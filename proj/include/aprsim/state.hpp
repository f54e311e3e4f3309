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
 * @file state.hpp
 * Dense pure-state register of polarization qubits.
 *
 * Conventions used throughout the library:
 *  - qubit q corresponds to bit q of the amplitude index (little endian),
 *  - bit value 0 encodes |H>, bit value 1 encodes |V>,
 *  - ket strings such as "HV" list qubits left to right starting at qubit 0,
 *    so from_kets("HV") places H on qubit 0 and V on qubit 1.
 *
 * Circular polarizations follow R = (H + iV)/sqrt2, L = (H - iV)/sqrt2.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "aprsim/types.hpp"

namespace aprsim {

namespace kets {

inline const Eigen::Vector2cd H{1.0, 0.0};
inline const Eigen::Vector2cd V{0.0, 1.0};
inline const Eigen::Vector2cd D{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
inline const Eigen::Vector2cd A{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
inline const Eigen::Vector2cd R{1.0 / std::sqrt(2.0), cplx(0.0, 1.0 / std::sqrt(2.0))};
inline const Eigen::Vector2cd L{1.0 / std::sqrt(2.0), cplx(0.0, -1.0 / std::sqrt(2.0))};

/// Two-qubit Bell kets in the pair convention of project_out_pair: entry
/// index m encodes (bit of first qubit) + 2 * (bit of second qubit).
inline const Eigen::Vector4cd phi_plus{1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)};
inline const Eigen::Vector4cd phi_minus{1.0 / std::sqrt(2.0), 0.0, 0.0, -1.0 / std::sqrt(2.0)};
inline const Eigen::Vector4cd psi_plus{0.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0};
inline const Eigen::Vector4cd psi_minus{0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};

} // namespace kets

inline const Eigen::Matrix2cd kIdentity2 = Eigen::Matrix2cd::Identity();
inline const Eigen::Matrix2cd kPauliX = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
inline const Eigen::Matrix2cd kPauliY =
    (Eigen::Matrix2cd() << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0)).finished();
inline const Eigen::Matrix2cd kPauliZ = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();

namespace detail {

/// Branch probabilities below this are treated as exactly zero. Physical
/// branch weights in this library stay above 1e-12; squared roundoff sits
/// near 1e-32, so the gap is comfortable on both sides.
inline constexpr double prob_floor = 1e-28;

inline Eigen::Index strip_bit(Eigen::Index i, int q) {
    const Eigen::Index low = i & ((Eigen::Index(1) << q) - 1);
    return ((i >> (q + 1)) << q) | low;
}

} // namespace detail

class PureState;

/// Result of a projective operation: the collapsed register (normalized,
/// or the empty register when the branch has zero weight) together with
/// the squared weight of the branch.
struct Projection;

/**
 * @brief Complex amplitude vector over a register of polarization qubits.
 *
 * Instances are lightweight value types. The distinguished empty register
 * (is_empty() == true) marks a zero-probability branch; the zero-qubit
 * register is distinct from it and holds a single scalar amplitude.
 */
class PureState {
  public:
    /// Register of n qubits initialized to |H...H>.
    explicit PureState(int num_qubits) : num_qubits_{num_qubits} {
        check_width(num_qubits);
        amp_ = Eigen::VectorXcd::Zero(Eigen::Index(1) << num_qubits);
        amp_(0) = 1.0;
    }

    /// Takes ownership of an amplitude vector whose length must be a power
    /// of two; no normalization is applied.
    static PureState from_amplitudes(Eigen::VectorXcd amp) {
        int n = 0;
        while ((Eigen::Index(1) << n) < amp.size())
            ++n;
        if ((Eigen::Index(1) << n) != amp.size())
            throw std::invalid_argument("amplitude vector length must be a power of two");
        check_width(n);
        PureState s;
        s.num_qubits_ = n;
        s.amp_ = std::move(amp);
        return s;
    }

    /// Product state from a ket string over the alphabet HVDARL, one
    /// character per qubit starting at qubit 0.
    static PureState from_kets(const std::string& labels);

    /// The zero-probability marker state.
    static PureState empty_state() { return PureState{}; }

    bool is_empty() const { return num_qubits_ < 0; }
    int num_qubits() const { return num_qubits_; }
    Eigen::Index dim() const { return amp_.size(); }
    const Eigen::VectorXcd& amplitudes() const { return amp_; }

    double norm2() const { return amp_.squaredNorm(); }

    void normalize() {
        const double n2 = norm2();
        if (n2 < detail::prob_floor) {
            *this = empty_state();
            return;
        }
        amp_ /= std::sqrt(n2);
    }

    /// Applies a 2x2 operator to one qubit in place.
    void apply_single(int q, const Eigen::Matrix2cd& op) {
        check_qubit(q);
        const Eigen::Index stride = Eigen::Index(1) << q;
        for (Eigen::Index base = 0; base < dim(); base += 2 * stride) {
            for (Eigen::Index off = 0; off < stride; ++off) {
                const Eigen::Index i0 = base + off;
                const Eigen::Index i1 = i0 + stride;
                const cplx a0 = amp_(i0);
                const cplx a1 = amp_(i1);
                amp_(i0) = op(0, 0) * a0 + op(0, 1) * a1;
                amp_(i1) = op(1, 0) * a0 + op(1, 1) * a1;
            }
        }
    }

    /// Projects qubit q onto |ket> and keeps the qubit in the register.
    Projection project(int q, const Eigen::Vector2cd& ket) const;

    /// Projects qubit q onto |ket> and removes it from the register; qubits
    /// above q shift down by one.
    Projection project_out(int q, const Eigen::Vector2cd& ket) const;

    /// Projects qubits (qa, qb) onto a two-qubit ket and removes both.
    /// The ket entry at index m addresses (bit of qa) + 2 * (bit of qb).
    /// Remaining qubits close ranks while preserving their relative order.
    Projection project_out_pair(int qa, int qb, const Eigen::Vector4cd& ket) const;

    /// Projects qubits (qa, qb) onto the span of the given orthonormal
    /// two-qubit kets, keeping both qubits. Same index convention as
    /// project_out_pair.
    Projection project_span_pair(int qa, int qb,
                                 const std::vector<Eigen::Vector4cd>& span) const;

    /// Expectation value of a Pauli word, one character per qubit from the
    /// alphabet IXYZ with character position equal to qubit index.
    double expectation(const std::string& word) const {
        if (static_cast<int>(word.size()) != num_qubits_)
            throw std::invalid_argument("Pauli word length must match register width");
        PureState rotated = *this;
        for (int q = 0; q < num_qubits_; ++q) {
            switch (word[static_cast<size_t>(q)]) {
                case 'I': break;
                case 'X': rotated.apply_single(q, kPauliX); break;
                case 'Y': rotated.apply_single(q, kPauliY); break;
                case 'Z': rotated.apply_single(q, kPauliZ); break;
                default:
                    throw std::invalid_argument("Pauli word may only contain IXYZ");
            }
        }
        return amp_.dot(rotated.amp_).real();
    }

    /// Reduced density matrix over the listed qubits, traced over the rest.
    /// Output qubit j of the density matrix corresponds to keep[j].
    Eigen::MatrixXcd to_density(const std::vector<int>& keep) const {
        const int k = static_cast<int>(keep.size());
        for (int q : keep)
            check_qubit(q);
        std::vector<bool> kept(static_cast<size_t>(num_qubits_), false);
        for (int q : keep)
            kept[static_cast<size_t>(q)] = true;
        std::vector<int> rest;
        for (int q = 0; q < num_qubits_; ++q)
            if (!kept[static_cast<size_t>(q)])
                rest.push_back(q);

        const Eigen::Index dout = Eigen::Index(1) << k;
        const Eigen::Index drest = Eigen::Index(1) << rest.size();
        Eigen::MatrixXcd slices = Eigen::MatrixXcd::Zero(dout, drest);
        for (Eigen::Index i = 0; i < dim(); ++i) {
            Eigen::Index out = 0;
            for (int j = 0; j < k; ++j)
                out |= ((i >> keep[static_cast<size_t>(j)]) & 1) << j;
            Eigen::Index rem = 0;
            for (size_t j = 0; j < rest.size(); ++j)
                rem |= ((i >> rest[j]) & 1) << j;
            slices(out, rem) = amp_(i);
        }
        return slices * slices.adjoint();
    }

  private:
    PureState() : num_qubits_{-1} {}

    static void check_width(int n) {
        if (n < 0 || n > max_qubits)
            throw std::invalid_argument("register width must lie in [0, " +
                                        std::to_string(max_qubits) + "]");
    }

    void check_qubit(int q) const {
        if (is_empty())
            throw std::logic_error("operation on the empty register");
        if (q < 0 || q >= num_qubits_)
            throw std::invalid_argument("qubit index out of range");
    }

    int num_qubits_;
    Eigen::VectorXcd amp_;
};

struct Projection {
    PureState state;
    double prob;
};

/// Inner product <a|b>; registers must have equal width.
inline cplx inner(const PureState& a, const PureState& b) {
    if (a.num_qubits() != b.num_qubits())
        throw std::invalid_argument("inner product needs equal register widths");
    return a.amplitudes().dot(b.amplitudes());
}

/// Squared overlap |<a|b>|^2.
inline double overlap2(const PureState& a, const PureState& b) {
    return std::norm(inner(a, b));
}

/// Tensor product; qubits of a keep their indices, qubits of b shift up
/// by a.num_qubits().
inline PureState tensor(const PureState& a, const PureState& b) {
    if (a.is_empty() || b.is_empty())
        return PureState::empty_state();
    const Eigen::Index da = a.dim();
    const Eigen::Index db = b.dim();
    Eigen::VectorXcd out(da * db);
    for (Eigen::Index j = 0; j < db; ++j)
        out.segment(j * da, da) = b.amplitudes()(j) * a.amplitudes();
    return PureState::from_amplitudes(std::move(out));
}

inline PureState PureState::from_kets(const std::string& labels) {
    PureState s(static_cast<int>(labels.size()));
    for (size_t q = 0; q < labels.size(); ++q) {
        Eigen::Vector2cd k;
        switch (labels[q]) {
            case 'H': k = kets::H; break;
            case 'V': k = kets::V; break;
            case 'D': k = kets::D; break;
            case 'A': k = kets::A; break;
            case 'R': k = kets::R; break;
            case 'L': k = kets::L; break;
            default:
                throw std::invalid_argument("ket labels may only contain HVDARL");
        }
        const Eigen::Index stride = Eigen::Index(1) << q;
        for (Eigen::Index base = 0; base < s.dim(); base += 2 * stride) {
            for (Eigen::Index off = 0; off < stride; ++off) {
                const Eigen::Index i0 = base + off;
                const cplx a0 = s.amp_(i0);
                s.amp_(i0) = k(0) * a0;
                s.amp_(i0 + stride) = k(1) * a0;
            }
        }
    }
    return s;
}

inline Projection PureState::project(int q, const Eigen::Vector2cd& ket) const {
    check_qubit(q);
    PureState out = *this;
    const Eigen::Index stride = Eigen::Index(1) << q;
    double prob = 0.0;
    for (Eigen::Index base = 0; base < dim(); base += 2 * stride) {
        for (Eigen::Index off = 0; off < stride; ++off) {
            const Eigen::Index i0 = base + off;
            const Eigen::Index i1 = i0 + stride;
            const cplx c = std::conj(ket(0)) * amp_(i0) + std::conj(ket(1)) * amp_(i1);
            prob += std::norm(c);
            out.amp_(i0) = ket(0) * c;
            out.amp_(i1) = ket(1) * c;
        }
    }
    if (prob < detail::prob_floor)
        return {empty_state(), 0.0};
    out.amp_ /= std::sqrt(prob);
    return {std::move(out), prob};
}

inline Projection PureState::project_out(int q, const Eigen::Vector2cd& ket) const {
    check_qubit(q);
    Eigen::VectorXcd reduced = Eigen::VectorXcd::Zero(dim() / 2);
    const Eigen::Index stride = Eigen::Index(1) << q;
    double prob = 0.0;
    for (Eigen::Index base = 0; base < dim(); base += 2 * stride) {
        for (Eigen::Index off = 0; off < stride; ++off) {
            const Eigen::Index i0 = base + off;
            const cplx c =
                std::conj(ket(0)) * amp_(i0) + std::conj(ket(1)) * amp_(i0 + stride);
            prob += std::norm(c);
            reduced(detail::strip_bit(i0, q)) = c;
        }
    }
    if (prob < detail::prob_floor)
        return {empty_state(), 0.0};
    reduced /= std::sqrt(prob);
    return {from_amplitudes(std::move(reduced)), prob};
}

inline Projection PureState::project_out_pair(int qa, int qb,
                                              const Eigen::Vector4cd& ket) const {
    check_qubit(qa);
    check_qubit(qb);
    if (qa == qb)
        throw std::invalid_argument("pair projection needs two distinct qubits");
    const int lo = std::min(qa, qb);
    const int hi = std::max(qa, qb);
    const Eigen::Index ma = Eigen::Index(1) << qa;
    const Eigen::Index mb = Eigen::Index(1) << qb;
    Eigen::VectorXcd reduced = Eigen::VectorXcd::Zero(dim() / 4);
    double prob = 0.0;
    for (Eigen::Index j = 0; j < reduced.size(); ++j) {
        const Eigen::Index low = j & ((Eigen::Index(1) << lo) - 1);
        const Eigen::Index mid = (j >> lo) & ((Eigen::Index(1) << (hi - 1 - lo)) - 1);
        const Eigen::Index high = j >> (hi - 1);
        const Eigen::Index i00 = (high << (hi + 1)) | (mid << (lo + 1)) | low;
        cplx c = 0.0;
        for (int m = 0; m < 4; ++m) {
            const Eigen::Index i = i00 | ((m & 1) ? ma : 0) | ((m & 2) ? mb : 0);
            c += std::conj(ket(m)) * amp_(i);
        }
        prob += std::norm(c);
        reduced(j) = c;
    }
    if (prob < detail::prob_floor)
        return {empty_state(), 0.0};
    reduced /= std::sqrt(prob);
    return {from_amplitudes(std::move(reduced)), prob};
}

inline Projection PureState::project_span_pair(
    int qa, int qb, const std::vector<Eigen::Vector4cd>& span) const {
    check_qubit(qa);
    check_qubit(qb);
    if (qa == qb)
        throw std::invalid_argument("pair projection needs two distinct qubits");
    const int lo = std::min(qa, qb);
    const int hi = std::max(qa, qb);
    const Eigen::Index ma = Eigen::Index(1) << qa;
    const Eigen::Index mb = Eigen::Index(1) << qb;
    PureState out = *this;
    double prob = 0.0;
    for (Eigen::Index j = 0; j < dim() / 4; ++j) {
        const Eigen::Index low = j & ((Eigen::Index(1) << lo) - 1);
        const Eigen::Index mid = (j >> lo) & ((Eigen::Index(1) << (hi - 1 - lo)) - 1);
        const Eigen::Index high = j >> (hi - 1);
        const Eigen::Index i00 = (high << (hi + 1)) | (mid << (lo + 1)) | low;
        Eigen::Index idx[4];
        Eigen::Vector4cd v;
        for (int m = 0; m < 4; ++m) {
            idx[m] = i00 | ((m & 1) ? ma : 0) | ((m & 2) ? mb : 0);
            v(m) = amp_(idx[m]);
        }
        Eigen::Vector4cd kept = Eigen::Vector4cd::Zero();
        for (const auto& ket : span) {
            const cplx c = ket.dot(v);
            prob += std::norm(c);
            kept += ket * c;
        }
        for (int m = 0; m < 4; ++m)
            out.amp_(idx[m]) = kept(m);
    }
    if (prob < detail::prob_floor)
        return {empty_state(), 0.0};
    out.amp_ /= std::sqrt(prob);
    return {std::move(out), prob};
}

} // namespace aprsim
