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
 * @file tomo.hpp
 * Synthetic measurement counts and maximum-likelihood reconstruction of
 * density matrices and detector outcome sets, plus the correlator-based
 * Bell fidelity estimator.
 */

#ifndef APRSIM_TOMO_HPP
#define APRSIM_TOMO_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "aprsim/density.hpp"
#include "aprsim/pcm.hpp"
#include "aprsim/rng.hpp"
#include "aprsim/state.hpp"
#include "aprsim/types.hpp"

namespace aprsim {

// ---------------------------------------------------------------------------
// Measurement settings and records
// ---------------------------------------------------------------------------

enum class Basis { X, Y, Z };

inline char basis_letter(Basis b) {
    switch (b) {
        case Basis::X: return 'X';
        case Basis::Y: return 'Y';
        default: return 'Z';
    }
}

/// One local product basis per qubit; the 3^n settings of this form are
/// tomographically complete because orthogonal outcomes of each setting
/// are collected simultaneously.
struct TomographySetting {
    std::vector<Basis> bases;

    std::string label() const {
        std::string s;
        for (Basis b : bases)
            s += basis_letter(b);
        return s;
    }
};

/// Outcome histogram of one setting. Outcome index o assigns qubit q the
/// eigenstate selected by bit q of o: 0 is the +1 eigenstate (H, D or R),
/// 1 the -1 eigenstate (V, A or L).
struct TomographyRecord {
    TomographySetting setting;
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts)
            n += c;
        return n;
    }
};

inline std::vector<TomographySetting> all_settings(int num_qubits) {
    std::vector<TomographySetting> out;
    int total = 1;
    for (int q = 0; q < num_qubits; ++q)
        total *= 3;
    for (int code = 0; code < total; ++code) {
        TomographySetting s;
        int c = code;
        for (int q = 0; q < num_qubits; ++q) {
            s.bases.push_back(static_cast<Basis>(c % 3));
            c /= 3;
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline const Eigen::Vector2cd& basis_eigenket(Basis b, int bit) {
    switch (b) {
        case Basis::X: return bit ? kets::A : kets::D;
        case Basis::Y: return bit ? kets::L : kets::R;
        default: return bit ? kets::V : kets::H;
    }
}

/// Little-endian product ket: qubit 0 occupies the lowest index bit.
inline Eigen::VectorXcd product_ket(const std::vector<Eigen::Vector2cd>& factors) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Ones(1);
    for (const auto& f : factors)
        acc = Eigen::kroneckerProduct(f, acc).eval();
    return acc;
}

inline Eigen::VectorXcd outcome_ket(const TomographySetting& s, int outcome) {
    std::vector<Eigen::Vector2cd> factors;
    for (size_t q = 0; q < s.bases.size(); ++q)
        factors.push_back(basis_eigenket(s.bases[q], (outcome >> q) & 1));
    return product_ket(factors);
}

// ---------------------------------------------------------------------------
// Probe states for detector tomography
// ---------------------------------------------------------------------------

/// Product preparation labelled with one of {H, V, D, R} per qubit,
/// qubit 0 first.
struct ProbeState {
    std::string labels;
    Eigen::VectorXcd ket;
};

inline ProbeState probe_state(const std::string& labels) {
    std::vector<Eigen::Vector2cd> factors;
    for (char c : labels)
        switch (c) {
            case 'H': factors.push_back(kets::H); break;
            case 'V': factors.push_back(kets::V); break;
            case 'D': factors.push_back(kets::D); break;
            case 'R': factors.push_back(kets::R); break;
            default: throw config_error("probe labels must be drawn from {H, V, D, R}");
        }
    return {labels, product_ket(factors)};
}

inline std::vector<ProbeState> all_probes(int num_qubits) {
    static const char letters[4] = {'H', 'V', 'D', 'R'};
    int total = 1;
    for (int q = 0; q < num_qubits; ++q)
        total *= 4;
    std::vector<ProbeState> out;
    for (int code = 0; code < total; ++code) {
        std::string labels;
        int c = code;
        for (int q = 0; q < num_qubits; ++q) {
            labels += letters[c % 4];
            c /= 4;
        }
        out.push_back(probe_state(labels));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

namespace detail {

inline int qubits_of_dim(Eigen::Index dim) {
    int n = 0;
    while ((Eigen::Index(1) << n) < dim)
        ++n;
    if ((Eigen::Index(1) << n) != dim)
        throw config_error("operator dimension must be a power of two");
    return n;
}

inline std::vector<std::uint64_t> multinomial(const std::vector<double>& probs,
                                              std::uint64_t shots, TrialRng& rng) {
    std::vector<std::uint64_t> counts(probs.size(), 0);
    for (std::uint64_t s = 0; s < shots; ++s) {
        double u = rng.uniform();
        size_t pick = probs.size() - 1;
        for (size_t i = 0; i < probs.size(); ++i) {
            if (u < probs[i]) {
                pick = i;
                break;
            }
            u -= probs[i];
        }
        ++counts[pick];
    }
    return counts;
}

} // namespace detail

/// Multinomial Born-rule draw for one setting; the stream is derived from
/// the setting so every setting of a scan sees fresh randomness under a
/// single user seed.
inline TomographyRecord simulate_counts(const Eigen::MatrixXcd& rho,
                                        const TomographySetting& setting,
                                        std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1)
        throw config_error("shot count must be positive");
    const int n = detail::qubits_of_dim(rho.rows());
    if (static_cast<size_t>(n) != setting.bases.size() || rho.rows() != rho.cols())
        throw config_error("setting width does not match the state dimension");
    const int dim = 1 << n;
    std::vector<double> probs(static_cast<size_t>(dim));
    double norm = 0.0;
    for (int o = 0; o < dim; ++o) {
        const Eigen::VectorXcd k = outcome_ket(setting, o);
        probs[static_cast<size_t>(o)] = std::max(0.0, (k.adjoint() * rho * k)(0).real());
        norm += probs[static_cast<size_t>(o)];
    }
    if (!(norm > 0.0))
        throw config_error("state assigns zero probability to every outcome");
    for (double& p : probs)
        p /= norm;

    std::uint64_t stream = 0;
    for (Basis b : setting.bases)
        stream = stream * 3 + static_cast<std::uint64_t>(b);
    TrialRng rng(seed, 0x70D0ull ^ stream);
    return {setting, detail::multinomial(probs, shots, rng)};
}

/// Born-rule draw of station verdicts for one probe preparation.
inline std::map<PcmTag, std::uint64_t> simulate_probe_counts(const PcmPovm& povm,
                                                             const ProbeState& probe,
                                                             std::uint64_t shots,
                                                             std::uint64_t seed) {
    if (shots < 1)
        throw config_error("shot count must be positive");
    std::vector<PcmTag> tags;
    std::vector<double> probs;
    double norm = 0.0;
    for (const auto& [tag, el] : povm.elements) {
        tags.push_back(tag);
        const double p = std::max(0.0, (probe.ket.adjoint() * el * probe.ket)(0).real());
        probs.push_back(p);
        norm += p;
    }
    if (!(norm > 0.0))
        throw config_error("probe has zero detection probability");
    for (double& p : probs)
        p /= norm;

    std::uint64_t stream = 1;
    for (char c : probe.labels)
        stream = stream * 131 + static_cast<std::uint64_t>(c);
    TrialRng rng(seed, 0x90F0ull ^ stream);
    const auto counts = detail::multinomial(probs, shots, rng);
    std::map<PcmTag, std::uint64_t> out;
    for (size_t i = 0; i < tags.size(); ++i)
        out[tags[i]] = counts[i];
    return out;
}

// ---------------------------------------------------------------------------
// Maximum-likelihood state reconstruction
// ---------------------------------------------------------------------------

struct MleStateResult {
    Eigen::MatrixXcd rho;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Iterative R-rho-R fixed point with a diluted fallback step whenever a
/// full step would lower the likelihood. Stops once the gain drops below
/// 1e-10 relative to the log-likelihood magnitude, which matches the
/// floating-point resolution of the objective, or after 10^4 iterations.
inline MleStateResult mle_state(const std::vector<TomographyRecord>& records) {
    if (records.empty())
        throw config_error("state tomography needs at least one record");
    const size_t n = records.front().setting.bases.size();
    const int dim = 1 << n;
    for (const auto& r : records)
        if (r.setting.bases.size() != n ||
            r.counts.size() != static_cast<size_t>(dim))
            throw config_error("tomography records disagree on the qubit count");

    Eigen::MatrixXcd kets(0, dim);
    Eigen::VectorXd freq(0);
    for (const auto& r : records) {
        if (r.total() == 0)
            continue;
        const Eigen::Index base = kets.rows();
        kets.conservativeResize(base + dim, Eigen::NoChange);
        freq.conservativeResize(base + dim);
        for (int o = 0; o < dim; ++o) {
            kets.row(base + o) = outcome_ket(r.setting, o).transpose();
            freq(base + o) = static_cast<double>(r.counts[static_cast<size_t>(o)]);
        }
    }
    const Eigen::Index m = kets.rows();
    if (m == 0)
        throw config_error("tomography records are rank deficient: no counts");
    Eigen::MatrixXcd span(m, static_cast<Eigen::Index>(dim) * dim);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::MatrixXcd proj =
            kets.row(i).transpose() * kets.row(i).conjugate();
        span.row(i) = Eigen::Map<const Eigen::VectorXcd>(proj.data(), proj.size());
    }
    if (Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>(span).rank() <
        static_cast<Eigen::Index>(dim) * dim)
        throw config_error(
            "tomography records are rank deficient: settings with counts do "
            "not span the operator space");

    const double total = freq.sum();
    auto born = [&](const Eigen::MatrixXcd& rho) -> Eigen::VectorXd {
        return ((kets.conjugate() * rho).cwiseProduct(kets))
            .rowwise()
            .sum()
            .real()
            .cwiseMax(1e-300);
    };
    auto loglike = [&](const Eigen::VectorXd& p) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (freq(i) > 0.0)
                ll += freq(i) * std::log(p(i));
        return ll;
    };
    auto r_op = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXcd {
        const Eigen::VectorXcd c = (freq.cwiseQuotient(p) / total).cast<cplx>();
        return kets.transpose() * c.asDiagonal() * kets.conjugate();
    };

    MleStateResult res;
    res.rho = Eigen::MatrixXcd::Identity(dim, dim) / dim;
    Eigen::VectorXd p = born(res.rho);
    res.log_likelihood = loglike(p);
    const int max_iter = 10000;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        const Eigen::MatrixXcd r = r_op(p);
        Eigen::MatrixXcd cand = r * res.rho * r;
        cand = 0.5 * (cand + cand.adjoint().eval());
        cand /= cand.trace().real();
        Eigen::VectorXd pc = born(cand);
        double llc = loglike(pc);
        double eps = 1.0;
        while (llc < res.log_likelihood && eps > 1e-6) {
            eps *= 0.5;
            const Eigen::MatrixXcd step =
                Eigen::MatrixXcd::Identity(dim, dim) + eps * r;
            cand = step * res.rho * step.adjoint();
            cand = 0.5 * (cand + cand.adjoint().eval());
            cand /= cand.trace().real();
            pc = born(cand);
            llc = loglike(pc);
        }
        const double gain = llc - res.log_likelihood;
        if (gain >= 0.0) {
            res.rho = std::move(cand);
            p = std::move(pc);
            res.log_likelihood = llc;
        }
        if (std::abs(gain) < 1e-10 * (1.0 + std::abs(res.log_likelihood))) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Maximum-likelihood detector reconstruction
// ---------------------------------------------------------------------------

struct PovmProbeRecord {
    ProbeState probe;
    std::map<PcmTag, std::uint64_t> counts;
};

struct MlePovmResult {
    PcmPovm povm;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Iterative detector tomography: each step conjugates the elements with
/// their likelihood gradients and restores completeness through the
/// inverse square root of the summed update, which keeps every element
/// positive and the set summing to the identity.
inline MlePovmResult mle_povm(const std::vector<PovmProbeRecord>& records) {
    if (records.empty())
        throw config_error("detector tomography needs at least one probe");
    const Eigen::Index dim = records.front().probe.ket.size();
    std::vector<PcmTag> tags;
    for (const auto& [tag, c] : records.front().counts)
        tags.push_back(tag);
    const size_t nk = tags.size();
    if (nk < 2)
        throw config_error("detector tomography needs at least two outcomes");
    for (const auto& r : records)
        if (r.probe.ket.size() != dim || r.counts.size() != nk)
            throw config_error("probe records disagree on shape");

    Eigen::MatrixXcd span(static_cast<Eigen::Index>(records.size()), dim * dim);
    for (size_t l = 0; l < records.size(); ++l) {
        const Eigen::MatrixXcd proj =
            records[l].probe.ket * records[l].probe.ket.adjoint();
        span.row(static_cast<Eigen::Index>(l)) =
            Eigen::Map<const Eigen::VectorXcd>(proj.data(), proj.size());
    }
    if (Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>(span).rank() < dim * dim)
        throw config_error("probe states do not span the operator space");

    std::vector<Eigen::MatrixXcd> pi(
        nk, Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(nk));
    auto probs = [&](size_t l, size_t k) {
        const auto& ket = records[l].probe.ket;
        return std::max(1e-300, (ket.adjoint() * pi[k] * ket)(0).real());
    };
    auto loglike = [&]() {
        double ll = 0.0;
        for (size_t l = 0; l < records.size(); ++l)
            for (size_t k = 0; k < nk; ++k) {
                const double f =
                    static_cast<double>(records[l].counts.at(tags[k]));
                if (f > 0.0)
                    ll += f * std::log(probs(l, k));
            }
        return ll;
    };

    MlePovmResult res;
    res.log_likelihood = loglike();
    // with unit contrast the optimum sits on the boundary of the positive
    // cone and the fixed point iteration slows to a crawl there, so the
    // detector loop gets a much larger budget than the state loop
    const int max_iter = 50000;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        std::vector<Eigen::MatrixXcd> r(nk,
                                        Eigen::MatrixXcd::Zero(dim, dim));
        for (size_t l = 0; l < records.size(); ++l) {
            const Eigen::MatrixXcd proj =
                records[l].probe.ket * records[l].probe.ket.adjoint();
            for (size_t k = 0; k < nk; ++k) {
                const double f =
                    static_cast<double>(records[l].counts.at(tags[k]));
                if (f > 0.0)
                    r[k] += (f / probs(l, k)) * proj;
            }
        }
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(dim, dim);
        for (size_t k = 0; k < nk; ++k)
            g += r[k] * pi[k] * r[k];
        g = 0.5 * (g + g.adjoint().eval());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
        const double floor = es.eigenvalues().maxCoeff() * 1e-14;
        Eigen::VectorXd inv_sqrt = es.eigenvalues();
        for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i)
            inv_sqrt(i) = inv_sqrt(i) > floor ? 1.0 / std::sqrt(inv_sqrt(i)) : 0.0;
        const Eigen::MatrixXcd lam_inv = es.eigenvectors() *
                                         inv_sqrt.asDiagonal() *
                                         es.eigenvectors().adjoint();
        for (size_t k = 0; k < nk; ++k) {
            pi[k] = lam_inv * r[k] * pi[k] * r[k] * lam_inv;
            pi[k] = 0.5 * (pi[k] + pi[k].adjoint().eval());
        }
        const double ll = loglike();
        const double gain = ll - res.log_likelihood;
        res.log_likelihood = ll;
        if (std::abs(gain) < 1e-10 * (1.0 + std::abs(ll))) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    for (size_t k = 0; k < nk; ++k)
        res.povm.elements[tags[k]] = pi[k];
    return res;
}

// ---------------------------------------------------------------------------
// Fidelity estimators
// ---------------------------------------------------------------------------

/// Bell-target fidelity from the three diagonal correlators,
/// (1 + xx - yy + zz) / 4.
inline double pauli_fidelity(double xx, double yy, double zz) {
    return (1.0 + xx - yy + zz) / 4.0;
}

/// Trace-normalized overlap of a POVM element with a pure target.
inline double povm_fidelity(const Eigen::MatrixXcd& element,
                            const Eigen::VectorXcd& target) {
    const double tr = element.trace().real();
    if (!(tr > 1e-14))
        throw config_error("POVM element has vanishing trace");
    return ((target.adjoint() * element * target)(0).real()) / tr;
}

} // namespace aprsim

#endif // APRSIM_TOMO_HPP
