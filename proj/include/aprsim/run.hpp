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
 * @file run.hpp
 * Protocol runs over a full bench: exhaustive enumeration of emission and
 * survival configurations, importance-sampled Monte Carlo trials, and the
 * derived figures (registration rates, final-pair states, fidelities,
 * rate ratios).
 */
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aprsim/engine.hpp"
#include "aprsim/layout.hpp"
#include "aprsim/noise.hpp"
#include "aprsim/rng.hpp"
#include "aprsim/sources.hpp"
#include "aprsim/state.hpp"

namespace aprsim {

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// One row of the registered-event table: which verdict each station gave,
/// which two lines carry the surviving pair and which Pauli fixes it up.
struct FinalPairRecord {
    std::string key;
    std::map<std::string, std::string> outcomes;
    int alice = -1;
    int bob = -1;
    char correction = 'I';
};

struct ComboOutcome {
    FinalPairRecord record;
    double prob = 0.0;
    double std_error = 0.0;
    bool has_state = false;
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero(); ///< normalized, correction applied
    double fidelity = 0.0; ///< to the Bell target, after correction
};

struct PairSummary {
    int alice = -1;
    int bob = -1;
    double prob = 0.0;
    double fidelity = 0.0;
};

struct NetworkRunResult {
    std::string method;
    double eightfold_prob = 0.0;
    double std_error = 0.0;
    uint64_t trials = 0;
    std::vector<ComboOutcome> combos;
    std::vector<PairSummary> pairs;
    std::map<std::string, double> diagnostics;
    /// Registered probability as a polynomial in the emission weights:
    /// coefficient of w0^n0 w1^n1 w2^n2, keyed by (n0, n1, n2). Filled by
    /// the enumerator only; it lets rate scans reuse one enumeration
    /// across emission probabilities.
    std::map<std::array<int, 3>, double> emission_poly;
};

inline std::vector<FinalPairRecord> final_pair_table(const ExperimentLayout& l) {
    const auto slots = detail::SlotTable::build(l, false);
    std::vector<FinalPairRecord> rows;
    for (const auto& ev : detail::build_pair_events(l, slots)) {
        FinalPairRecord r;
        r.key = ev.key;
        r.outcomes = ev.outcomes;
        r.alice = ev.alice;
        r.bob = ev.bob;
        r.correction = ev.correction;
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace detail {

inline Eigen::Matrix4cd apply_pair_correction(const Eigen::Matrix4cd& rho, char c) {
    Eigen::Matrix2cd op;
    switch (c) {
        case 'I': return rho;
        case 'X': op = kPauliX; break;
        case 'Z': op = kPauliZ; break;
        case 'Y': op = kPauliY; break;
        default: throw std::invalid_argument("unknown correction");
    }
    const Eigen::Matrix4cd full = Eigen::kroneckerProduct(op, Eigen::Matrix2cd::Identity());
    return full * rho * full.adjoint();
}

inline NetworkRunResult finalize_result(const EngineContext& ctx, std::string method,
                                        const std::vector<double>& prob,
                                        const std::vector<double>& err,
                                        const std::vector<Eigen::Matrix4cd>& rho,
                                        bool with_states, double false_bell,
                                        double false_single, double merged) {
    NetworkRunResult res;
    res.method = std::move(method);
    const auto& events = ctx.events();
    const Eigen::Vector4cd bell = kets::phi_plus;
    std::map<std::pair<int, int>, PairSummary> pairs;
    for (size_t ci = 0; ci < events.size(); ++ci) {
        const auto& ev = events[ci];
        ComboOutcome co;
        co.record.key = ev.key;
        co.record.outcomes = ev.outcomes;
        co.record.alice = ev.alice;
        co.record.bob = ev.bob;
        co.record.correction = ev.correction;
        co.prob = prob[ci];
        co.std_error = err.empty() ? 0.0 : err[ci];
        res.eightfold_prob += co.prob;
        if (with_states && ctx.pair_mode() && co.prob > 0.0) {
            const Eigen::Matrix4cd fixed =
                apply_pair_correction(rho[ci], ev.correction);
            const double tr = fixed.trace().real();
            if (tr > 0.0) {
                co.rho = fixed / tr;
                co.fidelity = std::real(bell.dot(co.rho * bell));
                co.has_state = true;
            }
        }
        if (ctx.pair_mode()) {
            auto& ps = pairs[{ev.alice, ev.bob}];
            ps.alice = ev.alice;
            ps.bob = ev.bob;
            ps.prob += co.prob;
            ps.fidelity += co.fidelity * co.prob;
        }
        res.combos.push_back(std::move(co));
    }
    for (auto& [key, ps] : pairs) {
        if (ps.prob > 0.0)
            ps.fidelity /= ps.prob;
        res.pairs.push_back(ps);
    }
    res.diagnostics["false_bell"] = false_bell;
    res.diagnostics["false_single"] = false_single;
    res.diagnostics["merged_rejected"] = merged;
    const double tot = res.eightfold_prob;
    res.diagnostics["false_bell_fraction"] = tot > 0.0 ? false_bell / tot : 0.0;
    res.diagnostics["false_single_fraction"] = tot > 0.0 ? false_single / tot : 0.0;
    return res;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

struct EnumerateOptions {
    bool with_states = true;
    long long budget = 100000000;
};

/// Sums the registered probability of every event over all emission
/// patterns, survival masks and classical fill assignments. Exact up to
/// the model's own approximations; cost grows with the photon count, and
/// the quantum branch budget guards against pathological layouts.
inline NetworkRunResult run_enumerate(const ExperimentLayout& l, const SourceModel& src,
                                      const NoiseModel& noise,
                                      const EnumerateOptions& opts = {}) {
    l.validate();
    src.validate();
    noise.validate();
    detail::EngineContext ctx(l, noise, opts.with_states, opts.budget);
    const auto& events = ctx.events();
    const auto w = emission_weights(src);
    const double w2 = src.max_pairs >= 2 ? w[2] : 0.0;

    std::vector<int> photons;
    for (const auto& s : l.sources) {
        photons.push_back(s.photon_a);
        photons.push_back(s.photon_b);
    }
    const size_t np = photons.size();
    const size_t ns = l.sources.size();
    if (ns > 16)
        throw config_error("too many sources to enumerate");

    std::vector<double> prob(events.size(), 0.0);
    std::vector<Eigen::Matrix4cd> rho(events.size(), Eigen::Matrix4cd::Zero());
    double false_bell = 0.0, false_single = 0.0, merged = 0.0;
    std::map<std::array<int, 3>, double> poly;

    std::vector<double> surv(ns), f1(ns), f2(ns), fz(ns);
    std::vector<char> need(ns);

    for (uint64_t mi = 0; mi < (uint64_t(1) << np); ++mi) {
        uint32_t mask = 0;
        for (size_t j = 0; j < np; ++j)
            if ((mi >> j) & 1)
                mask |= 1u << photons[j];
        bool possible = true;
        for (size_t s = 0; s < ns; ++s) {
            const auto& sp = l.sources[s];
            const bool pa = (mask >> sp.photon_a) & 1;
            const bool pb = (mask >> sp.photon_b) & 1;
            const double ea = noise.eta_for(sp.photon_a);
            const double eb = noise.eta_for(sp.photon_b);
            surv[s] = (pa ? ea : 1.0 - ea) * (pb ? eb : 1.0 - eb);
            need[s] = pa || pb;
            f1[s] = w[1] * surv[s];
            f2[s] = w2 * surv[s];
            fz[s] = w[0] + f1[s];
            if (need[s] && f1[s] <= 0.0 && f2[s] <= 0.0)
                possible = false;
        }
        if (!possible)
            continue;
        std::shared_ptr<const detail::MaskEval> me;

        for (uint32_t esig = 0; esig < (uint32_t(1) << ns); ++esig) {
            double cw = 1.0;
            for (size_t s = 0; s < ns; ++s)
                cw *= (esig >> s) & 1 ? f2[s] : (need[s] ? f1[s] : fz[s]);
            if (!(cw > 0.0))
                continue;

            std::vector<detail::ExtraPhoton> extras;
            uint32_t reach = 0;
            for (size_t s = 0; s < ns; ++s)
                if ((esig >> s) & 1)
                    for (auto& e : ctx.source_extras(l.sources[s])) {
                        for (const auto& [slot, q] : e.traj->slots)
                            if (q > 0.0)
                                reach |= 1u << slot;
                        extras.push_back(e);
                    }
            if (!me)
                me = ctx.mask_eval(mask);

            double cell_reg = 0.0;
            for (size_t ci = 0; ci < events.size(); ++ci) {
                const auto& ev = events[ci];
                bool feasible = true;
                for (const auto& fr : ev.finals) {
                    if ((mask >> fr.line) & 1)
                        continue;
                    const int slot = ctx.slots().final_slot(fr.line, std::max(fr.z, 0));
                    if (!((reach >> slot) & 1)) {
                        feasible = false;
                        break;
                    }
                }
                if (!feasible)
                    continue;
                for (const auto& o : me->combos[ci]) {
                    if (o.deficit.size() > extras.size() + o.spawns.size())
                        continue;
                    double pf;
                    if (o.spawns.empty()) {
                        pf = detail::fill_probability(extras, o.deficit, ev.monitored);
                    } else {
                        std::vector<detail::ExtraPhoton> joint = extras;
                        joint.insert(joint.end(), o.spawns.begin(), o.spawns.end());
                        pf = detail::fill_probability(joint, o.deficit, ev.monitored);
                    }
                    if (!(pf > 0.0))
                        continue;
                    const double c = cw * o.weight * pf;
                    if (o.merged) {
                        merged += c;
                        continue;
                    }
                    prob[ci] += c;
                    cell_reg += c;
                    if (o.false_bell)
                        false_bell += c;
                    if (o.false_single)
                        false_single += c;
                    if (opts.with_states && ctx.pair_mode())
                        rho[ci] += (cw * pf) * o.rho;
                }
            }

            if (cell_reg > 0.0) {
                // Express the cell as monomials in the emission weights.
                // Sources that neither kept a photon nor doubled up sum
                // over "no emission" and "emitted, all lost"; expand that
                // binomial over the subset that emitted.
                const double cond = cell_reg / cw;
                int n1 = 0, n2 = 0;
                double base = cond;
                std::vector<size_t> zs;
                for (size_t s = 0; s < ns; ++s) {
                    if ((esig >> s) & 1) {
                        ++n2;
                        base *= surv[s];
                    } else if (need[s]) {
                        ++n1;
                        base *= surv[s];
                    } else {
                        zs.push_back(s);
                    }
                }
                for (uint32_t lset = 0; lset < (uint32_t(1) << zs.size()); ++lset) {
                    double coef = base;
                    int extra1 = 0;
                    for (size_t j = 0; j < zs.size(); ++j)
                        if ((lset >> j) & 1) {
                            coef *= surv[zs[j]];
                            ++extra1;
                        }
                    if (coef == 0.0)
                        continue;
                    const int m1 = n1 + extra1;
                    const int m0 = static_cast<int>(ns) - n2 - m1;
                    poly[{m0, m1, n2}] += coef;
                }
            }
        }
    }

    auto res = detail::finalize_result(ctx, "enumerate", prob, {}, rho,
                                       opts.with_states, false_bell, false_single,
                                       merged);
    res.emission_poly = std::move(poly);
    return res;
}

// ---------------------------------------------------------------------------
// Monte Carlo sampling
// ---------------------------------------------------------------------------

struct SampleOptions {
    uint64_t trials = 100000;
    uint64_t seed = 1;
    int threads = 1;
    uint64_t block = 4096; ///< trials per reduction block
    uint64_t salt = 0;     ///< stream selector for multi-run protocols
    bool with_states = false;
    long long budget = 100000000;
};

/// Importance-sampled Monte Carlo estimate of the same quantities as
/// run_enumerate. Emission patterns are drawn uniformly and reweighted;
/// survival and classical routing are sampled physically; the quantum
/// branch weights are taken exactly from the cached contraction, which
/// removes their sampling noise. Trials are reduced in fixed-size blocks
/// in block order, so results are bitwise independent of the thread count.
inline NetworkRunResult run_sample(const ExperimentLayout& l, const SourceModel& src,
                                   const NoiseModel& noise,
                                   const SampleOptions& opts = {}) {
    l.validate();
    src.validate();
    noise.validate();
    if (opts.trials == 0)
        throw config_error("trials must be positive");
    if (opts.block == 0)
        throw config_error("block size must be positive");
    detail::EngineContext ctx(l, noise, opts.with_states, opts.budget);
    const auto& events = ctx.events();
    const auto w = emission_weights(src);
    const uint64_t kbase = static_cast<uint64_t>(src.max_pairs) + 1;
    const size_t nev = events.size();
    const uint64_t nblocks = (opts.trials + opts.block - 1) / opts.block;
    const uint64_t seed = opts.seed ^ (opts.salt * 0x9E3779B97F4A7C15ull);

    struct Block {
        double sum = 0.0, sumsq = 0.0;
        double false_bell = 0.0, false_single = 0.0, merged = 0.0;
        std::vector<double> prob, probsq;
        std::vector<Eigen::Matrix4cd> rho;
    };
    std::vector<Block> blocks(nblocks);
    std::atomic<uint64_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mu;

    auto work = [&]() {
        std::vector<double> trial_prob(nev);
        try {
            for (;;) {
                const uint64_t b = cursor.fetch_add(1);
                if (b >= nblocks || failed.load())
                    break;
                Block blk;
                blk.prob.assign(nev, 0.0);
                blk.probsq.assign(nev, 0.0);
                if (opts.with_states)
                    blk.rho.assign(nev, Eigen::Matrix4cd::Zero());
                const uint64_t t0 = b * opts.block;
                const uint64_t t1 = std::min(opts.trials, t0 + opts.block);
                for (uint64_t t = t0; t < t1; ++t) {
                    TrialRng rng(seed, t);
                    double w_is = 1.0;
                    uint32_t mask = 0;
                    std::vector<int> landed;
                    for (const auto& sp : l.sources) {
                        const uint64_t k = rng.next_u64() % kbase;
                        w_is *= static_cast<double>(kbase) * w[k];
                        if (k >= 1)
                            for (int ph : {sp.photon_a, sp.photon_b})
                                if (rng.bernoulli(noise.eta_for(ph)))
                                    mask |= 1u << ph;
                        if (k >= 2)
                            for (const auto& e : ctx.source_extras(sp)) {
                                if (!rng.bernoulli(e.eta))
                                    continue;
                                double u = rng.uniform();
                                int slot = -1;
                                for (const auto& [s, q] : e.traj->slots) {
                                    if (u < q) {
                                        slot = s;
                                        break;
                                    }
                                    u -= q;
                                }
                                if (slot >= 0)
                                    landed.push_back(slot);
                            }
                    }
                    if (w_is == 0.0)
                        continue;
                    const auto me = ctx.mask_eval(mask);
                    double x = 0.0;
                    std::fill(trial_prob.begin(), trial_prob.end(), 0.0);
                    for (size_t ci = 0; ci < nev; ++ci) {
                        const auto& ev = events[ci];
                        for (const auto& o : me->combos[ci]) {
                            std::vector<int> rem = o.deficit;
                            bool ok = true;
                            for (int slot : landed) {
                                if (!((ev.monitored >> slot) & 1))
                                    continue;
                                auto it = std::find(rem.begin(), rem.end(), slot);
                                if (it == rem.end()) {
                                    ok = false;
                                    break;
                                }
                                rem.erase(it);
                            }
                            if (!ok)
                                continue;
                            double pf;
                            if (o.spawns.empty())
                                pf = rem.empty() ? 1.0 : 0.0;
                            else
                                pf = detail::fill_probability(o.spawns, rem, ev.monitored);
                            if (!(pf > 0.0))
                                continue;
                            const double c = w_is * o.weight * pf;
                            if (o.merged) {
                                blk.merged += c;
                                continue;
                            }
                            x += c;
                            trial_prob[ci] += c;
                            if (o.false_bell)
                                blk.false_bell += c;
                            if (o.false_single)
                                blk.false_single += c;
                            if (opts.with_states)
                                blk.rho[ci] += (w_is * pf) * o.rho;
                        }
                    }
                    blk.sum += x;
                    blk.sumsq += x * x;
                    for (size_t ci = 0; ci < nev; ++ci) {
                        blk.prob[ci] += trial_prob[ci];
                        blk.probsq[ci] += trial_prob[ci] * trial_prob[ci];
                    }
                }
                blocks[b] = std::move(blk);
            }
        } catch (const std::exception& e) {
            std::lock_guard lk(fail_mu);
            if (!failed.exchange(true))
                fail_msg = e.what();
        }
    };

    const int nthreads = std::max(1, std::min<int>(opts.threads,
                                                   static_cast<int>(nblocks)));
    if (nthreads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }
    if (failed.load())
        throw enumeration_budget_error(fail_msg);

    double sum = 0.0, sumsq = 0.0, false_bell = 0.0, false_single = 0.0,
           merged = 0.0;
    std::vector<double> prob(nev, 0.0), probsq(nev, 0.0);
    std::vector<Eigen::Matrix4cd> rho(nev, Eigen::Matrix4cd::Zero());
    for (const auto& blk : blocks) {
        sum += blk.sum;
        sumsq += blk.sumsq;
        false_bell += blk.false_bell;
        false_single += blk.false_single;
        merged += blk.merged;
        for (size_t ci = 0; ci < nev; ++ci) {
            prob[ci] += blk.prob[ci];
            probsq[ci] += blk.probsq[ci];
            if (opts.with_states)
                rho[ci] += blk.rho[ci];
        }
    }
    const double n = static_cast<double>(opts.trials);
    std::vector<double> err(nev, 0.0);
    for (size_t ci = 0; ci < nev; ++ci) {
        prob[ci] /= n;
        const double var = std::max(0.0, probsq[ci] / n - prob[ci] * prob[ci]);
        err[ci] = std::sqrt(var / n);
        if (opts.with_states)
            rho[ci] /= n;
    }
    false_bell /= n;
    false_single /= n;
    merged /= n;

    auto res = detail::finalize_result(ctx, "sample", prob, err, rho,
                                       opts.with_states, false_bell, false_single,
                                       merged);
    res.trials = opts.trials;
    const double mean = sum / n;
    res.eightfold_prob = mean;
    res.std_error = std::sqrt(std::max(0.0, sumsq / n - mean * mean) / n);
    return res;
}

// ---------------------------------------------------------------------------
// Derived figures
// ---------------------------------------------------------------------------

/// Registered heralding fraction of the all-photonic bench relative to the
/// two conventional reference channels, in closed form.
inline double ratio_theory(double p) { return 2.0 - 4.0 * p + 2.0 * p * p; }

struct TwelveFoldResult {
    double prob = 0.0;
    std::map<std::string, double> distribution; ///< normalized over outcomes
};

/// Twelve-fold coincidence distribution of the bare-PBS diagnostic bench,
/// keyed by the polarization string of the four station coincidences and
/// the four final analyzers.
inline TwelveFoldResult twelve_fold_zbasis(const SourceModel& src,
                                           const NoiseModel& noise,
                                           long long budget = 100000000) {
    EnumerateOptions opts;
    opts.with_states = false;
    opts.budget = budget;
    const auto l = layout_twelve_fold_2x2();
    const auto r = run_enumerate(l, src, noise, opts);
    TwelveFoldResult out;
    out.prob = r.eightfold_prob;
    for (const auto& co : r.combos)
        if (co.prob > 0.0)
            out.distribution[co.record.key] = co.prob / r.eightfold_prob;
    return out;
}

/// Fraction of registered events whose Bell verdict involved a classical
/// photon standing in for a lost one.
/// Probability that a heralded Bell verdict came from a double emission
/// surviving loss instead of the intended pair, for the minimal swap
/// unit: one station fed by two sources, conditioned on the four-fold
/// coincidence of a Bell-shaped station pattern plus exactly one click
/// on each partner arm. Exhaustive enumeration over emission patterns
/// and survival masks; half of all two-photon station patterns are
/// Bell-shaped in both the coherent and the distinguishable branch
/// tables, so that factor cancels from the ratio.
inline double false_bsm_rate(const SourceModel& src) {
    src.validate();
    const auto w = emission_weights(src);
    const double eta = src.eta;
    double true_mass = 0.0, false_mass = 0.0;
    for (int ka = 0; ka <= src.max_pairs; ++ka)
        for (int kb = 0; kb <= src.max_pairs; ++kb) {
            // photon order: A station arm, A partner arm, B station arm,
            // B partner arm; within an arm, photon i belongs to pair i
            const int n = 2 * (ka + kb);
            for (int mask = 0; mask < (1 << n); ++mask) {
                double pr = w[static_cast<size_t>(ka)] * w[static_cast<size_t>(kb)];
                for (int i = 0; i < n && pr > 0.0; ++i)
                    pr *= ((mask >> i) & 1) ? eta : 1.0 - eta;
                if (pr <= 0.0)
                    continue;
                auto survivors = [&](int off, int len) {
                    std::vector<int> s;
                    for (int i = 0; i < len; ++i)
                        if ((mask >> (off + i)) & 1)
                            s.push_back(i);
                    return s;
                };
                const auto sa = survivors(0, ka);
                const auto pa = survivors(ka, ka);
                const auto sb = survivors(2 * ka, kb);
                const auto pb = survivors(2 * ka + kb, kb);
                if (pa.size() != 1 || pb.size() != 1 || sa.size() + sb.size() != 2)
                    continue;
                const bool matched = sa.size() == 1 && sb.size() == 1 &&
                                     sa[0] == pa[0] && sb[0] == pb[0];
                (matched ? true_mass : false_mass) += pr;
            }
        }
    const double total = true_mass + false_mass;
    return total > 0.0 ? false_mass / total : 0.0;
}

struct RateFormulaResult {
    double conventional = 0.0;
    double all_photonic = 0.0;
    double ratio = 0.0;
};

/// Scaling comparison for a chain of n intermediate nodes with m parallel
/// channels per link: a conventional memory-based repeater delivers
/// m * eta^(n+1) while the all-photonic scheme delivers (m * eta)^(n+1),
/// an advantage of m^n.
inline RateFormulaResult rate_formula(int m, int n, double eta) {
    if (m < 1)
        throw config_error("parallel channel count must be at least 1");
    if (n < 0)
        throw config_error("node count must be non-negative");
    if (!(eta > 0.0 && eta <= 1.0))
        throw config_error("eta must lie in (0, 1]");
    RateFormulaResult r;
    r.conventional = m * std::pow(eta, n + 1);
    r.all_photonic = std::pow(m * eta, n + 1);
    r.ratio = r.all_photonic / r.conventional;
    return r;
}

// ---------------------------------------------------------------------------
// Ratio scan
// ---------------------------------------------------------------------------

enum class RunMethod { Enumerate, Sample };

inline const char* method_name(RunMethod m) {
    return m == RunMethod::Enumerate ? "enumerate" : "sample";
}

inline RunMethod method_from_name(const std::string& s) {
    if (s == "enumerate")
        return RunMethod::Enumerate;
    if (s == "sample")
        return RunMethod::Sample;
    throw config_error("unknown method: " + s);
}

struct RatioPoint {
    double p = 0.0;
    double r_theory = 0.0;
    double r_sim = 0.0;
    double std_error = 0.0;
};

struct RatioScanOptions {
    RunMethod method = RunMethod::Enumerate;
    uint64_t trials = 100000;
    uint64_t seed = 1;
    int threads = 1;
    long long budget = 100000000;
};

/// Simulated heralding-rate ratio between the all-photonic bench and the
/// summed conventional reference channels across emission probabilities.
/// The enumerate method reuses a single enumeration per layout through the
/// emission-weight polynomial; the sample method runs three independent
/// Monte Carlo streams per point and propagates their errors.
inline std::vector<RatioPoint> ratio_scan(const std::vector<double>& p_values,
                                          const SourceModel& base,
                                          const NoiseModel& noise,
                                          const RatioScanOptions& opts = {}) {
    if (p_values.empty())
        throw config_error("ratio scan needs at least one emission probability");
    const auto ap = layout_all_photonic_2x2();
    const auto c0 = layout_conventional_2x2(0);
    const auto c1 = layout_conventional_2x2(1);
    std::vector<RatioPoint> out;

    if (opts.method == RunMethod::Enumerate) {
        EnumerateOptions eo;
        eo.with_states = false;
        eo.budget = opts.budget;
        // the polynomial coefficients are p independent, but probing at
        // p = 0 would prune every term, so pick a strictly interior point
        SourceModel probe = base;
        probe.p = 0.1;
        for (double p : p_values)
            if (p > 0.0) {
                probe.p = p;
                break;
            }
        const auto poly_ap = run_enumerate(ap, probe, noise, eo).emission_poly;
        const auto poly_c0 = run_enumerate(c0, probe, noise, eo).emission_poly;
        const auto poly_c1 = run_enumerate(c1, probe, noise, eo).emission_poly;
        auto eval = [](const std::map<std::array<int, 3>, double>& poly,
                       const std::vector<double>& w) {
            const double w2 = w.size() > 2 ? w[2] : 0.0;
            double acc = 0.0;
            for (const auto& [key, coef] : poly)
                acc += coef * std::pow(w[0], key[0]) * std::pow(w[1], key[1]) *
                       std::pow(w2, key[2]);
            return acc;
        };
        for (double p : p_values) {
            SourceModel sm = base;
            sm.p = p;
            const auto w = emission_weights(sm);
            RatioPoint pt;
            pt.p = p;
            pt.r_theory = ratio_theory(p);
            const double num = eval(poly_ap, w);
            const double den = eval(poly_c0, w) + eval(poly_c1, w);
            pt.r_sim = den > 0.0 ? num / den : 0.0;
            out.push_back(pt);
        }
        return out;
    }

    for (double p : p_values) {
        SourceModel sm = base;
        sm.p = p;
        SampleOptions so;
        so.trials = opts.trials;
        so.seed = opts.seed;
        so.threads = opts.threads;
        so.budget = opts.budget;
        so.with_states = false;
        so.salt = 1;
        const auto rap = run_sample(ap, sm, noise, so);
        so.salt = 2;
        const auto rc0 = run_sample(c0, sm, noise, so);
        so.salt = 3;
        const auto rc1 = run_sample(c1, sm, noise, so);
        RatioPoint pt;
        pt.p = p;
        pt.r_theory = ratio_theory(p);
        const double num = rap.eightfold_prob;
        const double den = rc0.eightfold_prob + rc1.eightfold_prob;
        pt.r_sim = den > 0.0 ? num / den : 0.0;
        if (den > 0.0) {
            const double vn = rap.std_error * rap.std_error;
            const double vd = rc0.std_error * rc0.std_error +
                              rc1.std_error * rc1.std_error;
            pt.std_error = std::sqrt(vn / (den * den) +
                                     num * num * vd / (den * den * den * den));
        }
        out.push_back(pt);
    }
    return out;
}

} // namespace aprsim
