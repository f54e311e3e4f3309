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
 * @file engine.hpp
 * Event-resolved network evaluation.
 *
 * The simulator splits one pulse into three layers:
 *
 *  1. a quantum layer: the photons of first emitted pairs, evolved as an
 *     unnormalized density matrix that is contracted station by station
 *     under the detector requirements of one candidate event,
 *  2. a classical layer: surplus photons from double-pair emissions and
 *     from bunching at the fusion PBS, which cannot interfere usefully and
 *     are tracked as independent clickers with routing distributions,
 *  3. a registration layer: an event registers when every monitored
 *     detector slot collects exactly its required photon count, with
 *     deficits of the quantum layer filled by classical photons.
 *
 * Registration is photon-number exact. Threshold detectors would read a
 * double hit on one detector as a lone click; such events are excluded
 * from registration (the closed-form benchmark ratio presumes exact
 * counting) and tallied separately under the "merged" diagnostic.
 *
 * Contractions are keyed by the set of surviving first-pair photons, so
 * results are cached and shared between emission patterns and between
 * Monte Carlo trials.
 */
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "aprsim/density.hpp"
#include "aprsim/layout.hpp"
#include "aprsim/noise.hpp"
#include "aprsim/optics.hpp"
#include "aprsim/pcm.hpp"
#include "aprsim/sources.hpp"
#include "aprsim/state.hpp"
#include "aprsim/types.hpp"

namespace aprsim {
namespace detail {

// ---------------------------------------------------------------------------
// Detector slot bookkeeping
// ---------------------------------------------------------------------------

/// Flat indexing of every monitored-capable detector in a layout: four
/// slots per beam splitter station (LH, LV, RH, RV), two per direct
/// analyzer (D, A), and one or two per final line depending on whether
/// the finals are polarization resolved.
struct SlotTable {
    std::vector<int> station_base;
    std::map<int, int> final_base; // line -> first slot
    int final_width = 1;
    int count = 0;

    static SlotTable build(const ExperimentLayout& l, bool z_resolved_finals) {
        SlotTable t;
        t.final_width = z_resolved_finals ? 2 : 1;
        for (const auto& st : l.stations) {
            t.station_base.push_back(t.count);
            t.count += st.kind == StationKind::Direct ? 2 : 4;
        }
        for (int line : l.final_lines) {
            t.final_base[line] = t.count;
            t.count += t.final_width;
        }
        if (t.count > 31)
            throw config_error("layout exceeds the detector slot capacity");
        return t;
    }

    int station_slot(int station, int det) const {
        return station_base[static_cast<size_t>(station)] + det;
    }
    int final_slot(int line, int det = 0) const { return final_base.at(line) + det; }
};

// ---------------------------------------------------------------------------
// Event specifications
// ---------------------------------------------------------------------------

/// Required station verdicts making up one registered event.
enum class StReq {
    BellPhi,
    BellPsi,
    SingleL,
    SingleR,
    XPlus,
    XMinus,
    CoincHH,
    CoincVV,
};

inline const char* req_tag(StReq r) {
    switch (r) {
        case StReq::BellPhi: return "phi_plus";
        case StReq::BellPsi: return "psi_plus";
        case StReq::SingleL: return "single_left";
        case StReq::SingleR: return "single_right";
        case StReq::XPlus: return "x_plus";
        case StReq::XMinus: return "x_minus";
        case StReq::CoincHH: return "coinc_hh";
        case StReq::CoincVV: return "coinc_vv";
    }
    return "?";
}

inline bool req_is_bell(StReq r) {
    return r == StReq::BellPhi || r == StReq::BellPsi;
}
inline bool req_is_lone(StReq r) {
    return r == StReq::SingleL || r == StReq::SingleR || r == StReq::XPlus ||
           r == StReq::XMinus;
}

struct FinalReq {
    int line;
    int z; ///< -1: keep the qubit; 0/1: project onto H/V and monitor that det
};

struct EventSpec {
    std::vector<StReq> st; ///< one requirement per station, layout order
    std::vector<FinalReq> finals;
    uint32_t monitored = 0; ///< bit per slot
    int alice = -1, bob = -1;
    char correction = 'I';
    std::string key;
    std::map<std::string, std::string> outcomes;
};

/// All pair-protocol events: per node, the choice of Bell station, the
/// Bell tag and the verdict of the companion station.
inline std::vector<EventSpec> build_pair_events(const ExperimentLayout& l,
                                                const SlotTable& slots) {
    struct NodeChoice {
        std::map<int, StReq> st;
        int final_line;
        int n_psi, n_minus;
    };
    std::vector<std::vector<NodeChoice>> per_node;
    for (const auto& node : l.nodes) {
        std::vector<NodeChoice> choices;
        for (auto [bell, other, bell_final] :
             {std::tuple{node.station_x, node.station_y, node.final_if_x_bell},
              std::tuple{node.station_y, node.station_x, node.final_if_y_bell}}) {
            if (l.stations[static_cast<size_t>(bell)].kind == StationKind::Direct)
                continue;
            const bool direct =
                l.stations[static_cast<size_t>(other)].kind == StationKind::Direct;
            for (StReq bt : {StReq::BellPhi, StReq::BellPsi}) {
                const auto plus = direct ? StReq::XPlus : StReq::SingleL;
                const auto minus = direct ? StReq::XMinus : StReq::SingleR;
                for (StReq ot : {plus, minus}) {
                    NodeChoice c;
                    c.st[bell] = bt;
                    c.st[other] = ot;
                    c.final_line = bell_final;
                    c.n_psi = bt == StReq::BellPsi ? 1 : 0;
                    c.n_minus = ot == minus ? 1 : 0;
                    choices.push_back(std::move(c));
                }
            }
        }
        per_node.push_back(std::move(choices));
    }
    if (per_node.size() != 2)
        throw config_error("pair events need a two-node layout");

    std::vector<EventSpec> events;
    for (const auto& ca : per_node[0]) {
        for (const auto& cb : per_node[1]) {
            EventSpec ev;
            ev.st.assign(l.stations.size(), StReq::BellPhi);
            for (const auto& [si, req] : ca.st)
                ev.st[static_cast<size_t>(si)] = req;
            for (const auto& [si, req] : cb.st)
                ev.st[static_cast<size_t>(si)] = req;
            ev.alice = ca.final_line;
            ev.bob = cb.final_line;
            ev.finals = {{ev.alice, -1}, {ev.bob, -1}};
            const int a = (ca.n_psi + cb.n_psi) % 2;
            const int b = (ca.n_minus + cb.n_minus) % 2;
            ev.correction = a ? (b ? 'Y' : 'X') : (b ? 'Z' : 'I');
            for (size_t si = 0; si < l.stations.size(); ++si) {
                const auto& id = l.stations[si].id;
                ev.outcomes[id] = req_tag(ev.st[si]);
                ev.key += (ev.key.empty() ? "" : ";") + id + "=" + req_tag(ev.st[si]);
                for (int d = 0; d < (l.stations[si].kind == StationKind::Direct ? 2 : 4); ++d)
                    ev.monitored |= 1u << slots.station_slot(static_cast<int>(si), d);
            }
            for (int line : l.final_lines)
                ev.monitored |= 1u << slots.final_slot(line);
            events.push_back(std::move(ev));
        }
    }
    return events;
}

/// All full-coincidence events of the bare-PBS diagnostic: each station
/// shows an equal-polarization coincidence and every final is measured in
/// H/V. Keys are twelve-character polarization strings, stations first
/// (port L then port R) and finals last.
inline std::vector<EventSpec> build_twelve_events(const ExperimentLayout& l,
                                                  const SlotTable& slots) {
    const int ns = static_cast<int>(l.stations.size());
    const int nf = static_cast<int>(l.final_lines.size());
    std::vector<EventSpec> events;
    for (int sm = 0; sm < (1 << ns); ++sm) {
        for (int fm = 0; fm < (1 << nf); ++fm) {
            EventSpec ev;
            ev.st.assign(static_cast<size_t>(ns), StReq::CoincHH);
            for (int si = 0; si < ns; ++si) {
                const bool vv = (sm >> si) & 1;
                ev.st[static_cast<size_t>(si)] = vv ? StReq::CoincVV : StReq::CoincHH;
                ev.key += vv ? "VV" : "HH";
                for (int d = 0; d < 4; ++d)
                    ev.monitored |= 1u << slots.station_slot(si, d);
            }
            for (int fi = 0; fi < nf; ++fi) {
                const int z = (fm >> fi) & 1;
                ev.finals.push_back({l.final_lines[static_cast<size_t>(fi)], z});
                ev.key += z ? 'V' : 'H';
                for (int d = 0; d < 2; ++d)
                    ev.monitored |= 1u
                                    << slots.final_slot(l.final_lines[static_cast<size_t>(fi)], d);
            }
            events.push_back(std::move(ev));
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// Classical photon routing
// ---------------------------------------------------------------------------

/// Pol codes for classical photons.
enum : int { kPolH = 0, kPolV = 1, kPolU = 2 };

/// Routing distribution of one classical photon over detector slots; the
/// remainder runs into analyzers outside every monitored set.
struct Trajectory {
    std::vector<std::pair<int, double>> slots;
    double unmon = 0.0;
};

/// One surplus photon: a double-pair twin or a bunching stray from the
/// fusion PBS.
struct ExtraPhoton {
    const Trajectory* traj;
    double eta;
    int origin; ///< 0: double pair, 1: fusion stray
};

// ---------------------------------------------------------------------------
// Station requirement options
// ---------------------------------------------------------------------------

struct WeightedBra4 {
    Eigen::Vector4cd k;
    double w;
};
struct WeightedBra2 {
    Eigen::Vector2cd k;
    double w;
};

/// One way the quantum photons at a station can account for part of the
/// required click pattern. The remaining slots in deficit must be hit by
/// exactly one classical photon each.
struct StationOption {
    std::vector<WeightedBra4> pair_bras; ///< act on (photon on line a, photon on line b)
    std::vector<WeightedBra2> single_bras;
    int single_photon = -1;
    double factor = 1.0;
    std::vector<int> deficit;
    bool false_bell = false;
    bool false_single = false;
    bool merged = false;
};

inline std::vector<StationOption> station_options(const StationSpec& spec,
                                                  int station_index, StReq req,
                                                  int photon_a, int photon_b, double v,
                                                  const SlotTable& slots) {
    const bool ha = photon_a >= 0;
    const bool hb = photon_b >= 0;
    auto slot = [&](int det) { return slots.station_slot(station_index, det); };
    constexpr int LH = 0, LV = 1, RH = 2, RV = 3;
    std::vector<StationOption> out;

    auto pair_opt = [&](std::vector<WeightedBra4> bras) {
        StationOption o;
        o.pair_bras = std::move(bras);
        out.push_back(std::move(o));
    };
    auto lone_opt = [&](int photon, const Eigen::Vector2cd& bra, double factor,
                        std::vector<int> deficit, bool fb, bool fs) {
        StationOption o;
        o.single_bras = {{bra, 1.0}};
        o.single_photon = photon;
        o.factor = factor;
        o.deficit = std::move(deficit);
        o.false_bell = fb;
        o.false_single = fs;
        out.push_back(std::move(o));
    };
    auto empty_opt = [&](std::vector<int> deficit, bool fb, bool fs) {
        StationOption o;
        o.deficit = std::move(deficit);
        o.false_bell = fb;
        o.false_single = fs;
        out.push_back(std::move(o));
    };

    if (spec.kind == StationKind::Direct) {
        // Only the resource line is analyzed; a photon on line b is left
        // alone for the ignored analyzer.
        const bool plus = req == StReq::XPlus;
        const int det = slot(plus ? 0 : 1);
        if (ha)
            lone_opt(photon_a, plus ? kets::D : kets::A, 1.0, {}, false, false);
        else
            empty_opt({det}, false, true);
        return out;
    }

    if (spec.kind == StationKind::PlainPbs) {
        const bool hh = req == StReq::CoincHH;
        const auto& kq = hh ? kets::H : kets::V;
        const int la = slot(hh ? LH : LV);
        const int lb = slot(hh ? RH : RV);
        // Port geometry: from input a, H stays left and V crosses right;
        // from input b, H stays right and V crosses left.
        if (ha && hb) {
            pair_opt({{pair_ket(kq, kq), 1.0}});
        } else if (ha) {
            lone_opt(photon_a, kq, 1.0, {hh ? lb : la}, false, false);
        } else if (hb) {
            lone_opt(photon_b, kq, 1.0, {hh ? la : lb}, false, false);
        } else {
            empty_opt({la, lb}, false, false);
        }
        return out;
    }

    // Passive-choice station.
    switch (req) {
        case StReq::BellPhi:
        case StReq::BellPsi: {
            const bool phi = req == StReq::BellPhi;
            if (ha && hb) {
                std::vector<WeightedBra4> bras{
                    {phi ? kets::phi_plus : kets::psi_plus, v}};
                if (v < 1.0) {
                    bras.push_back({pair_ket(kets::D, kets::D), (1.0 - v) / 2.0});
                    bras.push_back({pair_ket(kets::A, kets::A), (1.0 - v) / 2.0});
                }
                pair_opt(std::move(bras));
            } else if (ha || hb) {
                const int ph = ha ? photon_a : photon_b;
                // The lone photon covers one half of the coincidence; which
                // port it reaches depends on its diagonal component and on
                // the input it arrived through.
                const auto opts_for = [&](const Eigen::Vector2cd& bra, bool to_left) {
                    // Partner detector demanded by the Bell pattern, for
                    // the photon landing in the H and V detector in turn.
                    const int p0 = phi ? (to_left ? RH : LH) : (to_left ? RV : LV);
                    const int p1 = phi ? (to_left ? RV : LV) : (to_left ? RH : LH);
                    lone_opt(ph, bra, 0.5, {slot(p0)}, true, false);
                    lone_opt(ph, bra, 0.5, {slot(p1)}, true, false);
                };
                opts_for(kets::D, ha);
                opts_for(kets::A, !ha);
            } else {
                if (phi) {
                    empty_opt({slot(LH), slot(RH)}, true, false);
                    empty_opt({slot(LV), slot(RV)}, true, false);
                } else {
                    empty_opt({slot(LH), slot(RV)}, true, false);
                    empty_opt({slot(LV), slot(RH)}, true, false);
                }
            }
            break;
        }
        case StReq::SingleL:
        case StReq::SingleR: {
            const bool left = req == StReq::SingleL;
            if (ha && hb) {
                // Two photons cannot register as one; the same-detector
                // bunching merge is tallied as a threshold artifact.
                StationOption o;
                o.pair_bras = {{left ? pair_ket(kets::D, kets::A)
                                     : pair_ket(kets::A, kets::D),
                                0.5}};
                o.merged = true;
                out.push_back(std::move(o));
            } else if (ha) {
                lone_opt(photon_a, left ? kets::D : kets::A, 1.0, {}, false, false);
            } else if (hb) {
                lone_opt(photon_b, left ? kets::A : kets::D, 1.0, {}, false, true);
            } else {
                empty_opt({slot(left ? LH : RH)}, false, true);
                empty_opt({slot(left ? LV : RV)}, false, true);
            }
            break;
        }
        default:
            throw std::logic_error("requirement not valid for this station kind");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unnormalized density register
// ---------------------------------------------------------------------------

struct DensityReg {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Constant(1, 1, 1.0);
    std::vector<int> photons;

    int pos(int photon) const {
        for (size_t i = 0; i < photons.size(); ++i)
            if (photons[i] == photon)
                return static_cast<int>(i);
        return -1;
    }

    double weight() const { return rho.trace().real(); }

    void tensor_in(const Eigen::MatrixXcd& r, const std::vector<int>& ids) {
        rho = Eigen::kroneckerProduct(r, rho).eval();
        photons.insert(photons.end(), ids.begin(), ids.end());
    }

    /// rho' = sum_i w_i (<k_i| x I) rho (|k_i> x I) over qubit pair
    /// (photon pa, photon pb); both qubits leave the register.
    void contract_pair(int pa, int pb, const std::vector<WeightedBra4>& bras) {
        const int qa = pos(pa);
        const int qb = pos(pb);
        const int lo = std::min(qa, qb);
        const int hi = std::max(qa, qb);
        const Eigen::Index ma = Eigen::Index(1) << qa;
        const Eigen::Index mb = Eigen::Index(1) << qb;
        const Eigen::Index dred = rho.rows() / 4;
        auto expand = [&](Eigen::Index j) {
            const Eigen::Index low = j & ((Eigen::Index(1) << lo) - 1);
            const Eigen::Index mid =
                (j >> lo) & ((Eigen::Index(1) << (hi - 1 - lo)) - 1);
            const Eigen::Index high = j >> (hi - 1);
            return (high << (hi + 1)) | (mid << (lo + 1)) | low;
        };
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dred, dred);
        for (const auto& wb : bras) {
            for (Eigen::Index j = 0; j < dred; ++j) {
                const Eigen::Index rj = expand(j);
                for (Eigen::Index jp = 0; jp < dred; ++jp) {
                    const Eigen::Index rjp = expand(jp);
                    cplx acc = 0.0;
                    for (int m = 0; m < 4; ++m) {
                        const Eigen::Index im =
                            rj | ((m & 1) ? ma : 0) | ((m & 2) ? mb : 0);
                        for (int mp = 0; mp < 4; ++mp) {
                            const Eigen::Index imp =
                                rjp | ((mp & 1) ? ma : 0) | ((mp & 2) ? mb : 0);
                            acc += std::conj(wb.k(m)) * rho(im, imp) * wb.k(mp);
                        }
                    }
                    out(j, jp) += wb.w * acc;
                }
            }
        }
        rho = std::move(out);
        photons.erase(photons.begin() + hi);
        photons.erase(photons.begin() + lo);
    }

    void contract_single(int ph, const std::vector<WeightedBra2>& bras) {
        const int q = pos(ph);
        const Eigen::Index mq = Eigen::Index(1) << q;
        const Eigen::Index dred = rho.rows() / 2;
        auto expand = [&](Eigen::Index j) {
            const Eigen::Index low = j & (mq - 1);
            return ((j >> q) << (q + 1)) | low;
        };
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dred, dred);
        for (const auto& wb : bras) {
            for (Eigen::Index j = 0; j < dred; ++j) {
                const Eigen::Index rj = expand(j);
                for (Eigen::Index jp = 0; jp < dred; ++jp) {
                    const Eigen::Index rjp = expand(jp);
                    cplx acc = 0.0;
                    for (int m = 0; m < 2; ++m)
                        for (int mp = 0; mp < 2; ++mp)
                            acc += std::conj(wb.k(m)) * rho(rj | (m ? mq : 0), rjp | (mp ? mq : 0)) *
                                   wb.k(mp);
                    out(j, jp) += wb.w * acc;
                }
            }
        }
        rho = std::move(out);
        photons.erase(photons.begin() + q);
    }

    /// Embeds a two-qubit operator over (photon pa low bit, pb high bit).
    Eigen::MatrixXcd embed_pair(int pa, int pb, const Eigen::Matrix4cd& op) const {
        const int qa = pos(pa);
        const int qb = pos(pb);
        const Eigen::Index d = rho.rows();
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
        const Eigen::Index ma = Eigen::Index(1) << qa;
        const Eigen::Index mb = Eigen::Index(1) << qb;
        for (Eigen::Index i = 0; i < d; ++i) {
            const int mi = static_cast<int>(((i & ma) ? 1 : 0) + ((i & mb) ? 2 : 0));
            const Eigen::Index base = i & ~(ma | mb);
            for (int mj = 0; mj < 4; ++mj) {
                const Eigen::Index j = base | ((mj & 1) ? ma : 0) | ((mj & 2) ? mb : 0);
                if (op(mi, mj) != 0.0)
                    out(i, j) = op(mi, mj);
            }
        }
        return out;
    }

    /// Fusion-PBS pass branch: the photon survival amplitudes on parallel
    /// polarizations keep their coherence with contrast v, the rest
    /// dephases in the H/V pair basis.
    void fuse_keep(int pa, int pb, double v) {
        Eigen::Matrix4cd phh = Eigen::Matrix4cd::Zero();
        phh(0, 0) = 1.0;
        Eigen::Matrix4cd pvv = Eigen::Matrix4cd::Zero();
        pvv(3, 3) = 1.0;
        const Eigen::MatrixXcd ehh = embed_pair(pa, pb, phh);
        const Eigen::MatrixXcd evv = embed_pair(pa, pb, pvv);
        const Eigen::MatrixXcd keep = ehh + evv;
        rho = (v * keep * rho * keep +
               (1.0 - v) * (ehh * rho * ehh + evv * rho * evv))
                  .eval();
    }

    /// Projects one qubit onto a definite polarization without removing it.
    void project_keep(int ph, const Eigen::Vector2cd& ket) {
        const int q = pos(ph);
        const Eigen::Index d = rho.rows();
        const Eigen::Index mq = Eigen::Index(1) << q;
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const int bi = (i & mq) ? 1 : 0;
            const Eigen::Index base = i & ~mq;
            for (int bj = 0; bj < 2; ++bj)
                e(i, base | (bj ? mq : 0)) = ket(bi) * std::conj(ket(bj));
        }
        rho = (e * rho * e).eval();
    }
};

// ---------------------------------------------------------------------------
// Classical fill probability
// ---------------------------------------------------------------------------

/// Probability that the classical photons cover every deficit slot exactly
/// once while none of them trips another monitored detector. A photon is
/// harmless when it is lost or lands outside the monitored set.
inline double fill_probability(const std::vector<ExtraPhoton>& extras, size_t i,
                               uint32_t monitored, std::vector<int>& rem) {
    if (rem.size() > extras.size() - i)
        return 0.0;
    if (i == extras.size())
        return rem.empty() ? 1.0 : 0.0;
    const auto& e = extras[i];
    double safe = 1.0 - e.eta + e.eta * e.traj->unmon;
    for (const auto& [s, q] : e.traj->slots)
        if (!((monitored >> s) & 1))
            safe += e.eta * q;
    double acc = safe > 0.0 ? safe * fill_probability(extras, i + 1, monitored, rem)
                            : 0.0;
    for (size_t d = 0; d < rem.size(); ++d) {
        double q = 0.0;
        for (const auto& [s, qs] : e.traj->slots)
            if (s == rem[d])
                q = qs;
        if (q <= 0.0)
            continue;
        std::swap(rem[d], rem.back());
        const int slot = rem.back();
        rem.pop_back();
        acc += e.eta * q * fill_probability(extras, i + 1, monitored, rem);
        rem.push_back(slot);
        std::swap(rem[d], rem.back());
    }
    return acc;
}

inline double fill_probability(const std::vector<ExtraPhoton>& extras,
                               const std::vector<int>& deficit, uint32_t monitored) {
    std::vector<int> rem = deficit;
    return fill_probability(extras, 0, monitored, rem);
}

// ---------------------------------------------------------------------------
// Engine context
// ---------------------------------------------------------------------------

/// Fusion PBS pass classes for the surviving photons of the preparation
/// stage, chosen per survival mask.
enum class PrepCls { None, Keep, BothA, BothB, StayA, CrossA, StayB, CrossB };

/// One fully contracted quantum branch of one candidate event: its weight,
/// the classical photons it spawns, the detector slots it leaves open and
/// the final-pair state it produces.
struct EvaluatedOption {
    double weight = 0.0;
    std::vector<int> deficit;
    std::vector<ExtraPhoton> spawns;
    bool false_bell = false;
    bool false_single = false;
    bool merged = false;
    bool alice_present = false;
    bool bob_present = false;
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
};

struct MaskEval {
    std::vector<std::vector<EvaluatedOption>> combos;
};

/// Holds everything derived from (layout, noise) that survival masks and
/// trials share: event specs, routing tables and the mask cache.
class EngineContext {
public:
    EngineContext(const ExperimentLayout& l, const NoiseModel& nm, bool want_rho,
                  long long budget_limit)
        : layout_(&l),
          noise_(nm),
          pair_mode_(!l.nodes.empty()),
          slots_(SlotTable::build(l, !pair_mode_)),
          want_rho_(want_rho && pair_mode_),
          budget_limit_(budget_limit) {
        events_ = pair_mode_ ? build_pair_events(l, slots_) : build_twelve_events(l, slots_);
        traj_pre_.resize(static_cast<size_t>(l.max_photon()) + 1);
        traj_post_.resize(static_cast<size_t>(l.max_photon()) + 1);
        for (int line = 1; line <= l.max_photon(); ++line)
            for (int pol : {kPolH, kPolV, kPolU}) {
                traj_pre_[static_cast<size_t>(line)][static_cast<size_t>(pol)] =
                    compute_traj(line, pol, false);
                traj_post_[static_cast<size_t>(line)][static_cast<size_t>(pol)] =
                    compute_traj(line, pol, true);
            }
    }

    EngineContext(const EngineContext&) = delete;
    EngineContext& operator=(const EngineContext&) = delete;

    const ExperimentLayout& layout() const { return *layout_; }
    const NoiseModel& noise() const { return noise_; }
    const SlotTable& slots() const { return slots_; }
    const std::vector<EventSpec>& events() const { return events_; }
    bool pair_mode() const { return pair_mode_; }
    long long budget_used() const { return budget_.load(); }

    const Trajectory& traj(int line, int pol, bool post_prep) const {
        const auto& t = post_prep ? traj_post_ : traj_pre_;
        return t[static_cast<size_t>(line)][static_cast<size_t>(pol)];
    }

    /// Two classical photons of a double emission from one source.
    std::vector<ExtraPhoton> source_extras(const SourceSpec& s) const {
        return {{&traj(s.photon_a, kPolU, false), noise_.eta_for(s.photon_a), 0},
                {&traj(s.photon_b, kPolU, false), noise_.eta_for(s.photon_b), 0}};
    }

    std::shared_ptr<const MaskEval> mask_eval(uint32_t mask) const {
        {
            std::shared_lock lk(cache_mu_);
            auto it = cache_.find(mask);
            if (it != cache_.end())
                return it->second;
        }
        auto me = std::make_shared<MaskEval>();
        me->combos.resize(events_.size());
        for (size_t ci = 0; ci < events_.size(); ++ci)
            evaluate_combo(mask, events_[ci], me->combos[ci]);
        std::unique_lock lk(cache_mu_);
        return cache_.emplace(mask, std::move(me)).first->second;
    }

private:
    const ExperimentLayout* layout_;
    NoiseModel noise_;
    bool pair_mode_;
    SlotTable slots_;
    bool want_rho_;
    long long budget_limit_;
    std::vector<EventSpec> events_;
    std::vector<std::array<Trajectory, 3>> traj_pre_, traj_post_;
    mutable std::atomic<long long> budget_{0};
    mutable std::unordered_map<uint32_t, std::shared_ptr<const MaskEval>> cache_;
    mutable std::shared_mutex cache_mu_;

    Trajectory compute_traj(int line, int pol, bool past_prep) const {
        Trajectory t;
        auto add_slot = [&](int slot, double w) {
            for (auto& [s, q] : t.slots)
                if (s == slot) {
                    q += w;
                    return;
                }
            t.slots.push_back({slot, w});
        };
        std::function<void(int, int, bool, double)> route =
            [&](int at, int p, bool past, double w) {
            if (w <= 0.0)
                return;
            const auto& l = *layout_;
            if (!past && l.prep &&
                (at == l.prep->line_a || at == l.prep->line_b)) {
                const bool from_a = at == l.prep->line_a;
                if (p == kPolU) {
                    route(at, kPolH, false, w / 2.0);
                    route(at, kPolV, false, w / 2.0);
                    return;
                }
                const int out = (p == kPolH) == from_a ? l.prep->line_a
                                                       : l.prep->line_b;
                route(out, p, true, w);
                return;
            }
            const int si = l.station_of_line(at);
            if (si >= 0) {
                const auto& st = l.stations[static_cast<size_t>(si)];
                const bool side_a = at == st.line_a;
                auto det = [&](int d, double f) {
                    add_slot(slots_.station_slot(si, d), w * f);
                };
                switch (st.kind) {
                    case StationKind::Cpbs: {
                        // The diagonal-basis analyzers split every input
                        // half and half; the PBS in front decides the port.
                        if (p == kPolU) {
                            for (int d = 0; d < 4; ++d)
                                det(d, 0.25);
                        } else {
                            const bool left = (p == kPolH) == side_a;
                            det(left ? 0 : 2, 0.5);
                            det(left ? 1 : 3, 0.5);
                        }
                        break;
                    }
                    case StationKind::PlainPbs: {
                        if (p == kPolU) {
                            route(at, kPolH, past, w / 2.0);
                            route(at, kPolV, past, w / 2.0);
                            return;
                        }
                        if (p == kPolH)
                            det(side_a ? 0 : 2, 1.0);
                        else
                            det(side_a ? 3 : 1, 1.0);
                        break;
                    }
                    case StationKind::Direct: {
                        if (side_a) {
                            det(0, 0.5);
                            det(1, 0.5);
                        } else {
                            t.unmon += w;
                        }
                        break;
                    }
                }
                return;
            }
            if (slots_.final_base.count(at)) {
                if (slots_.final_width == 1) {
                    add_slot(slots_.final_slot(at), w);
                } else if (p == kPolU) {
                    add_slot(slots_.final_slot(at, 0), w / 2.0);
                    add_slot(slots_.final_slot(at, 1), w / 2.0);
                } else {
                    add_slot(slots_.final_slot(at, p == kPolH ? 0 : 1), w);
                }
                return;
            }
            t.unmon += w;
        };
        route(line, pol, past_prep, 1.0);
        return t;
    }

    std::vector<PrepCls> prep_classes(uint32_t mask) const {
        if (!layout_->prep)
            return {PrepCls::None};
        const bool a = (mask >> layout_->prep->line_a) & 1;
        const bool b = (mask >> layout_->prep->line_b) & 1;
        if (a && b)
            return {PrepCls::Keep, PrepCls::BothA, PrepCls::BothB};
        if (a)
            return {PrepCls::StayA, PrepCls::CrossA};
        if (b)
            return {PrepCls::StayB, PrepCls::CrossB};
        return {PrepCls::None};
    }

    /// Which surviving photon sits on a line once the preparation stage
    /// resolved. Photons start on the line matching their id; the fusion
    /// PBS can consume them or hand the lone survivor to the other output.
    int photon_on(uint32_t mask, PrepCls cls, int line) const {
        const auto& l = *layout_;
        if (l.prep && (line == l.prep->line_a || line == l.prep->line_b)) {
            const bool at_a = line == l.prep->line_a;
            int ph = -1;
            switch (cls) {
                case PrepCls::Keep: ph = at_a ? l.prep->line_a : l.prep->line_b; break;
                case PrepCls::StayA: ph = at_a ? l.prep->line_a : -1; break;
                case PrepCls::CrossA: ph = at_a ? -1 : l.prep->line_a; break;
                case PrepCls::StayB: ph = at_a ? -1 : l.prep->line_b; break;
                case PrepCls::CrossB: ph = at_a ? l.prep->line_b : -1; break;
                default: return -1;
            }
            return ph >= 0 && ((mask >> ph) & 1) ? ph : -1;
        }
        return ((mask >> line) & 1) ? line : -1;
    }

    std::vector<ExtraPhoton> prep_spawns(PrepCls cls) const {
        const auto& pp = *layout_->prep;
        if (cls == PrepCls::BothA)
            return {{&traj(pp.line_a, kPolH, true), noise_.eta_for(pp.line_a), 1},
                    {&traj(pp.line_a, kPolV, true), noise_.eta_for(pp.line_b), 1}};
        if (cls == PrepCls::BothB)
            return {{&traj(pp.line_b, kPolH, true), noise_.eta_for(pp.line_b), 1},
                    {&traj(pp.line_b, kPolV, true), noise_.eta_for(pp.line_a), 1}};
        return {};
    }

    void evaluate_combo(uint32_t mask, const EventSpec& ev,
                        std::vector<EvaluatedOption>& out) const {
        const auto& l = *layout_;
        const size_t ns = l.stations.size();
        if (pair_mode_)
            for (int line : l.final_lines)
                if (line != ev.alice && line != ev.bob && ((mask >> line) & 1u))
                    return;
        for (PrepCls cls : prep_classes(mask)) {
            std::vector<std::vector<StationOption>> sopts(ns);
            bool dead = false;
            for (size_t si = 0; si < ns && !dead; ++si) {
                const auto& st = l.stations[si];
                const int pa = photon_on(mask, cls, st.line_a);
                const int pb = st.kind == StationKind::Direct
                                   ? -1
                                   : photon_on(mask, cls, st.line_b);
                sopts[si] = station_options(st, static_cast<int>(si), ev.st[si], pa, pb,
                                            noise_.visibility_for(st.id), slots_);
                dead = sopts[si].empty();
            }
            if (dead)
                continue;
            std::vector<size_t> idx(ns, 0);
            while (true) {
                std::vector<const StationOption*> chosen(ns);
                for (size_t si = 0; si < ns; ++si)
                    chosen[si] = &sopts[si][idx[si]];
                if (auto eo = eval_option(mask, ev, cls, chosen))
                    out.push_back(std::move(*eo));
                size_t si = 0;
                for (; si < ns; ++si) {
                    if (++idx[si] < sopts[si].size())
                        break;
                    idx[si] = 0;
                }
                if (si == ns)
                    break;
            }
        }
    }

    std::optional<EvaluatedOption> eval_option(
        uint32_t mask, const EventSpec& ev, PrepCls cls,
        const std::vector<const StationOption*>& chosen) const {
        if (budget_.fetch_add(1, std::memory_order_relaxed) >= budget_limit_)
            throw enumeration_budget_error(
                "quantum branch budget exhausted; rerun with the sampling method "
                "or raise the budget");
        const auto& l = *layout_;
        auto present = [&](int ph) { return ((mask >> ph) & 1) != 0; };

        DensityReg reg;
        std::vector<char> made(l.sources.size(), 0);
        auto ensure = [&](int photon) {
            const int s = l.source_of(photon);
            if (made[static_cast<size_t>(s)])
                return;
            made[static_cast<size_t>(s)] = 1;
            const auto& sp = l.sources[static_cast<size_t>(s)];
            const bool a = present(sp.photon_a);
            const bool b = present(sp.photon_b);
            if (a && b) {
                const double lam = noise_.lambda_for(sp.id);
                const Eigen::Vector4cd& k = kets::phi_plus;
                Eigen::Matrix4cd d4 = (1.0 - lam) * (k * k.adjoint()) +
                                      (lam / 4.0) * Eigen::Matrix4cd::Identity();
                reg.tensor_in(d4, {sp.photon_a, sp.photon_b});
            } else if (a || b) {
                reg.tensor_in(0.5 * Eigen::Matrix2cd::Identity(),
                              {a ? sp.photon_a : sp.photon_b});
            }
        };

        bool prep_done = !l.prep.has_value() || cls == PrepCls::None;
        auto maybe_prep = [&](const StationSpec& st) {
            if (prep_done)
                return;
            const auto& pp = *l.prep;
            if (st.line_a != pp.line_a && st.line_a != pp.line_b &&
                st.line_b != pp.line_a && st.line_b != pp.line_b)
                return;
            prep_done = true;
            const double v = noise_.visibility_for(pp.id);
            switch (cls) {
                case PrepCls::Keep:
                    ensure(pp.line_a);
                    ensure(pp.line_b);
                    reg.fuse_keep(pp.line_a, pp.line_b, v);
                    break;
                case PrepCls::BothA:
                case PrepCls::BothB: {
                    ensure(pp.line_a);
                    ensure(pp.line_b);
                    const auto bra = cls == PrepCls::BothA
                                         ? pair_ket(kets::H, kets::V)
                                         : pair_ket(kets::V, kets::H);
                    reg.contract_pair(pp.line_a, pp.line_b, {{bra, 1.0}});
                    break;
                }
                case PrepCls::StayA:
                    ensure(pp.line_a);
                    reg.project_keep(pp.line_a, kets::H);
                    break;
                case PrepCls::CrossA:
                    ensure(pp.line_a);
                    reg.project_keep(pp.line_a, kets::V);
                    break;
                case PrepCls::StayB:
                    ensure(pp.line_b);
                    reg.project_keep(pp.line_b, kets::H);
                    break;
                case PrepCls::CrossB:
                    ensure(pp.line_b);
                    reg.project_keep(pp.line_b, kets::V);
                    break;
                default:
                    break;
            }
        };

        EvaluatedOption out;
        double factor = 1.0;
        for (size_t si = 0; si < l.stations.size(); ++si) {
            const auto& st = l.stations[si];
            maybe_prep(st);
            const StationOption* o = chosen[si];
            factor *= o->factor;
            out.false_bell |= o->false_bell;
            out.false_single |= o->false_single;
            out.merged |= o->merged;
            out.deficit.insert(out.deficit.end(), o->deficit.begin(), o->deficit.end());
            if (!o->pair_bras.empty()) {
                const int pa = photon_on(mask, cls, st.line_a);
                const int pb = photon_on(mask, cls, st.line_b);
                ensure(pa);
                ensure(pb);
                reg.contract_pair(pa, pb, o->pair_bras);
            } else if (!o->single_bras.empty()) {
                ensure(o->single_photon);
                reg.contract_single(o->single_photon, o->single_bras);
            }
        }
        for (const auto& fr : ev.finals) {
            if (present(fr.line)) {
                ensure(fr.line);
                if (fr.z >= 0)
                    reg.contract_single(fr.line,
                                        {{fr.z ? kets::V : kets::H, 1.0}});
            } else {
                out.deficit.push_back(slots_.final_slot(fr.line, std::max(fr.z, 0)));
            }
        }

        const double w = reg.weight() * factor;
        if (!(w > 1e-28))
            return std::nullopt;
        out.weight = w;
        out.spawns = prep_spawns(cls);
        if (pair_mode_) {
            out.alice_present = present(ev.alice);
            out.bob_present = present(ev.bob);
            if (want_rho_ && !out.merged)
                out.rho = assemble_pair_rho(reg, ev, factor, out);
        }
        return out;
    }

    Eigen::Matrix4cd assemble_pair_rho(const DensityReg& reg, const EventSpec& ev,
                                       double factor,
                                       const EvaluatedOption& o) const {
        const int n = static_cast<int>(reg.photons.size());
        if (o.alice_present && o.bob_present) {
            Eigen::MatrixXcd r =
                partial_trace(reg.rho, n, {reg.pos(ev.alice), reg.pos(ev.bob)});
            return factor * Eigen::Matrix4cd(r);
        }
        const Eigen::Matrix2cd half = 0.5 * Eigen::Matrix2cd::Identity();
        if (o.alice_present || o.bob_present) {
            const int ph = o.alice_present ? ev.alice : ev.bob;
            Eigen::MatrixXcd r2 = partial_trace(reg.rho, n, {reg.pos(ph)});
            Eigen::Matrix2cd m2 = factor * Eigen::Matrix2cd(r2);
            // Qubit 0 holds the left-node photon; an absent final turns
            // into the unpolarized state of whichever photon filled it.
            return o.alice_present
                       ? Eigen::Matrix4cd(Eigen::kroneckerProduct(half, m2))
                       : Eigen::Matrix4cd(Eigen::kroneckerProduct(m2, half));
        }
        return o.weight * 0.25 * Eigen::Matrix4cd::Identity();
    }
};

} // namespace detail
} // namespace aprsim
