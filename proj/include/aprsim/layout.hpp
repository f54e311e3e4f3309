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
 * @file layout.hpp
 * Declarative wiring of a repeater bench.
 *
 * Photons are numbered by the fiber line they start on; photon k of a
 * source travels line k unless the central preparation PBS reroutes it.
 * A station couples two lines: input a carries the resource (GHZ) photon
 * and transmits toward port L, input b carries the link photon from an
 * entangled-pair source. Lines that end in a free analyzer are finals;
 * the surviving pair of the protocol lives on two of them.
 */
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aprsim/types.hpp"

namespace aprsim {

enum class StationKind {
    Cpbs,     ///< passive-choice station: wave plates around the PBS
    PlainPbs, ///< bare PBS with polarization-resolving detection
    Direct,   ///< fixed single-photon analyzer pair replacing a station
};

inline const char* kind_name(StationKind k) {
    switch (k) {
        case StationKind::Cpbs: return "cpbs";
        case StationKind::PlainPbs: return "plain_pbs";
        case StationKind::Direct: return "direct";
    }
    return "?";
}

inline StationKind kind_from_name(const std::string& s) {
    if (s == "cpbs") return StationKind::Cpbs;
    if (s == "plain_pbs") return StationKind::PlainPbs;
    if (s == "direct") return StationKind::Direct;
    throw config_error("unknown station kind: " + s);
}

struct SourceSpec {
    std::string id;
    int photon_a = 0;
    int photon_b = 0;
};

/// Central polarizing beam splitter that fuses the two resource pairs into
/// a four-photon GHZ state. Output line_a keeps the transmitted beam of
/// input line_a plus the reflected beam of line_b, and vice versa.
struct PrepSpec {
    std::string id;
    int line_a = 0;
    int line_b = 0;
};

/// For Direct stations line_a is the analyzed resource line (a D/A
/// analyzer with two monitored detectors) and line_b the partner line,
/// which runs into an analyzer that the coincidence logic ignores.
struct StationSpec {
    std::string id;
    StationKind kind = StationKind::Cpbs;
    int line_a = 0;
    int line_b = 0;
};

/// A repeater node owns two stations. In each registered event exactly one
/// of them performs the Bell projection; the matching final line joins the
/// surviving pair. For nodes with a Direct station the Bell role is fixed
/// and the direct final is -1.
struct NodeSpec {
    std::string id;
    int station_x = 0;
    int station_y = 0;
    int final_if_x_bell = 0;
    int final_if_y_bell = 0;
};

struct ExperimentLayout {
    std::string name;
    std::vector<SourceSpec> sources;
    std::optional<PrepSpec> prep;
    std::vector<StationSpec> stations;
    std::vector<NodeSpec> nodes; ///< nodes[0] is the Alice side, nodes[1] Bob
    std::vector<int> final_lines;

    int max_photon() const {
        int m = 0;
        for (const auto& s : sources)
            m = std::max({m, s.photon_a, s.photon_b});
        return m;
    }

    int source_of(int photon) const {
        for (size_t i = 0; i < sources.size(); ++i)
            if (sources[i].photon_a == photon || sources[i].photon_b == photon)
                return static_cast<int>(i);
        throw config_error("photon " + std::to_string(photon) + " has no source");
    }

    int partner_of(int photon) const {
        const auto& s = sources[static_cast<size_t>(source_of(photon))];
        return s.photon_a == photon ? s.photon_b : s.photon_a;
    }

    const StationSpec* station_by_id(const std::string& id) const {
        for (const auto& st : stations)
            if (st.id == id)
                return &st;
        return nullptr;
    }

    /// Station consuming a given line, or -1 if the line runs to a final
    /// analyzer or an ignored one.
    int station_of_line(int line) const {
        for (size_t i = 0; i < stations.size(); ++i)
            if (stations[i].line_a == line || stations[i].line_b == line)
                return static_cast<int>(i);
        return -1;
    }

    bool is_final(int line) const {
        return std::find(final_lines.begin(), final_lines.end(), line) !=
               final_lines.end();
    }

    void validate() const {
        if (sources.empty())
            throw config_error("layout needs at least one source");
        std::set<int> photons;
        std::set<std::string> ids;
        for (const auto& s : sources) {
            if (s.photon_a == s.photon_b)
                throw config_error("source " + s.id + " lists one photon twice");
            for (int ph : {s.photon_a, s.photon_b})
                if (!photons.insert(ph).second)
                    throw config_error("photon " + std::to_string(ph) +
                                       " emitted by two sources");
            if (!ids.insert(s.id).second)
                throw config_error("duplicate id: " + s.id);
        }
        std::set<int> consumed;
        auto consume = [&](int line, const std::string& what) {
            if (!photons.count(line))
                throw config_error(what + " references unknown line " +
                                   std::to_string(line));
            if (!consumed.insert(line).second)
                throw config_error("line " + std::to_string(line) +
                                   " consumed twice");
        };
        if (prep) {
            if (!ids.insert(prep->id).second)
                throw config_error("duplicate id: " + prep->id);
            if (prep->line_a == prep->line_b)
                throw config_error("prep lines must differ");
            for (int line : {prep->line_a, prep->line_b}) {
                if (!photons.count(line))
                    throw config_error("prep references unknown line " +
                                       std::to_string(line));
                if (station_of_line(line) < 0)
                    throw config_error("prep output line " + std::to_string(line) +
                                       " feeds no station");
            }
        }
        for (const auto& st : stations) {
            if (!ids.insert(st.id).second)
                throw config_error("duplicate id: " + st.id);
            consume(st.line_a, "station " + st.id);
            consume(st.line_b, "station " + st.id);
        }
        for (int line : final_lines)
            consume(line, "final");
        for (const auto& n : nodes) {
            if (!ids.insert(n.id).second)
                throw config_error("duplicate id: " + n.id);
            for (int si : {n.station_x, n.station_y})
                if (si < 0 || si >= static_cast<int>(stations.size()))
                    throw config_error("node " + n.id + " references no station");
            const auto& sx = stations[static_cast<size_t>(n.station_x)];
            const auto& sy = stations[static_cast<size_t>(n.station_y)];
            if (sx.kind == StationKind::Direct && sy.kind == StationKind::Direct)
                throw config_error("node " + n.id + " has no Bell-capable station");
            if (sx.kind != StationKind::Direct && n.final_if_x_bell <= 0)
                throw config_error("node " + n.id + " misses a final for station x");
            if (sy.kind != StationKind::Direct && n.final_if_y_bell <= 0)
                throw config_error("node " + n.id + " misses a final for station y");
            for (int f : {n.final_if_x_bell, n.final_if_y_bell})
                if (f > 0 && !is_final(f))
                    throw config_error("node " + n.id + " selects non-final line " +
                                       std::to_string(f));
        }
        if (!nodes.empty() && nodes.size() != 2)
            throw config_error("pair protocols need exactly two nodes");
    }
};

/**
 * @brief The 2x2 all-photonic bench: six sources, a central fusion PBS and
 * four passive-choice stations.
 *
 * Sources (1,2), (3,4), (9,10), (11,12) are link pairs; (5,6) and (7,8)
 * fuse into the GHZ resource over lines 5 and 7. Stations couple resource
 * lines 6, 7, 5, 8 with link lines 2, 3, 9, 12; lines 1, 4, 10 and 11 end
 * in final analyzers. The Alice-side node picks final 1 when station
 * (2,6) projects onto a Bell state and final 4 when station (3,7) does;
 * the Bob-side node picks 10 for station (5,9) and 11 for (8,12).
 */
inline ExperimentLayout layout_all_photonic_2x2() {
    ExperimentLayout l;
    l.name = "all_photonic_2x2";
    l.sources = {{"src_1_2", 1, 2},   {"src_3_4", 3, 4},  {"src_5_6", 5, 6},
                 {"src_7_8", 7, 8},   {"src_9_10", 9, 10}, {"src_11_12", 11, 12}};
    l.prep = PrepSpec{"ghz_prep", 5, 7};
    l.stations = {{"pcm_2_6", StationKind::Cpbs, 6, 2},
                  {"pcm_3_7", StationKind::Cpbs, 7, 3},
                  {"pcm_5_9", StationKind::Cpbs, 5, 9},
                  {"pcm_8_12", StationKind::Cpbs, 8, 12}};
    l.nodes = {{"node_a", 0, 1, 1, 4}, {"node_b", 2, 3, 10, 11}};
    l.final_lines = {1, 4, 10, 11};
    l.validate();
    return l;
}

/**
 * @brief Conventional reference bench for one channel of the 2x2 layout.
 *
 * One repeater channel keeps its two Bell stations and replaces the other
 * two passive-choice stations by fixed D/A analyzers on the resource
 * lines; the link photons on those stations run into ignored analyzers.
 * Channel 0 swaps through stations (2,6) and (8,12) toward the pair
 * (1, 11); channel 1 mirrors it through (3,7) and (5,9) toward (4, 10).
 */
inline ExperimentLayout layout_conventional_2x2(int channel) {
    if (channel != 0 && channel != 1)
        throw config_error("channel must be 0 or 1");
    ExperimentLayout l;
    l.sources = {{"src_1_2", 1, 2},   {"src_3_4", 3, 4},  {"src_5_6", 5, 6},
                 {"src_7_8", 7, 8},   {"src_9_10", 9, 10}, {"src_11_12", 11, 12}};
    l.prep = PrepSpec{"ghz_prep", 5, 7};
    if (channel == 0) {
        l.name = "conventional_2x2_ch0";
        l.stations = {{"pcm_2_6", StationKind::Cpbs, 6, 2},
                      {"x_7", StationKind::Direct, 7, 3},
                      {"x_5", StationKind::Direct, 5, 9},
                      {"pcm_8_12", StationKind::Cpbs, 8, 12}};
        l.nodes = {{"node_a", 0, 1, 1, -1}, {"node_b", 3, 2, 11, -1}};
        l.final_lines = {1, 11};
    } else {
        l.name = "conventional_2x2_ch1";
        l.stations = {{"x_6", StationKind::Direct, 6, 2},
                      {"pcm_3_7", StationKind::Cpbs, 7, 3},
                      {"pcm_5_9", StationKind::Cpbs, 5, 9},
                      {"x_8", StationKind::Direct, 8, 12}};
        l.nodes = {{"node_a", 1, 0, 4, -1}, {"node_b", 2, 3, 10, -1}};
        l.final_lines = {4, 10};
    }
    l.validate();
    return l;
}

/**
 * @brief Diagnostic variant of the all-photonic bench with the station
 * wave plates removed: every station becomes a bare PBS and all four
 * final lines are measured in H/V. A twelve-fold coincidence then checks
 * the global parity structure of the fused resource.
 */
inline ExperimentLayout layout_twelve_fold_2x2() {
    ExperimentLayout l = layout_all_photonic_2x2();
    l.name = "twelve_fold_2x2";
    const std::string prefix = "pbs";
    for (auto& st : l.stations) {
        st.kind = StationKind::PlainPbs;
        st.id = "pbs" + st.id.substr(3);
    }
    l.nodes.clear();
    l.validate();
    return l;
}

} // namespace aprsim
