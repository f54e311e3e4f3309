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
 * @file io.hpp
 * Declarative config files and machine-readable results.
 *
 * Every structure serializes to JSON with alphabetically ordered keys, so
 * identical inputs dump to identical bytes. Density matrices flatten to
 * row-major (re, im) pairs under a dimension header. Config parsing is
 * strict: unknown keys raise config_error rather than being ignored.
 */
#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aprsim/layout.hpp"
#include "aprsim/noise.hpp"
#include "aprsim/pcm.hpp"
#include "aprsim/run.hpp"
#include "aprsim/sources.hpp"
#include "aprsim/tomo.hpp"
#include "aprsim/types.hpp"

namespace aprsim {

using json = nlohmann::json;

namespace detail {

inline void expect_keys(const json& j, const std::string& where,
                        std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw config_error(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k)
                known = true;
        if (!known)
            throw config_error("unknown key \"" + key + "\" in " + where);
    }
}

inline double get_num(const json& j, const std::string& where) {
    if (!j.is_number())
        throw config_error(where + " must be a number");
    return j.get<double>();
}

inline std::int64_t get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer())
        throw config_error(where + " must be an integer");
    return j.get<std::int64_t>();
}

inline std::string get_str(const json& j, const std::string& where) {
    if (!j.is_string())
        throw config_error(where + " must be a string");
    return j.get<std::string>();
}

inline int parse_photon_key(const std::string& key) {
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(key.data(), key.data() + key.size(), value);
    if (ec != std::errc{} || ptr != key.data() + key.size())
        throw config_error("photon key \"" + key + "\" is not an integer");
    return value;
}

} // namespace detail

/// Shortest round-trip decimal form, locale independent.
inline std::string fmt_double(double x) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------------------
// density matrices

inline json density_to_json(const Eigen::MatrixXcd& rho) {
    if (rho.rows() != rho.cols() || rho.rows() < 1)
        throw config_error("density serialization needs a square matrix");
    json entries = json::array();
    for (Eigen::Index r = 0; r < rho.rows(); ++r)
        for (Eigen::Index c = 0; c < rho.cols(); ++c)
            entries.push_back({rho(r, c).real(), rho(r, c).imag()});
    return json{{"dim", rho.rows()}, {"entries", std::move(entries)}};
}

inline Eigen::MatrixXcd density_from_json(const json& j) {
    detail::expect_keys(j, "density", {"dim", "entries"});
    if (!j.contains("dim") || !j.contains("entries"))
        throw config_error("density needs \"dim\" and \"entries\"");
    const auto dim = detail::get_int(j.at("dim"), "density dim");
    if (dim < 1 || dim > (1 << max_qubits))
        throw config_error("density dim out of range");
    const auto& entries = j.at("entries");
    if (!entries.is_array() ||
        entries.size() != static_cast<size_t>(dim) * static_cast<size_t>(dim))
        throw config_error("density needs dim^2 entries");
    Eigen::MatrixXcd rho(dim, dim);
    size_t i = 0;
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c, ++i) {
            const auto& e = entries.at(i);
            if (!e.is_array() || e.size() != 2)
                throw config_error("density entries must be (re, im) pairs");
            rho(r, c) = cplx(detail::get_num(e.at(0), "density entry"),
                             detail::get_num(e.at(1), "density entry"));
        }
    return rho;
}

// ---------------------------------------------------------------------------
// layouts

inline json layout_to_json(const ExperimentLayout& l) {
    json sources = json::array();
    for (const auto& s : l.sources)
        sources.push_back({{"id", s.id},
                           {"photon_a", s.photon_a},
                           {"photon_b", s.photon_b}});
    json stations = json::array();
    for (const auto& st : l.stations)
        stations.push_back({{"id", st.id},
                            {"kind", kind_name(st.kind)},
                            {"line_a", st.line_a},
                            {"line_b", st.line_b}});
    json nodes = json::array();
    for (const auto& n : l.nodes)
        nodes.push_back({{"final_if_x_bell", n.final_if_x_bell},
                         {"final_if_y_bell", n.final_if_y_bell},
                         {"id", n.id},
                         {"station_x", n.station_x},
                         {"station_y", n.station_y}});
    json out{{"final_lines", l.final_lines},
             {"name", l.name},
             {"nodes", std::move(nodes)},
             {"sources", std::move(sources)},
             {"stations", std::move(stations)}};
    if (l.prep)
        out["prep"] = {{"id", l.prep->id},
                       {"line_a", l.prep->line_a},
                       {"line_b", l.prep->line_b}};
    return out;
}

inline ExperimentLayout layout_from_json(const json& j) {
    detail::expect_keys(j, "layout",
                        {"final_lines", "name", "nodes", "prep", "sources",
                         "stations"});
    ExperimentLayout l;
    if (j.contains("name"))
        l.name = detail::get_str(j.at("name"), "layout name");
    if (j.contains("sources"))
        for (const auto& s : j.at("sources")) {
            detail::expect_keys(s, "source spec", {"id", "photon_a", "photon_b"});
            SourceSpec spec;
            spec.id = detail::get_str(s.at("id"), "source id");
            spec.photon_a =
                static_cast<int>(detail::get_int(s.at("photon_a"), "photon_a"));
            spec.photon_b =
                static_cast<int>(detail::get_int(s.at("photon_b"), "photon_b"));
            l.sources.push_back(std::move(spec));
        }
    if (j.contains("prep")) {
        const auto& p = j.at("prep");
        detail::expect_keys(p, "prep", {"id", "line_a", "line_b"});
        PrepSpec spec;
        spec.id = detail::get_str(p.at("id"), "prep id");
        spec.line_a = static_cast<int>(detail::get_int(p.at("line_a"), "line_a"));
        spec.line_b = static_cast<int>(detail::get_int(p.at("line_b"), "line_b"));
        l.prep = std::move(spec);
    }
    if (j.contains("stations"))
        for (const auto& s : j.at("stations")) {
            detail::expect_keys(s, "station spec",
                                {"id", "kind", "line_a", "line_b"});
            StationSpec spec;
            spec.id = detail::get_str(s.at("id"), "station id");
            spec.kind = kind_from_name(
                detail::get_str(s.at("kind"), "station kind"));
            spec.line_a =
                static_cast<int>(detail::get_int(s.at("line_a"), "line_a"));
            spec.line_b =
                static_cast<int>(detail::get_int(s.at("line_b"), "line_b"));
            l.stations.push_back(std::move(spec));
        }
    if (j.contains("nodes"))
        for (const auto& n : j.at("nodes")) {
            detail::expect_keys(n, "node spec",
                                {"final_if_x_bell", "final_if_y_bell", "id",
                                 "station_x", "station_y"});
            NodeSpec spec;
            spec.id = detail::get_str(n.at("id"), "node id");
            spec.station_x =
                static_cast<int>(detail::get_int(n.at("station_x"), "station_x"));
            spec.station_y =
                static_cast<int>(detail::get_int(n.at("station_y"), "station_y"));
            spec.final_if_x_bell = static_cast<int>(
                detail::get_int(n.at("final_if_x_bell"), "final_if_x_bell"));
            spec.final_if_y_bell = static_cast<int>(
                detail::get_int(n.at("final_if_y_bell"), "final_if_y_bell"));
            l.nodes.push_back(std::move(spec));
        }
    if (j.contains("final_lines"))
        for (const auto& f : j.at("final_lines"))
            l.final_lines.push_back(
                static_cast<int>(detail::get_int(f, "final line")));
    l.validate();
    return l;
}

/// Built-in benches addressable from a config file by name.
inline ExperimentLayout layout_by_name(const std::string& name) {
    if (name == "all_photonic_2x2")
        return layout_all_photonic_2x2();
    if (name == "conventional_2x2_ch0")
        return layout_conventional_2x2(0);
    if (name == "conventional_2x2_ch1")
        return layout_conventional_2x2(1);
    if (name == "twelve_fold_2x2")
        return layout_twelve_fold_2x2();
    throw config_error("unknown layout name: " + name);
}

// ---------------------------------------------------------------------------
// sources and noise

inline json source_to_json(const SourceModel& m) {
    return json{{"eta", m.eta},
                {"max_pairs", m.max_pairs},
                {"p", m.p},
                {"pulse_rate", m.pulse_rate},
                {"scheme", scheme_name(m.scheme)}};
}

inline SourceModel source_from_json(const json& j) {
    detail::expect_keys(j, "source",
                        {"eta", "max_pairs", "p", "pulse_rate", "scheme"});
    SourceModel m;
    if (j.contains("p"))
        m.p = detail::get_num(j.at("p"), "source p");
    if (j.contains("max_pairs"))
        m.max_pairs =
            static_cast<int>(detail::get_int(j.at("max_pairs"), "max_pairs"));
    if (j.contains("pulse_rate"))
        m.pulse_rate = detail::get_num(j.at("pulse_rate"), "pulse_rate");
    if (j.contains("eta"))
        m.eta = detail::get_num(j.at("eta"), "source eta");
    if (j.contains("scheme"))
        m.scheme = scheme_from_name(detail::get_str(j.at("scheme"), "scheme"));
    m.validate();
    return m;
}

inline json noise_to_json(const NoiseModel& n) {
    json eta = json::object();
    for (const auto& [photon, e] : n.eta)
        eta[std::to_string(photon)] = e;
    return json{{"default_eta", n.default_eta},
                {"default_lambda", n.default_lambda},
                {"default_visibility", n.default_visibility},
                {"eta", std::move(eta)},
                {"lambda", n.lambda},
                {"visibility", n.visibility}};
}

inline NoiseModel noise_from_json(const json& j) {
    detail::expect_keys(j, "noise",
                        {"default_eta", "default_lambda", "default_visibility",
                         "eta", "lambda", "visibility"});
    NoiseModel n;
    if (j.contains("default_eta"))
        n.default_eta = detail::get_num(j.at("default_eta"), "default_eta");
    if (j.contains("default_visibility"))
        n.default_visibility =
            detail::get_num(j.at("default_visibility"), "default_visibility");
    if (j.contains("default_lambda"))
        n.default_lambda =
            detail::get_num(j.at("default_lambda"), "default_lambda");
    if (j.contains("eta"))
        for (const auto& [key, value] : j.at("eta").items())
            n.eta[detail::parse_photon_key(key)] =
                detail::get_num(value, "eta override");
    if (j.contains("visibility"))
        for (const auto& [key, value] : j.at("visibility").items())
            n.visibility[key] = detail::get_num(value, "visibility override");
    if (j.contains("lambda"))
        for (const auto& [key, value] : j.at("lambda").items())
            n.lambda[key] = detail::get_num(value, "lambda override");
    n.validate();
    return n;
}

// ---------------------------------------------------------------------------
// combined experiment config

/// One declarative file describes what to simulate: the bench wiring (by
/// built-in name or inline), the source operating point and the noise
/// model. Absent sections keep their defaults.
struct SimConfig {
    ExperimentLayout layout = layout_all_photonic_2x2();
    SourceModel source;
    NoiseModel noise;
};

inline json config_to_json(const SimConfig& c) {
    return json{{"layout", layout_to_json(c.layout)},
                {"noise", noise_to_json(c.noise)},
                {"source", source_to_json(c.source)}};
}

inline SimConfig config_from_json(const json& j) {
    detail::expect_keys(j, "config", {"layout", "noise", "source"});
    SimConfig c;
    if (j.contains("layout")) {
        const auto& l = j.at("layout");
        c.layout = l.is_string()
                       ? layout_by_name(l.get<std::string>())
                       : layout_from_json(l);
    }
    if (j.contains("source"))
        c.source = source_from_json(j.at("source"));
    if (j.contains("noise"))
        c.noise = noise_from_json(j.at("noise"));
    return c;
}

// ---------------------------------------------------------------------------
// tomography records

namespace detail {

inline Basis basis_from_letter(char c) {
    switch (c) {
        case 'X': return Basis::X;
        case 'Y': return Basis::Y;
        case 'Z': return Basis::Z;
    }
    throw config_error(std::string("unknown basis letter: ") + c);
}

} // namespace detail

/// Outcome index rendered qubit 0 first; '0' marks the +1 eigenstate.
inline std::string outcome_bits(int outcome, int num_qubits) {
    std::string s;
    for (int q = 0; q < num_qubits; ++q)
        s += ((outcome >> q) & 1) ? '1' : '0';
    return s;
}

inline json records_to_json(const std::vector<TomographyRecord>& records) {
    json out = json::array();
    for (const auto& r : records)
        out.push_back({{"counts", r.counts}, {"setting", r.setting.label()}});
    return out;
}

inline std::vector<TomographyRecord> records_from_json(const json& j) {
    if (!j.is_array())
        throw config_error("tomography records must be a JSON array");
    std::vector<TomographyRecord> out;
    for (const auto& rj : j) {
        detail::expect_keys(rj, "tomography record", {"counts", "setting"});
        TomographyRecord r;
        for (char c : detail::get_str(rj.at("setting"), "setting"))
            r.setting.bases.push_back(detail::basis_from_letter(c));
        if (r.setting.bases.empty())
            throw config_error("tomography record with empty setting");
        const auto& counts = rj.at("counts");
        if (!counts.is_array() ||
            counts.size() != (size_t{1} << r.setting.bases.size()))
            throw config_error("tomography record needs 2^qubits counts");
        for (const auto& c : counts)
            r.counts.push_back(
                static_cast<std::uint64_t>(detail::get_int(c, "count")));
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string records_to_csv(const std::vector<TomographyRecord>& records) {
    std::string out = "setting,outcome,count\n";
    for (const auto& r : records) {
        const int nq = static_cast<int>(r.setting.bases.size());
        for (size_t o = 0; o < r.counts.size(); ++o) {
            out += r.setting.label();
            out += ',';
            out += outcome_bits(static_cast<int>(o), nq);
            out += ',';
            out += std::to_string(r.counts[o]);
            out += '\n';
        }
    }
    return out;
}

inline json probe_records_to_json(const std::vector<PovmProbeRecord>& records) {
    json out = json::array();
    for (const auto& r : records) {
        json counts = json::object();
        for (const auto& [tag, n] : r.counts)
            counts[tag_name(tag)] = n;
        out.push_back({{"counts", std::move(counts)}, {"probe", r.probe.labels}});
    }
    return out;
}

inline std::vector<PovmProbeRecord> probe_records_from_json(const json& j) {
    if (!j.is_array())
        throw config_error("probe records must be a JSON array");
    std::vector<PovmProbeRecord> out;
    for (const auto& rj : j) {
        detail::expect_keys(rj, "probe record", {"counts", "probe"});
        PovmProbeRecord r;
        r.probe = probe_state(detail::get_str(rj.at("probe"), "probe"));
        for (const auto& [key, value] : rj.at("counts").items())
            r.counts[tag_from_name(key)] =
                static_cast<std::uint64_t>(detail::get_int(value, "count"));
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string probe_records_to_csv(
    const std::vector<PovmProbeRecord>& records) {
    std::string out = "probe,verdict,count\n";
    for (const auto& r : records)
        for (const auto& [tag, n] : r.counts) {
            out += r.probe.labels;
            out += ',';
            out += tag_name(tag);
            out += ',';
            out += std::to_string(n);
            out += '\n';
        }
    return out;
}

inline json povm_to_json(const PcmPovm& povm) {
    json elements = json::object();
    for (const auto& [tag, op] : povm.elements)
        elements[tag_name(tag)] = density_to_json(op);
    return json{{"elements", std::move(elements)}};
}

inline PcmPovm povm_from_json(const json& j) {
    detail::expect_keys(j, "povm", {"elements"});
    PcmPovm povm;
    for (const auto& [key, value] : j.at("elements").items()) {
        const Eigen::MatrixXcd op = density_from_json(value);
        if (op.rows() != 4)
            throw config_error("verdict elements act on two qubits");
        povm.elements[tag_from_name(key)] = op;
    }
    return povm;
}

// ---------------------------------------------------------------------------
// run results

inline json pair_table_to_json(const std::vector<FinalPairRecord>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"alice", r.alice},
                       {"bob", r.bob},
                       {"correction", std::string(1, r.correction)},
                       {"key", r.key},
                       {"outcomes", r.outcomes}});
    return out;
}

inline std::string ratio_points_to_csv(const std::vector<RatioPoint>& points) {
    std::string out = "p,r_theory,r_simulated,std_error\n";
    for (const auto& pt : points) {
        out += fmt_double(pt.p);
        out += ',';
        out += fmt_double(pt.r_theory);
        out += ',';
        out += fmt_double(pt.r_sim);
        out += ',';
        out += fmt_double(pt.std_error);
        out += '\n';
    }
    return out;
}

inline json ratio_points_to_json(const std::vector<RatioPoint>& points) {
    json out = json::array();
    for (const auto& pt : points)
        out.push_back({{"p", pt.p},
                       {"r_simulated", pt.r_sim},
                       {"r_theory", pt.r_theory},
                       {"std_error", pt.std_error}});
    return out;
}

// ---------------------------------------------------------------------------
// run report and file output

/// Reproducibility envelope around every command's payload. Identical
/// (command, config, seed) produce byte-identical dumps except for the
/// duration field.
struct RunReport {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    json payload;
    double duration_seconds = 0.0;
};

inline json report_to_json(const RunReport& r) {
    return json{{"command", r.command},
                {"config", r.config},
                {"duration_seconds", r.duration_seconds},
                {"payload", r.payload},
                {"seed", r.seed}};
}

/// Writes through a temporary sibling and renames, so a failed run never
/// leaves a partial file at the destination.
inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw config_error("cannot open output file " + tmp.string());
        out.write(content.data(),
                  static_cast<std::streamsize>(content.size()));
        if (!out)
            throw config_error("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw config_error("cannot move output into place at " + path.string());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw config_error("cannot read " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return content;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw config_error("malformed JSON in " + what);
    return j;
}

} // namespace aprsim
