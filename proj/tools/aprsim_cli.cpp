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
 * @file aprsim_cli.cpp
 * Batch front end for the repeater bench simulator.
 *
 * Subcommands run one experiment each and wrap their results in a
 * reproducibility report: command echo, full config snapshot, seed,
 * payload and wall-clock duration. Identical (command, config, seed)
 * invocations produce byte-identical artifacts apart from the duration
 * field. Without --out the machine-readable artifact goes to stdout;
 * with --out it goes to the file and stdout shows a human summary.
 *
 * Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
 * (enumeration budget or non-convergence).
 */

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "aprsim/density.hpp"
#include "aprsim/io.hpp"
#include "aprsim/layout.hpp"
#include "aprsim/noise.hpp"
#include "aprsim/pcm.hpp"
#include "aprsim/run.hpp"
#include "aprsim/sources.hpp"
#include "aprsim/state.hpp"
#include "aprsim/tomo.hpp"
#include "aprsim/types.hpp"

namespace {

using aprsim::json;

struct CommonOpts {
    std::string method = "enumerate";
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string config_path;
    std::string out_path;
    std::string format;
    bool dump_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--method", o.method, "enumerate (closed) or sample (Monte Carlo)")
        ->check(CLI::IsMember({"enumerate", "sample"}));
    cmd->add_option("--trials", o.trials, "trials for --method sample");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads for --method sample")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--config", o.config_path, "experiment config file (JSON)");
    cmd->add_option("--out", o.out_path, "write the artifact to this path");
    cmd->add_option("--format", o.format, "artifact format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--dump-config", o.dump_config,
                  "print the effective config and exit");
}

aprsim::SimConfig load_config(const CommonOpts& o) {
    if (o.config_path.empty())
        return {};
    return aprsim::config_from_json(aprsim::parse_json_text(
        aprsim::read_text_file(o.config_path), o.config_path));
}

/// True when the caller only wants the effective configuration echoed.
bool maybe_dump_config(const CommonOpts& o) {
    if (!o.dump_config)
        return false;
    std::cout << aprsim::config_to_json(load_config(o)).dump(2) << "\n";
    return true;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Routes the artifact: file plus summary with --out, bare artifact on
/// stdout without it. CSV is available only where a flat form exists.
void finish(const CommonOpts& o, const std::string& default_format,
            aprsim::RunReport report, const std::string& csv,
            const std::string& pretty, Clock::time_point t0) {
    report.duration_seconds = seconds_since(t0);
    const std::string format = o.format.empty() ? default_format : o.format;
    std::string artifact;
    if (format == "csv") {
        if (csv.empty())
            throw aprsim::config_error("this command has no CSV form");
        artifact = csv;
    } else {
        artifact = aprsim::report_to_json(report).dump(2) + "\n";
    }
    if (o.out_path.empty()) {
        std::cout << artifact;
    } else {
        aprsim::write_text_file(o.out_path, artifact);
        std::cout << pretty << "wrote " << o.out_path << "\n";
    }
}

std::string echo_command(int argc, char** argv) {
    std::string s;
    for (int i = 1; i < argc; ++i) {
        if (i > 1)
            s += ' ';
        s += argv[i];
    }
    return s;
}

aprsim::RunReport base_report(const std::string& echo,
                              const aprsim::SimConfig& cfg,
                              std::uint64_t seed) {
    aprsim::RunReport r;
    r.command = echo;
    r.config = aprsim::config_to_json(cfg);
    r.seed = seed;
    return r;
}

// ---------------------------------------------------------------------------
// ratio-scan

void cmd_ratio_scan(const CommonOpts& o, double p_min, double p_max, int steps,
                    const std::string& echo) {
    const auto t0 = Clock::now();
    if (!(p_min >= 0.0 && p_min < p_max && p_max <= 0.3))
        throw aprsim::config_error("need 0 <= p-min < p-max <= 0.3");
    if (steps < 2)
        throw aprsim::config_error("a scan needs at least two steps");
    const auto cfg = load_config(o);

    std::vector<double> ps;
    for (int i = 0; i < steps; ++i)
        ps.push_back(p_min + (p_max - p_min) * i / (steps - 1));

    aprsim::RatioScanOptions ro;
    ro.method = aprsim::method_from_name(o.method);
    ro.trials = o.trials;
    ro.seed = o.seed;
    ro.threads = o.threads;
    const auto points = aprsim::ratio_scan(ps, cfg.source, cfg.noise, ro);

    auto report = base_report(echo, cfg, o.seed);
    report.payload = {{"method", o.method},
                      {"points", aprsim::ratio_points_to_json(points)}};

    std::ostringstream pretty;
    pretty << std::setw(10) << "p" << std::setw(12) << "r_theory"
           << std::setw(14) << "r_simulated" << std::setw(12) << "std_error"
           << "\n";
    for (const auto& pt : points)
        pretty << std::setw(10) << pt.p << std::setw(12) << pt.r_theory
               << std::setw(14) << pt.r_sim << std::setw(12) << pt.std_error
               << "\n";
    finish(o, "csv", std::move(report), aprsim::ratio_points_to_csv(points),
           pretty.str(), t0);
}

// ---------------------------------------------------------------------------
// rates

void cmd_rates(const CommonOpts& o, int m, int n, double eta,
               const std::string& echo) {
    const auto t0 = Clock::now();
    const auto r = aprsim::rate_formula(m, n, eta);
    auto report = base_report(echo, aprsim::SimConfig{}, o.seed);
    report.config = json::object();
    report.payload = {{"all_photonic", r.all_photonic},
                      {"conventional", r.conventional},
                      {"eta", eta},
                      {"m", m},
                      {"n", n},
                      {"ratio", r.ratio}};

    std::string csv = "m,n,eta,conventional,all_photonic,ratio\n";
    csv += std::to_string(m) + ',' + std::to_string(n) + ',' +
           aprsim::fmt_double(eta) + ',' + aprsim::fmt_double(r.conventional) +
           ',' + aprsim::fmt_double(r.all_photonic) + ',' +
           aprsim::fmt_double(r.ratio) + '\n';

    std::ostringstream pretty;
    pretty << "relative rates for " << m << " channels, " << n
           << " nodes, eta " << eta << "\n"
           << "  conventional: " << r.conventional << "\n"
           << "  all-photonic: " << r.all_photonic << "\n"
           << "  ratio:        " << r.ratio << "\n";
    finish(o, "json", std::move(report), csv, pretty.str(), t0);
}

// ---------------------------------------------------------------------------
// table

void cmd_table(const CommonOpts& o, const std::string& echo) {
    const auto t0 = Clock::now();
    const auto cfg = load_config(o);
    const auto rows = aprsim::final_pair_table(cfg.layout);
    if (rows.empty())
        throw aprsim::config_error("layout has no pair protocol");

    std::vector<std::string> stations;
    for (const auto& [id, verdict] : rows.front().outcomes)
        stations.push_back(id);

    auto report = base_report(echo, cfg, o.seed);
    report.payload = {{"rows", aprsim::pair_table_to_json(rows)},
                      {"stations", stations}};

    std::string csv = "key";
    for (const auto& id : stations)
        csv += ',' + id;
    csv += ",alice,bob,correction\n";
    std::ostringstream pretty;
    for (const auto& r : rows) {
        csv += r.key;
        std::ostringstream line;
        line << std::left << std::setw(30) << r.key;
        for (const auto& id : stations) {
            csv += ',' + r.outcomes.at(id);
            line << std::setw(14) << r.outcomes.at(id);
        }
        csv += ',' + std::to_string(r.alice) + ',' + std::to_string(r.bob) +
               ',' + r.correction + '\n';
        line << "(" << r.alice << ", " << r.bob << ")  " << r.correction;
        pretty << line.str() << "\n";
    }
    finish(o, "json", std::move(report), csv, pretty.str(), t0);
}

// ---------------------------------------------------------------------------
// tomo

void cmd_tomo(const CommonOpts& o, const std::string& target,
              std::uint64_t shots, double lambda, double visibility,
              const std::string& echo) {
    const auto t0 = Clock::now();
    if (shots < 1)
        throw aprsim::config_error("shots must be positive");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw aprsim::config_error("lambda must lie in [0, 1]");
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw aprsim::config_error("visibility must lie in [0, 1]");

    auto report = base_report(echo, aprsim::SimConfig{}, o.seed);
    report.config = json::object();
    std::string csv;
    std::ostringstream pretty;

    if (target == "ghz4") {
        Eigen::VectorXcd ghz = Eigen::VectorXcd::Zero(16);
        ghz(0) = ghz(15) = 1.0 / std::sqrt(2.0);
        const Eigen::MatrixXcd ideal = aprsim::projector(ghz);
        const Eigen::MatrixXcd rho =
            (1.0 - lambda) * ideal +
            lambda * Eigen::MatrixXcd::Identity(16, 16) / 16.0;

        std::vector<aprsim::TomographyRecord> records;
        for (const auto& setting : aprsim::all_settings(4))
            records.push_back(
                aprsim::simulate_counts(rho, setting, shots, o.seed));
        const auto mle = aprsim::mle_state(records);
        if (!mle.converged)
            throw aprsim::convergence_error(
                "state reconstruction did not converge");
        const double fid = std::real(ghz.dot(mle.rho * ghz));

        report.payload = {{"converged", mle.converged},
                          {"fidelity", fid},
                          {"iterations", mle.iterations},
                          {"lambda", lambda},
                          {"records", aprsim::records_to_json(records)},
                          {"rho", aprsim::density_to_json(mle.rho)},
                          {"settings", records.size()},
                          {"shots", shots},
                          {"target", target}};
        csv = aprsim::records_to_csv(records);
        pretty << "ghz4 reconstruction from " << records.size()
               << " settings x " << shots << " shots\n"
               << "  fidelity to the four-photon GHZ target: " << fid << "\n"
               << "  iterations: " << mle.iterations << "\n";
    } else {
        const auto povm = aprsim::ideal_povm(visibility);
        std::vector<aprsim::PovmProbeRecord> records;
        for (const auto& probe : aprsim::all_probes(2))
            records.push_back({probe, aprsim::simulate_probe_counts(
                                          povm, probe, shots, o.seed)});
        const auto mle = aprsim::mle_povm(records);
        if (!mle.converged)
            throw aprsim::convergence_error(
                "detector reconstruction did not converge");
        const double f_phi = aprsim::povm_fidelity(
            mle.povm.elements.at(aprsim::PcmTag::BellPhiPlus),
            aprsim::kets::phi_plus);
        const double f_psi = aprsim::povm_fidelity(
            mle.povm.elements.at(aprsim::PcmTag::BellPsiPlus),
            aprsim::kets::psi_plus);

        report.payload = {{"converged", mle.converged},
                          {"fidelity_convention", "trace_normalized"},
                          {"iterations", mle.iterations},
                          {"phi_plus_fidelity", f_phi},
                          {"povm", aprsim::povm_to_json(mle.povm)},
                          {"probes", records.size()},
                          {"psi_plus_fidelity", f_psi},
                          {"records", aprsim::probe_records_to_json(records)},
                          {"shots", shots},
                          {"target", target},
                          {"visibility", visibility}};
        csv = aprsim::probe_records_to_csv(records);
        pretty << "verdict-station reconstruction from " << records.size()
               << " probes x " << shots << " shots\n"
               << "  phi_plus element fidelity (trace normalized): " << f_phi
               << "\n"
               << "  psi_plus element fidelity (trace normalized): " << f_psi
               << "\n";
    }
    finish(o, "json", std::move(report), csv, pretty.str(), t0);
}

// ---------------------------------------------------------------------------
// fidelity

json fraction_payload(const Eigen::Matrix4cd& rho, double* fidelity_out) {
    json fractions = json::object();
    std::map<std::string, double> corr;
    for (const auto& [name, basis] :
         std::vector<std::pair<std::string, aprsim::Basis>>{
             {"xx", aprsim::Basis::X},
             {"yy", aprsim::Basis::Y},
             {"zz", aprsim::Basis::Z}}) {
        aprsim::TomographySetting setting;
        setting.bases = {basis, basis};
        json f = json::array();
        double c = 0.0;
        for (int outcome = 0; outcome < 4; ++outcome) {
            const Eigen::VectorXcd k = aprsim::outcome_ket(setting, outcome);
            const double p = std::real((k.adjoint() * rho * k)(0));
            f.push_back(p);
            c += (((outcome >> 0) & 1) ^ ((outcome >> 1) & 1)) ? -p : p;
        }
        fractions[name] = std::move(f);
        corr[name] = c;
    }
    const double fid =
        aprsim::pauli_fidelity(corr.at("xx"), corr.at("yy"), corr.at("zz"));
    if (fidelity_out)
        *fidelity_out = fid;
    return json{{"correlators", corr}, {"fidelity", fid},
                {"fractions", std::move(fractions)}};
}

void cmd_fidelity(const CommonOpts& o, bool mismatched,
                  const std::string& echo) {
    const auto t0 = Clock::now();
    const auto cfg = load_config(o);
    if (cfg.layout.nodes.empty())
        throw aprsim::config_error(
            "fidelity needs a layout with a pair protocol");

    aprsim::NetworkRunResult res;
    if (aprsim::method_from_name(o.method) == aprsim::RunMethod::Enumerate) {
        aprsim::EnumerateOptions eo;
        eo.with_states = true;
        res = aprsim::run_enumerate(cfg.layout, cfg.source, cfg.noise, eo);
    } else {
        aprsim::SampleOptions so;
        so.trials = o.trials;
        so.seed = o.seed;
        so.threads = o.threads;
        so.with_states = true;
        res = aprsim::run_sample(cfg.layout, cfg.source, cfg.noise, so);
    }

    std::map<std::pair<int, int>, Eigen::Matrix4cd> accum;
    std::map<std::pair<int, int>, double> mass;
    for (const auto& co : res.combos) {
        if (!co.has_state || co.prob <= 0.0)
            continue;
        accum[{co.record.alice, co.record.bob}] += co.prob * co.rho;
        mass[{co.record.alice, co.record.bob}] += co.prob;
    }
    if (accum.empty())
        throw aprsim::config_error("no registered events to analyze");

    json pairs = json::array();
    double overall = 0.0, total_mass = 0.0;
    std::ostringstream pretty;
    pretty << std::setw(10) << "pair" << std::setw(10) << "xx"
           << std::setw(10) << "yy" << std::setw(10) << "zz" << std::setw(12)
           << "fidelity" << "\n";
    for (const auto& [pr, sum] : accum) {
        const Eigen::Matrix4cd rho = sum / mass.at(pr);
        double fid = 0.0;
        json entry = fraction_payload(rho, &fid);
        entry["alice"] = pr.first;
        entry["bob"] = pr.second;
        entry["prob"] = mass.at(pr);
        if (mismatched) {
            const Eigen::MatrixXcd m0 = aprsim::partial_trace(rho, 2, {0});
            const Eigen::MatrixXcd m1 = aprsim::partial_trace(rho, 2, {1});
            const Eigen::Matrix4cd product = Eigen::kroneckerProduct(m1, m0);
            double mm_fid = 0.0;
            entry["mismatched"] = fraction_payload(product, &mm_fid);
        }
        overall += mass.at(pr) * fid;
        total_mass += mass.at(pr);
        pretty << "  (" << pr.first << "," << std::setw(3) << pr.second << ")"
               << std::setw(10) << std::setprecision(4)
               << entry.at("correlators").at("xx").get<double>()
               << std::setw(10)
               << entry.at("correlators").at("yy").get<double>()
               << std::setw(10)
               << entry.at("correlators").at("zz").get<double>()
               << std::setw(12) << fid << "\n";
        pairs.push_back(std::move(entry));
    }
    overall /= total_mass;
    pretty << "overall fidelity " << overall << "\n";

    auto report = base_report(echo, cfg, o.seed);
    report.payload = {{"method", o.method},
                      {"overall_fidelity", overall},
                      {"pairs", std::move(pairs)}};

    std::string csv = "alice,bob,prob,xx,yy,zz,fidelity\n";
    for (const auto& entry : report.payload.at("pairs")) {
        csv += std::to_string(entry.at("alice").get<int>()) + ',' +
               std::to_string(entry.at("bob").get<int>()) + ',' +
               aprsim::fmt_double(entry.at("prob").get<double>()) + ',' +
               aprsim::fmt_double(
                   entry.at("correlators").at("xx").get<double>()) +
               ',' +
               aprsim::fmt_double(
                   entry.at("correlators").at("yy").get<double>()) +
               ',' +
               aprsim::fmt_double(
                   entry.at("correlators").at("zz").get<double>()) +
               ',' + aprsim::fmt_double(entry.at("fidelity").get<double>()) +
               '\n';
    }
    finish(o, "json", std::move(report), csv, pretty.str(), t0);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"all-photonic repeater bench simulator"};
    app.require_subcommand(0, 1);

    bool top_dump = false;
    std::string top_config;
    app.add_flag("--dump-config", top_dump,
                 "print the effective config and exit");
    app.add_option("--config", top_config, "experiment config file (JSON)");

    CommonOpts scan_o;
    double p_min = 0.01, p_max = 0.1;
    int steps = 10;
    auto* scan = app.add_subcommand(
        "ratio-scan", "sweep the heralding-rate ratio over the emission "
                      "probability");
    scan->add_option("--p-min", p_min, "lowest emission probability");
    scan->add_option("--p-max", p_max, "highest emission probability");
    scan->add_option("--steps", steps, "number of scan points");
    add_common(scan, scan_o);

    CommonOpts rates_o;
    int rate_m = 2, rate_n = 1;
    double rate_eta = 1.0;
    auto* rates = app.add_subcommand(
        "rates", "closed-form repeater rates for M parallel channels and N "
                 "nodes");
    rates->add_option("--m", rate_m, "parallel channels per link");
    rates->add_option("--n", rate_n, "repeater nodes");
    rates->add_option("--eta", rate_eta, "per-photon efficiency");
    add_common(rates, rates_o);

    CommonOpts tomo_o;
    std::string tomo_target = "ghz4";
    std::uint64_t tomo_shots = 100000;
    double tomo_lambda = 0.0, tomo_vis = 1.0;
    auto* tomo = app.add_subcommand(
        "tomo", "simulate and reconstruct state or detector tomography");
    tomo->add_option("--target", tomo_target, "ghz4 or pcm")
        ->check(CLI::IsMember({"ghz4", "pcm"}));
    tomo->add_option("--shots", tomo_shots, "shots per setting");
    tomo->add_option("--lambda", tomo_lambda,
                     "white-noise admixture of the ghz4 target");
    tomo->add_option("--visibility", tomo_vis,
                     "interference contrast of the pcm target");
    add_common(tomo, tomo_o);

    CommonOpts table_o;
    auto* table = app.add_subcommand(
        "table", "derived verdict-combination to final-pair table");
    add_common(table, table_o);

    CommonOpts fid_o;
    bool fid_mismatched = false;
    auto* fid = app.add_subcommand(
        "fidelity", "three-basis fractions and Bell fidelity per final pair");
    fid->add_flag("--mismatched", fid_mismatched,
                  "also report the unentangled product of each pair's "
                  "marginals");
    add_common(fid, fid_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const std::string echo = echo_command(argc, argv);
    try {
        if (top_dump && app.get_subcommands().empty()) {
            CommonOpts o;
            o.config_path = top_config;
            o.dump_config = true;
            maybe_dump_config(o);
            return 0;
        }
        if (*scan) {
            if (!maybe_dump_config(scan_o))
                cmd_ratio_scan(scan_o, p_min, p_max, steps, echo);
        } else if (*rates) {
            if (!maybe_dump_config(rates_o))
                cmd_rates(rates_o, rate_m, rate_n, rate_eta, echo);
        } else if (*tomo) {
            if (!maybe_dump_config(tomo_o))
                cmd_tomo(tomo_o, tomo_target, tomo_shots, tomo_lambda,
                         tomo_vis, echo);
        } else if (*table) {
            if (!maybe_dump_config(table_o))
                cmd_table(table_o, echo);
        } else if (*fid) {
            if (!maybe_dump_config(fid_o))
                cmd_fidelity(fid_o, fid_mismatched, echo);
        } else {
            std::cerr << "error: expected a subcommand (see --help)\n";
            return 2;
        }
    } catch (const aprsim::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const aprsim::enumeration_budget_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const aprsim::convergence_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
