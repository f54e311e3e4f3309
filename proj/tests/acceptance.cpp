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

// End-to-end acceptance checks. Each numbered check prints a single PASS
// or FAIL line with its tolerance and the measured values, and the
// process exits nonzero if any of them fail. The closing calibration
// block prints REPORT lines only: those numbers come from a fitted noise
// regime and are informational, not asserted.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "aprsim/density.hpp"
#include "aprsim/io.hpp"
#include "aprsim/pcm.hpp"
#include "aprsim/rng.hpp"
#include "aprsim/run.hpp"
#include "aprsim/state.hpp"
#include "aprsim/tomo.hpp"

namespace {

int failures = 0;

void line(const char* id, bool ok, const std::string& text) {
    std::printf("%s  %-3s %s\n", ok ? "PASS" : "FAIL", id, text.c_str());
    if (!ok)
        ++failures;
}

void report(const char* id, const std::string& text) {
    std::printf("REPORT %-3s %s\n", id, text.c_str());
}

std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

aprsim::SourceModel lossless_source(double p) {
    aprsim::SourceModel s;
    s.p = p;
    s.eta = 1.0;
    return s;
}

Eigen::VectorXcd ghz4() {
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(16);
    g(0) = g(15) = 1.0 / std::sqrt(2.0);
    return g;
}

std::vector<aprsim::TomographyRecord> sample_records(
    const Eigen::MatrixXcd& rho, int num_qubits, std::uint64_t shots,
    std::uint64_t seed) {
    std::vector<aprsim::TomographyRecord> records;
    for (const auto& s : aprsim::all_settings(num_qubits))
        records.push_back(aprsim::simulate_counts(rho, s, shots, seed));
    return records;
}

double gauss(aprsim::TrialRng& rng) {
    double u = rng.uniform();
    while (u <= 0.0)
        u = rng.uniform();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * std::acos(-1.0) * rng.uniform());
}

Eigen::MatrixXcd ginibre_state(aprsim::TrialRng& rng, int dim) {
    Eigen::MatrixXcd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            g(i, j) = aprsim::cplx(gauss(rng), gauss(rng));
    Eigen::MatrixXcd rho = g * g.adjoint();
    return rho / rho.trace().real();
}

void check_ratio_law() {
    const std::vector<double> ps = {0.01, 0.0344, 0.0483, 0.1};
    const aprsim::NoiseModel noise;
    const auto base = lossless_source(0.01);

    double enum_dev = 0.0;
    for (const auto& pt : aprsim::ratio_scan(ps, base, noise))
        enum_dev = std::max(enum_dev, std::abs(pt.r_sim - pt.r_theory));

    aprsim::RatioScanOptions so;
    so.method = aprsim::RunMethod::Sample;
    so.trials = 1000000;
    so.seed = 1;
    so.threads = 8;
    double max_pull = 0.0;
    bool errors_ok = true;
    for (const auto& pt : aprsim::ratio_scan(ps, base, noise, so)) {
        if (!(pt.std_error > 0.0)) {
            errors_ok = false;
            continue;
        }
        max_pull =
            std::max(max_pull, std::abs(pt.r_sim - pt.r_theory) / pt.std_error);
    }

    line("1", enum_dev <= 1e-6 && errors_ok && max_pull <= 3.0,
         "heralding ratio r(p) = 2(1-p)^2 at p in {0.01, 0.0344, 0.0483, "
         "0.1}: enumerate within 1e-6 (max dev " +
             num(enum_dev) + "), sampled at 1e6 trials within 3 sigma (max " +
             num(max_pull) + " sigma)");
}

void check_twofold_rate() {
    const aprsim::SourceModel src;
    const double rate = aprsim::twofold_rate(src);
    const double rel = std::abs(rate / 3.97e5 - 1.0);
    line("2", rel <= 0.01,
         "twofold rate at p=0.0344, eta=0.38, 80 MHz: " + num(rate) +
             " per second vs 3.97e5 within 1% (dev " + num(rel * 100) + "%)");
}

void check_ideal_protocol() {
    const auto layout = aprsim::layout_all_photonic_2x2();
    const auto table = aprsim::final_pair_table(layout);
    const auto res = aprsim::run_enumerate(layout, lossless_source(0.0344),
                                           aprsim::NoiseModel{});
    std::map<std::string, double> fid;
    for (const auto& co : res.combos)
        if (co.has_state && co.prob > 0.0)
            fid[co.record.key] = co.fidelity;
    double worst = 1.0;
    bool complete = table.size() == 64;
    for (const auto& row : table) {
        auto it = fid.find(row.key);
        if (it == fid.end()) {
            complete = false;
            continue;
        }
        worst = std::min(worst, it->second);
    }
    line("3", complete && std::abs(worst - 1.0) <= 1e-10,
         "lossless enumeration: all " + num(double(table.size())) +
             " verdict combinations reach Bell fidelity 1 within 1e-10 after "
             "correction (worst " +
             num(worst) + ")");
}

void check_rate_formula() {
    bool ok = true;
    for (int m : {2, 3, 4})
        for (int n : {1, 2, 3})
            if (aprsim::rate_formula(m, n, 1.0).ratio !=
                std::pow(static_cast<double>(m), n))
                ok = false;
    line("4", ok,
         "repeater scaling advantage equals m^n exactly for m in {2,3,4}, "
         "n in {1,2,3}");
}

void check_state_tomography() {
    const Eigen::MatrixXcd target = aprsim::projector(ghz4());
    const auto res = aprsim::mle_state(sample_records(target, 4, 100000, 42));
    const double f = aprsim::fidelity(res.rho, ghz4());
    line("5a", res.converged && f >= 0.999,
         "four-qubit GHZ reconstruction from 81 settings x 1e5 shots: "
         "fidelity " +
             num(f) + " >= 0.999");

    const Eigen::MatrixXcd mixed =
        0.896 * target +
        (0.104 / 15.0) * (Eigen::MatrixXcd::Identity(16, 16) - target);
    const auto mres = aprsim::mle_state(sample_records(mixed, 4, 100000, 7));
    const double mf = aprsim::fidelity(mres.rho, ghz4());
    line("5b", mres.converged && std::abs(mf - 0.896) <= 0.01,
         "partially mixed target of fidelity 0.896 reconstructs to " +
             num(mf) + " within 0.01");
}

void check_detector_tomography() {
    const auto probes = aprsim::all_probes(2);
    double worst = 1.0;
    bool converged = true;
    for (double v : {1.0, 0.8}) {
        const auto gen = aprsim::ideal_povm(v);
        std::vector<aprsim::PovmProbeRecord> records;
        for (const auto& pr : probes)
            records.push_back(
                {pr, aprsim::simulate_probe_counts(gen, pr, 100000, 5)});
        const auto res = aprsim::mle_povm(records);
        converged = converged && res.converged;
        for (const auto& [tag, el] : res.povm.elements)
            worst = std::min(
                worst, aprsim::uhlmann_fidelity(el, gen.elements.at(tag)));
    }
    line("5c", converged && worst >= 0.99,
         "verdict-station detector round-trip at contrast 1.0 and 0.8: "
         "every element within 0.01 operator fidelity (worst " +
             num(worst) + ")");
}

void check_pauli_identity() {
    const Eigen::Matrix2cd x{{0, 1}, {1, 0}};
    const Eigen::Matrix2cd y{{0, aprsim::cplx(0, -1)}, {aprsim::cplx(0, 1), 0}};
    const Eigen::Matrix2cd z{{1, 0}, {0, -1}};
    const Eigen::MatrixXcd xx = Eigen::kroneckerProduct(x, x);
    const Eigen::MatrixXcd yy = Eigen::kroneckerProduct(y, y);
    const Eigen::MatrixXcd zz = Eigen::kroneckerProduct(z, z);
    const Eigen::VectorXcd bell = aprsim::kets::phi_plus;

    aprsim::TrialRng rng(2026, 17);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::MatrixXcd rho = ginibre_state(rng, 4);
        const double est = aprsim::pauli_fidelity((rho * xx).trace().real(),
                                                  (rho * yy).trace().real(),
                                                  (rho * zz).trace().real());
        worst = std::max(worst, std::abs(est - aprsim::fidelity(rho, bell)));
    }
    line("6", worst <= 1e-10,
         "correlator fidelity formula matches the direct Bell overlap on "
         "1000 random two-qubit states within 1e-10 (max dev " +
             num(worst) + ")");
}

void check_twelve_fold() {
    const auto res =
        aprsim::twelve_fold_zbasis(lossless_source(0.0344), aprsim::NoiseModel{});
    const bool ok = res.distribution.size() == 2 &&
                    res.distribution.count("HHHHHHHHHHHH") == 1 &&
                    res.distribution.count("VVVVVVVVVVVV") == 1 &&
                    res.distribution.at("HHHHHHHHHHHH") == 0.5 &&
                    res.distribution.at("VVVVVVVVVVVV") == 0.5;
    line("7", ok,
         "twelve-fold z-basis distribution is exactly {HHHHHHHHHHHH: 1/2, "
         "VVVVVVVVVVVV: 1/2}");
}

void check_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "aprsim_acceptance";
    fs::create_directories(dir);

    std::vector<std::string> payloads;
    std::vector<std::string> artifacts;
    bool ran = true;
    for (int threads : {1, 4, 8}) {
        const fs::path out = dir / ("scan_t" + std::to_string(threads) + ".json");
        const fs::path csv = dir / ("scan_t" + std::to_string(threads) + ".csv");
        const std::string common =
            std::string(APRSIM_CLI_PATH) +
            " ratio-scan --method sample --trials 100000 --seed 11 "
            "--p-min 0.01 --p-max 0.1 --steps 4 --threads " +
            std::to_string(threads);
        if (std::system((common + " --format json --out " + out.string() +
                         " > /dev/null 2>&1").c_str()) != 0 ||
            std::system((common + " --format csv --out " + csv.string() +
                         " > /dev/null 2>&1").c_str()) != 0) {
            ran = false;
            continue;
        }
        const auto rep = aprsim::parse_json_text(
            aprsim::read_text_file(out.string()), "scan report");
        payloads.push_back(rep.at("payload").dump());
        artifacts.push_back(aprsim::read_text_file(csv.string()));
    }
    const bool ok = ran && payloads.size() == 3 &&
                    payloads[0] == payloads[1] && payloads[1] == payloads[2] &&
                    artifacts[0] == artifacts[1] && artifacts[1] == artifacts[2];
    line("8", ok,
         "sampled ratio scan with a fixed seed is byte-identical across 1, 4 "
         "and 8 worker threads (JSON payload and CSV artifact)");
    fs::remove_all(dir);
}

void report_calibration() {
    const auto probes = aprsim::all_probes(2);
    for (double v : {0.63, 0.668}) {
        const auto gen = aprsim::ideal_povm(v);
        std::vector<aprsim::PovmProbeRecord> records;
        for (const auto& pr : probes)
            records.push_back(
                {pr, aprsim::simulate_probe_counts(gen, pr, 100000, 9)});
        const auto res = aprsim::mle_povm(records);
        const double fp = aprsim::povm_fidelity(
            res.povm.elements.at(aprsim::PcmTag::BellPhiPlus),
            Eigen::VectorXcd(aprsim::kets::phi_plus));
        const double fs = aprsim::povm_fidelity(
            res.povm.elements.at(aprsim::PcmTag::BellPsiPlus),
            Eigen::VectorXcd(aprsim::kets::psi_plus));
        report("9", "detector tomography at fitted contrast " + num(v) +
                        ": phi_plus verdict " + num(fp) + ", psi_plus verdict " +
                        num(fs) + " (expected near " + num(0.5 * (1.0 + v)) +
                        ")");
    }

    aprsim::NoiseModel nm;
    nm.visibility["ghz_prep"] = 0.792;
    nm.visibility["pcm_2_6"] = 0.63;
    nm.visibility["pcm_5_9"] = 0.63;
    nm.visibility["pcm_3_7"] = 0.668;
    nm.visibility["pcm_8_12"] = 0.668;
    nm.default_lambda = 0.022;
    const auto res = aprsim::run_enumerate(aprsim::layout_all_photonic_2x2(),
                                           lossless_source(0.0344), nm);
    double mass = 0.0, weighted = 0.0;
    std::string pairs;
    for (const auto& ps : res.pairs) {
        pairs += " (" + num(double(ps.alice)) + "," + num(double(ps.bob)) +
                 ") " + num(ps.fidelity);
        mass += ps.prob;
        weighted += ps.prob * ps.fidelity;
    }
    const double overall = mass > 0.0 ? weighted / mass : 0.0;
    report("9", "fitted contrasts plus white noise 0.022, final pairs:" +
                    pairs + " (expected band 0.587 to 0.628)");
    report("9", "fitted regime overall fidelity " + num(overall) +
                    " (expected near 0.606)");
    line("9", true,
         "calibration regime reported above (soft targets, not asserted)");
}

} // namespace

int main() {
    check_ratio_law();
    check_twofold_rate();
    check_ideal_protocol();
    check_rate_formula();
    check_state_tomography();
    check_detector_tomography();
    check_pauli_identity();
    check_twelve_fold();
    check_determinism();
    report_calibration();
    if (failures > 0) {
        std::printf("%d acceptance check%s failed\n", failures,
                    failures == 1 ? "" : "s");
        return 1;
    }
    std::printf("all acceptance checks passed\n");
    return 0;
}
