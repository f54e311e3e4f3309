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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <utility>

#include "aprsim/layout.hpp"
#include "aprsim/noise.hpp"
#include "aprsim/run.hpp"
#include "aprsim/sources.hpp"

namespace {

aprsim::SourceModel ideal_source(double p) {
    aprsim::SourceModel s;
    s.p = p;
    s.eta = 1.0;
    return s;
}

bool identical_results(const aprsim::NetworkRunResult& a,
                       const aprsim::NetworkRunResult& b) {
    if (a.method != b.method || a.trials != b.trials)
        return false;
    if (a.eightfold_prob != b.eightfold_prob || a.std_error != b.std_error)
        return false;
    if (a.combos.size() != b.combos.size() || a.pairs.size() != b.pairs.size())
        return false;
    for (size_t i = 0; i < a.combos.size(); ++i) {
        const auto& x = a.combos[i];
        const auto& y = b.combos[i];
        if (x.record.key != y.record.key || x.prob != y.prob ||
            x.std_error != y.std_error || x.has_state != y.has_state ||
            x.fidelity != y.fidelity)
            return false;
        if (x.has_state && !(x.rho.array() == y.rho.array()).all())
            return false;
    }
    for (size_t i = 0; i < a.pairs.size(); ++i) {
        const auto& x = a.pairs[i];
        const auto& y = b.pairs[i];
        if (x.alice != y.alice || x.bob != y.bob || x.prob != y.prob ||
            x.fidelity != y.fidelity)
            return false;
    }
    return a.diagnostics == b.diagnostics;
}

} // namespace

TEST_CASE("sampling reproduces the lossless enumeration within its error bars") {
    const auto layout = aprsim::layout_all_photonic_2x2();
    const auto src = ideal_source(0.0344);
    const aprsim::NoiseModel noise;

    const auto exact = aprsim::run_enumerate(layout, src, noise);

    aprsim::SampleOptions so;
    so.trials = 120000;
    so.seed = 5;
    so.threads = 8;
    so.with_states = true;
    const auto est = aprsim::run_sample(layout, src, noise, so);

    CHECK(est.method == "sample");
    CHECK(est.trials == so.trials);
    REQUIRE(est.std_error > 0.0);
    CHECK(std::abs(est.eightfold_prob - exact.eightfold_prob) <=
          3.5 * est.std_error);

    double combo_sum = 0.0;
    for (const auto& c : est.combos)
        combo_sum += c.prob;
    CHECK(combo_sum == Catch::Approx(est.eightfold_prob).epsilon(1e-12));

    for (const auto& c : est.combos)
        if (c.prob > 0.0) {
            REQUIRE(c.has_state);
            CHECK(c.fidelity == Catch::Approx(1.0).margin(1e-10));
        }
    CHECK(est.diagnostics.at("false_bell") == 0.0);
    CHECK(est.diagnostics.at("false_single") == 0.0);
    CHECK(est.diagnostics.at("merged_rejected") == 0.0);
}

TEST_CASE("sampling tracks enumeration at a lossy, noisy operating point") {
    const auto layout = aprsim::layout_all_photonic_2x2();
    aprsim::SourceModel src;
    src.p = 0.0344;
    aprsim::NoiseModel noise;
    noise.default_eta = 0.85;
    noise.default_visibility = 0.9;
    noise.default_lambda = 0.05;

    aprsim::EnumerateOptions eo;
    eo.with_states = false;
    const auto exact = aprsim::run_enumerate(layout, src, noise, eo);

    aprsim::SampleOptions so;
    so.trials = 250000;
    so.seed = 9;
    so.threads = 8;
    const auto est = aprsim::run_sample(layout, src, noise, so);

    REQUIRE(est.std_error > 0.0);
    CHECK(std::abs(est.eightfold_prob - exact.eightfold_prob) <=
          3.5 * est.std_error);

    // Combos of one pair share trials and importance weights, so their
    // errors are positively correlated; the fully correlated sum bounds
    // the pair-level sigma from above.
    std::map<std::pair<int, int>, double> exact_pair, est_pair, est_sigma;
    for (const auto& c : exact.combos)
        exact_pair[{c.record.alice, c.record.bob}] += c.prob;
    for (const auto& c : est.combos) {
        est_pair[{c.record.alice, c.record.bob}] += c.prob;
        est_sigma[{c.record.alice, c.record.bob}] += c.std_error;
    }
    REQUIRE(exact_pair.size() == 4);
    for (const auto& [pr, pe] : exact_pair) {
        const double sigma = est_sigma[pr];
        REQUIRE(sigma > 0.0);
        CHECK(std::abs(est_pair[pr] - pe) <= 4.0 * sigma);
    }

    for (const char* key : {"false_bell_fraction", "false_single_fraction"}) {
        const double fe = exact.diagnostics.at(key);
        const double fs = est.diagnostics.at(key);
        CHECK(fe > 0.0);
        CHECK(std::abs(fs - fe) < 0.1);
    }
}

TEST_CASE("block-ordered reduction is bitwise independent of the thread count") {
    const auto layout = aprsim::layout_all_photonic_2x2();
    aprsim::SourceModel src;
    src.p = 0.0483;
    aprsim::NoiseModel noise;
    noise.default_eta = 0.7;
    noise.default_visibility = 0.95;

    aprsim::SampleOptions so;
    so.trials = 40960;
    so.seed = 31;
    so.with_states = true;

    so.threads = 1;
    const auto one = aprsim::run_sample(layout, src, noise, so);
    so.threads = 4;
    const auto four = aprsim::run_sample(layout, src, noise, so);
    so.threads = 8;
    const auto eight = aprsim::run_sample(layout, src, noise, so);

    CHECK(identical_results(one, four));
    CHECK(identical_results(one, eight));
}

TEST_CASE("salted streams are fresh yet statistically compatible") {
    const auto layout = aprsim::layout_all_photonic_2x2();
    const auto src = ideal_source(0.0344);
    const aprsim::NoiseModel noise;
    const double exact = aprsim::run_enumerate(layout, src, noise).eightfold_prob;

    aprsim::SampleOptions so;
    so.trials = 60000;
    so.seed = 2;
    so.threads = 8;
    const auto a = aprsim::run_sample(layout, src, noise, so);
    so.salt = 7;
    const auto b = aprsim::run_sample(layout, src, noise, so);

    CHECK(a.eightfold_prob != b.eightfold_prob);
    for (const auto& r : {a, b}) {
        REQUIRE(r.std_error > 0.0);
        CHECK(std::abs(r.eightfold_prob - exact) <= 4.0 * r.std_error);
    }
}

TEST_CASE("the sampled ratio scan brackets the closed form") {
    aprsim::RatioScanOptions opts;
    opts.method = aprsim::RunMethod::Sample;
    opts.trials = 250000;
    opts.seed = 3;
    opts.threads = 8;
    const auto pts =
        aprsim::ratio_scan({0.0344}, ideal_source(0.0344), {}, opts);

    REQUIRE(pts.size() == 1);
    const auto& pt = pts.front();
    CHECK(pt.r_theory == Catch::Approx(1.86476672).margin(1e-12));
    REQUIRE(pt.std_error > 0.0);
    CHECK(pt.std_error < 0.5);
    CHECK(std::abs(pt.r_sim - pt.r_theory) <= 3.5 * pt.std_error);
}

TEST_CASE("sampling rejects degenerate options and names its methods") {
    const auto layout = aprsim::layout_all_photonic_2x2();
    const auto src = ideal_source(0.01);
    const aprsim::NoiseModel noise;

    aprsim::SampleOptions so;
    so.trials = 0;
    CHECK_THROWS_AS(aprsim::run_sample(layout, src, noise, so),
                    aprsim::config_error);
    so.trials = 10;
    so.block = 0;
    CHECK_THROWS_AS(aprsim::run_sample(layout, src, noise, so),
                    aprsim::config_error);

    CHECK(aprsim::method_from_name("enumerate") == aprsim::RunMethod::Enumerate);
    CHECK(aprsim::method_from_name("sample") == aprsim::RunMethod::Sample);
    CHECK(aprsim::method_name(aprsim::RunMethod::Enumerate) ==
          std::string("enumerate"));
    CHECK(aprsim::method_name(aprsim::RunMethod::Sample) == std::string("sample"));
    CHECK_THROWS_AS(aprsim::method_from_name("exactish"), aprsim::config_error);
}
