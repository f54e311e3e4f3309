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

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <random>

#include "aprsim/density.hpp"
#include "aprsim/pcm.hpp"
#include "aprsim/state.hpp"

using namespace aprsim;

namespace {

constexpr double kTol = tol_algebraic;

PureState random_state(int n, std::mt19937& gen) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd amp(Eigen::Index(1) << n);
    for (Eigen::Index i = 0; i < amp.size(); ++i)
        amp(i) = cplx(g(gen), g(gen));
    amp /= amp.norm();
    return PureState::from_amplitudes(std::move(amp));
}

PureState bell_phi_plus() {
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(4);
    amp(0) = amp(3) = 1.0 / std::sqrt(2.0);
    return PureState::from_amplitudes(std::move(amp));
}

PureState ghz(int n) {
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(Eigen::Index(1) << n);
    amp(0) = 1.0 / std::sqrt(2.0);
    amp(amp.size() - 1) = 1.0 / std::sqrt(2.0);
    return PureState::from_amplitudes(std::move(amp));
}

/// Tag-resolved probability read off a branch decomposition.
std::map<PcmTag, double> tag_probs(const std::vector<DetectorBranch>& branches) {
    std::map<PcmTag, double> out;
    for (const auto& br : branches)
        out[classify(ClickPattern::from_counts(br.clicks)).tag] += br.prob;
    return out;
}

} // namespace

TEST_CASE("classification of threshold click patterns") {
    // One click per port: a Bell verdict keyed by the polarization labels.
    CHECK(classify({true, false, true, false}).tag == PcmTag::BellPhiPlus);
    CHECK(classify({false, true, false, true}).tag == PcmTag::BellPhiPlus);
    CHECK(classify({true, false, false, true}).tag == PcmTag::BellPsiPlus);
    CHECK(classify({false, true, true, false}).tag == PcmTag::BellPsiPlus);
    // Exactly one click: a lone-photon verdict keyed by the port.
    CHECK(classify({true, false, false, false}).tag == PcmTag::SingleLeft);
    CHECK(classify({false, true, false, false}).tag == PcmTag::SingleLeft);
    CHECK(classify({false, false, true, false}).tag == PcmTag::SingleRight);
    CHECK(classify({false, false, false, true}).tag == PcmTag::SingleRight);
    // Everything else is indecisive.
    CHECK(classify({false, false, false, false}).tag == PcmTag::NoDecision);
    CHECK(classify({true, true, false, false}).tag == PcmTag::NoDecision);
    CHECK(classify({false, false, true, true}).tag == PcmTag::NoDecision);
    CHECK(classify({true, true, true, false}).tag == PcmTag::NoDecision);
    CHECK(classify({true, true, true, true}).tag == PcmTag::NoDecision);

    // Pinned corrections.
    CHECK(classify({true, false, true, false}).correction == 'I');
    CHECK(classify({true, false, false, true}).correction == 'X');
    CHECK(classify({true, false, false, false}).correction == 'I');
    CHECK(classify({false, false, true, false}).correction == 'Z');
    CHECK(classify({false, false, false, false}).correction == '-');

    // Threshold detectors merge double hits into one click.
    CHECK(ClickPattern::from_counts({2, 0, 0, 0}).total() == 1);
    CHECK(classify(ClickPattern::from_counts({2, 0, 0, 0})).tag == PcmTag::SingleLeft);
    CHECK(classify(ClickPattern::from_counts({1, 1, 0, 0})).tag == PcmTag::NoDecision);
}

TEST_CASE("pinned tag names") {
    CHECK(std::string(tag_name(PcmTag::BellPhiPlus)) == "phi_plus");
    CHECK(std::string(tag_name(PcmTag::BellPsiPlus)) == "psi_plus");
    CHECK(std::string(tag_name(PcmTag::SingleLeft)) == "single_left");
    CHECK(std::string(tag_name(PcmTag::SingleRight)) == "single_right");
    CHECK(std::string(tag_name(PcmTag::NoDecision)) == "no_decision");
    for (PcmTag t : {PcmTag::BellPhiPlus, PcmTag::BellPsiPlus, PcmTag::SingleLeft,
                     PcmTag::SingleRight, PcmTag::NoDecision})
        CHECK(tag_from_name(tag_name(t)) == t);
    CHECK_THROWS_AS(tag_from_name("bell"), config_error);
}

TEST_CASE("station branches on Bell-state inputs") {
    SECTION("Phi+ always heralds phi_plus") {
        const auto probs = tag_probs(cpbs_apply(bell_phi_plus(), 0, 1));
        CHECK(probs.at(PcmTag::BellPhiPlus) == Catch::Approx(1.0).margin(kTol));
        CHECK(probs.size() == 1);
    }
    SECTION("Psi+ always heralds psi_plus") {
        PureState psi = bell_phi_plus();
        psi.apply_single(0, kPauliX);
        const auto probs = tag_probs(cpbs_apply(psi, 0, 1));
        CHECK(probs.at(PcmTag::BellPsiPlus) == Catch::Approx(1.0).margin(kTol));
        CHECK(probs.size() == 1);
    }
    SECTION("Phi- and Psi- only bunch") {
        PureState phim = bell_phi_plus();
        phim.apply_single(0, kPauliZ);
        auto probs = tag_probs(cpbs_apply(phim, 0, 1));
        CHECK(probs.count(PcmTag::BellPhiPlus) == 0);
        CHECK(probs.count(PcmTag::BellPsiPlus) == 0);
        // Bunched pairs read as a lone click half of the time and as both
        // detectors of one port otherwise.
        const double singles =
            probs[PcmTag::SingleLeft] + probs[PcmTag::SingleRight];
        CHECK(singles == Catch::Approx(0.5).margin(kTol));
        CHECK(probs[PcmTag::NoDecision] == Catch::Approx(0.5).margin(kTol));
    }
}

TEST_CASE("station branches on a product input") {
    // |HH> splits evenly between the Bell verdict and bunching.
    const auto branches = cpbs_apply(PureState::from_kets("HH"), 0, 1);
    double coinc = 0.0, left = 0.0, right = 0.0;
    for (const auto& br : branches) {
        const int nl = br.clicks[0] + br.clicks[1];
        const int nr = br.clicks[2] + br.clicks[3];
        if (nl == 1 && nr == 1)
            coinc += br.prob;
        else if (nl == 2)
            left += br.prob;
        else
            right += br.prob;
    }
    CHECK(coinc == Catch::Approx(0.5).margin(kTol));
    CHECK(left == Catch::Approx(0.25).margin(kTol));
    CHECK(right == Catch::Approx(0.25).margin(kTol));
}

TEST_CASE("station branch probabilities sum to one at any contrast") {
    std::mt19937 gen(31);
    for (double v : {1.0, 0.8, 0.5, 0.0}) {
        for (int rep = 0; rep < 20; ++rep) {
            const PureState psi = random_state(4, gen);
            double total = 0.0;
            for (const auto& br : cpbs_apply(psi, 1, 3, v))
                total += br.prob;
            CHECK(total == Catch::Approx(1.0).margin(kTol));
        }
    }
}

TEST_CASE("station matches its analytic POVM") {
    std::mt19937 gen(37);
    for (double v : {1.0, 0.8, 0.63, 0.0}) {
        const PcmPovm povm = ideal_povm(v);
        for (int rep = 0; rep < 20; ++rep) {
            const PureState psi = random_state(2, gen);
            const auto probs = tag_probs(cpbs_apply(psi, 0, 1, v));
            for (const auto& [tag, elem] : povm.elements) {
                const double expected =
                    std::real(psi.amplitudes().dot(elem * psi.amplitudes()));
                const double got = probs.count(tag) ? probs.at(tag) : 0.0;
                CHECK(got == Catch::Approx(expected).margin(1e-11));
            }
        }
    }
}

TEST_CASE("analytic POVM properties") {
    for (double v : {1.0, 0.9, 0.63, 0.3, 0.0}) {
        const PcmPovm povm = ideal_povm(v);
        Eigen::Matrix4cd sum = Eigen::Matrix4cd::Zero();
        for (const auto& [tag, elem] : povm.elements) {
            sum += elem;
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(elem);
            CHECK(es.eigenvalues().minCoeff() > -kTol);
        }
        CHECK((sum - Eigen::Matrix4cd::Identity()).norm() < kTol);

        // Bell elements have unit weight and fidelity (1+v)/2 to their
        // target; the lone-click elements carry half weight each.
        const auto& mphi = povm.elements.at(PcmTag::BellPhiPlus);
        CHECK(std::real(mphi.trace()) == Catch::Approx(1.0).margin(kTol));
        const Eigen::Vector4cd phi = kets::phi_plus;
        CHECK(std::real(phi.dot(mphi * phi)) ==
              Catch::Approx((1.0 + v) / 2.0).margin(kTol));
        CHECK(std::real(povm.elements.at(PcmTag::SingleLeft).trace()) ==
              Catch::Approx(0.5).margin(kTol));
    }

    // Calibration-style pinned points for the Bell-element fidelity.
    const Eigen::Vector4cd phi = kets::phi_plus;
    auto bell_fid = [&](double v) {
        const auto m = ideal_povm(v).elements.at(PcmTag::BellPhiPlus);
        return std::real(phi.dot(m * phi)) / std::real(m.trace());
    };
    CHECK(bell_fid(0.63) == Catch::Approx(0.815).margin(1e-12));
    CHECK(bell_fid(0.668) == Catch::Approx(0.834).margin(1e-12));
}

TEST_CASE("lone photons pick ports by their diagonal component") {
    SECTION("input a: D exits left, A exits right") {
        const auto d_branches =
            cpbs_apply_single(PureState::from_kets("D"), 0, InputPort::A);
        double left = 0.0, right = 0.0;
        for (const auto& br : d_branches)
            (br.clicks[0] + br.clicks[1] ? left : right) += br.prob;
        CHECK(left == Catch::Approx(1.0).margin(kTol));

        const auto a_branches =
            cpbs_apply_single(PureState::from_kets("A"), 0, InputPort::A);
        left = right = 0.0;
        for (const auto& br : a_branches)
            (br.clicks[0] + br.clicks[1] ? left : right) += br.prob;
        CHECK(right == Catch::Approx(1.0).margin(kTol));
    }
    SECTION("input b swaps the ports") {
        const auto d_branches =
            cpbs_apply_single(PureState::from_kets("D"), 0, InputPort::B);
        double right = 0.0;
        for (const auto& br : d_branches)
            if (br.clicks[2] + br.clicks[3])
                right += br.prob;
        CHECK(right == Catch::Approx(1.0).margin(kTol));
    }
    SECTION("H splits evenly and branch probabilities sum to one") {
        const auto branches =
            cpbs_apply_single(PureState::from_kets("H"), 0, InputPort::A);
        double total = 0.0, left = 0.0;
        for (const auto& br : branches) {
            total += br.prob;
            if (br.clicks[0] + br.clicks[1])
                left += br.prob;
        }
        CHECK(total == Catch::Approx(1.0).margin(kTol));
        CHECK(left == Catch::Approx(0.5).margin(kTol));
    }
}

TEST_CASE("heralding a lone GHZ photon projects the rest") {
    // A lone photon from (|HHH>+|VVV>)/sqrt2 arriving on input a: the
    // single_left verdict leaves GHZ_2 = Phi+, the single_right verdict
    // leaves the Z-flipped pair.
    const PureState g3 = ghz(3);
    const auto branches = cpbs_apply_single(g3, 2, InputPort::A);
    for (const auto& br : branches) {
        const auto tag = classify(ClickPattern::from_counts(br.clicks)).tag;
        if (tag == PcmTag::SingleLeft) {
            CHECK(overlap2(br.state, bell_phi_plus()) == Catch::Approx(1.0).margin(kTol));
        } else {
            REQUIRE(tag == PcmTag::SingleRight);
            PureState flipped = bell_phi_plus();
            flipped.apply_single(0, kPauliZ);
            CHECK(overlap2(br.state, flipped) == Catch::Approx(1.0).margin(kTol));
        }
        CHECK(br.prob == Catch::Approx(0.25).margin(kTol));
    }
}

TEST_CASE("apply_outcome swaps entanglement with the bookkept correction") {
    // GHZ_3 on qubits (0,1,2) next to Phi+ on (3,4); the station consumes
    // (2,3), and qubit 4 (shifting to index 2) inherits the GHZ role.
    const PureState joint = tensor(ghz(3), bell_phi_plus());

    SECTION("phi_plus verdict") {
        const auto [state, prob] =
            apply_outcome(joint, {PcmTag::BellPhiPlus, 'I'}, 2, 3, -1);
        CHECK(prob == Catch::Approx(0.25).margin(kTol));
        CHECK(overlap2(state, ghz(3)) == Catch::Approx(1.0).margin(kTol));
    }
    SECTION("psi_plus verdict needs the X correction") {
        const auto raw = apply_outcome(joint, {PcmTag::BellPsiPlus, 'I'}, 2, 3, -1);
        CHECK(raw.prob == Catch::Approx(0.25).margin(kTol));
        CHECK(overlap2(raw.state, ghz(3)) < 0.75);

        const auto fixed = apply_outcome(joint, {PcmTag::BellPsiPlus, 'X'}, 2, 3, 4);
        CHECK(fixed.prob == Catch::Approx(0.25).margin(kTol));
        CHECK(overlap2(fixed.state, ghz(3)) == Catch::Approx(1.0).margin(kTol));
    }
    SECTION("single verdicts trim a GHZ leg") {
        const auto left = apply_outcome(ghz(3), {PcmTag::SingleLeft, 'I'}, 2, -1, -1);
        CHECK(left.prob == Catch::Approx(0.5).margin(kTol));
        CHECK(overlap2(left.state, bell_phi_plus()) == Catch::Approx(1.0).margin(kTol));

        const auto right = apply_outcome(ghz(3), {PcmTag::SingleRight, 'Z'}, 2, -1, 0);
        CHECK(right.prob == Catch::Approx(0.5).margin(kTol));
        CHECK(overlap2(right.state, bell_phi_plus()) == Catch::Approx(1.0).margin(kTol));
    }
    SECTION("argument validation") {
        CHECK_THROWS_AS(apply_outcome(joint, {PcmTag::NoDecision, '-'}, 2, 3, -1),
                        std::invalid_argument);
        CHECK_THROWS_AS(apply_outcome(joint, {PcmTag::SingleLeft, 'I'}, 2, 3, -1),
                        std::invalid_argument);
        CHECK_THROWS_AS(apply_outcome(joint, {PcmTag::BellPhiPlus, 'I'}, 2, 3, 3),
                        std::invalid_argument);
    }
}

TEST_CASE("chained verdicts reproduce the repeater pair with corrections") {
    // One network cell in miniature: GHZ_4 on (0..3), flanked by Phi+ pairs
    // on (4,5) and (6,7). Station A swaps (1,4), station B swaps (2,6), the
    // lone-click station trims 3. Qubits 0 and the outer halves 5, 7 remain;
    // after corrections on the outer pair the chain must close into Phi+
    // between the outer qubits regardless of the verdict path.
    const PureState net = tensor(tensor(ghz(4), bell_phi_plus()), bell_phi_plus());

    const std::vector<PcmOutcome> bells{{PcmTag::BellPhiPlus, 'I'},
                                        {PcmTag::BellPsiPlus, 'X'}};
    const std::vector<PcmOutcome> singles{{PcmTag::SingleLeft, 'I'},
                                          {PcmTag::SingleRight, 'Z'}};
    for (const auto& oa : bells) {
        for (const auto& ob : bells) {
            for (const auto& os : singles) {
                // Corrections target the outer qubit 5 (and 7 for station B).
                auto s1 = apply_outcome(net, oa, 1, 4, 5);
                REQUIRE(s1.prob > 0.0);
                // After removing (1,4): 2->1, 3->2, 5->3, 6->4, 7->5.
                auto s2 = apply_outcome(s1.state, ob, 1, 4, 5);
                REQUIRE(s2.prob > 0.0);
                // After removing (1,4): 2->1, 3->2, 5->3.
                auto s3 = apply_outcome(s2.state, os, 1, -1, 2);
                REQUIRE(s3.prob > 0.0);
                // Left: qubit 0 (GHZ root), 2 (outer of pair A), 3 (outer of B).
                // The root and pair-A outer close into Phi+; pair-B outer is
                // checked against the root as well via a three-way GHZ.
                CHECK(overlap2(s3.state, ghz(3)) == Catch::Approx(1.0).margin(kTol));
            }
        }
    }
}
