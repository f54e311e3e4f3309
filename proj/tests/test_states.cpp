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
#include <random>

#include "aprsim/density.hpp"
#include "aprsim/state.hpp"

using namespace aprsim;

namespace {

constexpr double kTol = tol_algebraic;

/// Haar-ish random state for property checks, independent of library code.
PureState random_state(int n, std::mt19937& gen) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd amp(Eigen::Index(1) << n);
    for (Eigen::Index i = 0; i < amp.size(); ++i)
        amp(i) = cplx(g(gen), g(gen));
    amp /= amp.norm();
    return PureState::from_amplitudes(std::move(amp));
}

Eigen::Matrix2cd random_unitary2(std::mt19937& gen) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Matrix2cd m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            m(r, c) = cplx(g(gen), g(gen));
    Eigen::HouseholderQR<Eigen::Matrix2cd> qr(m);
    Eigen::Matrix2cd q = qr.householderQ();
    return q;
}

PureState bell_phi_plus() {
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(4);
    amp(0) = amp(3) = 1.0 / std::sqrt(2.0);
    return PureState::from_amplitudes(std::move(amp));
}

/// |GHZ_n> = (|H...H> + |V...V>)/sqrt2, built by hand.
PureState ghz(int n) {
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(Eigen::Index(1) << n);
    amp(0) = 1.0 / std::sqrt(2.0);
    amp(amp.size() - 1) = 1.0 / std::sqrt(2.0);
    return PureState::from_amplitudes(std::move(amp));
}

} // namespace

TEST_CASE("basis kets and index convention") {
    // from_kets("HV"): H on qubit 0, V on qubit 1, amplitude at index 2.
    const PureState hv = PureState::from_kets("HV");
    REQUIRE(hv.num_qubits() == 2);
    CHECK(std::abs(hv.amplitudes()(2) - 1.0) < kTol);
    CHECK(hv.amplitudes()(0) == cplx(0.0));
    CHECK(hv.amplitudes()(1) == cplx(0.0));
    CHECK(hv.amplitudes()(3) == cplx(0.0));

    const PureState vh = PureState::from_kets("VH");
    CHECK(std::abs(vh.amplitudes()(1) - 1.0) < kTol);

    // Circular kets: R = (H + iV)/sqrt2, L = (H - iV)/sqrt2.
    const PureState r = PureState::from_kets("R");
    CHECK(std::abs(r.amplitudes()(0) - 1.0 / std::sqrt(2.0)) < kTol);
    CHECK(std::abs(r.amplitudes()(1) - cplx(0.0, 1.0 / std::sqrt(2.0))) < kTol);
    const PureState l = PureState::from_kets("L");
    CHECK(std::abs(l.amplitudes()(1) - cplx(0.0, -1.0 / std::sqrt(2.0))) < kTol);

    CHECK(std::abs(inner(PureState::from_kets("D"), PureState::from_kets("A"))) < kTol);
    CHECK(std::abs(inner(r, l)) < kTol);
}

TEST_CASE("tensor product ordering") {
    const PureState h(1);
    PureState v(1);
    v.apply_single(0, kPauliX);
    const PureState hv = tensor(h, v);
    CHECK(overlap2(hv, PureState::from_kets("HV")) == Catch::Approx(1.0).margin(kTol));

    // Tensor with a zero-qubit register is the identity up to the scalar.
    PureState scalar(0);
    const PureState same = tensor(hv, scalar);
    CHECK(overlap2(same, hv) == Catch::Approx(1.0).margin(kTol));
}

TEST_CASE("projecting one qubit of a Bell pair collapses the partner") {
    const PureState phi = bell_phi_plus();

    SECTION("keep the measured qubit") {
        const auto [state, prob] = phi.project(0, kets::H);
        REQUIRE(prob == Catch::Approx(0.5).margin(kTol));
        REQUIRE(state.num_qubits() == 2);
        CHECK(overlap2(state, PureState::from_kets("HH")) == Catch::Approx(1.0).margin(kTol));
    }

    SECTION("remove the measured qubit") {
        const auto [state, prob] = phi.project_out(0, kets::V);
        REQUIRE(prob == Catch::Approx(0.5).margin(kTol));
        REQUIRE(state.num_qubits() == 1);
        CHECK(overlap2(state, PureState::from_kets("V")) == Catch::Approx(1.0).margin(kTol));
    }

    SECTION("diagonal basis: Phi+ is also (|DD>+|AA>)/sqrt2") {
        const auto [state, prob] = phi.project_out(1, kets::D);
        REQUIRE(prob == Catch::Approx(0.5).margin(kTol));
        CHECK(overlap2(state, PureState::from_kets("D")) == Catch::Approx(1.0).margin(kTol));
    }
}

TEST_CASE("projecting a GHZ qubit in the diagonal basis leaves a smaller GHZ") {
    // <D| on one qubit of GHZ_4 yields GHZ_3 with probability 1/2; the <A|
    // branch yields the minus-sign variant.
    const PureState g4 = ghz(4);
    const auto [plus, pplus] = g4.project_out(3, kets::D);
    REQUIRE(pplus == Catch::Approx(0.5).margin(kTol));
    CHECK(overlap2(plus, ghz(3)) == Catch::Approx(1.0).margin(kTol));

    const auto [minus, pminus] = g4.project_out(3, kets::A);
    REQUIRE(pminus == Catch::Approx(0.5).margin(kTol));
    PureState g3m = ghz(3);
    g3m.apply_single(0, kPauliZ);
    CHECK(overlap2(minus, g3m) == Catch::Approx(1.0).margin(kTol));
}

TEST_CASE("pair projection implements a Bell-basis Kraus branch") {
    // Measuring qubits 0,1 of GHZ_4 in the Bell basis: the Phi+ outcome has
    // probability 1/2 and leaves (|HH>+|VV>)/sqrt2 on the remaining pair.
    const PureState g4 = ghz(4);
    const auto [state, prob] = g4.project_out_pair(0, 1, kets::phi_plus);
    REQUIRE(prob == Catch::Approx(0.5).margin(kTol));
    REQUIRE(state.num_qubits() == 2);
    CHECK(overlap2(state, bell_phi_plus()) == Catch::Approx(1.0).margin(kTol));

    // The Psi+ outcome is impossible on GHZ input.
    const auto [dead, pdead] = g4.project_out_pair(0, 1, kets::psi_plus);
    CHECK(pdead == 0.0);
    CHECK(dead.is_empty());
}

TEST_CASE("entanglement swapping via pair projection") {
    // Two Phi+ pairs on qubits (0,1) and (2,3); projecting (1,2) onto a Bell
    // ket leaves qubits (0,3) in the matching Bell state with probability 1/4.
    const PureState two_pairs = tensor(bell_phi_plus(), bell_phi_plus());

    const auto [sphi, pphi] = two_pairs.project_out_pair(1, 2, kets::phi_plus);
    REQUIRE(pphi == Catch::Approx(0.25).margin(kTol));
    CHECK(overlap2(sphi, bell_phi_plus()) == Catch::Approx(1.0).margin(kTol));

    const auto [spsi, ppsi] = two_pairs.project_out_pair(1, 2, kets::psi_plus);
    REQUIRE(ppsi == Catch::Approx(0.25).margin(kTol));
    PureState psi_topo = bell_phi_plus();
    psi_topo.apply_single(1, kPauliX);
    CHECK(overlap2(spsi, psi_topo) == Catch::Approx(1.0).margin(kTol));
}

TEST_CASE("span projection keeps coherence inside the span") {
    // Projector onto span{|HH>, |VV>} applied to |DD> keeps the Phi+
    // component: |DD> = (|HH>+|VV>+|HV>+|VH>)/2, so the kept part is Phi+
    // with probability 1/2.
    const std::vector<Eigen::Vector4cd> span{
        (Eigen::Vector4cd() << 1, 0, 0, 0).finished(),
        (Eigen::Vector4cd() << 0, 0, 0, 1).finished()};
    const PureState dd = PureState::from_kets("DD");
    const auto [state, prob] = dd.project_span_pair(0, 1, span);
    REQUIRE(prob == Catch::Approx(0.5).margin(kTol));
    CHECK(overlap2(state, bell_phi_plus()) == Catch::Approx(1.0).margin(kTol));
}

TEST_CASE("span projection probabilities sum to one over complementary spans") {
    std::mt19937 gen(7);
    const std::vector<Eigen::Vector4cd> inside{
        (Eigen::Vector4cd() << 1, 0, 0, 0).finished(),
        (Eigen::Vector4cd() << 0, 0, 0, 1).finished()};
    const std::vector<Eigen::Vector4cd> outside{
        (Eigen::Vector4cd() << 0, 1, 0, 0).finished(),
        (Eigen::Vector4cd() << 0, 0, 1, 0).finished()};
    for (int rep = 0; rep < 50; ++rep) {
        const PureState psi = random_state(3, gen);
        const double pin = psi.project_span_pair(0, 2, inside).prob;
        const double pout = psi.project_span_pair(0, 2, outside).prob;
        CHECK(pin + pout == Catch::Approx(1.0).margin(kTol));
    }
}

TEST_CASE("single-qubit operators preserve norm and compose") {
    std::mt19937 gen(11);
    for (int rep = 0; rep < 50; ++rep) {
        PureState psi = random_state(4, gen);
        const Eigen::Matrix2cd u = random_unitary2(gen);
        PureState moved = psi;
        moved.apply_single(2, u);
        CHECK(moved.norm2() == Catch::Approx(1.0).margin(kTol));
        moved.apply_single(2, u.adjoint());
        CHECK(overlap2(moved, psi) == Catch::Approx(1.0).margin(kTol));
    }
}

TEST_CASE("projection branches over a complete basis sum to one") {
    std::mt19937 gen(13);
    for (int rep = 0; rep < 50; ++rep) {
        const PureState psi = random_state(5, gen);
        double total = 0.0;
        for (const auto& k : {kets::D, kets::A})
            total += psi.project(3, k).prob;
        CHECK(total == Catch::Approx(1.0).margin(kTol));

        double bell_total = 0.0;
        for (const auto& b :
             {kets::phi_plus, kets::phi_minus, kets::psi_plus, kets::psi_minus})
            bell_total += psi.project_out_pair(1, 4, b).prob;
        CHECK(bell_total == Catch::Approx(1.0).margin(kTol));
    }
}

TEST_CASE("pauli expectation values") {
    const PureState phi = bell_phi_plus();
    CHECK(phi.expectation("XX") == Catch::Approx(1.0).margin(kTol));
    CHECK(phi.expectation("YY") == Catch::Approx(-1.0).margin(kTol));
    CHECK(phi.expectation("ZZ") == Catch::Approx(1.0).margin(kTol));
    CHECK(phi.expectation("ZI") == Catch::Approx(0.0).margin(kTol));

    const PureState g3 = ghz(3);
    CHECK(g3.expectation("XXX") == Catch::Approx(1.0).margin(kTol));
    CHECK(g3.expectation("ZZI") == Catch::Approx(1.0).margin(kTol));
    CHECK(g3.expectation("XYY") == Catch::Approx(-1.0).margin(kTol));
}

TEST_CASE("reduced density matrices") {
    const PureState phi = bell_phi_plus();

    SECTION("tracing one Bell qubit leaves the maximally mixed state") {
        const Eigen::MatrixXcd rho = phi.to_density({0});
        CHECK((rho - maximally_mixed(1)).norm() < kTol);
    }

    SECTION("keeping both qubits reproduces the projector") {
        const Eigen::MatrixXcd rho = phi.to_density({0, 1});
        CHECK((rho - projector(phi)).norm() < kTol);
        CHECK(fidelity(rho, phi) == Catch::Approx(1.0).margin(kTol));
    }

    SECTION("keep order controls output qubit order") {
        const PureState hv = PureState::from_kets("HV");
        const Eigen::MatrixXcd swapped = hv.to_density({1, 0});
        // Output qubit 0 is original qubit 1 (= V), so index 1 carries it.
        CHECK(std::abs(swapped(1, 1) - 1.0) < kTol);
    }

    SECTION("partial_trace on the full projector agrees with to_density") {
        std::mt19937 gen(17);
        const PureState psi = random_state(4, gen);
        const Eigen::MatrixXcd direct = psi.to_density({1, 3});
        const Eigen::MatrixXcd via_full = partial_trace(projector(psi), 4, {1, 3});
        CHECK((direct - via_full).norm() < kTol);
    }
}

TEST_CASE("uhlmann fidelity basics") {
    const PureState phi = bell_phi_plus();
    const Eigen::MatrixXcd pure = projector(phi);
    CHECK(uhlmann_fidelity(pure, pure) == Catch::Approx(1.0).margin(kTol));
    // Against the maximally mixed two-qubit state the fidelity is 1/4.
    CHECK(uhlmann_fidelity(pure, maximally_mixed(2)) ==
          Catch::Approx(0.25).margin(1e-8));
}

TEST_CASE("empty register propagates through zero-probability branches") {
    const PureState hh = PureState::from_kets("HH");
    const auto [dead, prob] = hh.project_out_pair(0, 1, kets::psi_plus);
    CHECK(prob == 0.0);
    CHECK(dead.is_empty());
    CHECK(tensor(dead, hh).is_empty());
    CHECK_THROWS_AS(dead.project(0, kets::H), std::logic_error);
}

TEST_CASE("register width limits are enforced") {
    CHECK_THROWS_AS(PureState(max_qubits + 1), std::invalid_argument);
    CHECK_NOTHROW(PureState(0));
    const PureState one(1);
    CHECK_THROWS_AS(one.project(1, kets::H), std::invalid_argument);
    CHECK_THROWS_AS(one.expectation("XX"), std::invalid_argument);
    CHECK_THROWS_AS(PureState::from_kets("HQ"), std::invalid_argument);
}
