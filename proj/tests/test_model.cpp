#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "omtopo/model.hpp"

using namespace omtopo;
using Catch::Approx;

namespace {

LatticeSpec two_cell(double g1 = 1e-6, double g2 = 1e-6, double k1 = 0.1, double k2 = 0.1) {
    LatticeSpec s;
    s.topology = Topology::cell_chain(2);
    s.delta_a = {1.0, 1.0};
    s.omega_b = {1.0, 1.0};
    s.g = {g1, g2};
    s.kappa = {k1, k2};
    s.gamma = {1e-5, 1e-5};
    s.drive = {ConstantDrive{1e5}, ConstantDrive{1e5}};
    return s;
}

} // namespace

TEST_CASE("topology site and bond counts") {
    for (int n = 1; n <= 6; ++n) {
        const auto c = Topology::cell_chain(n);
        CHECK(c.num_sites() == static_cast<std::size_t>(2 * n));
        CHECK(c.num_bonds() == static_cast<std::size_t>(2 * n - 1));
    }
    for (int n = 2; n <= 6; ++n) {
        const auto o = Topology::odd_chain(n);
        CHECK(o.num_sites() == static_cast<std::size_t>(2 * n - 1));
        CHECK(o.num_bonds() == static_cast<std::size_t>(2 * n - 2));
    }
    CHECK_THROWS_AS(Topology::cell_chain(0), InvalidParameter);
    CHECK_THROWS_AS(Topology::odd_chain(1), InvalidParameter);
}

TEST_CASE("site labels follow a1,b1,a2,...") {
    const auto labels = site_labels(Topology::odd_chain(3));
    REQUIRE(labels.size() == 5);
    CHECK(labels[0].name() == "a1");
    CHECK(labels[1].name() == "b1");
    CHECK(labels[2].name() == "a2");
    CHECK(labels[3].name() == "b2");
    CHECK(labels[4].name() == "a3");
}

TEST_CASE("validate_spec") {
    SECTION("Fig. 2 parameter set is valid") {
        const auto s = two_cell();
        CHECK(validate_spec(s) == s);
    }
    SECTION("wrong kappa length") {
        auto s = two_cell();
        s.kappa = {0.1, 0.1, 0.1};
        try {
            validate_spec(s);
            FAIL("expected DimensionMismatch");
        } catch (const DimensionMismatch& e) {
            CHECK(e.field() == "kappa");
        }
    }
    SECTION("zero coupling") {
        auto s = two_cell(0.0);
        try {
            validate_spec(s);
            FAIL("expected InvalidParameter");
        } catch (const InvalidParameter& e) {
            CHECK(e.field() == "g[0]");
        }
    }
    SECTION("negative decays and non-positive frequencies") {
        auto s = two_cell();
        s.gamma[1] = -1.0;
        CHECK_THROWS_AS(validate_spec(s), InvalidParameter);
        s = two_cell(1e-6, 1e-6, -0.1);
        CHECK_THROWS_AS(validate_spec(s), InvalidParameter);
        s = two_cell();
        s.omega_b[0] = 0.0;
        CHECK_THROWS_AS(validate_spec(s), InvalidParameter);
    }
    SECTION("cosine drive constraints") {
        auto s = two_cell();
        s.drive[0] = CosineDrive{1e5, -1, 0.0};
        CHECK_THROWS_AS(validate_spec(s), InvalidParameter);
        s.drive[0] = CosineDrive{1e5, 2, 0.006};
        CHECK_THROWS_AS(validate_spec(s), InvalidParameter);
        s.drive[0] = CosineDrive{0.0, 1, 0.006};
        CHECK_THROWS_AS(validate_spec(s), InvalidParameter);
    }
}

TEST_CASE("drive_amplitude") {
    CHECK(drive_amplitude(CosineDrive{1e5, -1, 0.006}, 0.0) == cplx(0.0, 0.0));
    CHECK(drive_amplitude(CosineDrive{1e5, 1, 0.006}, 0.0) == cplx(2e5, 0.0));
    const double t = std::numbers::pi / 2.0 / 0.006;
    CHECK(drive_amplitude(CosineDrive{1e5, -1, 0.006}, t).real() == Approx(1e5).epsilon(1e-12));
    CHECK(drive_amplitude(ConstantDrive{3.0}, 17.0) == cplx(3.0, 0.0));
    const auto z = drive_amplitude(ConstantDrive{2.0, 0.3}, 0.0);
    CHECK(std::abs(z) == Approx(2.0));
    CHECK(std::arg(z) == Approx(0.3));
}

TEST_CASE("effective_chain bond rule") {
    SECTION("two cells, equal amplitudes") {
        const auto s = two_cell();
        MeanFieldState st{0.0, {1e5, 1e5}, {0.0, 0.0}};
        const auto c = effective_chain(s, st);
        REQUIRE(c.couplings.size() == 3);
        CHECK(c.couplings[0].real() == Approx(-0.1));
        CHECK(c.couplings[1].real() == Approx(0.1));
        CHECK(c.couplings[2].real() == Approx(-0.1));
        CHECK(c.sites == site_labels(s.topology));
    }
    SECTION("odd chain follows the cosine envelope") {
        LatticeSpec s;
        s.topology = Topology::odd_chain(2);
        s.delta_a = {1.0, 1.0};
        s.omega_b = {1.0};
        s.g = {1e-6};
        s.kappa = {0.1, 0.1};
        s.gamma = {1e-5};
        s.drive = {CosineDrive{1e5, -1, 0.006}, CosineDrive{1e5, 1, 0.006}};
        for (double phase : {0.0, 0.7, std::numbers::pi / 2.0, 2.5}) {
            const double c = std::cos(phase);
            MeanFieldState st{0.0, {(1.0 - c) * 1e5, (1.0 + c) * 1e5}, {0.0}};
            const auto chain = effective_chain(s, st);
            REQUIRE(chain.couplings.size() == 2);
            CHECK(chain.couplings[0].real() == Approx(-0.1 * (1.0 - c)).margin(1e-15));
            CHECK(chain.couplings[1].real() == Approx(0.1 * (1.0 + c)).margin(1e-15));
        }
    }
    SECTION("dimension mismatch") {
        const auto s = two_cell();
        MeanFieldState st{0.0, {1e5}, {0.0, 0.0}};
        CHECK_THROWS_AS(effective_chain(s, st), DimensionMismatch);
    }
    SECTION("bond counts for both topologies") {
        for (int n = 1; n <= 5; ++n) {
            LatticeSpec s = two_cell();
            s.topology = Topology::cell_chain(n);
            s.delta_a.assign(n, 1.0);
            s.kappa.assign(n, 0.1);
            s.drive.assign(n, ConstantDrive{1e5});
            s.omega_b.assign(n, 1.0);
            s.g.assign(n, 1e-6);
            s.gamma.assign(n, 1e-5);
            CHECK(effective_chain(s, MeanFieldState::vacuum(s)).couplings.size() == static_cast<std::size_t>(2 * n - 1));
        }
    }
}

TEST_CASE("effective_chain is linear in each cavity amplitude") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LatticeSpec s = two_cell();
    s.topology = Topology::cell_chain(3);
    s.delta_a.assign(3, 1.0);
    s.kappa.assign(3, 0.1);
    s.drive.assign(3, ConstantDrive{1e5});
    s.omega_b.assign(3, 1.0);
    s.g = {1.1e-6, 0.9e-6, 1.3e-6};
    s.gamma.assign(3, 1e-5);
    for (int trial = 0; trial < 20; ++trial) {
        MeanFieldState st = MeanFieldState::vacuum(s);
        for (auto& a : st.alpha) a = {1e5 * u(rng), 1e5 * u(rng)};
        const auto base = effective_chain(s, st);
        const std::size_t j = static_cast<std::size_t>(trial % 3);
        const double scale = 0.25 + std::abs(u(rng)) * 3.0;
        auto scaled = st;
        scaled.alpha[j] *= scale;
        const auto c = effective_chain(s, scaled);
        for (std::size_t b = 0; b < c.couplings.size(); ++b) {
            // bond b touches cavity b/2 (left, even b) or (b+1)/2 (right, odd b)
            const std::size_t cavity = b % 2 == 0 ? b / 2 : (b + 1) / 2;
            const cplx want = cavity == j ? base.couplings[b] * scale : base.couplings[b];
            CHECK(std::abs(c.couplings[b] - want) <= 1e-15 * std::abs(want) + 1e-300);
        }
    }
}

TEST_CASE("build_hamiltonian") {
    SECTION("real tridiagonal") {
        const auto c = EffectiveChain::from_couplings({-0.1, 0.2, -0.1});
        const auto h = build_hamiltonian(c);
        REQUIRE(h.size() == 4);
        CHECK(h(0, 1) == cplx(-0.1));
        CHECK(h(1, 2) == cplx(0.2));
        CHECK(h(2, 3) == cplx(-0.1));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(h(i, i) == cplx(0.0));
            for (std::size_t j = 0; j < 4; ++j)
                if (i + 1 != j && j + 1 != i && i != j) CHECK(h(i, j) == cplx(0.0));
        }
        CHECK(h == conjugate_transpose(h));
    }
    SECTION("three sites at the quarter period") {
        const double c = std::cos(std::numbers::pi / 2.0);
        const auto h = build_hamiltonian(EffectiveChain::from_couplings({-0.1 * (1.0 - c), 0.1 * (1.0 + c)}));
        CHECK(h(0, 1).real() == Approx(-0.1));
        CHECK(h(1, 2).real() == Approx(0.1));
    }
    SECTION("complex coupling") {
        const double phi = 0.83;
        const auto h = build_hamiltonian(EffectiveChain::from_couplings({std::polar(0.1, phi)}));
        CHECK(h(0, 1) == std::polar(0.1, phi));
        CHECK(h(1, 0) == std::conj(std::polar(0.1, phi)));
        CHECK(h.hermiticity_defect() == 0.0);
    }
    SECTION("random complex chains are exactly Hermitian") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> n01;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<cplx> j(1 + trial % 9);
            for (auto& z : j) z = {n01(rng), n01(rng)};
            const auto h = build_hamiltonian(EffectiveChain::from_couplings(j));
            CHECK(h == conjugate_transpose(h));
        }
    }
    SECTION("empty chain") { CHECK_THROWS_AS(build_hamiltonian(EffectiveChain{}), InvalidArgument); }
}

TEST_CASE("classify_phase") {
    CHECK(classify_phase(EffectiveChain::from_couplings({-0.05, 0.15, -0.05})) == Phase::Nontrivial);
    CHECK(classify_phase(EffectiveChain::from_couplings({-0.15, 0.05, -0.15})) == Phase::Trivial);
    CHECK(classify_phase(EffectiveChain::from_couplings({-0.1, 0.101, -0.1})) == Phase::Critical);
    CHECK(classify_phase(EffectiveChain::from_couplings({-0.1, 0.11, -0.1}), 0.2) == Phase::Critical);
    CHECK_THROWS_AS(classify_phase(EffectiveChain::from_couplings({-0.1, 0.1})), InvalidArgument);
    CHECK_THROWS_AS(classify_phase(EffectiveChain::from_couplings({-0.1})), InvalidArgument);

    SECTION("invariant under positive rescaling") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<cplx> j(5);
            for (auto& z : j) z = std::polar(u(rng), 6.0 * u(rng));
            const auto c = EffectiveChain::from_couplings(j);
            const double s = std::pow(10.0, 6.0 * u(rng) - 3.0);
            for (auto& z : j) z *= s;
            CHECK(classify_phase(c) == classify_phase(EffectiveChain::from_couplings(j)));
        }
    }
}
