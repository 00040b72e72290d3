#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "spinchain/chain_model.hpp"

using namespace spinchain;

namespace {

ChainParams params(double eps0, double v0, std::optional<int> m = std::nullopt) {
    ChainParams p;
    p.epsilon0 = eps0;
    p.v0 = v0;
    p.m_sites = m;
    return validate(p);
}

}  // namespace

TEST_CASE("validate computes the resonance flag") {
    CHECK(params(1.0, 0.4).is_resonant);            // 1 inside (0.16, 3.84)
    CHECK(params(2.0, 1e-6).is_resonant);           // band center
    CHECK_FALSE(params(4.5, 0.4).is_resonant);      // |eps0-2| = 2.5 > 2 - 0.16
    CHECK(params(1.3, 0.75).is_resonant);
    // boundary is excluded: |eps0-2| == 2 - v0^2
    CHECK_FALSE(params(2.0 + (2.0 - 0.16), 0.4).is_resonant);
}

TEST_CASE("validate rejects unusable parameters") {
    ChainParams p;
    p.v = -1.0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p = ChainParams{};
    p.v0 = 0.0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p = ChainParams{};
    p.m_sites = 1;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p = ChainParams{};
    p.hbar = 0.0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    // v0 >= v passes validation (numerical paths allowed); pole paths refuse it
    p = ChainParams{};
    p.v0 = 1.0;
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("build_hamiltonian matches the tridiagonal layout") {
    const Eigen::MatrixXd h2 = build_hamiltonian(params(1.0, 0.4, 2));
    CHECK(h2(0, 0) == 1.0);
    CHECK(h2(0, 1) == -0.4);
    CHECK(h2(1, 0) == -0.4);
    CHECK(h2(1, 1) == 2.0);

    const Eigen::MatrixXd h3 = build_hamiltonian(params(1.3, 0.75, 3));
    CHECK(h3(0, 0) == 1.3);
    CHECK(h3(1, 1) == 2.0);
    CHECK(h3(2, 2) == 2.0);
    CHECK(h3(0, 1) == -0.75);
    CHECK(h3(1, 2) == -1.0);
    CHECK(h3(0, 2) == 0.0);

    CHECK_THROWS_AS(build_hamiltonian(params(1.0, 0.4)), std::invalid_argument);
}

TEST_CASE("eigenvalues of the M=20 chain stay in the band") {
    const Eigen::MatrixXd h = build_hamiltonian(params(1.3, 0.75, 20));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    REQUIRE(es.info() == Eigen::Success);
    REQUIRE(es.eigenvalues().size() == 20);
    const double eta = 0.05;
    CHECK(es.eigenvalues().minCoeff() > 0.0 - eta);
    CHECK(es.eigenvalues().maxCoeff() < 4.0 + eta);
}

TEST_CASE("spectrum containment and edge convergence") {
    auto extremes = [](const ChainParams& p, int m) {
        ChainParams q = p;
        q.m_sites = m;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_hamiltonian(q));
        return std::pair<double, double>{es.eigenvalues().minCoeff(),
                                         es.eigenvalues().maxCoeff()};
    };

    SECTION("resonant parameters: extremes approach 0 and 4V monotonically") {
        const ChainParams p = params(1.0, 0.4);
        auto [lo50, hi50] = extremes(p, 50);
        auto [lo200, hi200] = extremes(p, 200);
        auto [lo800, hi800] = extremes(p, 800);
        CHECK(lo50 > lo200);
        CHECK(lo200 > lo800);
        CHECK(lo800 > 0.0);
        CHECK(hi50 < hi200);
        CHECK(hi200 < hi800);
        CHECK(hi800 < 4.0);
    }

    SECTION("generic parameters: Gershgorin-style envelope") {
        for (double eps0 : {-0.5, 1.0, 4.5}) {
            const ChainParams p = params(eps0, 0.4);
            auto [lo, hi] = extremes(p, 300);
            CHECK(lo >= std::min(eps0 - 0.4, 0.0) - 1e-9);
            CHECK(hi <= std::max(eps0 + 0.4, 4.0) + 1e-9);
        }
    }

    SECTION("non-resonant parameters keep an isolated level outside the band") {
        const ChainParams p = params(4.5, 0.4);
        auto [lo, hi] = extremes(p, 400);
        CHECK(hi > 4.0 + 1e-3);  // localized state above the band
        CHECK(lo > -1e-9);
    }
}

TEST_CASE("band spec") {
    const BandSpec bs = band(params(1.0, 0.4));
    CHECK(bs.eps_lower == 0.0);
    CHECK(bs.eps_upper == 4.0);
    CHECK(bs.bandwidth == 4.0);
}
