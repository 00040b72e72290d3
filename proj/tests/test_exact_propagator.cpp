#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "spinchain/exact_propagator.hpp"
#include "spinchain/quadrature.hpp"

using namespace spinchain;
using Catch::Approx;

namespace {

ChainParams params(double eps0, double v0, std::optional<int> m = std::nullopt) {
    ChainParams p;
    p.epsilon0 = eps0;
    p.v0 = v0;
    p.m_sites = m;
    return validate(p);
}

}  // namespace

TEST_CASE("basic propagation contracts") {
    const ChainParams p = params(1.3, 0.75, 20);
    const AmplitudeSeries s = evolve_finite(p, 0, 0, {0.0, 0.5, 1.0});
    CHECK(s.probability[0] == Approx(1.0).margin(1e-13));
    for (double prob : s.probability) {
        CHECK(prob >= 0.0);
        CHECK(prob <= 1.0 + 1e-9);
    }
    CHECK_THROWS_AS(evolve_finite(p, 0, 25, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(evolve_finite(params(1.3, 0.75), 0, 0, {0.0}), std::invalid_argument);
}

TEST_CASE("unitarity: total probability is conserved") {
    const ChainParams p = params(1.3, 0.75, 20);
    std::mt19937 rng(515);
    std::uniform_real_distribution<double> td(0.0, 40.0);
    std::vector<double> times(100);
    for (double& t : times) t = td(rng);
    std::sort(times.begin(), times.end());

    std::vector<AmplitudeSeries> rows;
    for (int f = 0; f < 20; ++f) rows.push_back(evolve_finite(p, 0, f, times));
    for (std::size_t it = 0; it < times.size(); ++it) {
        double total = 0.0;
        for (const auto& r : rows) total += r.probability[it];
        CHECK(total == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("site symmetry of the propagator") {
    const ChainParams p = params(1.0, 0.4, 24);
    const auto ts = quad::linspace(0.0, 8.0, 33);
    const AmplitudeSeries a = evolve_finite(p, 0, 5, ts);
    const AmplitudeSeries b = evolve_finite(p, 5, 0, ts);
    for (std::size_t i = 0; i < ts.size(); ++i)
        CHECK(a.probability[i] == Approx(b.probability[i]).margin(1e-13));
}

TEST_CASE("light cone: far sites stay empty") {
    const ChainParams p = params(1.0, 0.4, 256);
    const double t = 5.0;  // spec bound: f > 2 B t / hbar + 10 = 50
    for (int f : {51, 64, 128, 255}) {
        const AmplitudeSeries s = evolve_finite(p, 0, f, {t});
        CHECK(s.probability[0] < 1e-10);
    }
}

TEST_CASE("reduced site-0 weights match the full eigenvector row") {
    const ChainParams p = params(1.3, 0.75);
    const int m = 512;
    const SiteWeights sw = site0_weights(p, m);

    Eigen::VectorXd diag, sub;
    tridiagonal_coefficients(p, m, diag, sub);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    REQUIRE(es.info() == Eigen::Success);

    double wsum = 0.0;
    for (int k = 0; k < m; ++k) {
        const double ref = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
        CHECK(std::abs(sw.weights[k] - ref) < 1e-10);
        CHECK(std::abs(sw.energies[k] - es.eigenvalues()[k]) < 1e-10);
        wsum += sw.weights[k];
    }
    CHECK(wsum == Approx(1.0).margin(1e-10));
}

TEST_CASE("short-time quadratic coefficient via Richardson extrapolation") {
    for (const ChainParams& p : {params(1.0, 0.4, 256), params(1.3, 0.75, 256)}) {
        auto f = [&](double t) {
            const AmplitudeSeries s = evolve_finite(p, 0, 0, {t});
            return (1.0 - s.probability[0]) / (t * t);
        };
        const double f1 = f(1e-2), f2 = f(5e-3), f3 = f(2.5e-3);
        const double r1 = (4.0 * f2 - f1) / 3.0;
        const double r2 = (4.0 * f3 - f2) / 3.0;
        const double rr = (16.0 * r2 - r1) / 15.0;
        CHECK(std::abs(rr - p.v0 * p.v0) / (p.v0 * p.v0) < 1e-3);
    }
}

TEST_CASE("converged reference schedules") {
    const ChainParams p = params(1.0, 0.4);
    SECTION("window [0, 15]") {
        const auto ref = converged_reference(p, quad::linspace(0.0, 15.0, 301), 1e-10);
        CHECK(ref.final_m <= 1024);
        CHECK(ref.max_diff < 1e-10);
        CHECK(ref.series.probability[0] == Approx(1.0).margin(1e-12));
    }
    SECTION("window [0, 1] converges at the smallest M") {
        const auto ref = converged_reference(p, quad::linspace(0.0, 1.0, 51), 1e-10);
        CHECK(ref.final_m <= 128);
    }
    SECTION("t = 0 gives probability 1 regardless of M") {
        for (int m : {64, 256}) {
            const auto s = p00_from_weights(site0_weights(p, m), {0.0});
            CHECK(s.probability[0] == Approx(1.0).margin(1e-12));
        }
    }
    SECTION("cap exceeded reports a convergence error") {
        CHECK_THROWS_AS(converged_reference(p, {1e5}, 1e-10), ConvergenceError);
    }
}

TEST_CASE("mesoscopic echo") {
    const double dt = 0.002;
    auto scan = [&](int m, double lo, double hi) {
        ChainParams p = params(1.3, 0.75, m);
        const int n = static_cast<int>((hi - lo) / dt) + 1;
        const AmplitudeSeries s =
            p00_from_weights(site0_weights(p, m), quad::linspace(lo, hi, n));
        return echo_time(s, p, lo, hi);
    };

    SECTION("M = 20 revival in the observed window") {
        const EchoScan e = scan(20, 16.0, 28.0);
        REQUIRE(e.found);
        CHECK(e.t_echo > 16.0);
        CHECK(e.t_echo < 28.0);
        CHECK(e.prominence >= 10.0);
        // ballistic estimate hbar M / B = 5; the revival sits near 4x that
        CHECK(e.ratio_to_ballistic > 3.0);
        CHECK(e.ratio_to_ballistic < 6.0);
    }
    SECTION("doubling M roughly doubles the revival time") {
        const EchoScan e20 = scan(20, 16.0, 28.0);
        const EchoScan e40 = scan(40, 32.0, 56.0);
        REQUIRE(e20.found);
        REQUIRE(e40.found);
        const double ratio = e40.t_echo / e20.t_echo;
        CHECK(ratio > 1.7);
        CHECK(ratio < 2.3);
    }
    SECTION("semi-infinite emulation shows no revival") {
        const EchoScan e = scan(800, 0.5, 15.0);
        CHECK_FALSE(e.found);
    }
    SECTION("window must be covered") {
        ChainParams p = params(1.3, 0.75, 20);
        const AmplitudeSeries s =
            p00_from_weights(site0_weights(p, 20), quad::linspace(0.0, 10.0, 101));
        CHECK_THROWS_AS(echo_time(s, p, 16.0, 28.0), std::invalid_argument);
    }
}
