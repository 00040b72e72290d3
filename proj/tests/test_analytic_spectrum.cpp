#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "spinchain/analytic_spectrum.hpp"

using namespace spinchain;
using Catch::Approx;

namespace {

ChainParams params(double eps0, double v0) {
    ChainParams p;
    p.epsilon0 = eps0;
    p.v0 = v0;
    return validate(p);
}

const ChainParams kFig2 = params(1.0, 0.4);
const ChainParams kFig3 = params(1.3, 0.75);

// Resonant parameters with a genuine complex pole (gamma_c^2 > 0).
ChainParams random_resonant(std::mt19937& rng) {
    std::uniform_real_distribution<double> v0d(0.1, 0.85);
    for (;;) {
        const double v0 = v0d(rng);
        const double u0_max = 0.95 * std::sqrt(1.0 - v0 * v0);
        std::uniform_real_distribution<double> u0d(-u0_max, u0_max);
        const double eps0 = 2.0 + 2.0 * u0d(rng);
        ChainParams p;
        p.epsilon0 = eps0;
        p.v0 = v0;
        p = validate(p);
        if (p.is_resonant) return p;
    }
}

}  // namespace

TEST_CASE("ldos vanishes outside the band and refuses v0 >= v") {
    CHECK(ldos_site0(kFig2, -0.5) == 0.0);
    CHECK(ldos_site0(kFig2, 4.1) == 0.0);
    CHECK(ldos_site0(kFig2, 0.0) == 0.0);
    ChainParams p;
    p.v0 = 1.0;
    p = validate(p);
    CHECK_THROWS_AS(ldos_site0(p, 1.0), std::domain_error);
    CHECK_THROWS_AS(ldos_continued(p, complexd(1.0, -0.1)), std::domain_error);
}

TEST_CASE("ldos peak sits inside eps_r +- gamma0") {
    const ResonanceData rd = pole_data(kFig2);
    double best_e = 0.0, best = -1.0;
    for (double e = 1e-4; e < 4.0; e += 1e-4) {
        const double v = ldos_site0(kFig2, e);
        if (v > best) {
            best = v;
            best_e = e;
        }
    }
    CHECK(best_e > rd.epsilon_r - rd.gamma0);
    CHECK(best_e < rd.epsilon_r + rd.gamma0);
}

TEST_CASE("ldos normalization") {
    CHECK(integrate_ldos(kFig2) == Approx(1.0).margin(1e-6));
    CHECK(integrate_ldos(kFig3) == Approx(1.0).margin(1e-6));
}

TEST_CASE("surface density closed forms") {
    CHECK(ldos_surface(kFig2, 2.0) == Approx(1.0 / M_PI).epsilon(1e-14));
    CHECK(ldos_surface(kFig2, 0.0) == 0.0);
    CHECK(ldos_surface(kFig2, 4.0) == 0.0);
    const double total = quad::adaptive_edge(
        [&](double e) { return ldos_surface(kFig2, e); }, 0.0, 4.0, 1e-12);
    CHECK(total == Approx(1.0).margin(1e-9));
}

TEST_CASE("analytic continuation") {
    SECTION("matches the real-axis density on the band") {
        for (double e : {0.3, 0.904762, 2.0, 3.7}) {
            const complexd z1 = ldos_continued(kFig2, complexd(e, 0.0));
            CHECK(z1.real() == Approx(ldos_site0(kFig2, e)).epsilon(1e-14));
            CHECK(std::abs(z1.imag()) < 1e-15);
            const complexd z2 = ldos_continued(kFig2, complexd(e, -1e-9));
            CHECK(std::abs(z2 - z1) < 1e-7);
        }
    }
    SECTION("band edges are branch points") {
        CHECK_THROWS_AS(ldos_continued(kFig2, complexd(0.0, 0.0)), std::invalid_argument);
        CHECK_THROWS_AS(ldos_continued(kFig2, complexd(4.0, 0.0)), std::invalid_argument);
    }
    SECTION("second-sheet pole diverges") {
        const ResonanceData rd = pole_data(kFig2);
        const complexd zp(rd.epsilon_r, -rd.gamma0);
        for (int k = 0; k < 8; ++k) {
            const double th = 2.0 * M_PI * k / 8;
            const complexd z = zp + 1e-7 * std::exp(complexd(0.0, th));
            CHECK(std::abs(ldos_continued(kFig2, z)) > 1e6);
        }
    }
    SECTION("contour integral reproduces the stored residue") {
        // a = -oint f dz (counterclockwise circle around eps_r - i gamma0);
        // periodic trapezoid rule, 512 points
        const ResonanceData rd = pole_data(kFig2);
        const complexd zp(rd.epsilon_r, -rd.gamma0);
        const double r = 0.5 * rd.gamma0;
        const int n = 512;
        complexd acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const double th = 2.0 * M_PI * k / n;
            const complexd w = r * std::exp(complexd(0.0, th));
            acc += ldos_continued(kFig2, zp + w) * complexd(0.0, 1.0) * w;
        }
        const complexd contour = -acc * (2.0 * M_PI / n);
        CHECK(std::abs(contour - rd.residue) / std::abs(rd.residue) < 1e-6);
    }
}

TEST_CASE("pole data reproduces the reference parameter sets") {
    SECTION("eps0 = 1, v0 = 0.4") {
        const ResonanceData rd = pole_data(kFig2);
        CHECK(rd.epsilon_r == Approx(19.0 / 21.0).epsilon(1e-13));
        CHECK(rd.gamma0 == Approx(0.146308).margin(1e-6));
        CHECK(rd.prefactor_A == Approx(1.203390).margin(1e-6));
        CHECK(rd.prefactor_A == Approx(std::norm(rd.residue)).epsilon(1e-12));
    }
    SECTION("eps0 = 1.3, v0 = 0.75") {
        const ResonanceData rd = pole_data(kFig3);
        CHECK(rd.epsilon_r == Approx(0.85).epsilon(1e-13));
        CHECK(rd.gamma0 == Approx(0.721605).margin(1e-6));
        CHECK(rd.prefactor_A == Approx(2.859694).margin(1e-6));
    }
    SECTION("band center: zero shift, unit beta") {
        const ResonanceData rd = pole_data(params(2.0, 0.5));
        CHECK(rd.delta0 == 0.0);
        CHECK(rd.epsilon_r == 2.0);
        CHECK(rd.beta == Approx(1.0).epsilon(1e-14));
    }
    SECTION("refusals") {
        CHECK_THROWS_AS(pole_data(params(4.5, 0.4)), std::domain_error);  // localized state
        ChainParams p;
        p.v0 = 1.0;
        CHECK_THROWS_AS(pole_data(validate(p)), std::domain_error);  // v0 >= v
        // virtual-state sliver: resonant flag set but gamma_c^2 < 0
        const ChainParams sliver = params(0.62, 0.75);
        REQUIRE(sliver.is_resonant);
        CHECK_THROWS_AS(pole_data(sliver), std::domain_error);
    }
}

TEST_CASE("pole location agrees with a root search on the denominator") {
    // Newton iteration on the continued-LDoS denominator, written out directly
    std::mt19937 rng(20240817);
    for (int trial = 0; trial < 20; ++trial) {
        const ChainParams p = random_resonant(rng);
        const double a2 = (p.v0 / p.v) * (p.v0 / p.v);
        auto den = [&](complexd z) {
            const complexd u = 0.5 * (z - 2.0 * p.v);
            const complexd r = z - p.epsilon0 - a2 * u;
            return r * r + a2 * a2 * (p.v * p.v - u * u);
        };
        complexd z(p.epsilon0, -0.3);
        for (int it = 0; it < 80; ++it) {
            const complexd h(1e-7, 0.0);
            const complexd dz = (den(z + h) - den(z - h)) / (2.0 * h);
            z -= den(z) / dz;
        }
        const ResonanceData rd = pole_data(p);
        CHECK(std::abs(z.real() - rd.epsilon_r) < 1e-8);
        CHECK(std::abs(z.imag() + rd.gamma0) < 1e-8);
    }
}

TEST_CASE("Lorentzian factorization is exact") {
    for (const ChainParams& p : {kFig2, kFig3}) {
        const ResonanceData rd = pole_data(p);
        for (double e : {0.5, 2.0, 3.5, rd.epsilon_r})
            CHECK(lorentzian_factorization_residual(p, e) <= 1e-12);
        // both sides vanish at the edge; residual falls back to absolute difference
        CHECK(lorentzian_factorization_residual(p, 1e-12) <= 1e-15);
    }
}

TEST_CASE("residue magnitude matches the closed-form prefactor") {
    // |a|^2 equals Eq-level A identically here; the spec band is 5 %
    for (double v0 : {0.1, 0.3, 0.5}) {
        const ChainParams p = params(1.0, v0);
        const ResonanceData rd = pole_data(p);
        CHECK(std::abs(std::norm(rd.residue) - rd.prefactor_A) / rd.prefactor_A < 0.05);
        CHECK(std::abs(std::norm(rd.residue) - rd.prefactor_A) / rd.prefactor_A < 1e-12);
    }
}

TEST_CASE("beta symmetry and prefactor bound over random resonant parameters") {
    std::mt19937 rng(7031);
    for (int trial = 0; trial < 50; ++trial) {
        const ChainParams p = random_resonant(rng);
        const ResonanceData rd = pole_data(p);
        CHECK(rd.gamma0 > 0.0);
        CHECK(rd.epsilon_r > 0.0);
        CHECK(rd.epsilon_r < 4.0);
        CHECK(rd.prefactor_A >= 1.0);
        CHECK(rd.beta > 0.0);
        CHECK(rd.delta_corr > 0.0);
        // beta(eps_r) * beta(B - eps_r) = 1 at fixed gamma0
        const double b = rd.beta;
        const double er = rd.epsilon_r, g2 = rd.gamma0 * rd.gamma0;
        const double mirrored =
            ((4.0 - er) * (4.0 - er) + g2) / (er * er + g2);
        CHECK(std::abs(b * mirrored - 1.0) < 1e-10);
        // mirrored parameters give the reciprocal weight
        const ChainParams q = params(4.0 - p.epsilon0, p.v0);
        CHECK(std::abs(rd.beta * pole_data(q).beta - 1.0) < 1e-10);
    }
}

TEST_CASE("delta correction is small at weak coupling") {
    const ResonanceData rd = pole_data(params(1.0, 0.1));
    CHECK(rd.delta_corr > 0.0);
    CHECK(rd.delta_corr < 0.05);
}

TEST_CASE("spectral density J0") {
    SECTION("support and symmetry") {
        CHECK(j0_density(kFig2, 4.0) == 0.0);
        CHECK(j0_density(kFig2, -4.2) == 0.0);
        for (double w : {0.3, 1.1, 2.5, 3.9}) {
            const double plus = j0_density(kFig2, w);
            const double minus = j0_density(kFig2, -w);
            CHECK(std::abs(plus - minus) <= 1e-8 * std::max(1.0, plus));
        }
    }
    SECTION("normalization of the sampled curve") {
        const SpectralDensity d = spectral_density_j0(kFig2, 801);
        REQUIRE(d.omegas.size() == 801);
        const double h = d.omegas[1] - d.omegas[0];
        double simpson = 0.0;
        for (std::size_t k = 0; k < d.values.size(); ++k) {
            const double w = (k == 0 || k + 1 == d.values.size()) ? 1.0
                             : (k % 2 == 1 ? 4.0 : 2.0);
            simpson += w * h / 3.0 * d.values[k];
        }
        CHECK(simpson == Approx(1.0).margin(1e-5));
    }
}
