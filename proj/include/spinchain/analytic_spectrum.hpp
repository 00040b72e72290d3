#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/chain_model.hpp"
#include "spinchain/quadrature.hpp"

// Closed-form spectral quantities of the semi-infinite chain: the local
// density of states N0(eps) at the perturbed site, the surface density
// N1(eps) of the unperturbed chain, the analytic continuation of N0 through
// the band cut, and everything hanging off the resonance pole.

namespace spinchain {

using complexd = std::complex<double>;

struct ResonanceData {
    double epsilon_r = 0;     // resonance energy eps0 + delta0
    double delta0 = 0;        // level shift
    double gamma0 = 0;        // half-width of the resonance
    double gamma_c = 0;       // sqrt(v^2 - v0^2 - ((eps0-2v)/2)^2)
    complexd residue;         // a, with Psi_S(t) = a exp[-(gamma0 + i eps_r) t / hbar]
    double phi_a = 0;         // a = |a| exp(-i phi_a)
    double prefactor_A = 1;   // |a|^2 closed form, >= 1
    double delta_corr = 0;    // Lorentzian-truncation estimate: A ~ 1 + delta
    double beta = 1;          // relative weight of the band-edge Lorentzian tails
    double tail_C = 0;        // coefficient of the t^-3 tail
    double gamma_at_er = 0;   // Gamma(eps_r) = (1/2) sqrt(eps_r) sqrt(B - eps_r)
};

enum class LdosKind { site0, surface_site1 };

struct LdosCurve {
    std::vector<double> energies;
    std::vector<double> values;
    LdosKind kind = LdosKind::site0;
};

struct SpectralDensity {
    std::vector<double> omegas;
    std::vector<double> values;
};

namespace detail {

// Denominator of the closed-form LDoS, valid for real and complex arguments.
// Zeros sit at eps_r -+ i gamma0 on the sheet reached through the band.
template <class Scalar>
Scalar ldos_denominator(const ChainParams& p, Scalar z) {
    const double a2 = (p.v0 / p.v) * (p.v0 / p.v);
    const Scalar u = 0.5 * (z - 2.0 * p.v);
    const Scalar r = z - p.epsilon0 - a2 * u;
    return r * r + a2 * a2 * (p.v * p.v - u * u);
}

inline void require_subcritical_coupling(const ChainParams& p, const char* who) {
    if (!(p.v0 < p.v))
        throw std::domain_error(std::string(who) +
                                ": closed-form spectrum requires v0 < v "
                                "(pole formulas degenerate at v0 = v)");
}

}  // namespace detail

// Group-velocity scale Gamma(eps) = (1/2) sqrt(eps) sqrt(B - eps); the surface
// DoS of the unperturbed chain is N1(eps) = (16 / pi B^2) Gamma(eps).
inline double gamma_velocity(const ChainParams& p, double eps) {
    const BandSpec bs = band(p);
    if (eps <= bs.eps_lower || eps >= bs.eps_upper) return 0.0;
    return 0.5 * std::sqrt(eps) * std::sqrt(bs.eps_upper - eps);
}

inline double ldos_surface(const ChainParams& p, double eps) {
    const BandSpec bs = band(p);
    return 16.0 / (M_PI * bs.bandwidth * bs.bandwidth) * gamma_velocity(p, eps);
}

inline double ldos_site0(const ChainParams& p, double eps) {
    detail::require_subcritical_coupling(p, "ldos_site0");
    const BandSpec bs = band(p);
    if (eps <= bs.eps_lower || eps >= bs.eps_upper) return 0.0;
    const double a2 = (p.v0 / p.v) * (p.v0 / p.v);
    const double num = a2 * std::sqrt(eps) * std::sqrt(bs.eps_upper - eps);
    return num / (2.0 * M_PI * detail::ldos_denominator(p, eps));
}

// Analytic continuation of N0 through the band cut. The square roots are the
// principal branches of sqrt(z) and sqrt(B - z); their cuts lie on (-inf, 0]
// and [B, inf), so the function is analytic across (0, B) and, continued into
// the lower half plane, exposes the second-sheet pole at eps_r - i gamma0.
inline complexd ldos_continued(const ChainParams& p, complexd z) {
    detail::require_subcritical_coupling(p, "ldos_continued");
    const BandSpec bs = band(p);
    if (z == complexd(bs.eps_lower, 0.0) || z == complexd(bs.eps_upper, 0.0))
        throw std::invalid_argument("ldos_continued: band-edge point is a branch point");
    const double a2 = (p.v0 / p.v) * (p.v0 / p.v);
    const complexd w = std::sqrt(z) * std::sqrt(complexd(bs.eps_upper) - z);
    return a2 * w / (2.0 * M_PI * detail::ldos_denominator(p, z));
}

// Pole of the continued LDoS and every constant derived from it.
//
// Besides the localized-state criterion there is a thin sliver of parameters
// (v^2 - v0^2 < ((eps0-2v)/2)^2 while still flagged resonant) where the pole
// pair degenerates to virtual states just outside the band edges; refused here
// since no exponential stage exists there.
inline ResonanceData pole_data(const ChainParams& p) {
    detail::require_subcritical_coupling(p, "pole_data");
    if (!p.is_resonant)
        throw std::domain_error(
            "pole_data: |eps0 - 2v| >= 2v - v0^2/v gives rise to a localized state; "
            "no single in-band resonance");
    const BandSpec bs = band(p);
    const double B = bs.bandwidth;
    const double u0 = 0.5 * (p.epsilon0 - 2.0 * p.v);
    const double gc2 = p.v * p.v - p.v0 * p.v0 - u0 * u0;
    if (!(gc2 > 0.0))
        throw std::domain_error("pole_data: couplings place the poles on the real axis "
                                "(virtual states); no complex resonance pole");
    const double ratio = p.v0 * p.v0 / (p.v * p.v - p.v0 * p.v0);

    ResonanceData rd;
    rd.gamma_c = std::sqrt(gc2);
    rd.delta0 = ratio * u0;
    rd.epsilon_r = p.epsilon0 + rd.delta0;
    rd.gamma0 = ratio * rd.gamma_c;
    rd.gamma_at_er = 0.5 * std::sqrt(rd.epsilon_r) * std::sqrt(B - rd.epsilon_r);

    const complexd zp(rd.epsilon_r, -rd.gamma0);
    rd.residue = std::sqrt(zp) * std::sqrt(complexd(B) - zp) / (2.0 * rd.gamma_c);
    rd.phi_a = -std::arg(rd.residue);

    const double er2 = rd.epsilon_r * rd.epsilon_r;
    const double mir2 = (B - rd.epsilon_r) * (B - rd.epsilon_r);
    const double g02 = rd.gamma0 * rd.gamma0;
    rd.prefactor_A = std::sqrt(er2 + g02) * std::sqrt(mir2 + g02) / (4.0 * gc2);
    rd.delta_corr = (2.0 / M_PI) * (rd.gamma0 / (rd.epsilon_r - bs.eps_lower)) *
                    (bs.bandwidth / (bs.eps_upper - rd.epsilon_r));
    rd.beta = (er2 + g02) / (mir2 + g02);
    rd.tail_C = rd.gamma_at_er * rd.gamma_at_er * rd.gamma_at_er * p.v /
                (4.0 * M_PI * gc2) * g02 / ((g02 + er2) * (g02 + er2)) *
                (1.0 + rd.beta * rd.beta);
    return rd;
}

// N0 factorizes exactly as (v^2/gamma_c) * Lorentzian(eps_r, gamma0) * N1(eps).
// Returns the relative residual (absolute where N0 vanishes).
inline double lorentzian_factorization_residual(const ChainParams& p, double eps) {
    const ResonanceData rd = pole_data(p);
    const double n0 = ldos_site0(p, eps);
    const double de = rd.epsilon_r - eps;
    const double lorentz = rd.gamma0 / (de * de + rd.gamma0 * rd.gamma0);
    const double fact = p.v * p.v / rd.gamma_c * lorentz * ldos_surface(p, eps);
    const double diff = std::abs(n0 - fact);
    return n0 > 0.0 ? diff / n0 : diff;
}

// Long-time tail, Gamma(eps_r) adopted as the (paper-chosen, arbitrary) time
// scale of the return probability.
inline double longtime_tail_modulated(const ChainParams& p, const ResonanceData& rd, double t) {
    const BandSpec bs = band(p);
    const double mod = 1.0 - 2.0 * rd.beta / (1.0 + rd.beta * rd.beta) *
                                 std::sin(bs.bandwidth * t / p.hbar);
    const double red = p.hbar / (rd.gamma_at_er * t);
    return rd.tail_C * mod * red * red * red;
}

// Period-averaged long-time value: (v0/eps0)^2 (1/4pi)(gamma0/eps_r) (hbar/(Gamma(eps_r) t))^3.
inline double longtime_tail_averaged(const ChainParams& p, const ResonanceData& rd, double t) {
    const double red = p.hbar / (rd.gamma_at_er * t);
    return (p.v0 / p.epsilon0) * (p.v0 / p.epsilon0) * (1.0 / (4.0 * M_PI)) *
           (rd.gamma0 / rd.epsilon_r) * red * red * red;
}

inline LdosCurve sample_ldos(const ChainParams& p, int n_points, LdosKind kind) {
    if (n_points < 2) throw std::invalid_argument("sample_ldos: need at least 2 points");
    const BandSpec bs = band(p);
    LdosCurve c;
    c.kind = kind;
    c.energies = quad::linspace(bs.eps_lower, bs.eps_upper, n_points);
    c.values.reserve(c.energies.size());
    for (double e : c.energies)
        c.values.push_back(kind == LdosKind::site0 ? ldos_site0(p, e) : ldos_surface(p, e));
    return c;
}

inline double integrate_ldos(const ChainParams& p, double tol = 1e-10) {
    const BandSpec bs = band(p);
    return quad::adaptive_edge([&](double e) { return ldos_site0(p, e); },
                               bs.eps_lower, bs.eps_upper, tol);
}

// Spectral density J0(w) = hbar Int N0(e) N0(e + hbar w) de. The overlap
// interval shrinks with |w|; both terminal sqrt factors are regularized by the
// edge substitution.
inline double j0_density(const ChainParams& p, double omega, int panels = 48) {
    const BandSpec bs = band(p);
    const double shift = p.hbar * omega;
    const double lo = std::max(bs.eps_lower, bs.eps_lower - shift);
    const double hi = std::min(bs.eps_upper, bs.eps_upper - shift);
    if (!(hi > lo)) return 0.0;
    return p.hbar * quad::edge_regularized(
                        [&](double e) { return ldos_site0(p, e) * ldos_site0(p, e + shift); },
                        lo, hi, panels);
}

inline SpectralDensity spectral_density_j0(const ChainParams& p, int n_points = 2001,
                                           int panels = 48) {
    if (n_points < 3) throw std::invalid_argument("spectral_density_j0: need at least 3 points");
    const BandSpec bs = band(p);
    SpectralDensity d;
    d.omegas = quad::linspace(-bs.bandwidth / p.hbar, bs.bandwidth / p.hbar, n_points);
    d.values.reserve(d.omegas.size());
    for (double w : d.omegas) d.values.push_back(j0_density(p, w, panels));
    return d;
}

}  // namespace spinchain
