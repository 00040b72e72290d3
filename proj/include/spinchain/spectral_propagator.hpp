#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/analytic_spectrum.hpp"
#include "spinchain/exact_propagator.hpp"
#include "spinchain/parallel.hpp"
#include "spinchain/quadrature.hpp"

// Spectral route to the survival amplitude: Fourier transform of the LDoS,
// the residue + branch-cut split of the contour integral, the Bessel return
// kernel of the unperturbed chain, long-time asymptotics, and the short-time
// moment expansion.

namespace spinchain {

namespace detail {

// Fourier integrand after eps = (B/2)(1 - cos th): the sqrt(eps) sqrt(B - eps)
// numerator collapses to (B/2) sin th, leaving a smooth, analytic integrand.
inline complexd fourier_amp_theta(const ChainParams& p, double t, int panels) {
    const BandSpec bs = band(p);
    const double halfb = 0.5 * bs.bandwidth;
    const double a2 = (p.v0 / p.v) * (p.v0 / p.v);
    auto f = [&](double th) {
        const double s = std::sin(th);
        const double eps = halfb * (1.0 - std::cos(th));
        const double n0 = a2 * halfb * s * halfb * s /
                          (2.0 * M_PI * ldos_denominator(p, eps));
        return n0 * std::exp(complexd(0.0, -eps * t / p.hbar));
    };
    return quad::composite(f, 0.0, M_PI, panels);
}

inline int fourier_panels(const ChainParams& p, double t) {
    const double cycles = band(p).bandwidth * std::abs(t) / (2.0 * M_PI * p.hbar);
    return std::max(48, 6 * static_cast<int>(std::ceil(cycles)));
}

}  // namespace detail

// P00 amplitude as the Fourier transform of the LDoS over the band. Needs no
// pole; for non-resonant parameters it returns the band contribution only
// (localized-state weight excluded by construction).
inline AmplitudeSeries p00_fourier(const ChainParams& p, const std::vector<double>& times,
                                   double check_tol = 1e-9) {
    detail::require_subcritical_coupling(p, "p00_fourier");
    std::vector<complexd> amp(times.size());
    parallel_for(times.size(), [&](std::size_t i) {
        amp[i] = detail::fourier_amp_theta(p, times[i], detail::fourier_panels(p, times[i]));
    });
    if (check_tol > 0.0 && !times.empty()) {
        // spot-check the panel count at the most oscillatory grid point
        std::size_t iworst = 0;
        for (std::size_t i = 1; i < times.size(); ++i)
            if (std::abs(times[i]) > std::abs(times[iworst])) iworst = i;
        const complexd refined = detail::fourier_amp_theta(
            p, times[iworst], 2 * detail::fourier_panels(p, times[iworst]));
        if (std::abs(refined - amp[iworst]) > check_tol)
            throw ConvergenceError("p00_fourier: quadrature failed to reach tolerance " +
                                   std::to_string(check_tol));
    }
    return make_series(times, std::move(amp), SourceTag::spectral_ft);
}

struct J0Probabilities {
    std::vector<double> probability;
    double max_imag = 0.0;  // size of the (ideally vanishing) odd part
};

// P00 directly from a sampled spectral density: P(t) = Int J0(w) e^{-i w t} dw,
// integrated with composite Simpson on the stored uniform grid.
inline J0Probabilities p00_from_j0(const SpectralDensity& d, const std::vector<double>& times) {
    const std::size_t n = d.omegas.size();
    if (n < 3) throw std::invalid_argument("p00_from_j0: density grid too small");
    const double h = d.omegas[1] - d.omegas[0];
    J0Probabilities out;
    out.probability.resize(times.size());
    for (std::size_t it = 0; it < times.size(); ++it) {
        const double t = times[it];
        double re = 0.0, im = 0.0;
        // Simpson weights 1,4,2,...,4,1 (falls back to a trapezoid step if even count)
        std::size_t last = (n % 2 == 1) ? n - 1 : n - 2;
        for (std::size_t k = 0; k <= last; ++k) {
            double w = (k == 0 || k == last) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            w *= h / 3.0;
            re += w * d.values[k] * std::cos(d.omegas[k] * t);
            im -= w * d.values[k] * std::sin(d.omegas[k] * t);
        }
        if (n % 2 == 0) {
            re += 0.5 * h * (d.values[n - 2] * std::cos(d.omegas[n - 2] * t) +
                             d.values[n - 1] * std::cos(d.omegas[n - 1] * t));
            im -= 0.5 * h * (d.values[n - 2] * std::sin(d.omegas[n - 2] * t) +
                             d.values[n - 1] * std::sin(d.omegas[n - 1] * t));
        }
        out.probability[it] = re;
        out.max_imag = std::max(out.max_imag, std::abs(im));
    }
    return out;
}

// Return kernel of the unperturbed semi-infinite chain (site 1 with site 0
// removed): g(t) = 2 e^{-i 2 v t / hbar} J1(2 v t / hbar) / (2 v t / hbar).
// Decays as t^{-3/2}. Defined for negative arguments too (J1(x)/x is even),
// which the convolution identity needs.
inline complexd return_kernel(const ChainParams& p, double t) {
    const double x = 2.0 * p.v * t / p.hbar;
    const double ax = std::abs(x);
    double j1_over_x;
    if (ax < 1e-6) {
        j1_over_x = 0.5 - ax * ax / 16.0;
    } else {
        j1_over_x = std::cyl_bessel_j(1.0, ax) / ax;
    }
    return 2.0 * std::exp(complexd(0.0, -x)) * j1_over_x;
}

// Branch-cut integral of the contour decomposition:
//   Psi_R(t) = -i Int_0^inf de' e^{-e' t/hbar}
//              [N0(eps_L - i e') - e^{-i B t/hbar} N0(eps_U - i e')].
// Substituting e' = u^2 regularizes the sqrt(e') van Hove behavior at both
// edges; the integrand along the rays is smooth and non-oscillatory.
inline complexd branch_cut_return(const ChainParams& p, const ResonanceData& rd, double t,
                                  double cut_depth = 0.0, int panels = 24) {
    const BandSpec bs = band(p);
    const double teff = std::max(t, 1e-3);
    const double e_max =
        cut_depth > 0.0 ? cut_depth : std::max(40.0 * p.hbar / teff, 20.0 * rd.gamma0);
    const double u_max = std::sqrt(e_max);
    const double u_split = std::min(6.0 / std::sqrt(teff / p.hbar), u_max);

    auto edge_integral = [&](double edge) {
        auto f = [&](double u) {
            const double ep = u * u;
            return 2.0 * u * std::exp(-ep * t / p.hbar) *
                   ldos_continued(p, complexd(edge, -ep));
        };
        complexd s = quad::composite(f, 0.0, u_split, panels);
        if (u_max > u_split) s += quad::composite(f, u_split, u_max, panels);
        return s;
    };

    const complexd lower = edge_integral(bs.eps_lower);
    const complexd upper = edge_integral(bs.eps_upper);
    const complexd phase_u = std::exp(complexd(0.0, -bs.eps_upper * t / p.hbar));
    const complexd phase_l = std::exp(complexd(0.0, -bs.eps_lower * t / p.hbar));
    return complexd(0.0, -1.0) * (phase_l * lower - phase_u * upper);
}

// Pure-survival pole term. The residue is the full contour value, so
// Psi_S + Psi_R reproduces the Fourier amplitude identically.
inline complexd survival_amplitude(const ChainParams& p, const ResonanceData& rd, double t) {
    return rd.residue * std::exp(complexd(-rd.gamma0 * t / p.hbar, -rd.epsilon_r * t / p.hbar));
}

struct DecayDecomposition {
    std::vector<double> times;
    std::vector<complexd> psi_survival;
    std::vector<complexd> psi_return;
    std::vector<double> total_probability;  // |Psi_S + Psi_R|^2
    std::vector<double> interference;       // 2 Re[conj(Psi_S) Psi_R]
    std::vector<double> return_phase;       // phi(t), unwrapped, with
                                            // Psi_R = |Psi_R| e^{-i phi}; the collapse
                                            // condition reads eps_r t/hbar - phi + phi_a
                                            // = odd multiple of pi
};

// Pole + branch-cut decomposition of the survival amplitude (Psi_S, Psi_R).
// With an explicit cut_depth the truncation error e^{-cut_depth t} limits how
// small t may get; the achievable floor is reported in the error.
inline DecayDecomposition decompose(const ChainParams& p, const std::vector<double>& times,
                                    double cut_depth = 0.0) {
    for (double t : times)
        if (t < 0.0) throw std::invalid_argument("decompose: times must be non-negative");
    const ResonanceData rd = pole_data(p);
    if (cut_depth > 0.0) {
        double t_min = 1e300;
        for (double t : times)
            if (t > 0.0) t_min = std::min(t_min, t);
        const double t_floor = 20.7 * p.hbar / cut_depth;  // e^{-cut_depth t} ~ 1e-9
        if (t_min < t_floor)
            throw std::domain_error(
                "decompose: cut_depth " + std::to_string(cut_depth) +
                " is too shallow below t = " + std::to_string(t_floor) +
                " (requested t = " + std::to_string(t_min) + ")");
    }

    DecayDecomposition d;
    d.times = times;
    const std::size_t n = times.size();
    d.psi_survival.resize(n);
    d.psi_return.resize(n);
    d.total_probability.resize(n);
    d.interference.resize(n);
    d.return_phase.resize(n);

    parallel_for(n, [&](std::size_t i) {
        d.psi_survival[i] = survival_amplitude(p, rd, times[i]);
        d.psi_return[i] = branch_cut_return(p, rd, times[i], cut_depth);
        d.total_probability[i] = std::norm(d.psi_survival[i] + d.psi_return[i]);
        d.interference[i] = 2.0 * std::real(std::conj(d.psi_survival[i]) * d.psi_return[i]);
    });
    // unwrap phi = -arg(Psi_R) along the grid
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double raw = -std::arg(d.psi_return[i]);
        d.return_phase[i] = (i == 0) ? raw : prev + std::remainder(raw - prev, 2.0 * M_PI);
        prev = d.return_phase[i];
    }
    return d;
}

struct LongtimeValue {
    double modulated = 0.0;        // C [1 - 2 beta/(1+beta^2) sin(Bt/hbar)] (hbar/(Gamma(eps_r) t))^3
    double period_averaged = 0.0;  // (v0/eps0)^2 (1/4pi)(gamma0/eps_r) (hbar/(Gamma(eps_r) t))^3
};

inline LongtimeValue longtime_model(const ChainParams& p, const ResonanceData& rd, double t) {
    return {longtime_tail_modulated(p, rd, t), longtime_tail_averaged(p, rd, t)};
}

inline LongtimeValue longtime_model(const ChainParams& p, double t) {
    return longtime_model(p, pole_data(p), t);
}

struct ShortTimeMoments {
    double mean_energy = 0.0;             // <eps> over N0 (normalized)
    double energy_variance = 0.0;         // <(eps - <eps>)^2>
    double spread_about_resonance = 0.0;  // <(eps - eps_r)^2>; NaN when non-resonant
    double omega_second_moment = 0.0;     // <w^2> over J0
};

// Second moments controlling the quadratic (Zeno) stage:
// 1 - P(t) = t^2 <w^2>/2 + O(t^4) with <w^2> = 2 <(eps - <eps>)^2> / hbar^2.
// <w^2> is computed by independent quadrature of J0 so the identity is a
// genuine cross-check, not a restatement.
inline ShortTimeMoments short_time_moments(const ChainParams& p, double tol = 1e-11) {
    const BandSpec bs = band(p);
    auto n0 = [&](double e) { return ldos_site0(p, e); };
    const double m0 = quad::adaptive_edge(n0, bs.eps_lower, bs.eps_upper, tol);
    const double m1 =
        quad::adaptive_edge([&](double e) { return e * n0(e); }, bs.eps_lower, bs.eps_upper, tol);

    ShortTimeMoments mom;
    mom.mean_energy = m1 / m0;
    mom.energy_variance =
        quad::adaptive_edge([&](double e) { return (e - mom.mean_energy) * (e - mom.mean_energy) * n0(e); },
                            bs.eps_lower, bs.eps_upper, tol) /
        m0;
    if (p.is_resonant && p.v0 < p.v) {
        const double er = pole_data(p).epsilon_r;
        mom.spread_about_resonance =
            quad::adaptive_edge([&](double e) { return (e - er) * (e - er) * n0(e); },
                                bs.eps_lower, bs.eps_upper, tol) /
            m0;
    } else {
        mom.spread_about_resonance = std::nan("");
    }

    // <w^2> over J0 by outer quadrature split at w = 0 (J0 has a kink there)
    const double wb = bs.bandwidth / p.hbar;
    auto j0w2 = [&](double w) { return w * w * j0_density(p, w, 32); };
    auto j0n = [&](double w) { return j0_density(p, w, 32); };
    const double num = quad::composite(j0w2, -wb, 0.0, 48) + quad::composite(j0w2, 0.0, wb, 48);
    const double den = quad::composite(j0n, -wb, 0.0, 48) + quad::composite(j0n, 0.0, wb, 48);
    mom.omega_second_moment = num / den;
    return mom;
}

}  // namespace spinchain
