#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/analytic_spectrum.hpp"
#include "spinchain/exact_propagator.hpp"
#include "spinchain/spectral_propagator.hpp"

// Headline observables of the decay: crossover times t_S and t_R, exponential
// and power-law fits, the tail modulation, and the survival-collapse dip with
// its phase-condition diagnostics.

namespace spinchain {

struct TShort {
    double exact = 0.0;   // hbar Gamma0 A / (v0^2 + 2 Gamma0^2 A)
    double approx = 0.0;  // hbar pi N1(eps_r)
};

inline TShort t_short(const ChainParams& p, const ResonanceData& rd) {
    TShort ts;
    ts.exact = p.hbar * rd.gamma0 * rd.prefactor_A /
               (p.v0 * p.v0 + 2.0 * rd.gamma0 * rd.gamma0 * rd.prefactor_A);
    ts.approx = p.hbar * M_PI * ldos_surface(p, rd.epsilon_r);
    return ts;
}

inline TShort t_short(const ChainParams& p) { return t_short(p, pole_data(p)); }

// Iterates of the transcendental crossover equation
//   t_R^(0)   = (hbar/Gamma0) ln(2 sqrt(pi) (eps0/v0) sqrt(eps_r/Gamma0))
//   t_R^(n+1) = t_R^(0) + (3 hbar / 2 Gamma0) ln[Gamma(eps_r) t_R^(n) / hbar]
inline std::vector<double> t_return_iterates(const ChainParams& p, const ResonanceData& rd,
                                             int n_iter = 8) {
    if (n_iter < 1) throw std::invalid_argument("t_return_iterates: n_iter must be >= 1");
    const double arg0 =
        2.0 * std::sqrt(M_PI) * (p.epsilon0 / p.v0) * std::sqrt(rd.epsilon_r / rd.gamma0);
    if (!(arg0 > 0.0) || !std::isfinite(arg0))
        throw std::domain_error("t_return_iterates: degenerate parameters (log argument <= 0)");
    std::vector<double> it;
    it.push_back(p.hbar / rd.gamma0 * std::log(arg0));
    for (int n = 0; n < n_iter; ++n) {
        const double arg = rd.gamma_at_er * it.back() / p.hbar;
        if (!(arg > 0.0))
            throw std::domain_error("t_return_iterates: degenerate parameters (log argument <= 0)");
        it.push_back(it.front() + 1.5 * p.hbar / rd.gamma0 * std::log(arg));
    }
    return it;
}

inline std::vector<double> t_return_iterates(const ChainParams& p, int n_iter = 8) {
    return t_return_iterates(p, pole_data(p), n_iter);
}

// Third-order iterate per the paper, continued to n_max while the relative
// change still exceeds rel_tol.
inline double t_return_converged(const ChainParams& p, const ResonanceData& rd,
                                 double rel_tol = 0.01, int n_min = 3, int n_max = 8) {
    const std::vector<double> it = t_return_iterates(p, rd, n_max);
    for (int n = n_min; n <= n_max; ++n) {
        if (std::abs(it[n] - it[n - 1]) / it[n - 1] < rel_tol) return it[n];
    }
    return it.back();
}

struct ExpFit {
    double rate = 0.0;       // Gamma0-equivalent, -slope * hbar / 2
    double prefactor = 0.0;  // exp(intercept)
    double rms_residual = 0.0;
    double max_abs_residual = 0.0;
    bool clean = true;       // false when log residuals are inflated (dip/echo in window)
    int n_samples = 0;
};

inline ExpFit fit_exponential(const AmplitudeSeries& s, double t_lo, double t_hi,
                              double hbar = 1.0) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (s.times[i] < t_lo || s.times[i] > t_hi) continue;
        if (!(s.probability[i] > 0.0)) continue;
        x.push_back(s.times[i]);
        y.push_back(std::log(s.probability[i]));
    }
    if (x.size() < 20)
        throw std::invalid_argument("fit_exponential: need at least 20 samples in the window");

    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;

    ExpFit fit;
    fit.rate = -slope * hbar / 2.0;
    fit.prefactor = std::exp(intercept);
    fit.n_samples = static_cast<int>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - slope * x[i] - intercept;
        ss += r * r;
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
    }
    fit.rms_residual = std::sqrt(ss / n);
    fit.clean = fit.max_abs_residual < 0.5;
    return fit;
}

struct PowerFit {
    double exponent = 0.0;
    double intercept = 0.0;        // of the log-log fit
    double modulation_freq = 0.0;  // dominant oscillation of the detrended residual
    double beta_estimate = 0.0;    // inverted from the modulation contrast 2b/(1+b^2)
    int n_windows = 0;
};

// Period-averaged log-log fit of the tail. Averaging windows have the exact
// modulation period 2 pi hbar / B and are phase-aligned to the k (2 pi/B)
// grid; the exponent is a Theil-Sen (median pairwise) slope, which keeps the
// residual pure-survival interference in the earliest windows from biasing
// the estimate the way plain least squares does.
inline PowerFit fit_powerlaw(const AmplitudeSeries& s, double t_lo, double t_hi,
                             double bandwidth, double hbar = 1.0) {
    const double period = 2.0 * M_PI * hbar / bandwidth;
    const double start = std::ceil(t_lo / period) * period;
    std::vector<double> tc, pm;
    for (double w0 = start; w0 + period <= t_hi + 1e-12; w0 += period) {
        double tsum = 0.0, psum = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            if (s.times[i] < w0 || s.times[i] >= w0 + period) continue;
            tsum += s.times[i];
            psum += s.probability[i];
            ++cnt;
        }
        if (cnt >= 8) {
            tc.push_back(tsum / cnt);
            pm.push_back(psum / cnt);
        }
    }
    if (tc.size() < 3)
        throw std::invalid_argument("fit_powerlaw: window shorter than 3 modulation periods");

    const std::size_t n = tc.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(tc[i]);
        y[i] = std::log(pm[i]);
    }
    std::vector<double> slopes;
    slopes.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    std::sort(slopes.begin(), slopes.end());
    const double slope = slopes.size() % 2 == 1
                             ? slopes[slopes.size() / 2]
                             : 0.5 * (slopes[slopes.size() / 2 - 1] + slopes[slopes.size() / 2]);
    double icpt = 0.0;
    for (std::size_t i = 0; i < n; ++i) icpt += y[i] - slope * x[i];
    icpt /= n;

    PowerFit fit;
    fit.exponent = slope;
    fit.intercept = icpt;
    fit.n_windows = static_cast<int>(n);

    // detrended residual over the averaged span; periodogram peak -> modulation
    std::vector<double> rt, rv;
    const double span_lo = start, span_hi = start + n * period;
    double dt_min = 1e300;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (s.times[i] < span_lo || s.times[i] >= span_hi) continue;
        rt.push_back(s.times[i]);
        rv.push_back(s.probability[i] / std::exp(icpt + slope * std::log(s.times[i])) - 1.0);
        if (rt.size() > 1) dt_min = std::min(dt_min, rt.back() - rt[rt.size() - 2]);
    }
    if (rt.size() > 16) {
        const double span = rt.back() - rt.front();
        auto power_at = [&](double w) {
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < rt.size(); ++i) {
                re += rv[i] * std::cos(w * rt[i]);
                im += rv[i] * std::sin(w * rt[i]);
            }
            return re * re + im * im;
        };
        // two-stage periodogram: coarse scan at the spectral resolution, then a
        // fine scan with parabolic refinement around the dominant peak
        const double w_lo = 6.0 * M_PI / span;
        const double w_hi = std::min(0.8 * M_PI / dt_min, 3.0 * bandwidth / hbar);
        const double res = (2.0 * M_PI / span) / 6.0;
        const int n_coarse = std::max(8, static_cast<int>((w_hi - w_lo) / res));
        double best_w = w_lo, best_pow = -1.0;
        for (int k = 0; k <= n_coarse; ++k) {
            const double w = w_lo + (w_hi - w_lo) * k / n_coarse;
            const double pw = power_at(w);
            if (pw > best_pow) {
                best_pow = pw;
                best_w = w;
            }
        }
        const double step = (w_hi - w_lo) / n_coarse;
        const double f_lo = std::max(w_lo, best_w - 2.0 * step);
        const double f_hi = std::min(w_hi, best_w + 2.0 * step);
        const int n_fine = 800;
        std::vector<double> pw(n_fine + 1);
        int best_k = 0;
        for (int k = 0; k <= n_fine; ++k) {
            pw[k] = power_at(f_lo + (f_hi - f_lo) * k / n_fine);
            if (pw[k] > pw[best_k]) best_k = k;
        }
        best_w = f_lo + (f_hi - f_lo) * best_k / n_fine;
        if (best_k > 0 && best_k < n_fine) {
            const double denom = pw[best_k - 1] - 2.0 * pw[best_k] + pw[best_k + 1];
            if (denom < 0.0)
                best_w += 0.5 * (pw[best_k - 1] - pw[best_k + 1]) / denom *
                          (f_hi - f_lo) / n_fine;
        }
        fit.modulation_freq = best_w;

        double ss = 0.0;
        for (double r : rv) ss += r * r;
        const double contrast = std::min(0.999, std::sqrt(2.0 * ss / rt.size()));
        fit.beta_estimate = contrast > 0.0
                                ? (1.0 - std::sqrt(std::max(0.0, 1.0 - contrast * contrast))) / contrast
                                : 0.0;
    }
    return fit;
}

struct CollapseReport {
    bool found = false;
    double dip_time = 0.0;
    double dip_depth = 0.0;       // envelope / P(dip)
    double p_at_dip = 0.0;
    double envelope = 0.0;        // geometric mean of the exponential and
                                  // period-averaged power-law branches at dip_time
    double phase_residual = 0.0;  // distance of eps_r t/hbar - phi(t) + phi_a
                                  // from the nearest odd multiple of pi
};

// Survival-collapse search in [0.5, 2] t_R. The optional refine callback
// evaluates P(t) exactly so the dip is located below grid resolution
// (golden-section, the dip is a near-cusp in log scale).
inline CollapseReport detect_collapse(const AmplitudeSeries& s, const ChainParams& p,
                                      const ResonanceData& rd, double t_r,
                                      const std::function<double(double)>& refine = {}) {
    const double lo = 0.5 * t_r, hi = 2.0 * t_r;
    std::size_t imin = 0;
    double pmin = 1e300;
    std::size_t inside = 0;
    double max_spacing = 0.0;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        if (s.times[i] < lo || s.times[i] > hi) continue;
        ++inside;
        if (i > 0 && s.times[i - 1] >= lo)
            max_spacing = std::max(max_spacing, s.times[i] - s.times[i - 1]);
        if (s.probability[i] < pmin) {
            pmin = s.probability[i];
            imin = i;
        }
    }
    if (inside < 8)
        throw std::invalid_argument("detect_collapse: series does not cover [0.5, 2] t_R");
    if (max_spacing > 0.0201 * p.hbar / p.v)
        throw std::invalid_argument("detect_collapse: grid spacing exceeds 0.02 hbar/v near t_R");
    // a monotone decay has its bracket minimum at the edge; only an interior
    // local minimum counts as a candidate dip
    const bool interior_min =
        imin > 0 && imin + 1 < s.times.size() && s.times[imin - 1] >= lo &&
        s.times[imin + 1] <= hi && s.probability[imin] < s.probability[imin - 1] &&
        s.probability[imin] < s.probability[imin + 1];

    double t_dip = s.times[imin];
    double p_dip = pmin;
    if (refine) {
        double a = imin > 0 ? s.times[imin - 1] : t_dip;
        double b = imin + 1 < s.times.size() ? s.times[imin + 1] : t_dip;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = refine(x1), f2 = refine(x2);
        for (int iter = 0; iter < 60 && (b - a) > 1e-10; ++iter) {
            if (f1 < f2) {
                b = x2; x2 = x1; f2 = f1;
                x1 = b - gr * (b - a);
                f1 = refine(x1);
            } else {
                a = x1; x1 = x2; f1 = f2;
                x2 = a + gr * (b - a);
                f2 = refine(x2);
            }
        }
        t_dip = 0.5 * (a + b);
        p_dip = refine(t_dip);
    }

    CollapseReport rep;
    rep.dip_time = t_dip;
    rep.p_at_dip = p_dip;
    const double env_exp =
        rd.prefactor_A * std::exp(-2.0 * rd.gamma0 * t_dip / p.hbar);
    const double red = p.hbar / (rd.gamma_at_er * t_dip);
    const double env_pow = rd.tail_C * red * red * red;  // modulation averages to zero
    rep.envelope = std::sqrt(env_exp * env_pow);
    rep.dip_depth = p_dip > 0.0 ? rep.envelope / p_dip : 1e300;
    rep.found = interior_min && p_dip < 0.5 * rep.envelope;

    const complexd psi_r = branch_cut_return(p, rd, t_dip);
    const double phi = -std::arg(psi_r);
    const double x = rd.epsilon_r * t_dip / p.hbar - phi + rd.phi_a;
    rep.phase_residual = std::abs(std::remainder(x - M_PI, 2.0 * M_PI));
    return rep;
}

enum class Branch { quadratic = 0, exponential = 1, power_law = 2 };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::quadratic: return "quadratic";
        case Branch::exponential: return "exponential";
        case Branch::power_law: return "power_law";
    }
    return "unknown";
}

struct PiecewiseValue {
    double value = 0.0;
    Branch branch = Branch::quadratic;
};

// Three-branch closed-form decay model. Branch boundaries are the crossover
// times; continuity across them is only approximate, by construction.
class PiecewiseModel {
public:
    explicit PiecewiseModel(const ChainParams& p)
        : params_(p), rd_(pole_data(p)), t_s_(t_short(p, rd_).exact),
          t_r_(t_return_converged(p, rd_)) {}

    PiecewiseValue evaluate(double t) const {
        PiecewiseValue out;
        if (t < t_s_) {
            const double q = params_.v0 * t / params_.hbar;
            out.value = 1.0 - q * q;
            out.branch = Branch::quadratic;
        } else if (t < t_r_) {
            out.value = rd_.prefactor_A * std::exp(-2.0 * rd_.gamma0 * t / params_.hbar);
            out.branch = Branch::exponential;
        } else {
            out.value = longtime_tail_modulated(params_, rd_, t);
            out.branch = Branch::power_law;
        }
        return out;
    }

    double operator()(double t) const { return evaluate(t).value; }

    double t_s() const { return t_s_; }
    double t_r() const { return t_r_; }
    const ResonanceData& resonance() const { return rd_; }

private:
    ChainParams params_;
    ResonanceData rd_;
    double t_s_;
    double t_r_;
};

struct RegimeReport {
    ChainParams params;
    ResonanceData resonance;
    TShort t_s;
    std::vector<double> t_r_iterates;
    double t_r = 0.0;
    ExpFit exp_fit;
    double exp_window[2] = {0.0, 0.0};
    PowerFit power_fit;
    double tail_window[2] = {0.0, 0.0};
    CollapseReport collapse;
    std::optional<EchoScan> echo;
    // scale-separation diagnostics for the antiresonance condition
    double er_over_gamma0 = 0.0;
    double gamma0_tr_over_2pi = 0.0;
};

struct RegimeOptions {
    double t_max_factor = 3.5;   // window end in units of t_R
    double dt_max = 0.01;        // base grid spacing cap
    double convergence_tol = 1e-10;
};

// Drives the full spectral pipeline for one parameter set. The production
// series is the LDoS Fourier path; the echo scan (finite M only) uses exact
// diagonalization of the given chain.
inline RegimeReport analyze_regimes(const ChainParams& p, const RegimeOptions& opt = {}) {
    RegimeReport rep;
    rep.params = p;
    rep.resonance = pole_data(p);
    rep.t_s = t_short(p, rep.resonance);
    rep.t_r_iterates = t_return_iterates(p, rep.resonance, 8);
    rep.t_r = t_return_converged(p, rep.resonance);
    rep.er_over_gamma0 = rep.resonance.epsilon_r / rep.resonance.gamma0;
    rep.gamma0_tr_over_2pi = rep.resonance.gamma0 * rep.t_r / (2.0 * M_PI * p.hbar);

    const double t_max = opt.t_max_factor * rep.t_r;
    const double dt = std::clamp(rep.t_r / 1500.0, 0.002, opt.dt_max);
    const int n = static_cast<int>(std::ceil(t_max / dt)) + 1;
    const AmplitudeSeries series = p00_fourier(p, quad::linspace(0.0, t_max, n));

    rep.exp_window[0] = 2.0 * rep.t_s.exact;
    rep.exp_window[1] = 0.5 * rep.t_r;
    rep.exp_fit = fit_exponential(series, rep.exp_window[0], rep.exp_window[1], p.hbar);

    // the stretch right after the collapse still carries strong survival-return
    // interference; start the tail fit well past it
    rep.tail_window[0] = 1.7 * rep.t_r;
    rep.tail_window[1] = 0.95 * t_max;
    rep.power_fit =
        fit_powerlaw(series, rep.tail_window[0], rep.tail_window[1], band(p).bandwidth, p.hbar);

    auto eval = [&](double t) {
        return std::norm(detail::fourier_amp_theta(p, t, detail::fourier_panels(p, t)));
    };
    rep.collapse = detect_collapse(series, p, rep.resonance, rep.t_r, eval);

    if (p.m_sites) {
        const auto [e_lo, e_hi] = default_echo_window(p);
        const int ne = static_cast<int>(std::ceil((e_hi - e_lo) / 0.002)) + 1;
        const AmplitudeSeries echo_series =
            evolve_finite(p, 0, 0, quad::linspace(e_lo, e_hi, ne));
        rep.echo = echo_time(echo_series, p, e_lo, e_hi);
    }
    return rep;
}

}  // namespace spinchain
