#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinchain/analytic_spectrum.hpp"
#include "spinchain/chain_model.hpp"

// Brute-force oracle path: eigendecomposition of the finite M-site chain,
// propagation P_{f,i}(t), a reduced site-0 weights mode for large-M sweeps,
// convergence to the semi-infinite limit, and mesoscopic-echo detection.

namespace spinchain {

enum class SourceTag { diagonalization, spectral_ft, pole_plus_cut, piecewise_model };

inline const char* to_string(SourceTag t) {
    switch (t) {
        case SourceTag::diagonalization: return "diagonalization";
        case SourceTag::spectral_ft: return "spectral_ft";
        case SourceTag::pole_plus_cut: return "pole_plus_cut";
        case SourceTag::piecewise_model: return "piecewise_model";
    }
    return "unknown";
}

struct AmplitudeSeries {
    std::vector<double> times;            // units hbar/v
    std::vector<complexd> amplitude;      // <f| exp(-i H t / hbar) |i>
    std::vector<double> probability;      // |amplitude|^2
    SourceTag source_tag = SourceTag::diagonalization;
};

inline AmplitudeSeries make_series(std::vector<double> times, std::vector<complexd> amp,
                                   SourceTag tag) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0)
            throw std::invalid_argument("AmplitudeSeries: times must be non-negative");
        if (i > 0 && times[i] < times[i - 1])
            throw std::invalid_argument("AmplitudeSeries: time grid must be monotone");
    }
    AmplitudeSeries s;
    s.times = std::move(times);
    s.amplitude = std::move(amp);
    s.source_tag = tag;
    s.probability.resize(s.amplitude.size());
    for (std::size_t i = 0; i < s.amplitude.size(); ++i)
        s.probability[i] = std::norm(s.amplitude[i]);
    return s;
}

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Eigenvalues plus the site-0 spectral weights |<psi_k|0>|^2 only. Eigenvalues
// come from the tridiagonal QL solver; the weights follow from the three-term
// recurrence for the (unnormalized) first eigenvector components, so memory
// stays O(M) instead of O(M^2).
struct SiteWeights {
    Eigen::VectorXd energies;
    Eigen::VectorXd weights;
};

inline SiteWeights site0_weights(const ChainParams& p, int m) {
    Eigen::VectorXd diag, sub;
    tridiagonal_coefficients(p, m, diag, sub);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("site0_weights: tridiagonal eigensolver failed");

    SiteWeights sw;
    sw.energies = es.eigenvalues();
    sw.weights.resize(m);
    for (int k = 0; k < m; ++k) {
        const double lam = sw.energies[k];
        double prev = 0.0, cur = 1.0, head = 1.0, sum = 1.0;
        for (int j = 0; j + 1 < m; ++j) {
            const double next =
                ((lam - diag[j]) * cur - (j > 0 ? sub[j - 1] : 0.0) * prev) / sub[j];
            prev = cur;
            cur = next;
            sum += next * next;
            if (sum > 1e250) {  // in-band recurrences grow at most polynomially; rescale anyway
                const double s = 1.0 / sum;
                const double sq = std::sqrt(s);
                prev *= sq;
                cur *= sq;
                head *= s;
                sum = 1.0;
            }
        }
        sw.weights[k] = head / sum;
    }
    return sw;
}

inline AmplitudeSeries p00_from_weights(const SiteWeights& sw, const std::vector<double>& times,
                                        double hbar = 1.0) {
    std::vector<complexd> amp(times.size());
    const int m = static_cast<int>(sw.energies.size());
    for (std::size_t it = 0; it < times.size(); ++it) {
        const double t = times[it];
        complexd a = 0.0;
        for (int k = 0; k < m; ++k)
            a += sw.weights[k] * std::exp(complexd(0.0, -sw.energies[k] * t / hbar));
        amp[it] = a;
    }
    return make_series(times, std::move(amp), SourceTag::diagonalization);
}

// Full eigendecomposition propagation between arbitrary sites.
inline AmplitudeSeries evolve_finite(const ChainParams& p, int site_i, int site_f,
                                     const std::vector<double>& times) {
    if (!p.m_sites) throw std::invalid_argument("evolve_finite: m_sites required");
    const int m = *p.m_sites;
    if (site_i < 0 || site_i >= m || site_f < 0 || site_f >= m)
        throw std::invalid_argument("evolve_finite: site index out of range");

    Eigen::VectorXd diag, sub;
    tridiagonal_coefficients(p, m, diag, sub);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("evolve_finite: tridiagonal eigensolver failed");

    const Eigen::VectorXd lam = es.eigenvalues();
    Eigen::VectorXd overlap(m);  // <f|psi_k><psi_k|i>
    for (int k = 0; k < m; ++k)
        overlap[k] = es.eigenvectors()(site_f, k) * es.eigenvectors()(site_i, k);

    std::vector<complexd> amp(times.size());
    for (std::size_t it = 0; it < times.size(); ++it) {
        complexd a = 0.0;
        for (int k = 0; k < m; ++k)
            a += overlap[k] * std::exp(complexd(0.0, -lam[k] * times[it] / p.hbar));
        amp[it] = a;
    }
    return make_series(times, std::move(amp), SourceTag::diagonalization);
}

struct ConvergedReference {
    AmplitudeSeries series;
    int final_m = 0;
    double max_diff = 0.0;
};

// Doubles M until the survival probability stops moving on the grid. The
// starting M already keeps the window end below 0.8 hbar M / B so the first
// reflection cannot sit inside the window.
inline ConvergedReference converged_reference(const ChainParams& p,
                                              const std::vector<double>& times, double tol,
                                              int m_cap = 16384) {
    if (times.empty()) throw std::invalid_argument("converged_reference: empty time grid");
    if (!(tol > 0.0)) throw std::invalid_argument("converged_reference: tol must be positive");
    const double t_max = *std::max_element(times.begin(), times.end());
    const double needed = band(p).bandwidth * t_max / (0.8 * p.hbar);
    int m = 64;
    while (m < needed) m *= 2;
    if (m > m_cap)
        throw ConvergenceError("converged_reference: window end " + std::to_string(t_max) +
                               " requires M > cap " + std::to_string(m_cap));

    AmplitudeSeries prev = p00_from_weights(site0_weights(p, m), times, p.hbar);
    for (int next_m = 2 * m; next_m <= m_cap; next_m *= 2) {
        AmplitudeSeries next = p00_from_weights(site0_weights(p, next_m), times, p.hbar);
        double d = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i)
            d = std::max(d, std::abs(next.probability[i] - prev.probability[i]));
        if (d < tol) return {std::move(next), next_m, d};
        prev = std::move(next);
    }
    throw ConvergenceError("converged_reference: M cap " + std::to_string(m_cap) +
                           " exceeded before pointwise tolerance " + std::to_string(tol));
}

struct EchoScan {
    bool found = false;
    double t_echo = 0.0;
    double p_echo = 0.0;
    double envelope = 0.0;      // period-averaged tail at t_echo
    double prominence = 0.0;    // p_echo / envelope
    double ratio_to_ballistic = 0.0;  // t_echo / (hbar M / B)
};

// Mesoscopic-echo detection: the highest local maximum of P inside the window,
// measured against the semi-infinite decay envelope. The envelope is the
// coherent-sum bound (sqrt(A e^{-2 Gamma0 t}) + sqrt(tail))^2, which the
// infinite-chain curve cannot exceed, so oscillations near the exponential to
// power-law crossover do not register as revivals. The ballistic estimate
// hbar M / B underestimates the observed revival (closer to 4 hbar M / B);
// the ratio is reported rather than asserted.
inline EchoScan echo_time(const AmplitudeSeries& s, const ChainParams& p, double t_lo,
                          double t_hi, double min_ratio = 3.0) {
    if (!p.m_sites) throw std::invalid_argument("echo_time: m_sites required");
    if (s.times.empty() || s.times.front() > t_lo || s.times.back() < t_hi)
        throw std::invalid_argument("echo_time: window not covered by the series grid");
    const ResonanceData rd = pole_data(p);
    const double ballistic = p.hbar * (*p.m_sites) / band(p).bandwidth;

    EchoScan best;
    for (std::size_t i = 1; i + 1 < s.times.size(); ++i) {
        if (s.times[i] < t_lo || s.times[i] > t_hi) continue;
        if (!(s.probability[i] > s.probability[i - 1] &&
              s.probability[i] >= s.probability[i + 1]))
            continue;
        const double exp_amp =
            std::sqrt(rd.prefactor_A) * std::exp(-rd.gamma0 * s.times[i] / p.hbar);
        const double tail_amp = std::sqrt(longtime_tail_averaged(p, rd, s.times[i]));
        const double env = (exp_amp + tail_amp) * (exp_amp + tail_amp);
        const double ratio = s.probability[i] / env;
        if (ratio >= min_ratio && s.probability[i] > best.p_echo) {
            best.found = true;
            best.t_echo = s.times[i];
            best.p_echo = s.probability[i];
            best.envelope = env;
            best.prominence = ratio;
            best.ratio_to_ballistic = s.times[i] / ballistic;
        }
    }
    return best;
}

// Default scan window [3.2, 5.6] hbar M / B around the observed revival scale.
inline std::pair<double, double> default_echo_window(const ChainParams& p) {
    if (!p.m_sites) throw std::invalid_argument("default_echo_window: m_sites required");
    const double ballistic = p.hbar * (*p.m_sites) / band(p).bandwidth;
    return {3.2 * ballistic, 5.6 * ballistic};
}

}  // namespace spinchain
