#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

// Inhomogeneous tight-binding chain: site 0 carries energy epsilon0 and couples
// with hopping v0 to a homogeneous semi-infinite (or finite, M-site) chain with
// bulk hopping v and bulk site energies 2v, so the band is [0, 4v].
//
// Natural units throughout: hbar = v = 1. Energies are quoted in units of v,
// times in units of hbar/v. The fields hbar and v are kept so reports can be
// re-dimensionalized.

namespace spinchain {

struct ChainParams {
    double epsilon0 = 2.0;       // site-0 energy
    double v0 = 0.5;             // hopping between sites 0 and 1
    double v = 1.0;              // bulk hopping
    std::optional<int> m_sites;  // finite chain length, site 0 included
    double hbar = 1.0;
    bool is_resonant = false;    // set by validate()
};

struct BandSpec {
    double eps_lower = 0.0;
    double eps_upper = 4.0;
    double bandwidth = 4.0;
};

inline BandSpec band(const ChainParams& p) { return {0.0, 4.0 * p.v, 4.0 * p.v}; }

// The defect level stays a resonance inside the band iff |eps0 - 2v| < 2v - v0^2/v.
// Otherwise site 0 has weight on a localized state and the excitation cannot
// fully decay.
inline bool resonance_condition(double epsilon0, double v0, double v) {
    return std::abs(epsilon0 - 2.0 * v) < 2.0 * v - v0 * v0 / v;
}

inline ChainParams validate(ChainParams p) {
    if (!(p.v > 0.0))
        throw std::invalid_argument("chain_model: bulk hopping v must be positive");
    if (!(p.v0 > 0.0))
        throw std::invalid_argument("chain_model: surface hopping v0 must be positive");
    if (!(p.hbar > 0.0))
        throw std::invalid_argument("chain_model: hbar must be positive");
    if (p.m_sites && *p.m_sites < 2)
        throw std::invalid_argument("chain_model: m_sites must be at least 2");
    p.is_resonant = resonance_condition(p.epsilon0, p.v0, p.v);
    return p;
}

// Tridiagonal coefficients of the M-site Hamiltonian. Hoppings enter with a
// minus sign; sign conventions fixed here so eigenvector output is reproducible.
inline void tridiagonal_coefficients(const ChainParams& p, int m,
                                     Eigen::VectorXd& diag, Eigen::VectorXd& sub) {
    if (m < 2) throw std::invalid_argument("chain_model: need at least two sites");
    diag = Eigen::VectorXd::Constant(m, 2.0 * p.v);
    diag[0] = p.epsilon0;
    sub = Eigen::VectorXd::Constant(m - 1, -p.v);
    sub[0] = -p.v0;
}

inline Eigen::MatrixXd build_hamiltonian(const ChainParams& p) {
    if (!p.m_sites)
        throw std::invalid_argument("chain_model: build_hamiltonian requires m_sites");
    const int m = *p.m_sites;
    Eigen::VectorXd diag, sub;
    tridiagonal_coefficients(p, m, diag, sub);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) h(i, i) = diag[i];
    for (int i = 0; i + 1 < m; ++i) {
        h(i, i + 1) = sub[i];
        h(i + 1, i) = sub[i];
    }
    return h;
}

}  // namespace spinchain
