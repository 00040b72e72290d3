#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

// Quadrature kit for band integrals. The local densities of state carry van
// Hove sqrt singularities at the band edges; the substitution
// eps = lo + (hi-lo)(1 - cos th)/2 turns them into smooth integrands in th,
// after which composite Gauss-Legendre panels converge spectrally.

namespace spinchain::quad {

// 16-point Gauss-Legendre rule on [-1, 1], positive half (rule is symmetric).
inline constexpr std::array<double, 8> kNodes = {
    0.09501250983763744019, 0.28160355077925891323,
    0.45801677765722738634, 0.61787624440264374845,
    0.75540440835500303390, 0.86563120238783174388,
    0.94457502307323257608, 0.98940093499164993260};
inline constexpr std::array<double, 8> kWeights = {
    0.18945061045506849629, 0.18260341504492358887,
    0.16915651939500253819, 0.14959598881657673208,
    0.12462897125553387205, 0.09515851168249278481,
    0.06225352393864789286, 0.02715245941175409485};

template <class F>
auto gauss16(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    using R = decltype(f(mid));
    R acc = f(mid + half * kNodes[0]) + f(mid - half * kNodes[0]);
    acc = kWeights[0] * acc;
    for (std::size_t i = 1; i < kNodes.size(); ++i)
        acc += kWeights[i] * (f(mid + half * kNodes[i]) + f(mid - half * kNodes[i]));
    return R(half * acc);
}

template <class F>
auto composite(F&& f, double a, double b, int panels) {
    using R = decltype(f(a));
    const double h = (b - a) / panels;
    R acc = gauss16(f, a, a + h);
    for (int k = 1; k < panels; ++k)
        acc += gauss16(f, a + k * h, a + (k + 1) * h);
    return acc;
}

// Integral of g over [lo, hi] with sqrt endpoint behavior regularized.
template <class F>
auto edge_regularized(F&& g, double lo, double hi, int panels) {
    const double half = 0.5 * (hi - lo);
    auto h = [&](double th) {
        const double eps = lo + half * (1.0 - std::cos(th));
        return g(eps) * (half * std::sin(th));
    };
    return composite(h, 0.0, M_PI, panels);
}

// Panel doubling until two refinements agree to tol (absolute).
template <class F>
auto adaptive_edge(F&& g, double lo, double hi, double tol,
                   int start_panels = 16, int max_panels = 8192,
                   bool* converged = nullptr) {
    auto prev = edge_regularized(g, lo, hi, start_panels);
    for (int n = 2 * start_panels; n <= max_panels; n *= 2) {
        auto next = edge_regularized(g, lo, hi, n);
        if (std::abs(next - prev) < tol) {
            if (converged) *converged = true;
            return next;
        }
        prev = next;
    }
    if (converged) *converged = false;
    return prev;
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> x;
    if (n <= 1 || !(b > a)) {
        x.push_back(a);
        return x;
    }
    x.resize(n);
    const double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) x[i] = a + h * i;
    x.back() = b;
    return x;
}

}  // namespace spinchain::quad
