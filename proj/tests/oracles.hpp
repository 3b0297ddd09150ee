// Test-only oracles, independent of the library implementation paths they check.
#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

// Semicircle density / CDF by brute-force quadrature (no library calls).
inline double semicircle_density(double x) {
    if (x <= -2.0 || x >= 2.0) return 0.0;
    return std::sqrt(4.0 - x * x) / (2.0 * 3.14159265358979323846);
}

inline double semicircle_cdf_quadrature(double x, int n = 200000) {
    if (x <= -2.0) return 0.0;
    if (x >= 2.0) return 1.0;
    // midpoint rule
    double acc = 0.0, a = -2.0, h = (x - a) / n;
    for (int i = 0; i < n; ++i) acc += semicircle_density(a + (i + 0.5) * h);
    return acc * h;
}

inline double semicircle_stieltjes_quadrature(double z, int n = 10000) {
    // Gauss-Chebyshev (second kind) on [-2,2]: int f dmu = (pi/(n+1)) sum sin^2 * f(2cos)* (4/(2pi))
    double acc = 0.0;
    const double pi = 3.14159265358979323846;
    for (int j = 1; j <= n; ++j) {
        double th = pi * j / (n + 1);
        double y = 2.0 * std::cos(th);
        acc += std::sin(th) * std::sin(th) / (z - y);
    }
    return acc * (2.0 / pi) * (pi / (n + 1));
}

// Closed-form log potential of the semicircle (documented oracle):
//   |x|<=2 : x^2/4 - 1/2
//   |x|> 2 : x^2/4 - 1/2 - [ |x| sqrt(x^2-4)/4 - log((|x|+sqrt(x^2-4))/2) ]
inline double semicircle_log_potential(double x) {
    double ax = std::abs(x);
    double base = x * x / 4.0 - 0.5;
    if (ax <= 2.0) return base;
    double s = std::sqrt(x * x - 4.0);
    return base - (ax * s / 4.0 - std::log((ax + s) / 2.0));
}

// Discretized-energy minimization: n particles minimizing
//   (1/n) sum V(x_i) - (beta/n^2) sum_{i<j} log|x_i - x_j|
// by diagonally preconditioned gradient descent. A fully converged small
// system seeds the large one through quantile interpolation. Returns the
// relaxed configuration (sorted).
inline std::vector<double> minimize_discrete_energy(
    const std::function<double(double)>& V, const std::function<double(double)>& Vp,
    const std::function<double(double)>& Vpp, double beta, int n, double x_lo, double x_hi) {
    (void)V;
    auto relax = [&](std::vector<double> x, int iters, int n_early) {
        const int m = static_cast<int>(x.size());
        std::vector<double> g(m), H(m);
        for (int it = 0; it < iters; ++it) {
            for (int i = 0; i < m; ++i) {
                double gi = Vp(x[i]), hi = std::max(Vpp(x[i]), 0.0) + 1e-9;
                for (int j = 0; j < m; ++j) {
                    if (j == i) continue;
                    double d = x[i] - x[j];
                    gi -= beta / m / d;
                    hi += beta / m / (d * d);
                }
                g[i] = gi;
                H[i] = hi;
            }
            double damp = it < n_early ? 0.5 : 1.0;
            for (int i = 0; i < m; ++i) x[i] -= damp * g[i] / H[i];
            std::sort(x.begin(), x.end());
            for (int i = 1; i < m; ++i)
                if (x[i] - x[i - 1] < 1e-9) x[i] = x[i - 1] + 1e-9;
        }
        return x;
    };

    const int n0 = 256;
    std::vector<double> x0(n0);
    for (int i = 0; i < n0; ++i) x0[i] = x_lo + (x_hi - x_lo) * (i + 0.5) / n0;
    x0 = relax(std::move(x0), 3000, 20);

    // quantile interpolation onto the target size
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
        double q = (i + 0.5) / n;
        double pos = q * n0 - 0.5;
        int k = std::max(0, std::min(n0 - 2, static_cast<int>(pos)));
        double t = std::min(1.0, std::max(0.0, pos - k));
        x[i] = x0[k] * (1 - t) + x0[k + 1] * t;
    }
    for (int i = 1; i < n; ++i)
        if (x[i] - x[i - 1] < 1e-6) x[i] = x[i - 1] + 1e-6;
    return relax(std::move(x), 300, 5);
}

// Split a sorted configuration into clusters at gaps larger than `gap_min`
// and report (min,max) per cluster.
inline std::vector<std::pair<double, double>> cluster_edges(const std::vector<double>& x,
                                                            double gap_min) {
    std::vector<std::pair<double, double>> out;
    double lo = x.front(), prev = x.front();
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] - prev > gap_min) {
            out.push_back({lo, prev});
            lo = x[i];
        }
        prev = x[i];
    }
    out.push_back({lo, prev});
    return out;
}

}  // namespace oracles
