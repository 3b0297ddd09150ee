#include "loggas/cheb.hpp"

#include <cmath>

namespace loggas::cheb {

Grid::Grid(double a_, double b_, int n_) : a(a_), b(b_), n(n_) {
    if (!(b > a)) throw ArgumentError("cheb::Grid: need b > a");
    if (n < 2) throw ArgumentError("cheb::Grid: need n >= 2");
    theta.resize(n);
    x.resize(n);
    double m = mid(), h = half();
    for (int j = 0; j < n; ++j) {
        theta[j] = (2.0 * j + 1.0) * kPi / (2.0 * n);
        x[j] = m + h * std::cos(theta[j]);
    }
}

namespace {

template <typename T>
std::vector<T> vals_to_coeffs_impl(const Grid& g, const std::vector<T>& v) {
    const int n = g.n;
    std::vector<T> c(n, T{});
    for (int k = 0; k < n; ++k) {
        T acc{};
        for (int j = 0; j < n; ++j) acc += v[j] * std::cos(k * g.theta[j]);
        c[k] = acc * ((k == 0 ? 1.0 : 2.0) / n);
    }
    return c;
}

template <typename T>
T clenshaw(const std::vector<T>& c, double s) {
    T b1{}, b2{};
    for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
        T t = 2.0 * s * b1 - b2 + c[k];
        b2 = b1;
        b1 = t;
    }
    return s * b1 - b2 + c[0];
}

template <typename T>
std::vector<T> deriv_impl(const std::vector<T>& c, double a, double b) {
    const int n = static_cast<int>(c.size());
    std::vector<T> d(n, T{});
    if (n < 2) return d;
    // dT recurrence: d_{k-1} = d_{k+1} + 2k c_k, halved first entry
    d[n - 1] = T{};
    if (n >= 2) d[n - 2] = 2.0 * (n - 1) * c[n - 1];
    for (int k = n - 2; k >= 1; --k) d[k - 1] = (k + 1 < n ? d[k + 1] : T{}) + 2.0 * k * c[k];
    d[0] *= 0.5;
    const double scale = 2.0 / (b - a);
    for (auto& e : d) e *= scale;
    return d;
}

}  // namespace

std::vector<double> vals_to_coeffs(const Grid& g, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != g.n) throw ArgumentError("vals_to_coeffs: size mismatch");
    return vals_to_coeffs_impl(g, v);
}
std::vector<cplx> vals_to_coeffs(const Grid& g, const std::vector<cplx>& v) {
    if (static_cast<int>(v.size()) != g.n) throw ArgumentError("vals_to_coeffs: size mismatch");
    return vals_to_coeffs_impl(g, v);
}

double eval(const std::vector<double>& c, double a, double b, double x) {
    return clenshaw(c, (2.0 * x - a - b) / (b - a));
}
cplx eval(const std::vector<cplx>& c, double a, double b, double x) {
    return clenshaw(c, (2.0 * x - a - b) / (b - a));
}

std::vector<double> deriv_coeffs(const std::vector<double>& c, double a, double b) {
    return deriv_impl(c, a, b);
}
std::vector<cplx> deriv_coeffs(const std::vector<cplx>& c, double a, double b) {
    return deriv_impl(c, a, b);
}

void truncate_noise(std::vector<double>& c, double rel_tol) {
    double mx = 0;
    for (double v : c) mx = std::max(mx, std::abs(v));
    if (mx == 0) {
        c.resize(1, 0.0);
        return;
    }
    std::size_t keep = c.size();
    while (keep > 1 && std::abs(c[keep - 1]) < rel_tol * mx) --keep;
    c.resize(keep);
}

std::vector<double> cosine_moments(const Grid& g, const std::vector<double>& F) {
    if (static_cast<int>(F.size()) != g.n) throw ArgumentError("cosine_moments: size mismatch");
    const int n = g.n;
    std::vector<double> A(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += F[j] * std::cos(k * g.theta[j]);
        A[k] = acc * kPi / n;
    }
    return A;
}

}  // namespace loggas::cheb
