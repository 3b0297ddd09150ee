#include "loggas/contour.hpp"

#include <cmath>

namespace loggas {

Ellipse::Ellipse(double cx_, double ra_, double rb_, int m_) : cx(cx_), ra(ra_), rb(rb_), m(m_) {
    if (!(ra > 0) || !(rb > 0)) throw ArgumentError("Ellipse: semi-axes must be positive");
    if (m < 16 || m % 2 != 0) throw ArgumentError("Ellipse: node count must be even and >= 16");
    nodes.resize(m);
    weights.resize(m);
    for (int j = 0; j < m; ++j) {
        double s = 2.0 * kPi * j / m;
        nodes[j] = cplx(cx + ra * std::cos(s), rb * std::sin(s));
        weights[j] = cplx(-ra * std::sin(s), rb * std::cos(s)) * (2.0 * kPi / m);
    }
}

cplx Ellipse::integrate(const std::function<cplx(cplx)>& f) const {
    cplx acc{};
    for (int j = 0; j < m; ++j) acc += f(nodes[j]) * weights[j];
    return acc;
}

double Ellipse::interior_margin(cplx z) const {
    double u = (z.real() - cx) / ra, v = z.imag() / rb;
    double r = std::sqrt(u * u + v * v);
    if (r >= 1.0) return 0.0;
    return (1.0 - r) * std::min(ra, rb);
}

}  // namespace loggas
