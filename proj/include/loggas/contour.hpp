#pragma once
#include <functional>
#include <vector>

#include "loggas/util.hpp"

namespace loggas {

// Elliptic contour traversed counterclockwise, sampled for the trapezoid rule
// (spectrally accurate on integrands analytic in a neighbourhood of the path).
struct Ellipse {
    double cx = 0;   // real center
    double ra = 1;   // real semi-axis
    double rb = 0.5; // imaginary semi-axis
    int m = 256;     // node count (even)

    std::vector<cplx> nodes;   // xi_j
    std::vector<cplx> weights; // xi'(s_j) * 2pi/m

    Ellipse() = default;
    Ellipse(double cx_, double ra_, double rb_, int m_);

    cplx integrate(const std::function<cplx(cplx)>& f) const;

    bool contains(cplx z) const {
        double u = (z.real() - cx) / ra, v = z.imag() / rb;
        return u * u + v * v < 1.0;
    }
    // Conservative distance of an interior point to the path.
    double interior_margin(cplx z) const;
    double node_spacing() const { return 2.0 * kPi * std::max(ra, rb) / m; }

    Ellipse scaled(double factor) const { return Ellipse(cx, ra * factor, rb * factor, m); }
    Ellipse with_nodes(int m_) const { return Ellipse(cx, ra, rb, m_); }
};

}  // namespace loggas
