#pragma once
#include <vector>

#include "loggas/util.hpp"

namespace loggas::cheb {

// Chebyshev points of the first kind on [a,b]:
//   theta_j = (2j+1)pi/(2n),  x_j = mid + half*cos(theta_j)   (x decreasing in j).
// All interior, so square-root edge factors never vanish at a node.
struct Grid {
    double a = 0, b = 0;
    int n = 0;
    std::vector<double> theta;
    std::vector<double> x;

    Grid() = default;
    Grid(double a_, double b_, int n_);
    double mid() const { return 0.5 * (a + b); }
    double half() const { return 0.5 * (b - a); }
};

// Values at first-kind nodes -> Chebyshev series coefficients (length n).
std::vector<double> vals_to_coeffs(const Grid& g, const std::vector<double>& v);
std::vector<cplx> vals_to_coeffs(const Grid& g, const std::vector<cplx>& v);

// Clenshaw evaluation of a Chebyshev series on [a,b]; |s|>1 extrapolates.
double eval(const std::vector<double>& c, double a, double b, double x);
cplx eval(const std::vector<cplx>& c, double a, double b, double x);

// Coefficients of the derivative series (same interval).
std::vector<double> deriv_coeffs(const std::vector<double>& c, double a, double b);
std::vector<cplx> deriv_coeffs(const std::vector<cplx>& c, double a, double b);

// Cosine moments A_k = int_0^pi F(theta) cos(k theta) dtheta, k = 0..n-1,
// from samples of F at the first-kind angles of `g` (exact for degree < 2n-k).
std::vector<double> cosine_moments(const Grid& g, const std::vector<double>& F);

// Drop trailing coefficients below rel_tol * max|c_k|. Evaluating a series
// beyond [a,b] amplifies coefficient noise geometrically; truncating at the
// noise floor keeps mild extensions accurate.
void truncate_noise(std::vector<double>& c, double rel_tol = 1e-13);

}  // namespace loggas::cheb
