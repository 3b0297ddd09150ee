#pragma once
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "loggas/contour.hpp"
#include "loggas/equilibrium.hpp"

namespace loggas {

// C^1 function handle used by the quadrature form of the master operator
// (the difference quotient at coincidence is replaced by the derivative).
struct C1Fn {
    std::function<double(double)> f;
    std::function<double(double)> df;
};

// Function evaluable at the complex contour nodes (holomorphic on each U_h).
using AnalyticFn = std::function<cplx(cplx)>;

inline AnalyticFn poly_fn(std::vector<double> coeffs) {
    return [c = std::move(coeffs)](cplx z) {
        cplx acc{};
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
        return acc;
    };
}

// Piecewise-Chebyshev function with one series per B_h component.
class FuncOnB {
  public:
    FuncOnB() = default;
    FuncOnB(std::vector<cheb::Grid> grids, std::vector<std::vector<double>> values);

    double eval(double x) const;   // DomainError outside B
    double deriv(double x) const;
    double sup_norm() const;
    int component(double x) const;
    const std::vector<cheb::Grid>& grids() const { return grids_; }
    const std::vector<std::vector<double>>& coeffs() const { return coef_; }

    C1Fn as_c1() const;

  private:
    std::vector<cheb::Grid> grids_;
    std::vector<std::vector<double>> coef_, dcoef_;
};

// Smooth window: 1 on B^delta, 0 outside B, exp(-1/s) transition profile
// (all derivatives vanish at the boundary).
class Plateau {
  public:
    explicit Plateau(SupportGeometry geo) : geo_(std::move(geo)) {}
    double value(double x) const;
    double deriv(double x) const;
    const SupportGeometry& geometry() const { return geo_; }

  private:
    SupportGeometry geo_;
    static double profile(double s);
    static double profile_deriv(double s);
};

// Plateau-truncated function: f on B^delta, 0 outside B.
class TruncatedFn {
  public:
    TruncatedFn(FuncOnB base, SupportGeometry geo) : base_(std::move(base)), up_(std::move(geo)) {}
    double eval(double x) const;
    double deriv(double x) const;
    C1Fn as_c1() const;
    const FuncOnB& base() const { return base_; }
    const Plateau& window() const { return up_; }

  private:
    FuncOnB base_;
    Plateau up_;
};

TruncatedFn plateau(FuncOnB f, const SupportGeometry& geo);

// Everything the master operator needs: the equilibrium measure, the
// interpolation parameter of the pair potential, and one contour per cut.
class XiContext {
  public:
    XiContext(std::shared_ptr<const EquilibriumMeasure> mu, double t = 0.0,
              int contour_nodes = 256);

    const EquilibriumMeasure& mu() const { return *mu_; }
    std::shared_ptr<const EquilibriumMeasure> mu_ptr() const { return mu_; }
    double t() const { return t_; }
    const std::vector<Ellipse>& contours() const { return contours_; }

    // sigma(z)*sigma_h(z): analytic across cut h, real and negative on it.
    double sigma_sigma_h(int h, double x) const;
    cplx sigma_h(int h, cplx z) const;

    // int d1 T_t(x,y) dmu(y) and the quadrature tables behind Xi.
    double mean_d1T(double x) const;
    double vtilde_deriv(double x) const;  // d/dx of the cut-decoupled potential
    double d1T(double x, double y) const; // pointwise d1 T_t(x,y)

    struct QuadCache {
        std::vector<double> x, w, Vp, Vtp;
        std::vector<int> cut;
    };
    const QuadCache& qc() const { return qc_; }

  private:
    std::shared_ptr<const EquilibriumMeasure> mu_;
    double t_;
    std::vector<Ellipse> contours_;
    QuadCache qc_;
};

// Xi f on the given points (each inside B), by per-cut quadrature.
std::vector<double> apply_xi(const XiContext& ctx, const C1Fn& f, const std::vector<double>& pts);
double apply_xi_at(const XiContext& ctx, const C1Fn& f, double x);

// The 2x2 edge system for cut h: Theta_h(c1,c2) =
//   (c1 oint sigma_h/(xi - a_{h,-}) + c2, c1 oint sigma_h/(xi - a_{h,+}) + c2).
std::pair<cplx, cplx> theta_solve(const XiContext& ctx, int h, std::pair<cplx, cplx> targets);

struct InvertOptions {
    bool verify = true;           // residual check |Xi f - k - kappa| on B^delta
    double verify_rel_tol = 1e-5;
    int verify_grid = 160;        // points per component
};

struct InvertResult {
    FuncOnB f;
    std::vector<double> kappa;        // per-cut constants
    double residual = 0.0;            // sup over B^delta of |Xi f - k - kappa|
    std::vector<std::pair<cplx, cplx>> c_consts;
    std::vector<double> edge_bracket; // |bracket| at each edge (2 per cut)
};

// Solve Xi f = k + kappa by the per-cut contour formula; the constants are
// fixed so the bracket vanishes at both edges of every cut.
InvertResult invert_xi(const XiContext& ctx, const AnalyticFn& k, const InvertOptions& opt = {});

// Low-level core: complex-valued k, samples at caller-chosen real points per
// cut. Used for transport columns at complex second arguments.
std::vector<std::vector<cplx>> invert_xi_samples(const XiContext& ctx, const AnalyticFn& k,
                                                 const std::vector<std::vector<double>>& pts);

// Same, with k given as nodal values on ctx.contours() (no re-evaluation, no
// contour inflation).
std::vector<std::vector<cplx>> invert_xi_nodal(const XiContext& ctx,
                                               const std::vector<std::vector<cplx>>& k_nodes,
                                               const std::vector<std::vector<double>>& pts);

// Stage-resolved inversion: the exact inverse at interpolation parameter t is
//   f_t = sum_r (1-t)^r f_r
// where f_0 is the raw contour formula and f_{r+1} re-inverts the
// cross-component defect of f_r. Both the per-stage samples and the per-stage
// defect right-hand sides are returned.
struct XiStages {
    std::vector<std::vector<std::vector<cplx>>> samples;  // [stage][cut][pt]
    std::vector<std::vector<std::vector<cplx>>> rhs;      // [stage][cut][node]
};
XiStages invert_xi_stages(const XiContext& ctx, const std::vector<std::vector<cplx>>& k_nodes,
                          const std::vector<std::vector<double>>& pts);

}  // namespace loggas
