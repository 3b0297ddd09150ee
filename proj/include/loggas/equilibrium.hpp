#pragma once
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loggas/cheb.hpp"
#include "loggas/contour.hpp"
#include "loggas/geometry.hpp"
#include "loggas/potential.hpp"
#include "loggas/util.hpp"

namespace loggas {

// Constrained equilibrium measure of the interpolated pair-potential model:
// density rho(x) = S(x) * prod_h |x - a_{h,-}|^{1/2} |x - a_{h,+}|^{1/2} on the
// cuts, with S > 0 sampled at per-cut Chebyshev nodes. Immutable after
// finalize(); shareable across threads.
class EquilibriumMeasure {
  public:
    SupportGeometry geometry;
    Potential potential;
    double t = 0.0;                   // which interpolated pair potential this measure is tagged with
    std::vector<double> eps;          // per-cut masses
    std::vector<double> constants;    // per-cut equality constants C_h
    std::vector<cheb::Grid> grids;    // first-kind nodes on each A_h
    std::vector<std::vector<double>> S;  // samples of the analytic factor

    struct QuadNode {
        double x;
        double w;
        int cut;
    };

    void finalize();
    bool finalized() const { return finalized_; }

    double beta() const { return potential.beta(); }
    int n_cuts() const { return geometry.n_cuts(); }
    int genus() const { return geometry.genus(); }
    int nodes_per_cut() const { return grids.empty() ? 0 : grids.front().n; }

    double S_eval(int h, double x) const;  // Chebyshev series, extends into B_h
    double abs_sigma(double x) const;      // prod_e |x-e|^{1/2}
    double density(double x) const;        // 0 off the support

    const std::vector<QuadNode>& quad() const { return quad_; }
    double integrate(const std::function<double(double)>& f) const;
    double integrate_cut(int h, const std::function<double(double)>& f) const;
    double mass(int h) const;

    // int log|x-y| dmu(y), spectral log-kernel expansion per cut.
    double log_potential(double x) const;
    // Same, restricted to cuts other than h (cross-cut interaction integral).
    double log_potential_excluding(int h, double x) const;

    // G(z) by per-cut quadrature; z must stay off the support.
    cplx stieltjes(cplx z) const;
    // -Im G(x+i0)/pi on the support through the resolvent contour route;
    // independent of the stored S samples. Requires the measure to be the
    // equilibrium measure of its potential (solver outputs).
    double boundary_density(double x) const;

    double cut_cdf(int h, double x) const;  // mass of A_h up to x
    double cdf(double x) const;
    double classical_location(long i, long N) const;
    double quantile(double q) const;

    // Effective potential for the interpolation parameter of the measure.
    double effective_potential(double x) const;

    struct CharacterizationReport {
        double max_on_support_violation = 0;
        double max_off_support_violation = 0;
    };
    CharacterizationReport verify_characterization(int grid_points = 400) const;

    // One-cut component h with density rho/eps_h (for transport maps).
    EquilibriumMeasure restrict_cut(int h) const;

    nlohmann::json to_json() const;
    static EquilibriumMeasure from_json(const nlohmann::json& j);

    // Exact semicircle measure on [-2,2] under the Gaussian potential.
    static EquilibriumMeasure semicircle(double beta, int n_nodes = 64);

    std::vector<double> edges() const;

  private:
    bool finalized_ = false;
    std::vector<std::vector<double>> S_coef_;
    std::vector<QuadNode> quad_;
    // per cut: cosine moments A_k of c^2 S(y(th)) R_h(y(th)) sin^2(th)
    std::vector<std::vector<double>> logmom_;
    std::vector<double> cum_mass_;

    double smooth_rest(int h, double x) const;  // prod_{h' != h} |...|^{1/2}
    friend class EffectivePotential;
};

// T_t effective potential with its per-cut constants fixed from the equality
// on the support. Build once, evaluate many times.
class EffectivePotential {
  public:
    EffectivePotential(const EquilibriumMeasure& mu, double t);
    double operator()(double x) const;  // defined on B
    const std::vector<double>& constants() const { return C_; }

  private:
    const EquilibriumMeasure& mu_;
    double t_;
    double intV_ = 0, intVtilde_ = 0;
    std::vector<double> C_;
    double unnormalized(double x, int h) const;
    friend class EquilibriumMeasure;
};

struct SolveOptions {
    int n_nodes = 64;          // per-cut spectral resolution of S
    int contour_nodes = 256;
    int max_iter = 80;
    double tol = 1e-12;        // residual inf-norm target
    GeometryConfig geometry;
};

// Computes the (optionally constrained) equilibrium measure by damped Newton
// iteration on the cut edges: the unknowns are the 2(g+1) edges, the
// conditions are the resolvent moment identities plus either the filling
// fractions (constrained) or vanishing gap periods (unconstrained).
EquilibriumMeasure solve_equilibrium(const Potential& p,
                                     std::optional<std::vector<double>> eps,
                                     int cut_count,
                                     std::vector<Cut> init = {},
                                     const SolveOptions& opt = {});

// Principal-branch square-root product, ~ z^{g+1} at infinity, analytic off
// the cuts. The per-component parity corrections live in the Xi module.
cplx sigma_principal(cplx z, const std::vector<double>& edges);

}  // namespace loggas
