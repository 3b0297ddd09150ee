#pragma once
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loggas/xi.hpp"

namespace loggas {

// Cross-cut pair interaction: beta log|x-y| between different components,
// zero on the same component.
double interaction_kernel(const SupportGeometry& geo, double beta, double x, double y);

// V~(x) = V(x) - int W(x,y) dmu(y), stored as per-component Chebyshev series.
class DecoupledPotential {
  public:
    explicit DecoupledPotential(std::shared_ptr<const EquilibriumMeasure> mu);
    double eval(double x) const;
    double deriv(double x) const;
    const EquilibriumMeasure& mu() const { return *mu_; }

  private:
    std::shared_ptr<const EquilibriumMeasure> mu_;
    FuncOnB series_;
};

// Snapshot of the cut-decoupling flow field at a fixed interpolation
// parameter: y1 on B plus the two-variable kernel z on B x B, both
// plateau-truncated in the first variable. Raw data is stored; truncation
// happens at evaluation.
class TransportField {
  public:
    double t = 0.0;

    TransportField() = default;
    TransportField(std::shared_ptr<const EquilibriumMeasure> mu, double t, FuncOnB y1hat,
                   std::vector<std::vector<std::vector<std::vector<double>>>> z_coef);
    TransportField(const TransportField& o);
    TransportField(TransportField&&) = default;
    TransportField& operator=(TransportField&&) = default;

    const EquilibriumMeasure& mu() const { return *mu_; }
    std::shared_ptr<const EquilibriumMeasure> mu_ptr() const { return mu_; }
    const SupportGeometry& geometry() const { return mu_->geometry; }

    double y1(double x) const;
    double y1_deriv(double x) const;
    double z(double x, double y) const;
    double z_d1(double x, double y) const;  // x-derivative (window included)
    double z_d2(double x, double y) const;  // y-derivative

    double z_mean(double x) const;     // int z(x,y) dmu(y)
    double z_d1_mean(double x) const;  // int d1 z(x,y) dmu(y)

    nlohmann::json to_json() const;
    static TransportField from_json(const nlohmann::json& j);

    // x-contracted row of the raw kernel: y-series of zhat(x, .) per target
    // component, for repeated second-argument evaluation.
    struct Row {
        double window = 0, dwindow = 0;
        std::vector<std::vector<double>> coef;    // per hy
        std::vector<std::vector<double>> dcoef;   // y-derivative series
        std::vector<std::vector<double>> xdcoef;  // x-derivative contraction
    };
    Row contract_row(double x) const;
    double row_z(const Row& r, double y) const;
    double row_z_d1(const Row& r, double y) const;
    double row_z_d2(const Row& r, double y) const;

  private:
    std::shared_ptr<const EquilibriumMeasure> mu_;
    FuncOnB y1hat_;
    // z_coef_[hx][hy][i][j]: 2-d Chebyshev coefficients on B_hx x B_hy
    std::vector<std::vector<std::vector<std::vector<double>>>> z_coef_;
    std::unique_ptr<Plateau> up_;
    std::vector<cheb::Grid> bgrids_;

    double zhat(double x, double y, int dx, int dy) const;
};

// The whole t-family of fields: the exact inverse carries a cross-component
// correction scaling with (1-t), so the field is a short polynomial in (1-t)
// with stage-stack coefficients. One build serves every t.
class FieldSchedule {
  public:
    using Tensor2 = std::vector<std::vector<double>>;
    using ZBlocks = std::vector<std::vector<Tensor2>>;  // [hx][hy]

    FieldSchedule() = default;
    int n_stages() const { return static_cast<int>(z_st_.size()); }
    const EquilibriumMeasure& mu() const { return *mu_; }
    std::shared_ptr<const EquilibriumMeasure> mu_ptr() const { return mu_; }

    TransportField at(double t) const;

    nlohmann::json to_json() const;
    static FieldSchedule from_json(const nlohmann::json& j);

  private:
    std::shared_ptr<const EquilibriumMeasure> mu_;
    std::vector<ZBlocks> z_st_;                          // per stage
    std::vector<std::vector<std::vector<double>>> y1_st_;  // per stage, per cut values
    std::vector<cheb::Grid> bgrids_;

    friend FieldSchedule build_field_schedule(const XiContext& ctx);
    friend std::vector<std::vector<double>> flow_first_order(
        const FieldSchedule& schedule, const std::vector<std::vector<double>>& config,
        int rk4_steps);
};

FieldSchedule build_field_schedule(const XiContext& ctx);

// z(.,y) = Up( (1/2) Xi_t^{-1} W(.,y) ) column-wise on the B tensor grid;
// y1 = Up( (beta/2 - 1) Xi_t^{-1}( int d1 z(s,.) dmu(s) ) ), at t = ctx.t().
TransportField build_vector_field(const XiContext& ctx);

// First-order displacement X^1 for a static configuration: integrates the
// linear ODE dX/dt = b_t + A_t X over [0,1] with fixed-step RK4, the fields
// taken at the running time through the schedule.
std::vector<std::vector<double>> flow_first_order(const FieldSchedule& schedule,
                                                  const std::vector<std::vector<double>>& config,
                                                  int rk4_steps = 32);

// Monge-Ampere residual of the ansatz on one configuration (uncentered: the
// normalizing constant is unknown and is removed empirically by the caller
// across a batch).
double monge_ampere_residual(const TransportField& field,
                             const std::vector<std::vector<double>>& config);

// One-dimensional monotone rearrangement between one-cut measures.
struct MonotoneMap {
    std::vector<double> x;     // source grid (includes both endpoints)
    std::vector<double> phi;   // map values
    std::vector<double> phip;  // derivative values
    std::shared_ptr<const EquilibriumMeasure> source, target;

    double eval(double s) const;
    double deriv(double s) const;
};

MonotoneMap monotone_transport(std::shared_ptr<const EquilibriumMeasure> source,
                               std::shared_ptr<const EquilibriumMeasure> target,
                               int n_grid = 801);

// Square-root edge asymptotics of the map derivative at the source edge:
// (c_src/c_dst)^{2/3} with c the density's edge coefficient.
double edge_derivative_limit(const EquilibriumMeasure& source, const EquilibriumMeasure& target,
                             bool left_edge);

}  // namespace loggas
