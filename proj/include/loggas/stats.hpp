#pragma once
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loggas/sampler.hpp"
#include "loggas/transport.hpp"

namespace loggas {

// Two-sample Kolmogorov-Smirnov statistic; ties are handled by advancing both
// pointers through every equal value before the gap is measured (midrank).
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
// Asymptotic critical values: D > crit rejects at level alpha.
double ks_two_sample_critical(double alpha, long n, long m);
double ks_one_sample_critical(double alpha, long n);

struct GapReport {
    int cut = 0;
    long i_rel = 0;  // per-cut particle index (1-based) of the first gap
    int m = 1;
    std::vector<double> rescaled;   // m consecutive rescaled gaps per config
    std::vector<double> reference;  // map-derivative rescaled Gaussian gaps
    double mean = 0, variance = 0;
    double ks = -1;                 // first-gap sample vs reference
    nlohmann::json to_json() const;
};

// Bulk gaps: N rho(E_i) (lambda_{i+1} - lambda_i) per config. The optional
// reference batch (Gaussian, N_h particles) is rescaled per config by
// N Phi'(lambda_{i_rel}).
GapReport bulk_gaps(const SampleBatch& batch, const EquilibriumMeasure& mu, int h, long i_rel,
                    int m, const SampleBatch* reference = nullptr,
                    const MonotoneMap* map = nullptr, double bulk_margin = 0.1);

struct EdgeReport {
    int cut = 0;
    int m = 1;
    double edge = 0;          // alpha_{h,-}
    double phi_at_edge = 0;   // map value at -2 (the edge location)
    double phi_prime = 1.0;   // map derivative at -2 (the rescaling factor)
    std::vector<double> rescaled;   // N^{2/3}(lambda_{h,k} - alpha_{h,-}), k <= m
    std::vector<double> reference;  // phi_prime * N^{2/3}(lambda_k + 2)
    double ks = -1;                 // k = 1 comparison
    nlohmann::json to_json() const;
};

EdgeReport edge_rescale(const SampleBatch& batch, const EquilibriumMeasure& mu, int h, int m,
                        const SampleBatch* reference = nullptr, const MonotoneMap* map = nullptr);

struct FillingReport {
    std::vector<long> floor_nstar;          // per cut
    std::vector<double> nstar_mod1;         // recorded alongside the pmf
    std::vector<std::vector<long>> counts;  // per config, per cut
    std::vector<double> tail;               // P(max_h |N_h - floor| >= K), K = 1..3
    // boundary-eigenvalue classification per cut: xi_h and N^{2/3}(lambda_i - xi_h)
    std::vector<std::vector<double>> xi;
    std::vector<std::vector<double>> boundary_rescaled;
    nlohmann::json to_json() const;
};

FillingReport filling_counts(const SampleBatch& batch, const EquilibriumMeasure& mu);

struct LoopResult {
    double residual = 0;  // Monte Carlo mean of the loop identity bracket
    double se = 0;
    long n = 0;
    nlohmann::json to_json() const;
};

// Monte Carlo check of the integration-by-parts identities. The exact value
// is zero for any C^1 test function vanishing at every component boundary of
// B; order 2 and 3 insert centered linear statistics of the k's.
LoopResult loop_residual(const SampleBatch& batch, const XiContext& ctx, const C1Fn& f, int order,
                         const std::vector<C1Fn>& k_list = {});

}  // namespace loggas
