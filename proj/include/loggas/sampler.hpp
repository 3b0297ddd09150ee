#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loggas/equilibrium.hpp"
#include "loggas/rng.hpp"

namespace loggas {

std::vector<double> tridiag_eigenvalues(std::vector<double> diag, std::vector<double> sub);

struct SamplerDiagnostics {
    double acceptance = 0.0;          // post-adaptation, averaged over chains
    double teleport_acceptance = -1;  // unconstrained models only
    long sweeps = 0;
    int thin = 1;
    double tau = 0.0;  // integrated autocorrelation estimate (chain 0)
    bool tuning_warning = false;
};

// Seeded ensemble of sorted eigenvalue configurations. Same seed and
// descriptor reproduce the batch bit-for-bit, independent of thread count.
struct SampleBatch {
    nlohmann::json descriptor() const;
    std::string model_id;
    double beta = 2.0;
    double t = 0.0;
    long N = 0;
    long n_samples = 0;
    uint64_t seed = 0;
    bool constrained = false;
    std::vector<long> counts;       // per-cut counts when constrained
    std::vector<double> data;       // n_samples x N, globally sorted configs
    SamplerDiagnostics diag;

    const double* config(long i) const { return data.data() + i * N; }
    std::vector<std::vector<double>> config_by_cut(long i, const SupportGeometry& geo) const;

    void save(const std::string& path) const;
    static SampleBatch load(const std::string& path);
    void write_csv(std::ostream& os) const;
};

// Interpolated pair-potential log-gas on B: same-cut coupling beta, cross-cut
// coupling beta(1-t), one-body weight exp(-N[(1-t)V + t V~]).
struct LogGasModel {
    std::shared_ptr<const EquilibriumMeasure> mu;
    double t = 0.0;
    bool constrained = true;
    std::vector<long> counts;  // per-cut, constrained only
    long N = 0;

    static LogGasModel unconstrained(std::shared_ptr<const EquilibriumMeasure> mu, long N,
                                     double t = 0.0);
    static LogGasModel with_counts(std::shared_ptr<const EquilibriumMeasure> mu,
                                   std::vector<long> counts, double t = 0.0);
    // N_h = round(N eps_h) patched so the counts sum to N
    static LogGasModel from_fractions(std::shared_ptr<const EquilibriumMeasure> mu, long N,
                                      const std::vector<double>& eps, double t = 0.0);
};

// Full log-density (up to the normalizing constant) and the single-particle
// update difference used by the Metropolis kernel; exposed for the detailed
// balance check.
double loggas_log_density(const LogGasModel& model, const std::vector<double>& flat,
                          const std::vector<int>& comp);
double loggas_delta(const LogGasModel& model, const std::vector<double>& flat,
                    const std::vector<int>& comp, int particle, double newx, int newcomp);

struct SampleOptions {
    long n_sweeps = 2000;   // burn-in = n_sweeps/4
    int max_thin = 50;
    int n_chains = 8;       // capped by n_samples; fixed by descriptor, not hardware
    double teleport_prob = 0.1;
};

SampleBatch sample_loggas(const LogGasModel& model, long n_samples, uint64_t seed,
                          const SampleOptions& opt = {});

// Product measure at the decoupled end: each cut sampled independently as a
// one-cut log-gas with weight exp(-N V~), then concatenated.
SampleBatch sample_product_t1(std::shared_ptr<const EquilibriumMeasure> mu,
                              const std::vector<long>& counts, long n_samples, uint64_t seed,
                              const SampleOptions& opt = {});

// Gaussian reference: symmetric tridiagonal model with Gaussian diagonal and
// chi off-diagonal, scaled so the spectrum matches the quadratic-potential
// log-gas with support [-2,2].
SampleBatch sample_gaussian_tridiagonal(double beta, long N, long n_samples, uint64_t seed);

// Disk-cached Gaussian reference batches (creates the file on first use).
SampleBatch gaussian_reference(double beta, long N, long n_samples, uint64_t seed,
                               const std::string& cache_dir);

}  // namespace loggas
