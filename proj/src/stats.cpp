#include "loggas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

namespace loggas {

using nlohmann::json;

// -------------------------------------------------------------------- KS

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("ks_two_sample: empty input");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw ArgumentError("ks_one_sample: empty input");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double F = cdf(sample[i]);
        d = std::max(d, std::abs((i + 1) / n - F));
        d = std::max(d, std::abs(F - i / n));
    }
    return d;
}

namespace {
double ks_c(double alpha) {
    // K^{-1}(1-alpha) for the Kolmogorov distribution at the usual levels
    if (alpha == 0.01) return 1.6276;
    if (alpha == 0.05) return 1.3581;
    if (alpha == 0.10) return 1.2238;
    // inverse by bisection on K(c) = 1 - alpha
    auto K = [](double c) {
        double s = 0;
        for (int k = 1; k <= 100; ++k)
            s += (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * c * c);
        return 1.0 - 2.0 * s;
    };
    double lo = 0.3, hi = 3.0;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (K(mid) < 1.0 - alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
}  // namespace

double ks_two_sample_critical(double alpha, long n, long m) {
    return ks_c(alpha) * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

double ks_one_sample_critical(double alpha, long n) {
    return ks_c(alpha) / std::sqrt(static_cast<double>(n));
}

// ------------------------------------------------------------------- gaps

GapReport bulk_gaps(const SampleBatch& batch, const EquilibriumMeasure& mu, int h, long i_rel,
                    int m, const SampleBatch* reference, const MonotoneMap* map,
                    double bulk_margin) {
    const auto& geo = mu.geometry;
    if (h < 0 || h >= geo.n_cuts()) throw ArgumentError("bulk_gaps: bad cut index");
    if (m < 1) throw ArgumentError("bulk_gaps: m must be positive");
    const long N = batch.N;

    // bulk window of the per-cut index, enforced with the default margin
    double lower = bulk_margin * N;
    double upper = static_cast<double>(N) * mu.eps[h] - bulk_margin * N;
    if (!(i_rel > lower))
        throw ArgumentError("bulk_gaps: index violates eps*N < i - [N*]_{h-1}");
    if (!(i_rel + m < upper))
        throw ArgumentError("bulk_gaps: index violates i - [N*]_{h-1} < N*_h - eps*N");

    GapReport rep;
    rep.cut = h;
    rep.i_rel = i_rel;
    rep.m = m;

    // global index base: particles in the cuts left of h
    for (long c = 0; c < batch.n_samples; ++c) {
        auto cfg = batch.config_by_cut(c, geo);
        long base = 0;
        for (int hh = 0; hh < h; ++hh) base += static_cast<long>(cfg[hh].size());
        const auto& cut_cfg = cfg[h];
        if (i_rel + m > static_cast<long>(cut_cfg.size()))
            throw ArgumentError("bulk_gaps: index beyond the cut population");
        for (int k = 0; k < m; ++k) {
            long i_global = base + i_rel + k;  // 1-based
            double E = mu.classical_location(i_global, N);
            double gap = cut_cfg[i_rel + k] - cut_cfg[i_rel + k - 1];
            rep.rescaled.push_back(static_cast<double>(N) * mu.density(E) * gap);
        }
    }
    double mean = std::accumulate(rep.rescaled.begin(), rep.rescaled.end(), 0.0) /
                  rep.rescaled.size();
    double var = 0;
    for (double v : rep.rescaled) var += (v - mean) * (v - mean);
    rep.mean = mean;
    rep.variance = var / std::max<std::size_t>(rep.rescaled.size() - 1, 1);

    if (reference != nullptr) {
        if (map == nullptr) throw ArgumentError("bulk_gaps: reference requires a transport map");
        if (!batch.constrained && geo.n_cuts() > 1)
            throw ArgumentError("bulk_gaps: reference comparison needs a constrained batch");
        // Same units as the sample side: the map-derivative rescaling of the
        // Gaussian gaps carries the (deterministic) density factor at the
        // classical location, putting both sides on the unit-mean scale.
        long base = 0;
        for (int hh = 0; hh < h; ++hh) base += batch.counts[hh];
        double dens = mu.density(mu.classical_location(base + i_rel, N));
        for (long c = 0; c < reference->n_samples; ++c) {
            const double* cfg = reference->config(c);
            if (i_rel + m > reference->N)
                throw ArgumentError("bulk_gaps: reference batch too small");
            double factor = static_cast<double>(N) * dens * map->deriv(cfg[i_rel - 1]);
            for (int k = 0; k < m; ++k)
                rep.reference.push_back(factor * (cfg[i_rel + k] - cfg[i_rel + k - 1]));
        }
        // compare the first-gap marginals
        std::vector<double> s, r;
        for (std::size_t i = 0; i < rep.rescaled.size(); i += m) s.push_back(rep.rescaled[i]);
        for (std::size_t i = 0; i < rep.reference.size(); i += m) r.push_back(rep.reference[i]);
        rep.ks = ks_two_sample(s, r);
    }
    return rep;
}

EdgeReport edge_rescale(const SampleBatch& batch, const EquilibriumMeasure& mu, int h, int m,
                        const SampleBatch* reference, const MonotoneMap* map) {
    const auto& geo = mu.geometry;
    if (h < 0 || h >= geo.n_cuts()) throw ArgumentError("edge_rescale: bad cut index");
    EdgeReport rep;
    rep.cut = h;
    rep.m = m;
    rep.edge = geo.cuts[h].a;
    const double n23 = std::pow(static_cast<double>(batch.N), 2.0 / 3.0);
    for (long c = 0; c < batch.n_samples; ++c) {
        auto cfg = batch.config_by_cut(c, geo);
        if (m > static_cast<long>(cfg[h].size()))
            throw ArgumentError("edge_rescale: m exceeds the cut population");
        double prev = -1e300;
        for (int k = 0; k < m; ++k) {
            double v = n23 * (cfg[h][k] - rep.edge);
            if (v < prev) throw DataError("edge_rescale: rescaled values not nondecreasing");
            prev = v;
            rep.rescaled.push_back(v);
        }
    }
    if (map != nullptr) {
        rep.phi_at_edge = map->eval(-2.0);
        rep.phi_prime = map->deriv(-2.0);
    }
    if (reference != nullptr) {
        if (map == nullptr) throw ArgumentError("edge_rescale: reference requires a transport map");
        for (long c = 0; c < reference->n_samples; ++c) {
            const double* cfg = reference->config(c);
            for (int k = 0; k < m && k < reference->N; ++k)
                rep.reference.push_back(rep.phi_prime * n23 * (cfg[k] + 2.0));
        }
        std::vector<double> s, r;
        for (std::size_t i = 0; i < rep.rescaled.size(); i += m) s.push_back(rep.rescaled[i]);
        for (std::size_t i = 0; i < rep.reference.size(); i += m) r.push_back(rep.reference[i]);
        rep.ks = ks_two_sample(s, r);
    }
    return rep;
}

// ---------------------------------------------------------------- filling

FillingReport filling_counts(const SampleBatch& batch, const EquilibriumMeasure& mu) {
    if (batch.constrained)
        throw ArgumentError("filling_counts: requires an unconstrained batch");
    const auto& geo = mu.geometry;
    const int g1 = geo.n_cuts();
    FillingReport rep;
    for (int h = 0; h < g1; ++h) {
        double ns = batch.N * mu.eps[h];
        rep.floor_nstar.push_back(stable_floor(ns));
        rep.nstar_mod1.push_back(ns - std::floor(ns));
    }
    rep.xi.assign(g1, {});
    rep.boundary_rescaled.assign(g1, {});
    const double n23 = std::pow(static_cast<double>(batch.N), 2.0 / 3.0);

    std::vector<long> tail_cnt(4, 0);
    for (long c = 0; c < batch.n_samples; ++c) {
        auto cfg = batch.config_by_cut(c, geo);  // throws DataError outside U
        std::vector<long> counts(g1);
        long total = 0;
        for (int h = 0; h < g1; ++h) {
            counts[h] = static_cast<long>(cfg[h].size());
            total += counts[h];
        }
        if (total != batch.N) throw DataError("filling_counts: counts do not sum to N");
        rep.counts.push_back(counts);
        long dev = 0;
        for (int h = 0; h < g1; ++h) dev = std::max(dev, std::labs(counts[h] - rep.floor_nstar[h]));
        for (int K = 1; K <= 3; ++K)
            if (dev >= K) ++tail_cnt[K];

        // boundary eigenvalue classification per cut
        const double* flat = batch.config(c);
        long cum_floor = 0, cum_counts = 0;
        for (int h = 0; h < g1; ++h) {
            // Delta_h uses the partial sums through h-1
            long delta = cum_floor - cum_counts;
            double xi_h = (h == 0 || delta >= 0) ? geo.cuts[h].a : geo.cuts[h - 1].b;
            rep.xi[h].push_back(xi_h);
            long i_global = cum_floor + 1;  // 1-based
            if (i_global >= 1 && i_global <= batch.N)
                rep.boundary_rescaled[h].push_back(n23 * (flat[i_global - 1] - xi_h));
            cum_floor += rep.floor_nstar[h];
            cum_counts += counts[h];
        }
    }
    for (int K = 1; K <= 3; ++K)
        rep.tail.push_back(static_cast<double>(tail_cnt[K]) / batch.n_samples);
    return rep;
}

// ------------------------------------------------------------------- loops

LoopResult loop_residual(const SampleBatch& batch, const XiContext& ctx, const C1Fn& f, int order,
                         const std::vector<C1Fn>& k_list) {
    const auto& mu = ctx.mu();
    const auto& geo = mu.geometry;
    if (order < 1 || order > 3) throw ArgumentError("loop_residual: order must be 1, 2 or 3");
    // insertion counts per identity: none, one, three
    const int need_k = order == 1 ? 0 : (order == 2 ? 1 : 3);
    if (static_cast<int>(k_list.size()) != need_k)
        throw ArgumentError("loop_residual: order " + std::to_string(order) + " needs " +
                            std::to_string(need_k) + " insertion functions");
    for (int h = 0; h < geo.n_cuts(); ++h) {
        if (std::abs(f.f(geo.B[h].a)) > 1e-12 || std::abs(f.f(geo.B[h].b)) > 1e-12)
            throw PreconditionError("loop_residual: f must vanish at every B boundary");
    }
    const long n = batch.n_samples;
    const long N = batch.N;
    const double beta = mu.beta();
    const int nk = need_k;

    // int Xi f dmu (vanishes for the exact equilibrium measure; keep the
    // computed value so the estimator is self-consistent)
    double int_xif = 0;
    for (const auto& q : mu.quad()) int_xif += q.w * apply_xi_at(ctx, f, q.x);

    // centered linear statistics need the batch means first
    std::vector<std::vector<double>> ksum(nk, std::vector<double>(n, 0.0));
    for (int kk = 0; kk < nk; ++kk) {
        for (long c = 0; c < n; ++c) {
            const double* cfg = batch.config(c);
            double s = 0;
            for (long a = 0; a < N; ++a) s += k_list[kk].f(cfg[a]);
            ksum[kk][c] = s;
        }
    }
    std::vector<double> kmean(nk, 0.0);
    for (int kk = 0; kk < nk; ++kk)
        kmean[kk] = std::accumulate(ksum[kk].begin(), ksum[kk].end(), 0.0) / n;

    std::vector<double> A(n, 0.0);
    parallel_for(n, [&](std::size_t c) {
        const double* cfg = batch.config(c);
        std::vector<double> fx(N), dfx(N), xif(N);
        for (long a = 0; a < N; ++a) {
            fx[a] = f.f(cfg[a]);
            dfx[a] = f.df(cfg[a]);
            xif[a] = apply_xi_at(ctx, f, cfg[a]);
        }
        // sum_{a,b} g(a,b) with the coincidence diagonal of the difference
        // quotient replaced by f'
        double sum_g = 0;
        for (long a = 0; a < N; ++a) {
            double xa = cfg[a];
            for (long b = 0; b < N; ++b) {
                double dq = (a == b) ? dfx[a] : (fx[a] - fx[b]) / (xa - cfg[b]);
                sum_g += 0.5 * beta * dq + ctx.d1T(xa, cfg[b]) * fx[a];
            }
        }
        double sum_xif = 0, sum_df = 0;
        for (long a = 0; a < N; ++a) {
            sum_xif += xif[a];
            sum_df += dfx[a];
        }
        const double Nd = static_cast<double>(N);
        // int int g dmu dmu = (1/2) int Xi f dmu
        double DD = sum_g - Nd * sum_xif + Nd * Nd * 0.5 * int_xif;
        double core = (sum_xif - Nd * int_xif) + (1.0 - beta / 2.0) * (sum_df / Nd) + DD / Nd;
        if (order == 1) {
            A[c] = core;
            return;
        }
        if (order == 2) {
            double lfk = 0;
            for (long a = 0; a < N; ++a) lfk += fx[a] * k_list[0].df(cfg[a]);
            lfk /= N;
            A[c] = lfk + core * (ksum[0][c] - kmean[0]);
            return;
        }
        // order 3: one L_N(f k') factor paired with the centered statistics
        // of the other two insertions, over the three distinct pairings (the
        // disconnected cumulant pieces cancel through the order-2 identity)
        double mt[3], lfk[3];
        for (int kk = 0; kk < 3; ++kk) {
            mt[kk] = ksum[kk][c] - kmean[kk];
            double s = 0;
            for (long a = 0; a < N; ++a) s += fx[a] * k_list[kk].df(cfg[a]);
            lfk[kk] = s / N;
        }
        double sym = 0;
        for (int p = 0; p < 3; ++p) sym += lfk[p] * mt[(p + 1) % 3] * mt[(p + 2) % 3];
        A[c] = sym + core * mt[0] * mt[1] * mt[2];
    });

    LoopResult res;
    res.n = n;
    res.residual = std::accumulate(A.begin(), A.end(), 0.0) / n;
    double var = 0;
    for (double v : A) var += (v - res.residual) * (v - res.residual);
    var /= std::max<long>(n - 1, 1);
    res.se = std::sqrt(var / n);
    return res;
}

// -------------------------------------------------------------------- json

json GapReport::to_json() const {
    json j;
    j["cut"] = cut;
    j["i_rel"] = i_rel;
    j["m"] = m;
    j["mean"] = mean;
    j["variance"] = variance;
    j["ks"] = ks;
    j["rescaled"] = rescaled;
    j["reference"] = reference;
    if (!rescaled.empty()) {
        const int nb = 40;
        double lo = *std::min_element(rescaled.begin(), rescaled.end());
        double hi = *std::max_element(rescaled.begin(), rescaled.end());
        if (hi <= lo) hi = lo + 1.0;
        std::vector<long> bins(nb, 0);
        for (double v : rescaled) {
            int b = static_cast<int>((v - lo) / (hi - lo) * nb);
            ++bins[std::clamp(b, 0, nb - 1)];
        }
        j["histogram"] = {{"lo", lo}, {"hi", hi}, {"counts", bins}};
    }
    return j;
}

json EdgeReport::to_json() const {
    json j;
    j["cut"] = cut;
    j["m"] = m;
    j["edge"] = edge;
    j["phi_at_edge"] = phi_at_edge;
    j["phi_prime"] = phi_prime;
    j["ks"] = ks;
    j["rescaled"] = rescaled;
    j["reference"] = reference;
    return j;
}

json FillingReport::to_json() const {
    json j;
    j["floor_nstar"] = floor_nstar;
    j["nstar_mod1"] = nstar_mod1;
    j["tail"] = tail;
    // centered pmf of the first-cut count deviation
    if (!counts.empty()) {
        std::map<long, long> freq;
        for (const auto& c : counts) ++freq[c[0] - floor_nstar[0]];
        json pmf = json::object();
        for (const auto& [k, v] : freq)
            pmf[std::to_string(k)] = static_cast<double>(v) / counts.size();
        j["pmf"] = pmf;
    }
    j["counts"] = counts;
    j["xi"] = xi;
    j["boundary_rescaled"] = boundary_rescaled;
    return j;
}

json LoopResult::to_json() const {
    json j;
    j["residual"] = residual;
    j["se"] = se;
    j["n"] = n;
    return j;
}

}  // namespace loggas
