#include "loggas/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loggas/xi.hpp"

namespace loggas {

using nlohmann::json;

// ----------------------------------------------------------------- models

LogGasModel LogGasModel::unconstrained(std::shared_ptr<const EquilibriumMeasure> mu, long N,
                                       double t) {
    if (N < 1) throw ArgumentError("LogGasModel: N must be positive");
    LogGasModel m;
    m.mu = std::move(mu);
    m.N = N;
    m.t = t;
    m.constrained = false;
    return m;
}

LogGasModel LogGasModel::with_counts(std::shared_ptr<const EquilibriumMeasure> mu,
                                     std::vector<long> counts, double t) {
    LogGasModel m;
    m.mu = std::move(mu);
    m.t = t;
    m.constrained = true;
    m.N = 0;
    for (long c : counts) {
        if (c <= 0) throw ArgumentError("LogGasModel: every N_h must be positive");
        m.N += c;
    }
    if (static_cast<int>(counts.size()) != m.mu->n_cuts())
        throw ArgumentError("LogGasModel: one count per cut required");
    m.counts = std::move(counts);
    return m;
}

LogGasModel LogGasModel::from_fractions(std::shared_ptr<const EquilibriumMeasure> mu, long N,
                                        const std::vector<double>& eps, double t) {
    if (static_cast<int>(eps.size()) != mu->n_cuts())
        throw ArgumentError("LogGasModel: one fraction per cut required");
    std::vector<long> counts(eps.size());
    long total = 0;
    for (std::size_t h = 0; h < eps.size(); ++h) {
        counts[h] = std::lround(N * eps[h]);
        total += counts[h];
    }
    std::size_t h = 0;
    while (total != N) {  // largest-remainder patch
        counts[h % eps.size()] += (total < N) ? 1 : -1;
        total += (total < N) ? 1 : -1;
        ++h;
    }
    return with_counts(std::move(mu), std::move(counts), t);
}

namespace {

// One-body weight phi with its multiplier; per-component Chebyshev series so
// the chain and the reference density evaluate through identical code.
struct PhiTable {
    FuncOnB phi;
    long n_weight = 0;
};

PhiTable make_phi(const LogGasModel& model) {
    const auto& mu = *model.mu;
    const auto& geo = mu.geometry;
    const int n = std::max(32, mu.nodes_per_cut());
    std::vector<cheb::Grid> grids;
    std::vector<std::vector<double>> vals;
    for (int h = 0; h < geo.n_cuts(); ++h) {
        grids.emplace_back(geo.B[h].a, geo.B[h].b, n);
        std::vector<double> v(n);
        for (int j = 0; j < n; ++j) {
            double x = grids[h].x[j];
            double V = mu.potential(x);
            if (model.t == 0.0) {
                v[j] = V;
            } else {
                double Vt = V - mu.beta() * mu.log_potential_excluding(h, x);
                v[j] = (1.0 - model.t) * V + model.t * Vt;
            }
        }
        vals.push_back(std::move(v));
    }
    return PhiTable{FuncOnB(std::move(grids), std::move(vals)), model.N};
}

double pair_coeff(const LogGasModel& model, int ca, int cb) {
    return (ca == cb) ? model.mu->beta() : model.mu->beta() * (1.0 - model.t);
}

}  // namespace

double loggas_log_density(const LogGasModel& model, const std::vector<double>& flat,
                          const std::vector<int>& comp) {
    auto tab = make_phi(model);
    const int N = static_cast<int>(flat.size());
    double acc = 0;
    for (int a = 0; a < N; ++a) {
        for (int b = a + 1; b < N; ++b)
            acc += pair_coeff(model, comp[a], comp[b]) * std::log(std::abs(flat[a] - flat[b]));
        acc -= static_cast<double>(tab.n_weight) * tab.phi.eval(flat[a]);
    }
    return acc;
}

double loggas_delta(const LogGasModel& model, const std::vector<double>& flat,
                    const std::vector<int>& comp, int particle, double newx, int newcomp) {
    auto tab = make_phi(model);
    const int N = static_cast<int>(flat.size());
    double acc = 0;
    for (int b = 0; b < N; ++b) {
        if (b == particle) continue;
        acc += pair_coeff(model, newcomp, comp[b]) * std::log(std::abs(newx - flat[b]));
        acc -= pair_coeff(model, comp[particle], comp[b]) *
               std::log(std::abs(flat[particle] - flat[b]));
    }
    acc -= static_cast<double>(tab.n_weight) * (tab.phi.eval(newx) - tab.phi.eval(flat[particle]));
    return acc;
}

// ------------------------------------------------------------------ chains

namespace {

struct ChainOutput {
    std::vector<double> rows;  // n_collect x N, each row globally sorted
    double acceptance = 0;
    double teleport_acceptance = -1;
    long sweeps = 0;
    int thin = 1;
    double tau = 0;
    bool warn = false;
};

double integrated_autocorr(const std::vector<double>& series) {
    const int L = static_cast<int>(series.size());
    if (L < 8) return 1.0;
    double mean = std::accumulate(series.begin(), series.end(), 0.0) / L;
    double var = 0;
    for (double v : series) var += (v - mean) * (v - mean);
    var /= L;
    if (var <= 0) return 1.0;
    double tau = 1.0;
    for (int k = 1; k < std::min(L / 3, 200); ++k) {
        double c = 0;
        for (int i = 0; i + k < L; ++i) c += (series[i] - mean) * (series[i + k] - mean);
        c /= (L - k) * var;
        if (c < 0.0) break;
        tau += 2.0 * c;
    }
    return tau;
}

ChainOutput run_chain(const LogGasModel& model, const PhiTable& tab, long n_collect, Rng rng,
                      const SampleOptions& opt) {
    const auto& mu = *model.mu;
    const auto& geo = mu.geometry;
    const int g1 = geo.n_cuts();
    const long N = model.N;
    const double nw = static_cast<double>(tab.n_weight);

    // start from the classical locations
    std::vector<double> x;
    std::vector<int> comp;
    if (model.constrained) {
        std::vector<double> cum(g1 + 1, 0.0);
        for (int h = 0; h < g1; ++h) cum[h + 1] = cum[h] + mu.mass(h);
        for (int h = 0; h < g1; ++h) {
            for (long i = 1; i <= model.counts[h]; ++i) {
                double q = cum[h] + mu.mass(h) * (i - 0.5) / model.counts[h];
                x.push_back(mu.quantile(q));
                comp.push_back(h);
            }
        }
    } else {
        for (long i = 1; i <= N; ++i) {
            double p = mu.quantile((i - 0.5) / static_cast<double>(N));
            x.push_back(p);
            comp.push_back(geo.b_index(p));
        }
    }

    double total_B_len = 0;
    std::vector<double> b_cum(g1 + 1, 0.0);
    for (int h = 0; h < g1; ++h) {
        total_B_len += geo.B[h].length();
        b_cum[h + 1] = b_cum[h] + geo.B[h].length();
    }

    std::vector<double> scale(g1);
    for (int h = 0; h < g1; ++h)
        scale[h] = geo.cuts[h].length() / std::sqrt(static_cast<double>(N));

    const long burn = std::max<long>(opt.n_sweeps / 4, 8);
    std::vector<long> acc_cnt(g1, 0), try_cnt(g1, 0);
    long tel_acc = 0, tel_try = 0;
    long post_acc = 0, post_try = 0;
    std::vector<double> pilot;

    auto pair_delta = [&](int a, double y, int cy) {
        double d = 0;
        for (long b = 0; b < N; ++b) {
            if (b == a) continue;
            double dy = std::abs(y - x[b]);
            if (dy < 1e-14) return -std::numeric_limits<double>::infinity();
            d += pair_coeff(model, cy, comp[b]) * std::log(dy);
            d -= pair_coeff(model, comp[a], comp[b]) * std::log(std::abs(x[a] - x[b]));
        }
        d -= nw * (tab.phi.eval(y) - tab.phi.eval(x[a]));
        return d;
    };

    auto sweep = [&](bool adapting, bool counting) {
        for (long a = 0; a < N; ++a) {
            bool teleport = !model.constrained && rng.uniform01() < opt.teleport_prob;
            double y;
            int cy;
            if (teleport) {
                double u = rng.uniform01() * total_B_len;
                int h = 0;
                while (h < g1 - 1 && u > b_cum[h + 1]) ++h;
                y = geo.B[h].a + (u - b_cum[h]);
                cy = h;
            } else {
                y = x[a] + scale[comp[a]] * rng.normal();
                if (model.constrained) {
                    cy = comp[a];
                    if (!geo.B[cy].contains(y)) continue;  // indicator rejection
                } else {
                    cy = geo.b_index(y);
                    if (cy < 0) continue;
                }
            }
            double d = pair_delta(static_cast<int>(a), y, cy);
            bool accept = d >= 0.0 || rng.uniform01() < std::exp(d);
            if (teleport) {
                ++tel_try;
                tel_acc += accept ? 1 : 0;
            } else {
                ++try_cnt[comp[a]];
                acc_cnt[comp[a]] += accept ? 1 : 0;
                if (counting) {
                    ++post_try;
                    post_acc += accept ? 1 : 0;
                }
            }
            if (accept) {
                x[a] = y;
                comp[a] = cy;
            }
        }
        if (adapting) {
            for (int h = 0; h < g1; ++h) {
                if (try_cnt[h] >= 40) {
                    double rate = static_cast<double>(acc_cnt[h]) / try_cnt[h];
                    scale[h] *= std::exp(0.6 * (rate - 0.3));
                    acc_cnt[h] = 0;
                    try_cnt[h] = 0;
                }
            }
        }
    };

    ChainOutput out;
    const double center = mu.quantile(0.5);  // shift-equivariant pilot reference
    for (long s = 0; s < burn; ++s) {
        sweep(true, false);
        if (s >= burn / 2) {
            double o = 0;
            for (double v : x) o += (v - center) * (v - center);
            pilot.push_back(o);
        }
        ++out.sweeps;
    }
    out.tau = integrated_autocorr(pilot);
    out.thin = std::clamp(static_cast<int>(std::ceil(out.tau)), 1, opt.max_thin);

    std::vector<double> sorted(N);
    for (long i = 0; i < n_collect; ++i) {
        for (int s = 0; s < out.thin; ++s) {
            sweep(false, true);
            ++out.sweeps;
        }
        sorted = x;
        std::sort(sorted.begin(), sorted.end());
        out.rows.insert(out.rows.end(), sorted.begin(), sorted.end());
    }
    out.acceptance = post_try > 0 ? static_cast<double>(post_acc) / post_try : 0.0;
    out.teleport_acceptance =
        model.constrained ? -1.0 : (tel_try > 0 ? static_cast<double>(tel_acc) / tel_try : 0.0);
    out.warn = out.acceptance < 0.1 || out.acceptance > 0.7;
    return out;
}

}  // namespace

SampleBatch sample_loggas(const LogGasModel& model, long n_samples, uint64_t seed,
                          const SampleOptions& opt) {
    if (n_samples < 1) throw ArgumentError("sample_loggas: n_samples must be positive");
    if (!model.mu || !model.mu->finalized()) throw ArgumentError("sample_loggas: invalid measure");
    if (!model.mu->potential.confinement_check())
        throw ArgumentError("sample_loggas: potential fails the confinement hypothesis");
    if (model.constrained) {
        for (long c : model.counts)
            if (c == 0) throw ArgumentError("sample_loggas: N_h = 0 for some cut");
    }

    auto tab = make_phi(model);
    const int n_chains = static_cast<int>(std::min<long>(opt.n_chains, n_samples));
    std::vector<long> per_chain(n_chains, n_samples / n_chains);
    for (int c = 0; c < static_cast<int>(n_samples % n_chains); ++c) ++per_chain[c];

    std::vector<ChainOutput> outs(n_chains);
    parallel_for(n_chains, [&](std::size_t c) {
        outs[c] = run_chain(model, tab, per_chain[c], Rng(seed, c), opt);
    });

    SampleBatch batch;
    batch.model_id = model.constrained ? "loggas_constrained" : "loggas_free";
    batch.beta = model.mu->beta();
    batch.t = model.t;
    batch.N = model.N;
    batch.n_samples = n_samples;
    batch.seed = seed;
    batch.constrained = model.constrained;
    batch.counts = model.counts;
    batch.data.reserve(static_cast<std::size_t>(n_samples) * model.N);
    for (const auto& o : outs) batch.data.insert(batch.data.end(), o.rows.begin(), o.rows.end());

    double acc = 0, tel = 0;
    bool warn = false;
    for (const auto& o : outs) {
        acc += o.acceptance;
        tel += o.teleport_acceptance;
        warn = warn || o.warn;
        batch.diag.sweeps += o.sweeps;
    }
    batch.diag.acceptance = acc / n_chains;
    batch.diag.teleport_acceptance = model.constrained ? -1.0 : tel / n_chains;
    batch.diag.thin = outs[0].thin;
    batch.diag.tau = outs[0].tau;
    batch.diag.tuning_warning = warn;

    // constrained invariance: no stored configuration violates its indicator
    if (model.constrained) {
        const auto& geo = model.mu->geometry;
        for (long i = 0; i < n_samples; ++i) {
            const double* cfg = batch.config(i);
            long idx = 0;
            for (int h = 0; h < geo.n_cuts(); ++h)
                for (long j = 0; j < model.counts[h]; ++j, ++idx)
                    if (!geo.B[h].contains(cfg[idx]))
                        throw SolverError("sample_loggas: configuration violates its B_h indicator");
        }
    }
    return batch;
}

SampleBatch sample_product_t1(std::shared_ptr<const EquilibriumMeasure> mu,
                              const std::vector<long>& counts, long n_samples, uint64_t seed,
                              const SampleOptions& opt) {
    if (static_cast<int>(counts.size()) != mu->n_cuts())
        throw ArgumentError("sample_product_t1: one count per cut required");
    long N = 0;
    for (long c : counts) {
        if (c <= 0) throw ArgumentError("sample_product_t1: N_h = 0 for some cut");
        N += c;
    }
    const int g1 = mu->n_cuts();

    // each cut is an independent one-cut log-gas with weight exp(-N V~)
    std::vector<SampleBatch> parts(g1);
    parallel_for(g1, [&](std::size_t h) {
        auto sub = std::make_shared<EquilibriumMeasure>(mu->restrict_cut(static_cast<int>(h)));
        LogGasModel m;
        m.mu = sub;
        m.t = 0.0;
        m.constrained = true;
        m.counts = {counts[h]};
        m.N = counts[h];
        PhiTable tab;
        {
            const int n = std::max(32, mu->nodes_per_cut());
            cheb::Grid grid(sub->geometry.B[0].a, sub->geometry.B[0].b, n);
            std::vector<double> v(n);
            for (int j = 0; j < n; ++j) {
                double xx = grid.x[j];
                v[j] = mu->potential(xx) -
                       mu->beta() * mu->log_potential_excluding(static_cast<int>(h), xx);
            }
            tab.phi = FuncOnB({grid}, {v});
            tab.n_weight = N;
        }
        const int n_chains = static_cast<int>(std::min<long>(opt.n_chains, n_samples));
        std::vector<long> per_chain(n_chains, n_samples / n_chains);
        for (int c = 0; c < static_cast<int>(n_samples % n_chains); ++c) ++per_chain[c];
        std::vector<ChainOutput> outs(n_chains);
        for (int c = 0; c < n_chains; ++c)
            outs[c] = run_chain(m, tab, per_chain[c], Rng(seed, (h + 1) * 1000 + c), opt);
        SampleBatch b;
        b.N = counts[h];
        b.n_samples = n_samples;
        for (const auto& o : outs) {
            b.data.insert(b.data.end(), o.rows.begin(), o.rows.end());
            b.diag.sweeps += o.sweeps;
        }
        b.diag.acceptance = outs[0].acceptance;
        b.diag.thin = outs[0].thin;
        b.diag.tau = outs[0].tau;
        parts[h] = std::move(b);
    });

    SampleBatch batch;
    batch.model_id = "product_t1";
    batch.beta = mu->beta();
    batch.t = 1.0;
    batch.N = N;
    batch.n_samples = n_samples;
    batch.seed = seed;
    batch.constrained = true;
    batch.counts = counts;
    batch.data.resize(static_cast<std::size_t>(n_samples) * N);
    for (long i = 0; i < n_samples; ++i) {
        long off = 0;
        for (int h = 0; h < g1; ++h) {
            const double* src = parts[h].config(i);
            std::copy(src, src + counts[h], batch.data.begin() + i * N + off);
            off += counts[h];
        }
    }
    double acc = 0;
    for (int h = 0; h < g1; ++h) {
        acc += parts[h].diag.acceptance;
        batch.diag.sweeps += parts[h].diag.sweeps;
    }
    batch.diag.acceptance = acc / g1;
    batch.diag.thin = parts[0].diag.thin;
    batch.diag.tau = parts[0].diag.tau;
    return batch;
}

SampleBatch sample_gaussian_tridiagonal(double beta, long N, long n_samples, uint64_t seed) {
    if (beta <= 0) throw ArgumentError("sample_gaussian_tridiagonal: beta must be positive");
    if (N < 1 || n_samples < 1)
        throw ArgumentError("sample_gaussian_tridiagonal: N and n_samples must be positive");
    SampleBatch batch;
    batch.model_id = "gaussian_tridiagonal";
    batch.beta = beta;
    batch.N = N;
    batch.n_samples = n_samples;
    batch.seed = seed;
    batch.constrained = false;
    batch.data.assign(static_cast<std::size_t>(n_samples) * N, 0.0);

    const double scale = std::sqrt(2.0 / (beta * static_cast<double>(N)));
    parallel_for(n_samples, [&](std::size_t i) {
        Rng rng(seed, i);
        std::vector<double> d(N), e(N > 1 ? N - 1 : 0);
        for (long j = 0; j < N; ++j) d[j] = rng.normal();
        for (long j = 0; j + 1 < N; ++j) e[j] = rng.chi(beta * (N - 1 - j)) / std::sqrt(2.0);
        auto ev = tridiag_eigenvalues(std::move(d), std::move(e));
        for (long j = 0; j < N; ++j) batch.data[i * N + j] = ev[j] * scale;
    });
    batch.diag.acceptance = 1.0;
    return batch;
}

// --------------------------------------------------------------------- io

json SampleBatch::descriptor() const {
    json j;
    j["model"] = model_id;
    j["beta"] = beta;
    j["t"] = t;
    j["N"] = N;
    j["n_samples"] = n_samples;
    j["seed"] = seed;
    j["constrained"] = constrained;
    j["counts"] = counts;
    json d;
    d["acceptance"] = diag.acceptance;
    d["teleport_acceptance"] = diag.teleport_acceptance;
    d["sweeps"] = diag.sweeps;
    d["thin"] = diag.thin;
    d["tau"] = diag.tau;
    d["tuning_warning"] = diag.tuning_warning;
    j["diagnostics"] = d;
    return j;
}

std::vector<std::vector<double>> SampleBatch::config_by_cut(long i,
                                                            const SupportGeometry& geo) const {
    std::vector<std::vector<double>> out(geo.n_cuts());
    const double* cfg = config(i);
    if (constrained && !counts.empty()) {
        long idx = 0;
        for (int h = 0; h < geo.n_cuts(); ++h)
            for (long j = 0; j < counts[h]; ++j) out[h].push_back(cfg[idx++]);
        return out;
    }
    for (long j = 0; j < N; ++j) {
        int h = geo.u_index(cfg[j]);
        if (h < 0) throw DataError("config_by_cut: particle outside every U_h");
        out[h].push_back(cfg[j]);
    }
    return out;
}

void SampleBatch::save(const std::string& path) const {
    std::string header = descriptor().dump();
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw DataError("SampleBatch::save: cannot open " + tmp);
        os.write("LGB1", 4);
        uint64_t hlen = header.size();
        os.write(reinterpret_cast<const char*>(&hlen), 8);
        os.write(header.data(), static_cast<std::streamsize>(hlen));
        os.write(reinterpret_cast<const char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    std::filesystem::rename(tmp, path);
}

SampleBatch SampleBatch::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("SampleBatch::load: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "LGB1", 4) != 0)
        throw DataError("SampleBatch::load: bad magic in " + path);
    uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), 8);
    std::string header(hlen, '\0');
    is.read(header.data(), static_cast<std::streamsize>(hlen));
    json j = json::parse(header);
    SampleBatch b;
    b.model_id = j.at("model").get<std::string>();
    b.beta = j.at("beta").get<double>();
    b.t = j.at("t").get<double>();
    b.N = j.at("N").get<long>();
    b.n_samples = j.at("n_samples").get<long>();
    b.seed = j.at("seed").get<uint64_t>();
    b.constrained = j.at("constrained").get<bool>();
    b.counts = j.at("counts").get<std::vector<long>>();
    const auto& d = j.at("diagnostics");
    b.diag.acceptance = d.at("acceptance").get<double>();
    b.diag.teleport_acceptance = d.at("teleport_acceptance").get<double>();
    b.diag.sweeps = d.at("sweeps").get<long>();
    b.diag.thin = d.at("thin").get<int>();
    b.diag.tau = d.at("tau").get<double>();
    b.diag.tuning_warning = d.at("tuning_warning").get<bool>();
    b.data.resize(static_cast<std::size_t>(b.N) * b.n_samples);
    is.read(reinterpret_cast<char*>(b.data.data()),
            static_cast<std::streamsize>(b.data.size() * sizeof(double)));
    if (!is) throw DataError("SampleBatch::load: truncated payload in " + path);
    return b;
}

void SampleBatch::write_csv(std::ostream& os) const {
    os.precision(17);
    for (long i = 0; i < n_samples; ++i) {
        const double* cfg = config(i);
        for (long j = 0; j < N; ++j) os << cfg[j] << (j + 1 < N ? ',' : '\n');
    }
}

SampleBatch gaussian_reference(double beta, long N, long n_samples, uint64_t seed,
                               const std::string& cache_dir) {
    std::ostringstream name;
    name << "gauss_b" << beta << "_N" << N << "_n" << n_samples << "_s" << seed << ".lgb";
    std::filesystem::path p = std::filesystem::path(cache_dir) / name.str();
    if (std::filesystem::exists(p)) return SampleBatch::load(p.string());
    auto batch = sample_gaussian_tridiagonal(beta, N, n_samples, seed);
    std::filesystem::create_directories(cache_dir);
    batch.save(p.string());
    return batch;
}

}  // namespace loggas
