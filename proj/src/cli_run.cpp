#include "loggas/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "loggas/sampler.hpp"
#include "loggas/stats.hpp"
#include "loggas/transport.hpp"

namespace loggas {

namespace {

using nlohmann::json;

std::string cache_dir() {
    const char* env = std::getenv("LOGGAS_CACHE_DIR");
    return env ? std::string(env) : std::string(".loggas_cache");
}

void write_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw DataError("cannot open " + tmp + " for writing");
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ArgumentError("input file does not exist: " + path);
    json j;
    is >> j;
    return j;
}

void require_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ArgumentError("input file does not exist: " + path);
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::shared_ptr<const EquilibriumMeasure> load_measure(const std::string& path) {
    return std::make_shared<EquilibriumMeasure>(EquilibriumMeasure::from_json(read_json(path)));
}

// Plateau-truncated polynomial used by loopcheck test functions.
C1Fn truncated_poly(const SupportGeometry& geo, std::vector<double> coeffs) {
    Plateau up(geo);
    auto val = [coeffs](double x) {
        double acc = 0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
        return acc;
    };
    auto der = [coeffs](double x) {
        double acc = 0;
        for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * x + coeffs[k] * k;
        return acc;
    };
    return C1Fn{[up, val](double x) {
                    double u = up.value(x);
                    return u == 0.0 ? 0.0 : u * val(x);
                },
                [up, val, der](double x) {
                    double u = up.value(x);
                    if (u == 0.0) return 0.0;
                    return u * der(x) + up.deriv(x) * val(x);
                }};
}

struct BandFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SampleBatch resolve_reference(const std::string& spec, double beta, long N, long n, uint64_t seed) {
    if (spec == "auto") return gaussian_reference(beta, N, n, seed, cache_dir());
    require_file(spec);
    return SampleBatch::load(spec);
}

int dispatch(std::vector<std::string> args);

// ------------------------------------------------------------- subcommands

int cmd_equilibrium(CLI::App& app, std::vector<std::string>& args) {
    std::string potential_path, out_path, eps_csv, init_csv;
    int cuts = 1, nodes = 64;
    app.add_option("--potential", potential_path, "potential JSON file")->required();
    app.add_option("--cuts", cuts, "number of support components")->required();
    app.add_option("--eps", eps_csv, "filling fractions e0,e1,...");
    app.add_option("--init", init_csv, "initial edge bracket a0,b0,a1,b1,...");
    app.add_option("--nodes", nodes, "Chebyshev nodes per cut");
    app.add_option("--out", out_path, "output measure file")->required();
    app.parse(args);
    require_file(potential_path);

    auto p = Potential::from_json(read_json(potential_path));
    std::optional<std::vector<double>> eps;
    if (!eps_csv.empty()) eps = parse_doubles(eps_csv);
    std::vector<Cut> init;
    if (!init_csv.empty()) {
        auto e = parse_doubles(init_csv);
        if (e.size() % 2 != 0) throw ArgumentError("--init needs an even number of edges");
        for (std::size_t i = 0; i + 1 < e.size(); i += 2) init.push_back(Cut{e[i], e[i + 1]});
    }
    SolveOptions opt;
    opt.n_nodes = nodes;
    auto mu = solve_equilibrium(p, eps, cuts, init, opt);

    json cfg;
    cfg["command"] = "equilibrium";
    cfg["potential"] = potential_path;
    cfg["cuts"] = cuts;
    cfg["eps"] = eps_csv;
    cfg["init"] = init_csv;
    cfg["nodes"] = nodes;
    json artifact = mu.to_json();
    artifact["_config"] = cfg;
    write_atomic(out_path, artifact.dump(2) + "\n");
    return 0;
}

int cmd_xi_invert(CLI::App& app, std::vector<std::string>& args) {
    std::string ctx_path, out_path, k_csv;
    double t = 0.0;
    int nodes = 256;
    app.add_option("--context", ctx_path, "measure file")->required();
    app.add_option("--k", k_csv, "polynomial coefficients c0,c1,...")->required();
    app.add_option("--t", t, "pair-potential interpolation parameter");
    app.add_option("--nodes", nodes, "contour nodes");
    app.add_option("--out", out_path, "output file")->required();
    app.parse(args);

    auto mu = load_measure(ctx_path);
    XiContext ctx(mu, t, nodes);
    auto res = invert_xi(ctx, poly_fn(parse_doubles(k_csv)));

    json cfg;
    cfg["command"] = "xi-invert";
    cfg["context"] = ctx_path;
    cfg["k"] = k_csv;
    cfg["t"] = t;
    cfg["nodes"] = nodes;
    json out;
    out["_config"] = cfg;
    out["kappa"] = res.kappa;
    out["residual"] = res.residual;
    json f = json::array();
    for (int h = 0; h < mu->n_cuts(); ++h) {
        json comp;
        const auto& g = res.f.grids()[h];
        comp["a"] = g.a;
        comp["b"] = g.b;
        std::vector<double> vals(g.n);
        for (int j = 0; j < g.n; ++j) vals[j] = res.f.eval(g.x[j]);
        comp["nodes"] = g.x;
        comp["values"] = vals;
        f.push_back(comp);
    }
    out["f"] = f;
    write_atomic(out_path, out.dump(2) + "\n");
    return 0;
}

int cmd_transport(CLI::App& app, std::vector<std::string>& args) {
    std::string measure_path, out_path;
    double t = 0.0;
    int t_steps = 32;
    app.add_option("--measure", measure_path, "measure file")->required();
    app.add_option("--t", t, "snapshot parameter recorded in the artifact");
    app.add_option("--t-steps", t_steps, "default RK4 steps for the flow");
    app.add_option("--out", out_path, "output field file")->required();
    app.parse(args);

    auto mu = load_measure(measure_path);
    XiContext ctx(mu, t);
    auto fs = build_field_schedule(ctx);

    json cfg;
    cfg["command"] = "transport";
    cfg["measure"] = measure_path;
    cfg["t"] = t;
    cfg["t_steps"] = t_steps;
    json artifact = fs.to_json();
    artifact["_config"] = cfg;
    write_atomic(out_path, artifact.dump() + "\n");
    return 0;
}

int cmd_sample(CLI::App& app, std::vector<std::string>& args) {
    std::string model_path, out_path, csv_path;
    long N = 0, n_samples = 0, n_sweeps = 2000;
    uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--model", model_path, "model JSON file")->required();
    app.add_option("--n", N, "particle count")->required();
    app.add_option("--samples", n_samples, "stored configurations")->required();
    app.add_option("--sweeps", n_sweeps, "sweep budget (burn-in = sweeps/4)");
    app.add_option("--seed", seed, "RNG seed")->required()->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_path, "output batch file")->required();
    app.add_option("--csv", csv_path, "optional CSV export");
    app.parse(args);
    if (!seed_set) throw ArgumentError("sample: --seed is mandatory");

    json mj = read_json(model_path);
    std::string type = mj.at("type").get<std::string>();
    SampleOptions opt;
    opt.n_sweeps = n_sweeps;
    SampleBatch batch;
    if (type == "gaussian_tridiagonal") {
        batch = sample_gaussian_tridiagonal(mj.at("beta").get<double>(), N, n_samples, seed);
    } else if (type == "loggas" || type == "product_t1") {
        std::string mpath = mj.at("measure").get<std::string>();
        // measure path is relative to the model file
        auto base = std::filesystem::path(model_path).parent_path();
        if (!std::filesystem::exists(mpath) && std::filesystem::exists(base / mpath))
            mpath = (base / mpath).string();
        auto mu = load_measure(mpath);
        std::vector<double> eps = mj.contains("eps")
                                      ? mj.at("eps").get<std::vector<double>>()
                                      : mu->eps;
        if (type == "product_t1") {
            auto counts = LogGasModel::from_fractions(mu, N, eps).counts;
            batch = sample_product_t1(mu, counts, n_samples, seed, opt);
        } else {
            bool constrained = mj.value("constrained", true);
            double t = mj.value("t", 0.0);
            LogGasModel model = constrained ? LogGasModel::from_fractions(mu, N, eps, t)
                                            : LogGasModel::unconstrained(mu, N, t);
            batch = sample_loggas(model, n_samples, seed, opt);
            if (batch.diag.tuning_warning)
                std::cerr << "{\"warning\":\"acceptance rate outside [0.1,0.7] after adaptation\"}"
                          << std::endl;
        }
    } else {
        throw ArgumentError("sample: unknown model type '" + type + "'");
    }
    batch.save(out_path);
    if (!csv_path.empty()) {
        std::ostringstream os;
        batch.write_csv(os);
        write_atomic(csv_path, os.str());
    }
    return 0;
}

int cmd_gaps(CLI::App& app, std::vector<std::string>& args, bool do_assert) {
    std::string batch_path, measure_path, out_path, csv_path, ref_spec;
    int cut = 0, m = 1;
    long index = 0;
    app.add_option("--batch", batch_path)->required();
    app.add_option("--measure", measure_path)->required();
    app.add_option("--cut", cut);
    app.add_option("--index", index, "per-cut index of the first gap")->required();
    app.add_option("--m", m, "consecutive gaps per configuration");
    app.add_option("--reference", ref_spec, "reference batch file or 'auto'");
    app.add_option("--out", out_path);
    app.add_option("--csv", csv_path);
    app.parse(args);
    require_file(batch_path);

    auto mu = load_measure(measure_path);
    auto batch = SampleBatch::load(batch_path);
    GapReport rep;
    if (!ref_spec.empty()) {
        long Nh = batch.constrained ? batch.counts[cut]
                                    : stable_floor(batch.N * mu->eps[cut]);
        auto ref = resolve_reference(ref_spec, mu->beta(), Nh, batch.n_samples,
                                     batch.seed + 1000 + cut);
        auto sc = std::make_shared<EquilibriumMeasure>(EquilibriumMeasure::semicircle(mu->beta()));
        auto comp = std::make_shared<EquilibriumMeasure>(mu->restrict_cut(cut));
        auto map = monotone_transport(sc, comp);
        rep = bulk_gaps(batch, *mu, cut, index, m, &ref, &map);
    } else {
        rep = bulk_gaps(batch, *mu, cut, index, m);
    }
    json cfg;
    cfg["command"] = "gaps";
    cfg["batch"] = batch_path;
    cfg["measure"] = measure_path;
    cfg["cut"] = cut;
    cfg["index"] = index;
    cfg["m"] = m;
    cfg["reference"] = ref_spec;
    cfg["batch_descriptor"] = batch.descriptor();
    json out = rep.to_json();
    out["_config"] = cfg;
    if (!out_path.empty()) write_atomic(out_path, out.dump(2) + "\n");
    if (!csv_path.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "rescaled_gap\n";
        for (double v : rep.rescaled) os << v << "\n";
        write_atomic(csv_path, os.str());
    }
    if (do_assert && rep.ks >= 0) {
        double crit = ks_two_sample_critical(0.01, rep.rescaled.size() / m,
                                             rep.reference.size() / m);
        if (rep.ks > crit)
            throw BandFailure("gaps: two-sample KS " + std::to_string(rep.ks) +
                              " exceeds the 1% band " + std::to_string(crit));
    }
    return 0;
}

int cmd_edge(CLI::App& app, std::vector<std::string>& args, bool do_assert) {
    std::string batch_path, measure_path, out_path, ref_spec;
    int cut = 0, m = 1;
    app.add_option("--batch", batch_path)->required();
    app.add_option("--measure", measure_path)->required();
    app.add_option("--cut", cut);
    app.add_option("--m", m);
    app.add_option("--reference", ref_spec);
    app.add_option("--out", out_path);
    app.parse(args);
    require_file(batch_path);

    auto mu = load_measure(measure_path);
    auto batch = SampleBatch::load(batch_path);
    auto sc = std::make_shared<EquilibriumMeasure>(EquilibriumMeasure::semicircle(mu->beta()));
    auto comp = std::make_shared<EquilibriumMeasure>(mu->restrict_cut(cut));
    auto map = monotone_transport(sc, comp);
    EdgeReport rep;
    if (!ref_spec.empty()) {
        long Nh = batch.constrained ? batch.counts[cut]
                                    : stable_floor(batch.N * mu->eps[cut]);
        auto ref = resolve_reference(ref_spec, mu->beta(), Nh, batch.n_samples,
                                     batch.seed + 2000 + cut);
        rep = edge_rescale(batch, *mu, cut, m, &ref, &map);
    } else {
        rep = edge_rescale(batch, *mu, cut, m, nullptr, &map);
    }
    json cfg;
    cfg["command"] = "edge";
    cfg["batch"] = batch_path;
    cfg["measure"] = measure_path;
    cfg["cut"] = cut;
    cfg["m"] = m;
    cfg["reference"] = ref_spec;
    cfg["batch_descriptor"] = batch.descriptor();
    json out = rep.to_json();
    out["_config"] = cfg;
    if (!out_path.empty()) write_atomic(out_path, out.dump(2) + "\n");
    if (do_assert && rep.ks >= 0) {
        double crit = ks_two_sample_critical(0.01, rep.rescaled.size() / m,
                                             rep.reference.size() / m);
        if (rep.ks > crit)
            throw BandFailure("edge: two-sample KS " + std::to_string(rep.ks) +
                              " exceeds the 1% band " + std::to_string(crit));
    }
    return 0;
}

int cmd_filling(CLI::App& app, std::vector<std::string>& args) {
    std::string batch_path, measure_path, out_path;
    app.add_option("--batch", batch_path)->required();
    app.add_option("--measure", measure_path)->required();
    app.add_option("--out", out_path)->required();
    app.parse(args);
    require_file(batch_path);
    auto mu = load_measure(measure_path);
    auto batch = SampleBatch::load(batch_path);
    auto rep = filling_counts(batch, *mu);
    json cfg;
    cfg["command"] = "filling";
    cfg["batch"] = batch_path;
    cfg["measure"] = measure_path;
    cfg["batch_descriptor"] = batch.descriptor();
    json out = rep.to_json();
    out["_config"] = cfg;
    write_atomic(out_path, out.dump(2) + "\n");
    return 0;
}

int cmd_loopcheck(CLI::App& app, std::vector<std::string>& args, bool do_assert) {
    std::string batch_path, measure_path, out_path, f_csv;
    std::vector<std::string> k_csv;
    double t = 0.0;
    int order = 1;
    app.add_option("--batch", batch_path)->required();
    app.add_option("--measure", measure_path)->required();
    app.add_option("--t", t);
    app.add_option("--order", order);
    app.add_option("--f", f_csv, "test polynomial (plateau-truncated)")->required();
    app.add_option("--k", k_csv, "insertion polynomials for orders 2 and 3");
    app.add_option("--out", out_path);
    app.parse(args);
    require_file(batch_path);

    auto mu = load_measure(measure_path);
    auto batch = SampleBatch::load(batch_path);
    XiContext ctx(mu, t);
    auto f = truncated_poly(mu->geometry, parse_doubles(f_csv));
    std::vector<C1Fn> ks;
    for (const auto& spec : k_csv) {
        auto c = parse_doubles(spec);
        ks.push_back(C1Fn{[c](double x) {
                              double acc = 0;
                              for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
                              return acc;
                          },
                          [c](double x) {
                              double acc = 0;
                              for (std::size_t k = c.size(); k-- > 1;) acc = acc * x + c[k] * k;
                              return acc;
                          }});
    }
    auto res = loop_residual(batch, ctx, f, order, ks);
    json cfg;
    cfg["command"] = "loopcheck";
    cfg["batch"] = batch_path;
    cfg["measure"] = measure_path;
    cfg["t"] = t;
    cfg["order"] = order;
    cfg["f"] = f_csv;
    cfg["k"] = k_csv;
    cfg["batch_descriptor"] = batch.descriptor();
    json out = res.to_json();
    out["_config"] = cfg;
    if (!out_path.empty()) write_atomic(out_path, out.dump(2) + "\n");
    std::cout << out.dump() << std::endl;
    if (do_assert && std::abs(res.residual) > 3.0 * res.se)
        throw BandFailure("loopcheck: |residual| exceeds 3 standard errors");
    return 0;
}

int cmd_pipeline(CLI::App& app, std::vector<std::string>& args) {
    std::string path;
    app.add_option("file", path, "pipeline description (JSON)")->required();
    app.parse(args);
    json j = read_json(path);
    for (const auto& step : j.at("steps")) {
        std::vector<std::string> sub;
        sub.push_back(step.at("command").get<std::string>());
        for (const auto& a : step.at("args")) sub.push_back(a.get<std::string>());
        int rc = dispatch(sub);
        if (rc != 0) {
            std::cerr << "{\"error\":\"pipeline\",\"step\":"
                      << step.value("name", step.at("command").get<std::string>())
                      << ",\"code\":" << rc << "}" << std::endl;
            return rc;
        }
    }
    return 0;
}

int dispatch(std::vector<std::string> args) {
    if (args.empty()) {
        std::cerr << "{\"error\":\"usage\",\"message\":\"no subcommand\"}" << std::endl;
        return 2;
    }
    std::string cmd = args.front();
    std::vector<std::string> rest(args.begin() + 1, args.end());

    // global flags shared by every subcommand
    bool do_assert = false;
    int threads = 0;
    std::string log_level = "info";
    for (auto it = rest.begin(); it != rest.end();) {
        if (*it == "--assert") {
            do_assert = true;
            it = rest.erase(it);
        } else if (*it == "--threads" && std::next(it) != rest.end()) {
            threads = std::stoi(*std::next(it));
            it = rest.erase(it, it + 2);
        } else if (*it == "--log-level" && std::next(it) != rest.end()) {
            log_level = *std::next(it);
            it = rest.erase(it, it + 2);
        } else {
            ++it;
        }
    }
    if (threads > 0) thread_cap().store(threads);
    if (log_level == "debug")
        std::cerr << "{\"info\":\"running\",\"command\":\"" << cmd << "\"}" << std::endl;

    // CLI11 wants argv-style reversed remainder
    std::reverse(rest.begin(), rest.end());
    CLI::App app{"loggas " + cmd};
    try {
        if (cmd == "equilibrium") return cmd_equilibrium(app, rest);
        if (cmd == "xi-invert") return cmd_xi_invert(app, rest);
        if (cmd == "transport") return cmd_transport(app, rest);
        if (cmd == "sample") return cmd_sample(app, rest);
        if (cmd == "gaps") return cmd_gaps(app, rest, do_assert);
        if (cmd == "edge") return cmd_edge(app, rest, do_assert);
        if (cmd == "filling") return cmd_filling(app, rest);
        if (cmd == "loopcheck") return cmd_loopcheck(app, rest, do_assert);
        if (cmd == "pipeline") return cmd_pipeline(app, rest);
        std::cerr << "{\"error\":\"usage\",\"message\":\"unknown subcommand '" << cmd << "'\"}"
                  << std::endl;
        return 2;
    } catch (const CLI::ParseError& e) {
        std::cerr << "{\"error\":\"usage\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "{\"error\":\"validation\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "{\"error\":\"validation\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "{\"error\":\"validation\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "{\"error\":\"solver\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 3;
    } catch (const ResolutionError& e) {
        std::cerr << "{\"error\":\"solver\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 3;
    } catch (const BandFailure& e) {
        std::cerr << "{\"error\":\"band\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"internal\",\"message\":\"" << e.what() << "\"}" << std::endl;
        return 1;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(std::move(args));
}

}  // namespace loggas
