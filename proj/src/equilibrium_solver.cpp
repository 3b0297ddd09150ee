#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "loggas/equilibrium.hpp"

namespace loggas {

namespace {

struct EdgeContours {
    std::vector<Ellipse> outer;  // enclose each cut, used for per-cut Cauchy evaluation
    std::vector<Ellipse> inner;  // strictly inside outer, carry the resolvent kernel
    Ellipse big;                 // encloses every cut, stays clear of the inner contours
};

EdgeContours build_contours(const std::vector<double>& edges, int m_nodes) {
    const int g1 = static_cast<int>(edges.size()) / 2;
    EdgeContours ec;
    for (int h = 0; h < g1; ++h) {
        double a = edges[2 * h], b = edges[2 * h + 1];
        double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double gap = std::numeric_limits<double>::infinity();
        if (h > 0) gap = std::min(gap, a - edges[2 * h - 1]);
        if (h + 1 < g1) gap = std::min(gap, edges[2 * h + 2] - b);
        double margin = std::min(0.55 * half, 0.45 * gap);
        ec.outer.emplace_back(mid, half + 0.8 * margin, std::min(0.5 * half, 0.8 * margin), m_nodes);
        ec.inner.emplace_back(mid, half + 0.25 * margin, 0.25 * margin, m_nodes);
    }
    double span = edges.back() - edges.front();
    double c = 0.5 * (edges.front() + edges.back());
    ec.big = Ellipse(c, 0.75 * span, 0.35 * span, m_nodes);
    return ec;
}

// E(z) = (V'(z) - beta G(z)) / sigma(z) is entire when the edges are the true
// equilibrium edges. Evaluate it on a contour whose nodes avoid the inner
// contours, then anywhere inside by Cauchy.
std::vector<cplx> E_on_contour(const Potential& V, const std::vector<double>& edges,
                               const EdgeContours& ec, const Ellipse& path) {
    std::vector<cplx> vals(path.m);
    for (int j = 0; j < path.m; ++j) {
        cplx xi = path.nodes[j];
        vals[j] = V.evaluate_c(xi, 1) / sigma_principal(xi, edges);
    }
    for (const auto& in : ec.inner) {
        for (int j = 0; j < path.m; ++j) {
            cplx xi = path.nodes[j];
            cplx acc{};
            for (int i = 0; i < in.m; ++i)
                acc += V.evaluate_c(in.nodes[i], 1) /
                       (sigma_principal(in.nodes[i], edges) * (in.nodes[i] - xi)) * in.weights[i];
            vals[j] += acc / cplx(0.0, 2.0 * kPi);
        }
    }
    return vals;
}

double E_at(const std::vector<cplx>& Evals, const Ellipse& path, double x) {
    cplx acc{};
    for (int j = 0; j < path.m; ++j) acc += Evals[j] / (path.nodes[j] - x) * path.weights[j];
    return (acc / cplx(0.0, 2.0 * kPi)).real();
}

// Resolvent moments m_k = (1/2pi i) oint xi^k V'(xi)/sigma(xi) dxi over all cuts.
double moment(const Potential& V, const std::vector<double>& edges, const EdgeContours& ec, int k) {
    cplx acc{};
    const auto& out = ec.big;
    for (int j = 0; j < out.m; ++j) {
        cplx xi = out.nodes[j];
        acc += std::pow(xi, k) * V.evaluate_c(xi, 1) / sigma_principal(xi, edges) * out.weights[j];
    }
    return (acc / cplx(0.0, 2.0 * kPi)).real();
}

// Candidate per-cut mass for trial edges, via second-kind quadrature of
// parity * E * |sigma| / (beta pi).
double cut_mass(const Potential& V, const std::vector<double>& edges, const EdgeContours& ec,
                int h, int n_quad) {
    const int g1 = static_cast<int>(edges.size()) / 2;
    double a = edges[2 * h], b = edges[2 * h + 1];
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto Evals = E_on_contour(V, edges, ec, ec.outer[h]);
    double parity = ((g1 - 1 - h) % 2 == 0) ? 1.0 : -1.0;
    double acc = 0;
    for (int j = 1; j <= n_quad; ++j) {
        double th = kPi * j / (n_quad + 1);
        double x = mid + half * std::cos(th);
        double rest = 1.0;
        for (int k = 0; k < g1; ++k) {
            if (k == h) continue;
            rest *= std::sqrt(std::abs((x - edges[2 * k]) * (x - edges[2 * k + 1])));
        }
        double s2 = std::sin(th) * std::sin(th);
        acc += E_at(Evals, ec.outer[h], x) * rest * s2;
    }
    return parity * acc * half * half * (kPi / (n_quad + 1)) / (V.beta() * kPi);
}

// Gap period int_gap sigma(x) E(x) dx (zero when the equality constants agree
// across neighbouring cuts). Square-root factors at the gap ends are absorbed
// into a second-kind rule.
double gap_period(const Potential& V, const std::vector<double>& edges, const EdgeContours& ec,
                  const std::vector<cplx>& E_big, int j_gap, int n_quad) {
    const int g1 = static_cast<int>(edges.size()) / 2;
    double a = edges[2 * j_gap + 1];      // right edge of cut j
    double b = edges[2 * j_gap + 2];      // left edge of cut j+1
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sign = ((g1 - 1 - j_gap) % 2 == 0) ? 1.0 : -1.0;
    (void)V;
    double acc = 0;
    for (int j = 1; j <= n_quad; ++j) {
        double th = kPi * j / (n_quad + 1);
        double x = mid + half * std::cos(th);
        double rest = 1.0;
        for (int k = 0; k < 2 * g1; ++k) {
            double e = edges[k];
            if (e == a || e == b) continue;
            rest *= std::sqrt(std::abs(x - e));
        }
        double s2 = std::sin(th) * std::sin(th);
        acc += E_at(E_big, ec.big, x) * rest * s2;
    }
    return sign * acc * half * half * (kPi / (n_quad + 1));
}

std::vector<double> residual(const Potential& V, const std::vector<double>& edges,
                             const std::optional<std::vector<double>>& eps, int m_nodes,
                             int n_quad) {
    const int g1 = static_cast<int>(edges.size()) / 2;
    auto ec = build_contours(edges, m_nodes);
    std::vector<double> F;
    for (int k = 0; k <= g1 - 1; ++k) F.push_back(moment(V, edges, ec, k));
    F.push_back(moment(V, edges, ec, g1) - V.beta());
    if (eps) {
        for (int h = 0; h + 1 < g1; ++h) F.push_back(cut_mass(V, edges, ec, h, n_quad) - (*eps)[h]);
    } else if (g1 > 1) {
        auto E_big = E_on_contour(V, edges, ec, ec.big);
        for (int j = 0; j + 1 < g1; ++j) F.push_back(gap_period(V, edges, ec, E_big, j, n_quad));
    }
    return F;
}

bool edges_valid(const std::vector<double>& e) {
    for (std::size_t i = 1; i < e.size(); ++i)
        if (!(e[i] > e[i - 1] + 1e-9)) return false;
    return true;
}

std::vector<Cut> default_init(const Potential& p, int cut_count) {
    // Bracket the wells of V: scan a window wide enough that V has climbed
    // well above its minimum on both sides.
    double R = 2.0;
    auto safeV = [&](double x) { return p.in_domain(x) ? p(x) : 1e30; };
    double vmin = std::min(safeV(0.0), std::min(safeV(-1.0), safeV(1.0)));
    while (R < 1e3 && (safeV(-R) < vmin + 10.0 || safeV(R) < vmin + 10.0)) R *= 1.4;
    const int ns = 4096;
    std::vector<double> xs(ns), vs(ns);
    for (int i = 0; i < ns; ++i) {
        xs[i] = -R + 2.0 * R * i / (ns - 1);
        vs[i] = safeV(xs[i]);
    }
    std::vector<std::pair<double, double>> minima;  // (V, x)
    for (int i = 1; i + 1 < ns; ++i)
        if (vs[i] <= vs[i - 1] && vs[i] <= vs[i + 1]) minima.push_back({vs[i], xs[i]});
    if (static_cast<int>(minima.size()) < cut_count)
        throw ArgumentError("solve_equilibrium: could not bracket the requested cut count; "
                            "provide an explicit init geometry");
    std::sort(minima.begin(), minima.end());
    minima.resize(cut_count);
    std::vector<double> centers;
    for (auto& m : minima) centers.push_back(m.second);
    std::sort(centers.begin(), centers.end());
    double spacing = 2.0;
    for (std::size_t i = 1; i < centers.size(); ++i)
        spacing = std::min(spacing, centers[i] - centers[i - 1]);
    double w = 0.35 * spacing;
    std::vector<Cut> init;
    for (double c : centers) init.push_back(Cut{c - w, c + w});
    return init;
}

}  // namespace

EquilibriumMeasure solve_equilibrium(const Potential& p, std::optional<std::vector<double>> eps,
                                     int cut_count, std::vector<Cut> init, const SolveOptions& opt) {
    if (cut_count < 1) throw ArgumentError("solve_equilibrium: cut_count must be >= 1");
    if (!p.confinement_check())
        throw ArgumentError("solve_equilibrium: potential fails the confinement hypothesis");
    if (eps) {
        if (static_cast<int>(eps->size()) != cut_count)
            throw ArgumentError("solve_equilibrium: eps size must equal cut_count");
        double s = 0;
        for (double e : *eps) {
            if (!(e > 0.0 && e < 1.0) && !(cut_count == 1 && e == 1.0))
                throw ArgumentError("solve_equilibrium: eps entries must lie in (0,1)");
            s += e;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw ArgumentError("solve_equilibrium: eps must sum to 1");
    }
    if (init.empty()) init = default_init(p, cut_count);
    if (static_cast<int>(init.size()) != cut_count)
        throw ArgumentError("solve_equilibrium: init must provide one interval per cut");

    std::vector<double> edges;
    for (const auto& c : init) {
        edges.push_back(c.a);
        edges.push_back(c.b);
    }
    if (!edges_valid(edges)) throw ArgumentError("solve_equilibrium: init intervals overlap");

    const int dim = 2 * cut_count;
    const int n_quad = std::max(64, opt.n_nodes);
    auto Fv = residual(p, edges, eps, opt.contour_nodes, n_quad);
    double fnorm = 0;
    for (double f : Fv) fnorm = std::max(fnorm, std::abs(f));

    int it = 0;
    for (; it < opt.max_iter && fnorm > opt.tol; ++it) {
        Eigen::MatrixXd J(dim, dim);
        Eigen::VectorXd F(dim);
        for (int i = 0; i < dim; ++i) F(i) = Fv[i];
        for (int c = 0; c < dim; ++c) {
            double h = 1e-7 * std::max(1.0, std::abs(edges[c]));
            auto ep = edges;
            ep[c] += h;
            if (!edges_valid(ep)) {
                ep = edges;
                ep[c] -= h;
                h = -h;
            }
            auto Fp = residual(p, ep, eps, opt.contour_nodes, n_quad);
            for (int i = 0; i < dim; ++i) J(i, c) = (Fp[i] - Fv[i]) / h;
        }
        Eigen::VectorXd step = J.partialPivLu().solve(-F);
        double lam = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, lam *= 0.5) {
            auto en = edges;
            for (int c = 0; c < dim; ++c) en[c] += lam * step(c);
            if (!edges_valid(en)) continue;
            auto Fn = residual(p, en, eps, opt.contour_nodes, n_quad);
            double fn = 0;
            for (double f : Fn) fn = std::max(fn, std::abs(f));
            if (fn < fnorm || fn < opt.tol) {
                edges = en;
                Fv = Fn;
                fnorm = fn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (fnorm > 1e3 * opt.tol) {
        std::string rep = "solve_equilibrium: Newton stalled after " + std::to_string(it) +
                          " iterations, residual inf-norm = " + std::to_string(fnorm);
        throw SolverError(rep);
    }

    for (int h = 0; h + 1 < cut_count; ++h)
        if (edges[2 * h + 2] - edges[2 * h + 1] < 1e-6)
            throw SolverError("solve_equilibrium: cuts merged; the cut_count ansatz is invalid");

    // Assemble the measure: sample S from the entire factor E.
    std::vector<Cut> cuts;
    for (int h = 0; h < cut_count; ++h) cuts.push_back(Cut{edges[2 * h], edges[2 * h + 1]});
    EquilibriumMeasure mu;
    mu.geometry = make_geometry(cuts, opt.geometry);
    mu.potential = p;
    mu.t = 0.0;
    auto ec = build_contours(edges, opt.contour_nodes);
    double smin = 1e300;
    for (int h = 0; h < cut_count; ++h) {
        mu.grids.emplace_back(cuts[h].a, cuts[h].b, opt.n_nodes);
        auto Evals = E_on_contour(p, edges, ec, ec.outer[h]);
        double parity = ((cut_count - 1 - h) % 2 == 0) ? 1.0 : -1.0;
        std::vector<double> s(opt.n_nodes);
        for (int j = 0; j < opt.n_nodes; ++j) {
            s[j] = parity * E_at(Evals, ec.outer[h], mu.grids[h].x[j]) / (p.beta() * kPi);
            smin = std::min(smin, s[j]);
        }
        mu.S.push_back(std::move(s));
    }
    if (smin <= 1e-10)
        throw SolverError("solve_equilibrium: density factor S is not positive; "
                          "wrong cut_count for this potential");

    mu.eps.resize(cut_count);
    mu.constants.assign(cut_count, 0.0);
    // Temporary eps from candidate masses; finalize() rebuilds the tables.
    for (int h = 0; h < cut_count; ++h) mu.eps[h] = cut_mass(p, edges, ec, h, n_quad);
    mu.finalize();
    for (int h = 0; h < cut_count; ++h) mu.eps[h] = mu.mass(h);

    EffectivePotential eff(mu, 0.0);
    mu.constants = eff.constants();
    return mu;
}

double EquilibriumMeasure::boundary_density(double x) const {
    int h = geometry.cut_index(x);
    if (h < 0) throw DomainError("boundary_density: x not on the support");
    auto e = edges();
    auto ec = build_contours(e, 256);
    auto Evals = E_on_contour(potential, e, ec, ec.outer[h]);
    double parity = ((genus() - h) % 2 == 0) ? 1.0 : -1.0;
    return parity * E_at(Evals, ec.outer[h], x) * abs_sigma(x) / (beta() * kPi);
}

}  // namespace loggas
