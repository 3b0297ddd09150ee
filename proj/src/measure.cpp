#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "loggas/equilibrium.hpp"

namespace loggas {

using nlohmann::json;

cplx sigma_principal(cplx z, const std::vector<double>& edges) {
    cplx p = 1.0;
    for (double e : edges) p *= std::sqrt(z - e);
    return p;
}

std::vector<double> EquilibriumMeasure::edges() const {
    std::vector<double> e;
    for (const auto& c : geometry.cuts) {
        e.push_back(c.a);
        e.push_back(c.b);
    }
    return e;
}

double EquilibriumMeasure::smooth_rest(int h, double x) const {
    double r = 1.0;
    for (int k = 0; k < n_cuts(); ++k) {
        if (k == h) continue;
        r *= std::sqrt(std::abs((x - geometry.cuts[k].a) * (x - geometry.cuts[k].b)));
    }
    return r;
}

double EquilibriumMeasure::abs_sigma(double x) const {
    double r = 1.0;
    for (const auto& c : geometry.cuts)
        r *= std::sqrt(std::abs((x - c.a) * (x - c.b)));
    return r;
}

double EquilibriumMeasure::S_eval(int h, double x) const {
    return cheb::eval(S_coef_[h], grids[h].a, grids[h].b, x);
}

double EquilibriumMeasure::density(double x) const {
    int h = geometry.cut_index(x);
    if (h < 0) return 0.0;
    return S_eval(h, x) * abs_sigma(x);
}

void EquilibriumMeasure::finalize() {
    geometry.validate();
    const int g1 = n_cuts();
    if (static_cast<int>(grids.size()) != g1 || static_cast<int>(S.size()) != g1)
        throw ArgumentError("EquilibriumMeasure: grids/S size mismatch");
    if (static_cast<int>(eps.size()) != g1) throw ArgumentError("EquilibriumMeasure: eps size mismatch");

    S_coef_.clear();
    quad_.clear();
    logmom_.clear();
    for (int h = 0; h < g1; ++h) {
        auto c = cheb::vals_to_coeffs(grids[h], S[h]);
        cheb::truncate_noise(c);  // S extends into B_h; keep that extension stable
        S_coef_.push_back(std::move(c));
    }

    // Gauss-Chebyshev (first kind) nodes double as mu-quadrature nodes:
    //   int_A g rho = (pi/n) sum_j g(x_j) S(x_j) R_h(x_j) s_h(x_j)^2.
    for (int h = 0; h < g1; ++h) {
        const auto& g = grids[h];
        double c = g.half();
        for (int j = 0; j < g.n; ++j) {
            double sh2 = c * c * std::sin(g.theta[j]) * std::sin(g.theta[j]);
            double w = (kPi / g.n) * S[h][j] * smooth_rest(h, g.x[j]) * sh2;
            quad_.push_back(QuadNode{g.x[j], w, h});
        }
    }

    // Log-kernel cosine moments on a refined grid per cut.
    const int M = std::max(256, 4 * nodes_per_cut());
    for (int h = 0; h < g1; ++h) {
        cheb::Grid fine(geometry.cuts[h].a, geometry.cuts[h].b, M);
        double c = fine.half();
        std::vector<double> F(M);
        for (int j = 0; j < M; ++j) {
            double st = std::sin(fine.theta[j]);
            F[j] = c * c * S_eval(h, fine.x[j]) * smooth_rest(h, fine.x[j]) * st * st;
        }
        logmom_.push_back(cheb::cosine_moments(fine, F));
    }

    cum_mass_.assign(g1 + 1, 0.0);
    for (int h = 0; h < g1; ++h) cum_mass_[h + 1] = cum_mass_[h] + logmom_[h][0];

    finalized_ = true;
}

double EquilibriumMeasure::integrate(const std::function<double(double)>& f) const {
    double acc = 0;
    for (const auto& q : quad_) acc += q.w * f(q.x);
    return acc;
}

double EquilibriumMeasure::integrate_cut(int h, const std::function<double(double)>& f) const {
    double acc = 0;
    for (const auto& q : quad_)
        if (q.cut == h) acc += q.w * f(q.x);
    return acc;
}

double EquilibriumMeasure::mass(int h) const { return logmom_[h][0]; }

namespace {

// int_0^pi log|w - cos(th)| F(th) dth from cosine moments A_k of F.
double log_kernel_sum(const std::vector<double>& A, double w) {
    const int M = static_cast<int>(A.size());
    double acc;
    if (std::abs(w) <= 1.0) {
        double phi = std::acos(std::clamp(w, -1.0, 1.0));
        acc = -std::log(2.0) * A[0];
        for (int n = 1; n < M; ++n) acc -= (2.0 / n) * std::cos(n * phi) * A[n];
    } else {
        double aw = std::abs(w);
        double zeta = aw + std::sqrt(aw * aw - 1.0);
        double sgn = (w > 0) ? 1.0 : -1.0;
        acc = std::log(zeta / 2.0) * A[0];
        double zp = 1.0;
        for (int n = 1; n < M; ++n) {
            zp /= zeta;
            double term = (2.0 / n) * zp * A[n];
            acc -= (sgn > 0 || n % 2 == 0) ? term : -term;
        }
    }
    return acc;
}

}  // namespace

double EquilibriumMeasure::log_potential(double x) const {
    double acc = 0;
    for (int h = 0; h < n_cuts(); ++h) {
        const auto& cut = geometry.cuts[h];
        double w = (x - cut.mid()) / cut.half();
        acc += std::log(cut.half()) * logmom_[h][0] + log_kernel_sum(logmom_[h], w);
    }
    return acc;
}

double EquilibriumMeasure::log_potential_excluding(int h, double x) const {
    double acc = 0;
    for (int k = 0; k < n_cuts(); ++k) {
        if (k == h) continue;
        const auto& cut = geometry.cuts[k];
        double w = (x - cut.mid()) / cut.half();
        acc += std::log(cut.half()) * logmom_[k][0] + log_kernel_sum(logmom_[k], w);
    }
    return acc;
}

cplx EquilibriumMeasure::stieltjes(cplx z) const {
    for (int h = 0; h < n_cuts(); ++h) {
        const auto& c = geometry.cuts[h];
        double dx = 0.0;
        if (z.real() < c.a) dx = c.a - z.real();
        else if (z.real() > c.b) dx = z.real() - c.b;
        double dist = std::hypot(dx, z.imag());
        double resolution = kPi * c.half() / grids[h].n;
        if (dist <= resolution)
            throw DomainError("stieltjes: z within quadrature resolution of the support");
    }
    cplx acc{};
    for (const auto& q : quad_) acc += q.w / (z - q.x);
    return acc;
}

double EquilibriumMeasure::cut_cdf(int h, double x) const {
    const auto& cut = geometry.cuts[h];
    if (x <= cut.a) return 0.0;
    if (x >= cut.b) return logmom_[h][0];
    double th = std::acos(std::clamp((x - cut.mid()) / cut.half(), -1.0, 1.0));
    const auto& A = logmom_[h];
    double acc = (A[0] / kPi) * (kPi - th);
    for (int n = 1; n < static_cast<int>(A.size()); ++n)
        acc -= (2.0 * A[n] / (kPi * n)) * std::sin(n * th);
    return acc;
}

double EquilibriumMeasure::cdf(double x) const {
    double acc = 0;
    for (int h = 0; h < n_cuts(); ++h) {
        if (x >= geometry.cuts[h].b) acc += logmom_[h][0];
        else if (x > geometry.cuts[h].a) acc += cut_cdf(h, x);
    }
    return acc;
}

double EquilibriumMeasure::quantile(double q) const {
    if (q < 0.0 || q > cum_mass_.back() + 1e-12)
        throw ArgumentError("quantile: q outside [0, total mass]");
    // Mass boundaries: smallest solution, i.e. the right edge of the cut
    // that completes the mass.
    for (int h = 0; h < n_cuts(); ++h)
        if (std::abs(q - cum_mass_[h + 1]) < 1e-12) return geometry.cuts[h].b;
    if (q < 1e-12) return geometry.cuts[0].a;
    int h = 0;
    while (h < n_cuts() - 1 && q > cum_mass_[h + 1]) ++h;
    double target = q - cum_mass_[h];
    const auto& cut = geometry.cuts[h];
    // Bisection in theta, Newton polish in x.
    double lo = cut.a, hi = cut.b;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (cut_cdf(h, mid) < target) lo = mid;
        else hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        double d = density(x);
        if (d <= 0) break;
        double step = (cut_cdf(h, x) - target) / d;
        double xn = x - step;
        if (xn <= cut.a || xn >= cut.b) break;
        x = xn;
    }
    return x;
}

double EquilibriumMeasure::classical_location(long i, long N) const {
    if (i < 1 || i > N) throw ArgumentError("classical_location: need 1 <= i <= N");
    return quantile(static_cast<double>(i) / static_cast<double>(N));
}

EffectivePotential::EffectivePotential(const EquilibriumMeasure& mu, double t) : mu_(mu), t_(t) {
    if (!mu.finalized()) throw ArgumentError("EffectivePotential: measure not finalized");
    intV_ = mu_.integrate([&](double y) { return mu_.potential(y); });
    if (t_ != 0.0) {
        intVtilde_ = mu_.integrate([&](double y) {
            int hy = mu_.geometry.cut_index(y);
            return mu_.potential(y) - mu_.beta() * mu_.log_potential_excluding(hy, y);
        });
    }
    // Equality on the support fixes the constants per cut.
    C_.resize(mu_.n_cuts());
    for (int h = 0; h < mu_.n_cuts(); ++h) {
        double acc = 0;
        int cnt = 0;
        for (const auto& q : mu_.quad()) {
            if (q.cut != h) continue;
            acc += unnormalized(q.x, h);
            ++cnt;
        }
        C_[h] = acc / cnt;
    }
}

double EffectivePotential::unnormalized(double x, int h) const {
    const double beta = mu_.beta();
    double lp = mu_.log_potential(x);
    // int T_t(x,y) dmu(y), split into the t=0 and t=1 ends.
    double T0 = -mu_.potential(x) - intV_;
    double acc = beta * lp;
    if (t_ == 0.0) return acc + T0;
    double lpx = mu_.log_potential_excluding(h, x);
    double Vt = mu_.potential(x) - beta * lpx;
    double T1 = -Vt - intVtilde_ - beta * lpx;
    return acc + (1.0 - t_) * T0 + t_ * T1;
}

double EffectivePotential::operator()(double x) const {
    // Defined per component; accept the slightly larger U neighbourhoods so
    // outlier locations just beyond B can still be probed.
    int h = mu_.geometry.u_index(x);
    if (h < 0) throw DomainError("effective potential: x outside U");
    return unnormalized(x, h) - C_[h];
}

double EquilibriumMeasure::effective_potential(double x) const {
    EffectivePotential eff(*this, t);
    return eff(x);
}

EquilibriumMeasure::CharacterizationReport
EquilibriumMeasure::verify_characterization(int grid_points) const {
    EffectivePotential eff(*this, t);
    CharacterizationReport rep;
    for (int h = 0; h < n_cuts(); ++h) {
        const auto& b = geometry.B[h];
        for (int j = 0; j < grid_points; ++j) {
            double x = b.a + (b.b - b.a) * (j + 0.5) / grid_points;
            double v = eff(x);
            if (geometry.cuts[h].contains(x))
                rep.max_on_support_violation = std::max(rep.max_on_support_violation, std::abs(v));
            else
                rep.max_off_support_violation = std::max(rep.max_off_support_violation, v);
        }
    }
    return rep;
}

EquilibriumMeasure EquilibriumMeasure::restrict_cut(int h) const {
    if (h < 0 || h >= n_cuts()) throw ArgumentError("restrict_cut: bad index");
    EquilibriumMeasure m;
    m.geometry.cuts = {geometry.cuts[h]};
    m.geometry.B = {geometry.B[h]};
    m.geometry.U = {geometry.U[h]};
    m.geometry.delta = geometry.delta;
    m.potential = potential;  // nominal; the component is not its equilibrium measure
    m.t = t;
    m.eps = {1.0};
    m.constants = {0.0};
    m.grids = {grids[h]};
    // rho/eps_h also absorbs the square-root factors of the removed cuts.
    std::vector<double> s(grids[h].n);
    for (int j = 0; j < grids[h].n; ++j)
        s[j] = S[h][j] * smooth_rest(h, grids[h].x[j]) / eps[h];
    m.S = {s};
    m.finalize();
    return m;
}

EquilibriumMeasure EquilibriumMeasure::semicircle(double beta, int n_nodes) {
    EquilibriumMeasure m;
    m.geometry = make_geometry({Cut{-2.0, 2.0}});
    m.potential = Potential::gaussian(beta);
    m.eps = {1.0};
    m.constants = {-0.75 * beta};
    m.grids = {cheb::Grid(-2.0, 2.0, n_nodes)};
    m.S = {std::vector<double>(n_nodes, 1.0 / (2.0 * kPi))};
    m.finalize();
    return m;
}

json EquilibriumMeasure::to_json() const {
    json j;
    j["beta"] = beta();
    j["t"] = t;
    j["potential"] = potential.to_json();
    j["geometry"] = geometry.to_json();
    j["eps"] = eps;
    j["constants"] = constants;
    j["nodes"] = nodes_per_cut();
    json S_arr = json::array(), X_arr = json::array();
    for (int h = 0; h < n_cuts(); ++h) {
        S_arr.push_back(S[h]);
        X_arr.push_back(grids[h].x);
    }
    j["S"] = S_arr;
    j["S_nodes"] = X_arr;
    return j;
}

EquilibriumMeasure EquilibriumMeasure::from_json(const json& j) {
    EquilibriumMeasure m;
    m.potential = Potential::from_json(j.at("potential"));
    m.geometry = SupportGeometry::from_json(j.at("geometry"));
    m.t = j.value("t", 0.0);
    m.eps = j.at("eps").get<std::vector<double>>();
    m.constants = j.at("constants").get<std::vector<double>>();
    int n = j.at("nodes").get<int>();
    for (int h = 0; h < m.geometry.n_cuts(); ++h) {
        m.grids.emplace_back(m.geometry.cuts[h].a, m.geometry.cuts[h].b, n);
        m.S.push_back(j.at("S").at(h).get<std::vector<double>>());
    }
    m.finalize();
    return m;
}

}  // namespace loggas
