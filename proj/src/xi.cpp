#include "loggas/xi.hpp"

#include <algorithm>
#include <cmath>

namespace loggas {

// ---------------------------------------------------------------- FuncOnB

FuncOnB::FuncOnB(std::vector<cheb::Grid> grids, std::vector<std::vector<double>> values)
    : grids_(std::move(grids)) {
    if (grids_.size() != values.size()) throw ArgumentError("FuncOnB: size mismatch");
    for (std::size_t h = 0; h < grids_.size(); ++h) {
        auto c = cheb::vals_to_coeffs(grids_[h], values[h]);
        cheb::truncate_noise(c);
        dcoef_.push_back(cheb::deriv_coeffs(c, grids_[h].a, grids_[h].b));
        coef_.push_back(std::move(c));
    }
}

int FuncOnB::component(double x) const {
    for (std::size_t h = 0; h < grids_.size(); ++h)
        if (x >= grids_[h].a && x <= grids_[h].b) return static_cast<int>(h);
    return -1;
}

double FuncOnB::eval(double x) const {
    int h = component(x);
    if (h < 0) throw DomainError("FuncOnB: x outside B");
    return cheb::eval(coef_[h], grids_[h].a, grids_[h].b, x);
}

double FuncOnB::deriv(double x) const {
    int h = component(x);
    if (h < 0) throw DomainError("FuncOnB: x outside B");
    return cheb::eval(dcoef_[h], grids_[h].a, grids_[h].b, x);
}

double FuncOnB::sup_norm() const {
    double m = 0;
    for (std::size_t h = 0; h < grids_.size(); ++h) {
        for (int j = 0; j < 160; ++j) {
            double x = grids_[h].a + (grids_[h].b - grids_[h].a) * j / 159.0;
            m = std::max(m, std::abs(cheb::eval(coef_[h], grids_[h].a, grids_[h].b, x)));
        }
    }
    return m;
}

C1Fn FuncOnB::as_c1() const {
    return C1Fn{[self = *this](double x) { return self.eval(x); },
                [self = *this](double x) { return self.deriv(x); }};
}

// ---------------------------------------------------------------- Plateau

double Plateau::profile(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

double Plateau::profile_deriv(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    double ap = a / (s * s), bp = b / ((1.0 - s) * (1.0 - s));
    double den = (a + b) * (a + b);
    return (ap * b + a * bp) / den;
}

double Plateau::value(double x) const {
    int h = geo_.b_index(x);
    if (h < 0) return 0.0;
    const auto& B = geo_.B[h];
    double d = geo_.delta;
    double v = 1.0;
    if (x < B.a + d) v *= profile((x - B.a) / d);
    if (x > B.b - d) v *= profile((B.b - x) / d);
    return v;
}

double Plateau::deriv(double x) const {
    int h = geo_.b_index(x);
    if (h < 0) return 0.0;
    const auto& B = geo_.B[h];
    double d = geo_.delta;
    double vl = 1.0, vr = 1.0, dl = 0.0, dr = 0.0;
    if (x < B.a + d) {
        vl = profile((x - B.a) / d);
        dl = profile_deriv((x - B.a) / d) / d;
    }
    if (x > B.b - d) {
        vr = profile((B.b - x) / d);
        dr = -profile_deriv((B.b - x) / d) / d;
    }
    return dl * vr + vl * dr;
}

double TruncatedFn::eval(double x) const {
    double u = up_.value(x);
    return u == 0.0 ? 0.0 : u * base_.eval(x);
}

double TruncatedFn::deriv(double x) const {
    double u = up_.value(x);
    if (u == 0.0) return 0.0;
    return u * base_.deriv(x) + up_.deriv(x) * base_.eval(x);
}

C1Fn TruncatedFn::as_c1() const {
    return C1Fn{[self = *this](double x) { return self.eval(x); },
                [self = *this](double x) { return self.deriv(x); }};
}

TruncatedFn plateau(FuncOnB f, const SupportGeometry& geo) { return TruncatedFn(std::move(f), geo); }

// ---------------------------------------------------------------- XiContext

XiContext::XiContext(std::shared_ptr<const EquilibriumMeasure> mu, double t, int contour_nodes)
    : mu_(std::move(mu)), t_(t) {
    if (!mu_ || !mu_->finalized()) throw ArgumentError("XiContext: measure not finalized");
    if (t_ < 0.0 || t_ > 1.0) throw ArgumentError("XiContext: t must lie in [0,1]");
    if (contour_nodes < 64 || contour_nodes % 2 != 0)
        throw ArgumentError("XiContext: contour nodes must be even and >= 64");
    const auto& geo = mu_->geometry;
    for (int h = 0; h < geo.n_cuts(); ++h) {
        double half = geo.cuts[h].half(), mid = geo.cuts[h].mid();
        double u_margin = geo.cuts[h].a - geo.U[h].a;
        double ra = std::min(1.5 * half, half + 0.85 * u_margin);
        double rb = std::min(0.5 * half, 0.85 * u_margin);
        contours_.emplace_back(mid, ra, rb, contour_nodes);
    }
    for (const auto& q : mu_->quad()) {
        qc_.x.push_back(q.x);
        qc_.w.push_back(q.w);
        qc_.cut.push_back(q.cut);
        qc_.Vp.push_back(mu_->potential.evaluate(q.x, 1));
    }
    qc_.Vtp.resize(qc_.x.size());
    for (std::size_t i = 0; i < qc_.x.size(); ++i) {
        double cross = 0;
        for (std::size_t j = 0; j < qc_.x.size(); ++j)
            if (qc_.cut[j] != qc_.cut[i]) cross += qc_.w[j] / (qc_.x[i] - qc_.x[j]);
        qc_.Vtp[i] = qc_.Vp[i] - mu_->beta() * cross;
    }
}

double XiContext::sigma_sigma_h(int h, double x) const {
    const auto& cuts = mu_->geometry.cuts;
    double v = (x - cuts[h].a) * (x - cuts[h].b);
    for (int k = 0; k < mu_->n_cuts(); ++k) {
        if (k == h) continue;
        v *= std::sqrt(std::abs((x - cuts[k].a) * (x - cuts[k].b)));
    }
    return v;
}

cplx XiContext::sigma_h(int h, cplx z) const {
    const auto& c = mu_->geometry.cuts[h];
    return std::sqrt(z - c.a) * std::sqrt(z - c.b);
}

double XiContext::vtilde_deriv(double x) const {
    double cross = 0;
    int hx = mu_->geometry.u_index(x);
    for (std::size_t j = 0; j < qc_.x.size(); ++j)
        if (qc_.cut[j] != hx) cross += qc_.w[j] / (x - qc_.x[j]);
    return mu_->potential.evaluate(x, 1) - mu_->beta() * cross;
}

double XiContext::mean_d1T(double x) const {
    double Vp = mu_->potential.evaluate(x, 1);
    if (t_ == 0.0) return -Vp;
    int hx = mu_->geometry.u_index(x);
    double cross = 0;
    for (std::size_t j = 0; j < qc_.x.size(); ++j)
        if (qc_.cut[j] != hx) cross += qc_.w[j] / (x - qc_.x[j]);
    double Vtp = Vp - mu_->beta() * cross;
    return -(1.0 - t_) * Vp - t_ * (Vtp + mu_->beta() * cross);
}

double XiContext::d1T(double x, double y) const {
    double Vp = mu_->potential.evaluate(x, 1);
    if (t_ == 0.0) return -Vp;
    int hx = mu_->geometry.u_index(x), hy = mu_->geometry.u_index(y);
    double w = (hx != hy) ? mu_->beta() / (x - y) : 0.0;
    return -(1.0 - t_) * Vp - t_ * (vtilde_deriv(x) + w);
}

// ---------------------------------------------------------------- apply

double apply_xi_at(const XiContext& ctx, const C1Fn& f, double x) {
    const auto& mu = ctx.mu();
    int hx = mu.geometry.b_index(x);
    if (hx < 0) throw DomainError("apply_xi: x outside B");
    const auto& qc = ctx.qc();
    const double beta = mu.beta(), t = ctx.t();
    const double fx = f.f(x);

    double dq_sum = 0, ip2 = 0;
    for (std::size_t j = 0; j < qc.x.size(); ++j) {
        double y = qc.x[j], w = qc.w[j];
        double dq;
        if (std::abs(x - y) < 1e-8) dq = f.df(0.5 * (x + y));
        else dq = (fx - f.f(y)) / (x - y);
        dq_sum += w * dq;
        // d2 T_t(x,y): the cross-cut log interaction only enters at the t=1 end
        double d2 = -(1.0 - t) * qc.Vp[j];
        if (t != 0.0) {
            double wterm = (qc.cut[j] != hx) ? beta / (y - x) : 0.0;
            d2 -= t * (qc.Vtp[j] + wterm);
        }
        ip2 += w * d2 * f.f(y);
    }
    return beta * dq_sum + fx * ctx.mean_d1T(x) + ip2;
}

std::vector<double> apply_xi(const XiContext& ctx, const C1Fn& f, const std::vector<double>& pts) {
    std::vector<double> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = apply_xi_at(ctx, f, pts[i]);
    return out;
}

// ---------------------------------------------------------------- inversion

namespace {

struct CutSolve {
    cplx c1, c2;
};

cplx contour_sum(const Ellipse& e, const std::function<cplx(cplx)>& f) {
    cplx acc{};
    for (int j = 0; j < e.m; ++j) acc += f(e.nodes[j]) * e.weights[j];
    return acc;
}

// Fix the constants so the bracket vanishes at both edges of cut h.
CutSolve solve_cut_constants(const XiContext& ctx, int h, const AnalyticFn& k,
                             const Ellipse& contour) {
    const auto& cut = ctx.mu().geometry.cuts[h];
    auto sh = [&](cplx z) { return ctx.sigma_h(h, z); };
    cplx Jm = contour_sum(contour, [&](cplx xi) { return sh(xi) / (xi - cut.a); });
    cplx Jp = contour_sum(contour, [&](cplx xi) { return sh(xi) / (xi - cut.b); });
    cplx Im = contour_sum(contour, [&](cplx xi) { return sh(xi) * k(xi) / (xi - cut.a); });
    cplx Ip = contour_sum(contour, [&](cplx xi) { return sh(xi) * k(xi) / (xi - cut.b); });
    cplx det = Jm - Jp;
    if (std::abs(det) < 1e-12)
        throw SolverError("invert_xi: Theta system near-singular (contour/geometry)");
    cplx c1 = -(Im - Ip) / det;
    cplx c2 = cplx(0, -1) * (Im + Jm * c1);
    return CutSolve{c1, c2};
}

Ellipse contour_for_points(const XiContext& ctx, int h, const std::vector<double>& pts) {
    Ellipse e = ctx.contours()[h];
    auto fits = [&](const Ellipse& el) {
        for (double x : pts)
            if (el.interior_margin(cplx(x, 0.0)) < el.node_spacing()) return false;
        return true;
    };
    if (fits(e)) return e;
    // inflate once, staying inside U
    Ellipse big = e.scaled(1.3);
    const auto& U = ctx.mu().geometry.U[h];
    if (big.cx - big.ra > U.a && big.cx + big.ra < U.b && fits(big)) return big;
    throw ResolutionError("invert_xi: evaluation point too close to the contour");
}

}  // namespace

std::pair<cplx, cplx> theta_solve(const XiContext& ctx, int h, std::pair<cplx, cplx> targets) {
    if (h < 0 || h >= ctx.mu().n_cuts()) throw ArgumentError("theta_solve: bad cut index");
    const auto& cut = ctx.mu().geometry.cuts[h];
    const auto& e = ctx.contours()[h];
    auto sh = [&](cplx z) { return ctx.sigma_h(h, z); };
    cplx Jm = contour_sum(e, [&](cplx xi) { return sh(xi) / (xi - cut.a); });
    cplx Jp = contour_sum(e, [&](cplx xi) { return sh(xi) / (xi - cut.b); });
    cplx det = Jm - Jp;
    if (std::abs(det) < 1e-12)
        throw SolverError("theta_solve: near-singular system (contour/geometry)");
    cplx c1 = (targets.first - targets.second) / det;
    cplx c2 = targets.first - Jm * c1;
    return {c1, c2};
}

namespace {

// Stage loop shared by the summed and stage-resolved entry points. The
// single-cut contour formula applied per component leaves a smooth
// cross-component defect that scales with the interpolation parameter:
//   Xi_t f = k + kappa + (1-t) D,
//   D(z) = sum_{h' != m(z)} w_{h'}(z)/(2 pi sigma_{h'}(z)).
// Re-inverting -(1-t) D (a Neumann iteration) removes it. One cut or t = 1:
// a single pass is exact.
XiStages stage_loop(const XiContext& ctx, const std::vector<Ellipse>& cont,
                    std::vector<std::vector<cplx>> kn,
                    const std::vector<std::vector<double>>& pts, double defect_scale) {
    const auto& mu = ctx.mu();
    const int g1 = mu.n_cuts();
    const double beta = mu.beta();

    std::vector<std::vector<cplx>> sig_h(g1);  // sigma_h on its own contour nodes
    for (int h = 0; h < g1; ++h) {
        sig_h[h].resize(cont[h].m);
        for (int j = 0; j < cont[h].m; ++j) sig_h[h][j] = ctx.sigma_h(h, cont[h].nodes[j]);
    }

    double knorm0 = 0;
    for (int h = 0; h < g1; ++h)
        for (const auto& v : kn[h]) knorm0 = std::max(knorm0, std::abs(v));

    XiStages st;
    const int max_stages = (g1 == 1 || defect_scale == 0.0) ? 1 : 60;
    for (int stage = 0; stage < max_stages; ++stage) {
        std::vector<CutSolve> cs(g1);
        for (int h = 0; h < g1; ++h) {
            const auto& e = cont[h];
            const auto& cut = mu.geometry.cuts[h];
            cplx Jm{}, Jp{}, Im{}, Ip{};
            for (int j = 0; j < e.m; ++j) {
                cplx base = sig_h[h][j] * e.weights[j];
                Jm += base / (e.nodes[j] - cut.a);
                Jp += base / (e.nodes[j] - cut.b);
                Im += base * kn[h][j] / (e.nodes[j] - cut.a);
                Ip += base * kn[h][j] / (e.nodes[j] - cut.b);
            }
            cplx det = Jm - Jp;
            if (std::abs(det) < 1e-12)
                throw SolverError("invert_xi: Theta system near-singular (contour/geometry)");
            cs[h].c1 = -(Im - Ip) / det;
            cs[h].c2 = cplx(0, -1) * (Im + Jm * cs[h].c1);
        }

        std::vector<std::vector<cplx>> samples(g1);
        for (int h = 0; h < g1; ++h) {
            const auto& e = cont[h];
            samples[h].assign(pts[h].size(), cplx{});
            for (std::size_t i = 0; i < pts[h].size(); ++i) {
                double x = pts[h][i];
                cplx w = cs[h].c2;
                for (int j = 0; j < e.m; ++j)
                    w += cplx(0, 1) * sig_h[h][j] * (kn[h][j] + cs[h].c1) / (e.nodes[j] - x) *
                         e.weights[j];
                double den = 2.0 * beta * kPi * kPi * ctx.sigma_sigma_h(h, x) * mu.S_eval(h, x);
                // Sign flipped relative to the contour formula as usually
                // printed; pinned by the round-trip identity Xi(f) = k + kappa.
                samples[h][i] = w / den;
            }
        }
        st.rhs.push_back(kn);
        st.samples.push_back(std::move(samples));
        if (g1 == 1 || defect_scale == 0.0) break;

        std::vector<std::vector<cplx>> knext(g1);
        double dn = 0;
        for (int m = 0; m < g1; ++m) {
            knext[m].assign(cont[m].m, cplx{});
            for (int j = 0; j < cont[m].m; ++j) {
                cplx z = cont[m].nodes[j];
                cplx acc{};
                for (int hp = 0; hp < g1; ++hp) {
                    if (hp == m) continue;
                    const auto& e = cont[hp];
                    cplx w = cs[hp].c2;
                    for (int i = 0; i < e.m; ++i)
                        w += cplx(0, 1) * sig_h[hp][i] * (kn[hp][i] + cs[hp].c1) /
                             (e.nodes[i] - z) * e.weights[i];
                    acc += w / (2.0 * kPi * ctx.sigma_h(hp, z));
                }
                knext[m][j] = -defect_scale * acc;
                dn = std::max(dn, std::abs(knext[m][j]));
            }
        }
        kn = std::move(knext);
        if (dn < 1e-14 * std::max(knorm0, 1e-300)) break;
        if (stage == max_stages - 1)
            throw SolverError("invert_xi: cross-component correction did not converge");
    }
    return st;
}

std::vector<std::vector<cplx>> invert_core(const XiContext& ctx, const std::vector<Ellipse>& cont,
                                           std::vector<std::vector<cplx>> kn,
                                           const std::vector<std::vector<double>>& pts) {
    auto st = stage_loop(ctx, cont, std::move(kn), pts, 1.0 - ctx.t());
    const int g1 = ctx.mu().n_cuts();
    std::vector<std::vector<cplx>> out(g1);
    for (int h = 0; h < g1; ++h) out[h].assign(pts[h].size(), cplx{});
    for (const auto& samples : st.samples)
        for (int h = 0; h < g1; ++h)
            for (std::size_t i = 0; i < pts[h].size(); ++i) out[h][i] += samples[h][i];
    return out;
}

}  // namespace

XiStages invert_xi_stages(const XiContext& ctx, const std::vector<std::vector<cplx>>& k_nodes,
                          const std::vector<std::vector<double>>& pts) {
    const auto& cont = ctx.contours();
    const int g1 = ctx.mu().n_cuts();
    if (static_cast<int>(pts.size()) != g1 || static_cast<int>(k_nodes.size()) != g1)
        throw ArgumentError("invert_xi_stages: per-cut sizes required");
    for (int h = 0; h < g1; ++h)
        if (static_cast<int>(k_nodes[h].size()) != cont[h].m)
            throw ArgumentError("invert_xi_stages: nodal values do not match contour nodes");
    return stage_loop(ctx, cont, k_nodes, pts, 1.0);
}

std::vector<std::vector<cplx>> invert_xi_samples(const XiContext& ctx, const AnalyticFn& k,
                                                 const std::vector<std::vector<double>>& pts) {
    const auto& mu = ctx.mu();
    const int g1 = mu.n_cuts();
    if (static_cast<int>(pts.size()) != g1) throw ArgumentError("invert_xi_samples: pts per cut");
    std::vector<Ellipse> cont;
    for (int h = 0; h < g1; ++h) cont.push_back(contour_for_points(ctx, h, pts[h]));
    std::vector<std::vector<cplx>> kn(g1);
    for (int h = 0; h < g1; ++h) {
        kn[h].resize(cont[h].m);
        for (int j = 0; j < cont[h].m; ++j) kn[h][j] = k(cont[h].nodes[j]);
    }
    return invert_core(ctx, cont, std::move(kn), pts);
}

std::vector<std::vector<cplx>> invert_xi_nodal(const XiContext& ctx,
                                               const std::vector<std::vector<cplx>>& k_nodes,
                                               const std::vector<std::vector<double>>& pts) {
    const auto& mu = ctx.mu();
    const int g1 = mu.n_cuts();
    if (static_cast<int>(pts.size()) != g1 || static_cast<int>(k_nodes.size()) != g1)
        throw ArgumentError("invert_xi_nodal: per-cut sizes required");
    const auto& cont = ctx.contours();
    for (int h = 0; h < g1; ++h) {
        if (static_cast<int>(k_nodes[h].size()) != cont[h].m)
            throw ArgumentError("invert_xi_nodal: nodal values do not match contour nodes");
        for (double x : pts[h])
            if (cont[h].interior_margin(cplx(x, 0.0)) < cont[h].node_spacing())
                throw ResolutionError("invert_xi_nodal: evaluation point too close to contour");
    }
    return invert_core(ctx, cont, k_nodes, pts);
}

InvertResult invert_xi(const XiContext& ctx, const AnalyticFn& k, const InvertOptions& opt) {
    const auto& mu = ctx.mu();
    const int g1 = mu.n_cuts();
    const int n = mu.nodes_per_cut();

    std::vector<cheb::Grid> bgrids;
    std::vector<std::vector<double>> pts(g1);
    for (int h = 0; h < g1; ++h) {
        bgrids.emplace_back(mu.geometry.B[h].a, mu.geometry.B[h].b, n);
        pts[h] = bgrids[h].x;
    }
    auto samples = invert_xi_samples(ctx, k, pts);

    InvertResult res;
    std::vector<std::vector<double>> vals(g1);
    for (int h = 0; h < g1; ++h) {
        vals[h].resize(n);
        for (int j = 0; j < n; ++j) vals[h][j] = samples[h][j].real();
    }
    res.f = FuncOnB(bgrids, vals);

    for (int h = 0; h < g1; ++h) {
        Ellipse e = contour_for_points(ctx, h, pts[h]);
        CutSolve cs = solve_cut_constants(ctx, h, k, e);
        res.c_consts.push_back({cs.c1, cs.c2});
        for (double edge : {mu.geometry.cuts[h].a, mu.geometry.cuts[h].b}) {
            cplx br = contour_sum(e, [&](cplx xi) {
                          return cplx(0, 1) * ctx.sigma_h(h, xi) * (k(xi) + cs.c1) / (xi - edge);
                      }) +
                      cs.c2;
            res.edge_bracket.push_back(std::abs(br));
        }
    }

    // kappa: the mean of Xi f - k against mu, per cut
    auto fc1 = res.f.as_c1();
    res.kappa.assign(g1, 0.0);
    {
        std::vector<double> masses(g1, 0.0);
        for (const auto& q : mu.quad()) {
            double d = apply_xi_at(ctx, fc1, q.x) - k(cplx(q.x, 0.0)).real();
            res.kappa[q.cut] += q.w * d;
            masses[q.cut] += q.w;
        }
        for (int h = 0; h < g1; ++h) res.kappa[h] /= masses[h];
    }

    if (opt.verify) {
        double knorm = 0;
        for (int h = 0; h < g1; ++h)
            for (double x : mu.grids[h].x)
                knorm = std::max(knorm, std::abs(k(cplx(x, 0.0)).real()));
        double resid = 0;
        for (int h = 0; h < g1; ++h) {
            double lo = mu.geometry.B[h].a + mu.geometry.delta;
            double hi = mu.geometry.B[h].b - mu.geometry.delta;
            for (int j = 0; j < opt.verify_grid; ++j) {
                double x = lo + (hi - lo) * j / (opt.verify_grid - 1.0);
                double r = apply_xi_at(ctx, fc1, x) - k(cplx(x, 0.0)).real() - res.kappa[h];
                resid = std::max(resid, std::abs(r));
            }
        }
        res.residual = resid;
        if (knorm > 0 && resid > opt.verify_rel_tol * std::max(knorm, 1e-30))
            throw SolverError("invert_xi: round-trip residual " + std::to_string(resid) +
                              " exceeds tolerance for |k| = " + std::to_string(knorm));
    }
    return res;
}

}  // namespace loggas
