#include "loggas/transport.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace loggas {

using nlohmann::json;

double interaction_kernel(const SupportGeometry& geo, double beta, double x, double y) {
    int hx = geo.u_index(x), hy = geo.u_index(y);
    if (hx < 0 || hy < 0) throw DomainError("interaction_kernel: point outside every U_h");
    if (hx == hy) return 0.0;
    return beta * std::log(std::abs(x - y));
}

// ------------------------------------------------------------- decoupled V~

DecoupledPotential::DecoupledPotential(std::shared_ptr<const EquilibriumMeasure> mu)
    : mu_(std::move(mu)) {
    const auto& geo = mu_->geometry;
    const int n = mu_->nodes_per_cut();
    std::vector<cheb::Grid> grids;
    std::vector<std::vector<double>> vals;
    for (int h = 0; h < geo.n_cuts(); ++h) {
        grids.emplace_back(geo.B[h].a, geo.B[h].b, n);
        std::vector<double> v(n);
        for (int j = 0; j < n; ++j) {
            double x = grids[h].x[j];
            v[j] = mu_->potential(x) - mu_->beta() * mu_->log_potential_excluding(h, x);
        }
        vals.push_back(std::move(v));
    }
    series_ = FuncOnB(std::move(grids), std::move(vals));
}

double DecoupledPotential::eval(double x) const { return series_.eval(x); }
double DecoupledPotential::deriv(double x) const { return series_.deriv(x); }

// ------------------------------------------------------------ TransportField

TransportField::TransportField(std::shared_ptr<const EquilibriumMeasure> mu, double t_,
                               FuncOnB y1hat,
                               std::vector<std::vector<std::vector<std::vector<double>>>> z_coef)
    : t(t_), mu_(std::move(mu)), y1hat_(std::move(y1hat)), z_coef_(std::move(z_coef)) {
    up_ = std::make_unique<Plateau>(mu_->geometry);
    const int n = mu_->nodes_per_cut();
    for (int h = 0; h < mu_->n_cuts(); ++h)
        bgrids_.emplace_back(mu_->geometry.B[h].a, mu_->geometry.B[h].b, n);
}

TransportField::TransportField(const TransportField& o)
    : t(o.t), mu_(o.mu_), y1hat_(o.y1hat_), z_coef_(o.z_coef_), bgrids_(o.bgrids_) {
    up_ = std::make_unique<Plateau>(mu_->geometry);
}

double TransportField::y1(double x) const {
    double u = up_->value(x);
    return u == 0.0 ? 0.0 : u * y1hat_.eval(x);
}

double TransportField::y1_deriv(double x) const {
    double u = up_->value(x);
    if (u == 0.0) return 0.0;
    return u * y1hat_.deriv(x) + up_->deriv(x) * y1hat_.eval(x);
}

double TransportField::zhat(double x, double y, int dx, int dy) const {
    int hx = mu_->geometry.b_index(x), hy = mu_->geometry.b_index(y);
    if (hx < 0 || hy < 0) return 0.0;
    const auto& block = z_coef_[hx][hy];
    const int n = static_cast<int>(block.size());
    if (n == 0) return 0.0;
    const auto& gx = bgrids_[hx];
    const auto& gy = bgrids_[hy];
    std::vector<double> cx(n);
    for (int i = 0; i < n; ++i) {
        if (dy == 0) {
            cx[i] = cheb::eval(block[i], gy.a, gy.b, y);
        } else {
            auto d = cheb::deriv_coeffs(block[i], gy.a, gy.b);
            cx[i] = cheb::eval(d, gy.a, gy.b, y);
        }
    }
    if (dx != 0) cx = cheb::deriv_coeffs(cx, gx.a, gx.b);
    return cheb::eval(cx, gx.a, gx.b, x);
}

double TransportField::z(double x, double y) const {
    double u = up_->value(x);
    return u == 0.0 ? 0.0 : u * zhat(x, y, 0, 0);
}

double TransportField::z_d1(double x, double y) const {
    double u = up_->value(x);
    if (u == 0.0) return 0.0;
    return u * zhat(x, y, 1, 0) + up_->deriv(x) * zhat(x, y, 0, 0);
}

double TransportField::z_d2(double x, double y) const {
    double u = up_->value(x);
    return u == 0.0 ? 0.0 : u * zhat(x, y, 0, 1);
}

TransportField::Row TransportField::contract_row(double x) const {
    Row r;
    r.window = up_->value(x);
    r.dwindow = up_->deriv(x);
    int hx = mu_->geometry.b_index(x);
    if (hx < 0) return r;
    const int g1 = mu_->n_cuts(), n = mu_->nodes_per_cut();
    const auto& gx = bgrids_[hx];
    r.coef.resize(g1);
    r.dcoef.resize(g1);
    r.xdcoef.resize(g1);
    std::vector<double> cx(n);
    for (int hy = 0; hy < g1; ++hy) {
        r.coef[hy].assign(n, 0.0);
        r.xdcoef[hy].assign(n, 0.0);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) cx[i] = z_coef_[hx][hy][i][j];
            r.coef[hy][j] = cheb::eval(cx, gx.a, gx.b, x);
            auto dc = cheb::deriv_coeffs(cx, gx.a, gx.b);
            r.xdcoef[hy][j] = cheb::eval(dc, gx.a, gx.b, x);
        }
        r.dcoef[hy] = cheb::deriv_coeffs(r.coef[hy], bgrids_[hy].a, bgrids_[hy].b);
    }
    return r;
}

double TransportField::row_z(const Row& r, double y) const {
    if (r.window == 0.0 || r.coef.empty()) return 0.0;
    int hy = mu_->geometry.b_index(y);
    if (hy < 0) return 0.0;
    return r.window * cheb::eval(r.coef[hy], bgrids_[hy].a, bgrids_[hy].b, y);
}

double TransportField::row_z_d1(const Row& r, double y) const {
    if (r.coef.empty() || (r.window == 0.0 && r.dwindow == 0.0)) return 0.0;
    int hy = mu_->geometry.b_index(y);
    if (hy < 0) return 0.0;
    return r.window * cheb::eval(r.xdcoef[hy], bgrids_[hy].a, bgrids_[hy].b, y) +
           r.dwindow * cheb::eval(r.coef[hy], bgrids_[hy].a, bgrids_[hy].b, y);
}

double TransportField::row_z_d2(const Row& r, double y) const {
    if (r.window == 0.0 || r.coef.empty()) return 0.0;
    int hy = mu_->geometry.b_index(y);
    if (hy < 0) return 0.0;
    return r.window * cheb::eval(r.dcoef[hy], bgrids_[hy].a, bgrids_[hy].b, y);
}

double TransportField::z_mean(double x) const {
    Row r = contract_row(x);
    double acc = 0;
    for (const auto& q : mu_->quad()) acc += q.w * row_z(r, q.x);
    return acc;
}

double TransportField::z_d1_mean(double x) const {
    double acc = 0;
    for (const auto& q : mu_->quad()) acc += q.w * z_d1(x, q.x);
    return acc;
}

namespace {

std::vector<std::vector<double>> tensor_coeffs(const cheb::Grid& gx, const cheb::Grid& gy,
                                               const std::vector<std::vector<double>>& vals) {
    const int n = gx.n;
    std::vector<std::vector<double>> cxy(n, std::vector<double>(n));
    for (int q = 0; q < n; ++q) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = vals[i][q];
        auto cc = cheb::vals_to_coeffs(gx, col);
        for (int i = 0; i < n; ++i) cxy[i][q] = cc[i];
    }
    std::vector<std::vector<double>> coef(n);
    for (int i = 0; i < n; ++i) coef[i] = cheb::vals_to_coeffs(gy, cxy[i]);
    return coef;
}

}  // namespace

json TransportField::to_json() const {
    json j;
    j["t"] = t;
    j["nodes"] = mu_->nodes_per_cut();
    j["measure"] = mu_->to_json();
    const int g1 = mu_->n_cuts(), n = mu_->nodes_per_cut();
    json y1v = json::array();
    for (int h = 0; h < g1; ++h) {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) v[i] = y1hat_.eval(bgrids_[h].x[i]);
        y1v.push_back(v);
    }
    j["y1hat"] = y1v;
    json zb = json::array();
    for (int hx = 0; hx < g1; ++hx) {
        json row = json::array();
        for (int hy = 0; hy < g1; ++hy) {
            std::vector<double> flat;
            flat.reserve(static_cast<std::size_t>(n) * n);
            for (int i = 0; i < n; ++i)
                for (int q = 0; q < n; ++q)
                    flat.push_back(zhat(bgrids_[hx].x[i], bgrids_[hy].x[q], 0, 0));
            row.push_back(flat);
        }
        zb.push_back(row);
    }
    j["zhat"] = zb;
    return j;
}

TransportField TransportField::from_json(const json& j) {
    auto mu = std::make_shared<EquilibriumMeasure>(EquilibriumMeasure::from_json(j.at("measure")));
    const int g1 = mu->n_cuts(), n = j.at("nodes").get<int>();
    std::vector<cheb::Grid> grids;
    for (int h = 0; h < g1; ++h) grids.emplace_back(mu->geometry.B[h].a, mu->geometry.B[h].b, n);
    std::vector<std::vector<double>> y1v;
    for (int h = 0; h < g1; ++h) y1v.push_back(j.at("y1hat").at(h).get<std::vector<double>>());
    FuncOnB y1hat(grids, y1v);

    std::vector<std::vector<std::vector<std::vector<double>>>> zc(
        g1, std::vector<std::vector<std::vector<double>>>(g1));
    for (int hx = 0; hx < g1; ++hx) {
        for (int hy = 0; hy < g1; ++hy) {
            auto flat = j.at("zhat").at(hx).at(hy).get<std::vector<double>>();
            std::vector<std::vector<double>> vals(n, std::vector<double>(n));
            for (int i = 0; i < n; ++i)
                for (int q = 0; q < n; ++q) vals[i][q] = flat[static_cast<std::size_t>(i) * n + q];
            zc[hx][hy] = tensor_coeffs(grids[hx], grids[hy], vals);
        }
    }
    return TransportField(mu, j.at("t").get<double>(), std::move(y1hat), std::move(zc));
}

// ------------------------------------------------------------ FieldSchedule

TransportField FieldSchedule::at(double t) const {
    const int g1 = mu_->n_cuts(), n = mu_->nodes_per_cut();
    const int S = n_stages();
    std::vector<std::vector<std::vector<std::vector<double>>>> zc(
        g1, std::vector<std::vector<std::vector<double>>>(g1));
    for (int hx = 0; hx < g1; ++hx)
        for (int hy = 0; hy < g1; ++hy)
            zc[hx][hy].assign(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> y1v(g1, std::vector<double>(n, 0.0));
    double w = 1.0;
    for (int r = 0; r < S; ++r) {
        for (int hx = 0; hx < g1; ++hx)
            for (int hy = 0; hy < g1; ++hy)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) zc[hx][hy][i][j] += w * z_st_[r][hx][hy][i][j];
        if (r < static_cast<int>(y1_st_.size()))
            for (int h = 0; h < g1; ++h)
                for (int i = 0; i < n; ++i) y1v[h][i] += w * y1_st_[r][h][i];
        w *= (1.0 - t);
    }
    FuncOnB y1hat(bgrids_, y1v);
    return TransportField(mu_, t, std::move(y1hat), std::move(zc));
}

json FieldSchedule::to_json() const {
    json j;
    j["nodes"] = mu_->nodes_per_cut();
    j["measure"] = mu_->to_json();
    const int g1 = mu_->n_cuts(), n = mu_->nodes_per_cut();
    json zst = json::array();
    for (const auto& blocks : z_st_) {
        json stage = json::array();
        for (int hx = 0; hx < g1; ++hx) {
            json row = json::array();
            for (int hy = 0; hy < g1; ++hy) {
                // values at the tensor nodes (coefficients rebuilt on load)
                std::vector<std::vector<double>> ey(n, std::vector<double>(n));
                for (int a = 0; a < n; ++a)
                    for (int q = 0; q < n; ++q)
                        ey[a][q] = cheb::eval(blocks[hx][hy][a], bgrids_[hy].a, bgrids_[hy].b,
                                              bgrids_[hy].x[q]);
                std::vector<double> flat;
                flat.reserve(static_cast<std::size_t>(n) * n);
                std::vector<double> cx(n);
                for (int i = 0; i < n; ++i)
                    for (int q = 0; q < n; ++q) {
                        for (int a = 0; a < n; ++a) cx[a] = ey[a][q];
                        flat.push_back(
                            cheb::eval(cx, bgrids_[hx].a, bgrids_[hx].b, bgrids_[hx].x[i]));
                    }
                row.push_back(flat);
            }
            stage.push_back(row);
        }
        zst.push_back(stage);
    }
    j["z_stages"] = zst;
    json yst = json::array();
    for (const auto& stage : y1_st_) {
        json s = json::array();
        for (int h = 0; h < g1; ++h) s.push_back(stage[h]);
        yst.push_back(s);
    }
    j["y1_stages"] = yst;
    return j;
}

FieldSchedule FieldSchedule::from_json(const json& j) {
    FieldSchedule fs;
    fs.mu_ = std::make_shared<EquilibriumMeasure>(EquilibriumMeasure::from_json(j.at("measure")));
    const int g1 = fs.mu_->n_cuts(), n = j.at("nodes").get<int>();
    for (int h = 0; h < g1; ++h)
        fs.bgrids_.emplace_back(fs.mu_->geometry.B[h].a, fs.mu_->geometry.B[h].b, n);
    for (const auto& stage : j.at("z_stages")) {
        ZBlocks blocks(g1, std::vector<Tensor2>(g1));
        for (int hx = 0; hx < g1; ++hx) {
            for (int hy = 0; hy < g1; ++hy) {
                auto flat = stage.at(hx).at(hy).get<std::vector<double>>();
                Tensor2 vals(n, std::vector<double>(n));
                for (int i = 0; i < n; ++i)
                    for (int q = 0; q < n; ++q)
                        vals[i][q] = flat[static_cast<std::size_t>(i) * n + q];
                blocks[hx][hy] = tensor_coeffs(fs.bgrids_[hx], fs.bgrids_[hy], vals);
            }
        }
        fs.z_st_.push_back(std::move(blocks));
    }
    for (const auto& stage : j.at("y1_stages")) {
        std::vector<std::vector<double>> s;
        for (int h = 0; h < g1; ++h) s.push_back(stage.at(h).get<std::vector<double>>());
        fs.y1_st_.push_back(std::move(s));
    }
    return fs;
}

// ------------------------------------------------------------- field build

FieldSchedule build_field_schedule(const XiContext& ctx) {
    auto mu = ctx.mu_ptr();
    const auto& geo = mu->geometry;
    const int g1 = mu->n_cuts();
    const int n = mu->nodes_per_cut();
    const double beta = mu->beta();

    FieldSchedule fs;
    fs.mu_ = mu;
    std::vector<std::vector<double>> bpts(g1);
    for (int h = 0; h < g1; ++h) {
        fs.bgrids_.emplace_back(geo.B[h].a, geo.B[h].b, n);
        bpts[h] = fs.bgrids_[h].x;
    }

    if (g1 == 1) {
        // no cross-cut interaction: the field vanishes identically
        FieldSchedule::ZBlocks blocks(1, std::vector<FieldSchedule::Tensor2>(1));
        blocks[0][0].assign(n, std::vector<double>(n, 0.0));
        fs.z_st_.push_back(std::move(blocks));
        fs.y1_st_.push_back({std::vector<double>(n, 0.0)});
        return fs;
    }

    // nodal values of the cross-cut interaction column on all contours
    auto column_nodes = [&](int hy, cplx y) {
        std::vector<std::vector<cplx>> kn(g1);
        for (int m = 0; m < g1; ++m) {
            const auto& e = ctx.contours()[m];
            kn[m].assign(e.m, cplx{});
            if (m == hy) continue;
            for (int j = 0; j < e.m; ++j) {
                cplx xi = e.nodes[j];
                kn[m][j] = (m > hy) ? beta * std::log(xi - y) : beta * std::log(y - xi);
            }
        }
        return kn;
    };

    // z columns, stage-resolved
    std::vector<std::vector<std::vector<std::vector<std::vector<double>>>>> zvals;  // [r][hx][hy][i][q]
    std::vector<XiStages> col_stages(static_cast<std::size_t>(g1) * n);
    parallel_for(col_stages.size(), [&](std::size_t idx) {
        int hy = static_cast<int>(idx) / n;
        int q = static_cast<int>(idx) % n;
        double y = fs.bgrids_[hy].x[q];
        col_stages[idx] = invert_xi_stages(ctx, column_nodes(hy, cplx(y, 0.0)), bpts);
    });
    int Rz = 1;
    for (const auto& st : col_stages) Rz = std::max(Rz, static_cast<int>(st.samples.size()));
    zvals.assign(Rz, std::vector<std::vector<std::vector<std::vector<double>>>>(
                         g1, std::vector<std::vector<std::vector<double>>>(g1)));
    for (int r = 0; r < Rz; ++r)
        for (int hx = 0; hx < g1; ++hx)
            for (int hy = 0; hy < g1; ++hy) zvals[r][hx][hy].assign(n, std::vector<double>(n, 0.0));
    for (int hy = 0; hy < g1; ++hy) {
        for (int q = 0; q < n; ++q) {
            const auto& st = col_stages[static_cast<std::size_t>(hy) * n + q];
            for (int r = 0; r < static_cast<int>(st.samples.size()); ++r)
                for (int hx = 0; hx < g1; ++hx)
                    for (int i = 0; i < n; ++i)
                        zvals[r][hx][hy][i][q] = 0.5 * st.samples[r][hx][i].real();
        }
    }
    for (int r = 0; r < Rz; ++r) {
        FieldSchedule::ZBlocks blocks(g1, std::vector<FieldSchedule::Tensor2>(g1));
        for (int hx = 0; hx < g1; ++hx)
            for (int hy = 0; hy < g1; ++hy)
                blocks[hx][hy] = tensor_coeffs(fs.bgrids_[hx], fs.bgrids_[hy], zvals[r][hx][hy]);
        fs.z_st_.push_back(std::move(blocks));
    }

    // y1 stages; identically zero at beta = 2
    fs.y1_st_.assign(1, std::vector<std::vector<double>>(g1, std::vector<double>(n, 0.0)));
    if (beta != 2.0) {
        std::vector<std::vector<double>> apts(g1);
        for (int h = 0; h < g1; ++h) apts[h] = mu->grids[h].x;

        // q^{(r)}(xi) = int d1 zhat^{(r)}(s, xi) dmu(s) on every contour node
        const int Mc = ctx.contours()[0].m;
        std::vector<std::vector<std::vector<cplx>>> qst(
            Rz, std::vector<std::vector<cplx>>(g1));
        for (int r = 0; r < Rz; ++r)
            for (int m = 0; m < g1; ++m) qst[r][m].assign(ctx.contours()[m].m, cplx{});
        parallel_for(static_cast<std::size_t>(g1) * Mc, [&](std::size_t idx) {
            int m = static_cast<int>(idx) / Mc;
            int j = static_cast<int>(idx) % Mc;
            cplx xi = ctx.contours()[m].nodes[j];
            auto st = invert_xi_stages(ctx, column_nodes(m, xi), apts);
            for (int r = 0; r < static_cast<int>(st.samples.size()); ++r) {
                cplx acc{};
                int base = 0;
                for (int h = 0; h < g1; ++h) {
                    std::vector<cplx> v(n);
                    for (int i = 0; i < n; ++i) v[i] = 0.5 * st.samples[r][h][i];
                    auto cc = cheb::vals_to_coeffs(mu->grids[h], v);
                    auto dc = cheb::deriv_coeffs(cc, mu->grids[h].a, mu->grids[h].b);
                    for (int i = 0; i < n; ++i) {
                        const auto& qn = mu->quad()[base + i];
                        acc += qn.w * cheb::eval(dc, mu->grids[h].a, mu->grids[h].b, qn.x);
                    }
                    base += n;
                }
                qst[r][m][j] = acc;
            }
        });

        // y1 stage u collects (s,r) with s + r = u
        int Umax = Rz;
        std::vector<std::vector<std::vector<double>>> y1st(
            2 * Rz, std::vector<std::vector<double>>(g1, std::vector<double>(n, 0.0)));
        for (int r = 0; r < Rz; ++r) {
            auto st = invert_xi_stages(ctx, qst[r], bpts);
            for (int s = 0; s < static_cast<int>(st.samples.size()); ++s) {
                int u = r + s;
                if (u >= static_cast<int>(y1st.size()))
                    y1st.resize(u + 1,
                                std::vector<std::vector<double>>(g1, std::vector<double>(n, 0.0)));
                for (int h = 0; h < g1; ++h)
                    for (int i = 0; i < n; ++i)
                        y1st[u][h][i] += (beta / 2.0 - 1.0) * st.samples[s][h][i].real();
                Umax = std::max(Umax, u + 1);
            }
        }
        y1st.resize(Umax);
        fs.y1_st_ = std::move(y1st);
        // pad z stages so at() walks both stacks together
        while (static_cast<int>(fs.z_st_.size()) < Umax) {
            FieldSchedule::ZBlocks blocks(g1, std::vector<FieldSchedule::Tensor2>(g1));
            for (int hx = 0; hx < g1; ++hx)
                for (int hy = 0; hy < g1; ++hy)
                    blocks[hx][hy].assign(n, std::vector<double>(n, 0.0));
            fs.z_st_.push_back(std::move(blocks));
        }
    }
    return fs;
}

TransportField build_vector_field(const XiContext& ctx) {
    return build_field_schedule(ctx).at(ctx.t());
}

// ------------------------------------------------------------------- flow

namespace {

void validate_config(const SupportGeometry& geo, const std::vector<std::vector<double>>& config) {
    if (static_cast<int>(config.size()) != geo.n_cuts())
        throw ArgumentError("flow: config must have one vector per cut");
    for (int h = 0; h < geo.n_cuts(); ++h) {
        for (std::size_t i = 0; i < config[h].size(); ++i) {
            if (!geo.B[h].contains(config[h][i]))
                throw DomainError("flow: configuration point outside its B_h");
            if (i > 0 && config[h][i] < config[h][i - 1])
                throw ArgumentError("flow: configuration not sorted within a cut");
        }
    }
}

}  // namespace

std::vector<std::vector<double>> flow_first_order(const FieldSchedule& schedule,
                                                  const std::vector<std::vector<double>>& config,
                                                  int rk4_steps) {
    const auto& mu = schedule.mu();
    const auto& geo = mu.geometry;
    validate_config(geo, config);
    const int g1 = geo.n_cuts(), n = mu.nodes_per_cut();
    const int S = schedule.n_stages();
    Plateau up(geo);

    std::vector<double> flat;
    std::vector<int> comp;
    for (int h = 0; h < g1; ++h)
        for (double x : config[h]) {
            flat.push_back(x);
            comp.push_back(h);
        }
    const int N = static_cast<int>(flat.size());
    std::vector<std::vector<double>> out(config.size());
    for (std::size_t h = 0; h < config.size(); ++h) out[h].assign(config[h].size(), 0.0);
    if (N == 0) return out;

    // Per stage: b_r and A_r via x-contracted rows of the stage blocks.
    std::vector<std::vector<double>> b(S, std::vector<double>(N, 0.0));
    std::vector<std::vector<std::vector<double>>> A(
        S, std::vector<std::vector<double>>(N, std::vector<double>(N, 0.0)));
    const auto& grids = schedule.bgrids_;
    const std::vector<std::vector<double>> y1zero(g1, std::vector<double>(n, 0.0));
    for (int r = 0; r < S; ++r) {
        const auto& blocks = schedule.z_st_[r];
        const auto& y1v =
            r < static_cast<int>(schedule.y1_st_.size()) ? schedule.y1_st_[r] : y1zero;
        FuncOnB y1fn(grids, y1v);
        for (int a = 0; a < N; ++a) {
            double x = flat[a];
            int ha = comp[a];
            double ux = up.value(x);
            // contract the x direction once per target component
            std::vector<std::vector<double>> row(g1), drow(g1);
            for (int hy = 0; hy < g1; ++hy) {
                row[hy].assign(n, 0.0);
                for (int j = 0; j < n; ++j) {
                    std::vector<double> cx(n);
                    for (int i = 0; i < n; ++i) cx[i] = blocks[ha][hy][i][j];
                    row[hy][j] = cheb::eval(cx, grids[ha].a, grids[ha].b, x);
                }
                drow[hy] = cheb::deriv_coeffs(row[hy], grids[hy].a, grids[hy].b);
            }
            auto zval = [&](double y) {
                int hy = geo.b_index(y);
                if (hy < 0) return 0.0;
                return ux * cheb::eval(row[hy], grids[hy].a, grids[hy].b, y);
            };
            auto zd2 = [&](double y) {
                int hy = geo.b_index(y);
                if (hy < 0) return 0.0;
                return ux * cheb::eval(drow[hy], grids[hy].a, grids[hy].b, y);
            };
            double acc = ux * y1fn.eval(x);
            double mean = 0;
            for (const auto& qn : mu.quad()) mean += qn.w * zval(qn.x);
            acc -= static_cast<double>(N) * mean;
            for (int c = 0; c < N; ++c) {
                acc += zval(flat[c]);
                A[r][a][c] = zd2(flat[c]) / static_cast<double>(N);
            }
            b[r][a] = acc;
        }
    }

    std::vector<double> w(S);
    auto rhs = [&](double t, const std::vector<double>& v, std::vector<double>& o) {
        double ww = 1.0;
        for (int r = 0; r < S; ++r) {
            w[r] = ww;
            ww *= (1.0 - t);
        }
        for (int a = 0; a < N; ++a) {
            double acc = 0;
            for (int r = 0; r < S; ++r) {
                double s = b[r][a];
                const auto& row = A[r][a];
                for (int c = 0; c < N; ++c) s += row[c] * v[c];
                acc += w[r] * s;
            }
            o[a] = acc;
        }
    };

    std::vector<double> X(N, 0.0), k1(N), k2(N), k3(N), k4(N), tmp(N);
    const double dt = 1.0 / rk4_steps;
    for (int s = 0; s < rk4_steps; ++s) {
        double t0 = s * dt;
        rhs(t0, X, k1);
        for (int a = 0; a < N; ++a) tmp[a] = X[a] + 0.5 * dt * k1[a];
        rhs(t0 + 0.5 * dt, tmp, k2);
        for (int a = 0; a < N; ++a) tmp[a] = X[a] + 0.5 * dt * k2[a];
        rhs(t0 + 0.5 * dt, tmp, k3);
        for (int a = 0; a < N; ++a) tmp[a] = X[a] + dt * k3[a];
        rhs(t0 + dt, tmp, k4);
        for (int a = 0; a < N; ++a) X[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    }

    int idx = 0;
    for (std::size_t h = 0; h < config.size(); ++h)
        for (std::size_t i = 0; i < config[h].size(); ++i) out[h][i] = X[idx++];
    return out;
}

double monge_ampere_residual(const TransportField& field,
                             const std::vector<std::vector<double>>& config) {
    validate_config(field.geometry(), config);
    const auto& mu = field.mu();
    const double beta = mu.beta(), t = field.t;
    DecoupledPotential vt(field.mu_ptr());

    std::vector<double> flat;
    std::vector<int> cut_of;
    for (int h = 0; h < static_cast<int>(config.size()); ++h)
        for (double x : config[h]) {
            flat.push_back(x);
            cut_of.push_back(h);
        }
    const int N = static_cast<int>(flat.size());

    std::vector<double> Y(N);
    double divY = 0;
    for (int a = 0; a < N; ++a) {
        double x = flat[a];
        auto row = field.contract_row(x);
        double zmean = 0, d1mean = 0;
        for (const auto& q : mu.quad()) {
            zmean += q.w * field.row_z(row, q.x);
            d1mean += q.w * field.row_z_d1(row, q.x);
        }
        double s = -static_cast<double>(N) * zmean;
        double d = field.y1_deriv(x) - static_cast<double>(N) * d1mean;
        for (int c = 0; c < N; ++c) {
            s += field.row_z(row, flat[c]);
            d += field.row_z_d1(row, flat[c]);
        }
        d += field.row_z_d2(row, x);
        Y[a] = (field.y1(x) + s) / N;
        divY += d / N;
    }

    double R = divY;
    for (int a = 0; a < N; ++a)
        for (int c = a + 1; c < N; ++c) R += beta * (Y[a] - Y[c]) / (flat[a] - flat[c]);
    for (int a = 0; a < N; ++a) {
        double x = flat[a];
        double Vp = mu.potential.evaluate(x, 1);
        for (int c = 0; c < N; ++c) {
            double y = flat[c];
            double d1T = -(1.0 - t) * Vp;
            if (t != 0.0) {
                double w = (cut_of[a] != cut_of[c]) ? beta / (x - y) : 0.0;
                d1T -= t * (vt.deriv(x) + w);
            }
            R += d1T * Y[a];
            if (cut_of[a] != cut_of[c]) R -= 0.5 * beta * std::log(std::abs(x - y));
        }
        R += static_cast<double>(N) * beta * mu.log_potential_excluding(cut_of[a], x);
    }
    return R;
}

// --------------------------------------------------------------- transport

double edge_derivative_limit(const EquilibriumMeasure& source, const EquilibriumMeasure& target,
                             bool left_edge) {
    if (source.n_cuts() != 1 || target.n_cuts() != 1)
        throw ArgumentError("edge_derivative_limit: one-cut measures required");
    auto coeff = [&](const EquilibriumMeasure& m) {
        const auto& c = m.geometry.cuts[0];
        double edge = left_edge ? c.a : c.b;
        return m.S_eval(0, edge) * std::sqrt(c.length());
    };
    return std::pow(coeff(source) / coeff(target), 2.0 / 3.0);
}

MonotoneMap monotone_transport(std::shared_ptr<const EquilibriumMeasure> source,
                               std::shared_ptr<const EquilibriumMeasure> target, int n_grid) {
    if (source->n_cuts() != 1 || target->n_cuts() != 1)
        throw ArgumentError("monotone_transport: both measures must be one-cut");
    for (double s : source->S[0])
        if (s <= 0) throw SolverError("monotone_transport: source density degenerate");
    for (double s : target->S[0])
        if (s <= 0) throw SolverError("monotone_transport: target density degenerate");

    const auto& cs = source->geometry.cuts[0];
    const auto& ct = target->geometry.cuts[0];
    MonotoneMap map;
    map.source = source;
    map.target = target;
    map.x.resize(n_grid);
    map.phi.resize(n_grid);
    map.phip.resize(n_grid);
    double mass_s = source->mass(0), mass_t = target->mass(0);
    for (int i = 0; i < n_grid; ++i) {
        // theta-uniform grid clusters points near the edges where the map bends
        double th = kPi * i / (n_grid - 1.0);
        double x = cs.mid() - cs.half() * std::cos(th);
        map.x[i] = x;
        if (i == 0) {
            map.phi[i] = ct.a;
            map.phip[i] = edge_derivative_limit(*source, *target, true);
            continue;
        }
        if (i == n_grid - 1) {
            map.phi[i] = ct.b;
            map.phip[i] = edge_derivative_limit(*source, *target, false);
            continue;
        }
        double q = source->cut_cdf(0, x) / mass_s;
        double y = target->quantile(q * mass_t);
        map.phi[i] = y;
        map.phip[i] = (source->density(x) / mass_s) / (target->density(y) / mass_t);
    }
    for (int i = 1; i < n_grid; ++i)
        if (!(map.phi[i] > map.phi[i - 1]))
            throw SolverError("monotone_transport: map failed strict monotonicity");
    return map;
}

double MonotoneMap::eval(double s) const {
    if (s <= x.front()) return phi.front();
    if (s >= x.back()) return phi.back();
    auto it = std::upper_bound(x.begin(), x.end(), s);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    double t = (s - x[i - 1]) / (x[i] - x[i - 1]);
    return phi[i - 1] * (1.0 - t) + phi[i] * t;
}

double MonotoneMap::deriv(double s) const {
    if (s <= x.front()) return phip.front();
    if (s >= x.back()) return phip.back();
    auto it = std::upper_bound(x.begin(), x.end(), s);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    double t = (s - x[i - 1]) / (x[i] - x[i - 1]);
    return phip[i - 1] * (1.0 - t) + phip[i] * t;
}

}  // namespace loggas
