#include "loggas/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace loggas {

using nlohmann::json;

int SupportGeometry::cut_index(double x) const {
    for (int h = 0; h < n_cuts(); ++h)
        if (cuts[h].contains(x)) return h;
    return -1;
}
int SupportGeometry::b_index(double x) const {
    for (int h = 0; h < n_cuts(); ++h)
        if (B[h].contains(x)) return h;
    return -1;
}
int SupportGeometry::u_index(double x) const {
    for (int h = 0; h < n_cuts(); ++h)
        if (U[h].contains(x)) return h;
    return -1;
}
bool SupportGeometry::in_B_delta(double x) const {
    for (int h = 0; h < n_cuts(); ++h)
        if (x >= B[h].a + delta && x <= B[h].b - delta) return true;
    return false;
}

void SupportGeometry::validate() const {
    const int g1 = n_cuts();
    if (g1 == 0) throw ArgumentError("SupportGeometry: no cuts");
    if (static_cast<int>(B.size()) != g1 || static_cast<int>(U.size()) != g1)
        throw ArgumentError("SupportGeometry: B/U size mismatch");
    for (int h = 0; h < g1; ++h) {
        if (!(cuts[h].a < cuts[h].b)) throw ArgumentError("SupportGeometry: degenerate cut");
        if (!(B[h].a < cuts[h].a && cuts[h].b < B[h].b))
            throw ArgumentError("SupportGeometry: A not strictly inside B");
        if (!(U[h].a < B[h].a && B[h].b < U[h].b))
            throw ArgumentError("SupportGeometry: B not strictly inside U");
        if (h > 0 && !(U[h - 1].b < U[h].a))
            throw ArgumentError("SupportGeometry: U components overlap or are unordered");
    }
    if (!(delta > 0)) throw ArgumentError("SupportGeometry: delta must be positive");
    for (int h = 0; h < g1; ++h) {
        if (!(B[h].a + delta < cuts[h].a && cuts[h].b < B[h].b - delta))
            throw ArgumentError("SupportGeometry: delta too large, B^delta misses A");
    }
}

SupportGeometry make_geometry(const std::vector<Cut>& cuts, const GeometryConfig& cfg) {
    SupportGeometry geo;
    geo.cuts = cuts;
    const int g1 = static_cast<int>(cuts.size());
    const double inf = std::numeric_limits<double>::infinity();

    double b_margin_min = inf;
    for (int h = 0; h < g1; ++h) {
        double gap_left = (h == 0) ? inf : cuts[h].a - cuts[h - 1].b;
        double gap_right = (h + 1 == g1) ? inf : cuts[h + 1].a - cuts[h].b;
        double half_gap = 0.5 * std::min(gap_left, gap_right);
        double margin = cfg.b_margin_factor * std::min(half_gap, cuts[h].length());
        b_margin_min = std::min(b_margin_min, margin);
        geo.B.push_back(Cut{cuts[h].a - margin, cuts[h].b + margin});

        double u_margin = std::max(cfg.u_margin_factor * cuts[h].half(), 2.0 * margin);
        u_margin = std::min(u_margin, cfg.u_gap_cap * std::min(gap_left, gap_right));
        if (u_margin <= margin) u_margin = 1.5 * margin;  // keep B strictly inside U
        geo.U.push_back(Cut{cuts[h].a - u_margin, cuts[h].b + u_margin});
    }
    geo.delta = cfg.delta_fraction * b_margin_min;
    geo.validate();
    return geo;
}

json SupportGeometry::to_json() const {
    json j;
    auto cuts_json = [](const std::vector<Cut>& cs) {
        json arr = json::array();
        for (const auto& c : cs) arr.push_back({{"a", c.a}, {"b", c.b}});
        return arr;
    };
    j["cuts"] = cuts_json(cuts);
    j["B"] = cuts_json(B);
    j["U"] = cuts_json(U);
    j["delta"] = delta;
    return j;
}

SupportGeometry SupportGeometry::from_json(const json& j) {
    SupportGeometry geo;
    auto read = [](const json& arr) {
        std::vector<Cut> cs;
        for (const auto& c : arr) cs.push_back(Cut{c.at("a").get<double>(), c.at("b").get<double>()});
        return cs;
    };
    geo.cuts = read(j.at("cuts"));
    geo.B = read(j.at("B"));
    geo.U = read(j.at("U"));
    geo.delta = j.at("delta").get<double>();
    geo.validate();
    return geo;
}

}  // namespace loggas
