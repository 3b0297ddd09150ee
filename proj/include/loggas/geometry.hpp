#pragma once
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loggas/potential.hpp"
#include "loggas/util.hpp"

namespace loggas {

struct Cut {
    double a = 0, b = 0;
    double mid() const { return 0.5 * (a + b); }
    double half() const { return 0.5 * (b - a); }
    double length() const { return b - a; }
    bool contains(double x) const { return x >= a && x <= b; }
};

struct GeometryConfig {
    double b_margin_factor = 0.1;  // B_h = A_h +- factor*min(half-gap, cut length)
    double delta_fraction = 0.5;   // delta = fraction of the B margin
    double u_margin_factor = 0.55; // U margin as a fraction of the cut half-length
    double u_gap_cap = 0.45;       // U margin capped by this fraction of the gap
};

// Nested interval system A_h c B_h c U_h around each cut, plus the plateau
// width delta defining B^delta.
struct SupportGeometry {
    std::vector<Cut> cuts;  // A_h, ordered, disjoint
    std::vector<Cut> B;
    std::vector<Cut> U;
    double delta = 0.0;

    int n_cuts() const { return static_cast<int>(cuts.size()); }
    int genus() const { return n_cuts() - 1; }

    // Component index of x, -1 if outside.
    int cut_index(double x) const;  // within A
    int b_index(double x) const;
    int u_index(double x) const;
    bool in_B(double x) const { return b_index(x) >= 0; }
    bool in_B_delta(double x) const;

    void validate() const;

    nlohmann::json to_json() const;
    static SupportGeometry from_json(const nlohmann::json& j);
};

// Default enlargements around given cuts.
SupportGeometry make_geometry(const std::vector<Cut>& cuts, const GeometryConfig& cfg = {});

}  // namespace loggas
