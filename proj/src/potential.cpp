#include "loggas/potential.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace loggas {

using nlohmann::json;

Potential Potential::polynomial(std::vector<double> coeffs, double beta,
                                std::vector<Interval> domain) {
    if (beta <= 0) throw ArgumentError("Potential: beta must be positive");
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    Potential p;
    p.kind_ = Kind::Polynomial;
    p.coeffs_ = std::move(coeffs);
    p.beta_ = beta;
    p.domain_ = std::move(domain);
    return p;
}

Potential Potential::sum(std::vector<Term> terms, double beta, std::vector<Interval> domain) {
    if (beta <= 0) throw ArgumentError("Potential: beta must be positive");
    Potential p;
    p.kind_ = Kind::Sum;
    p.terms_ = std::move(terms);
    p.beta_ = beta;
    p.domain_ = std::move(domain);
    return p;
}

Potential Potential::gaussian(double beta) {
    if (beta <= 0) throw ArgumentError("gaussian: beta must be positive");
    return polynomial({0.0, 0.0, beta / 4.0}, beta);
}

int Potential::max_order() const {
    if (kind_ == Kind::Polynomial) return 64;
    return 2;  // closed-form derivative rules shipped up to second order
}

bool Potential::in_domain(double x) const {
    for (const auto& iv : domain_)
        if (iv.contains(x)) return true;
    return false;
}

namespace {

template <typename T>
T horner(const std::vector<double>& c, T x) {
    T acc{};
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

std::vector<double> poly_derivative(std::vector<double> c, int order) {
    for (int k = 0; k < order; ++k) {
        if (c.size() <= 1) return {0.0};
        std::vector<double> d(c.size() - 1);
        for (std::size_t j = 1; j < c.size(); ++j) d[j - 1] = c[j] * static_cast<double>(j);
        c = std::move(d);
    }
    return c;
}

template <typename T>
T log1px2_deriv(double coef, T x, int order) {
    switch (order) {
        case 0: return coef * std::log(1.0 + x * x);
        case 1: return coef * 2.0 * x / (1.0 + x * x);
        case 2: {
            T d = 1.0 + x * x;
            return coef * 2.0 * (1.0 - x * x) / (d * d);
        }
        default: throw CapabilityError("log1p_x2 term: derivatives beyond order 2 unsupported");
    }
}

}  // namespace

template <typename T>
T Potential::eval_impl(T x, int order) const {
    if (kind_ == Kind::Polynomial) {
        return horner(poly_derivative(coeffs_, order), x);
    }
    T acc{};
    for (const auto& t : terms_) {
        switch (t.type) {
            case Term::Type::Monomial: {
                std::vector<double> c(static_cast<std::size_t>(t.power) + 1, 0.0);
                c[t.power] = t.coef;
                acc += horner(poly_derivative(c, order), x);
                break;
            }
            case Term::Type::Log1pX2: acc += log1px2_deriv(t.coef, x, order); break;
        }
    }
    return acc;
}

double Potential::evaluate(double x, int order) const {
    if (order < 0) throw ArgumentError("evaluate: order must be nonnegative");
    if (order > max_order()) throw CapabilityError("evaluate: derivative order unsupported");
    if (!in_domain(x)) throw DomainError("evaluate: x outside potential domain");
    return eval_impl(x, order);
}

cplx Potential::evaluate_c(cplx z, int order) const {
    if (order < 0) throw ArgumentError("evaluate_c: order must be nonnegative");
    if (order > max_order()) throw CapabilityError("evaluate_c: derivative order unsupported");
    return eval_impl(z, order);
}

bool Potential::confinement_check() const {
    bool unbounded_left = false, unbounded_right = false;
    for (const auto& iv : domain_) {
        if (!std::isfinite(iv.a)) unbounded_left = true;
        if (!std::isfinite(iv.b)) unbounded_right = true;
    }
    if (!unbounded_left && !unbounded_right) return true;  // vacuous

    if (kind_ == Kind::Polynomial) {
        int deg = static_cast<int>(coeffs_.size()) - 1;
        if (deg < 1) return false;
        double lead = coeffs_.back();
        // V ~ lead*x^deg; the ratio against beta log|x| diverges iff the
        // leading term tends to +infinity on that side.
        if (unbounded_right && lead <= 0) return false;
        if (unbounded_left && lead * (deg % 2 == 0 ? 1.0 : -1.0) <= 0) return false;
        return true;
    }

    // Asymptotic ratio test: require V(x)/(beta log|x|) > 1 with margin and no
    // decay along a geometric sequence of |x|.
    auto side_ok = [&](double sign) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double mag : {1e4, 1e5, 1e6, 1e7, 1e8}) {
            double x = sign * mag;
            double r = eval_impl(x, 0) / (beta_ * std::log(mag));
            if (!(r > 1.0 + 1e-3)) return false;
            if (r < prev - 1e-6) return false;
            prev = r;
        }
        return true;
    };
    if (unbounded_right && !side_ok(+1.0)) return false;
    if (unbounded_left && !side_ok(-1.0)) return false;
    return true;
}

namespace {

json interval_to_json(const Interval& iv) {
    json j = json::array();
    j.push_back(std::isfinite(iv.a) ? json(iv.a) : json("-inf"));
    j.push_back(std::isfinite(iv.b) ? json(iv.b) : json("inf"));
    return j;
}

double endpoint_from_json(const json& j, bool left) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        throw ArgumentError("potential domain: unknown endpoint string '" + s + "'");
    }
    (void)left;
    return j.get<double>();
}

}  // namespace

json Potential::to_json() const {
    json j;
    j["beta"] = beta_;
    json dom = json::array();
    for (const auto& iv : domain_) dom.push_back(interval_to_json(iv));
    j["domain"] = dom;
    if (kind_ == Kind::Polynomial) {
        j["kind"] = "polynomial";
        j["coefficients"] = coeffs_;
    } else {
        j["kind"] = "sum";
        json terms = json::array();
        for (const auto& t : terms_) {
            json tj;
            tj["coef"] = t.coef;
            if (t.type == Term::Type::Monomial) {
                tj["type"] = "monomial";
                tj["power"] = t.power;
            } else {
                tj["type"] = "log1p_x2";
            }
            terms.push_back(tj);
        }
        j["terms"] = terms;
    }
    return j;
}

Potential Potential::from_json(const json& j) {
    double beta = j.at("beta").get<double>();
    std::vector<Interval> dom;
    if (j.contains("domain")) {
        for (const auto& dj : j.at("domain")) {
            Interval iv;
            iv.a = endpoint_from_json(dj.at(0), true);
            iv.b = endpoint_from_json(dj.at(1), false);
            dom.push_back(iv);
        }
    } else {
        dom.push_back(Interval{});
    }
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "polynomial") {
        return polynomial(j.at("coefficients").get<std::vector<double>>(), beta, dom);
    }
    if (kind == "sum") {
        std::vector<Term> terms;
        for (const auto& tj : j.at("terms")) {
            Term t;
            std::string type = tj.at("type").get<std::string>();
            t.coef = tj.at("coef").get<double>();
            if (type == "monomial") {
                t.type = Term::Type::Monomial;
                t.power = tj.at("power").get<int>();
            } else if (type == "log1p_x2") {
                t.type = Term::Type::Log1pX2;
            } else {
                throw ArgumentError("potential term type '" + type + "' unknown");
            }
            terms.push_back(t);
        }
        return sum(std::move(terms), beta, dom);
    }
    throw ArgumentError("potential kind '" + kind + "' unknown");
}

}  // namespace loggas
