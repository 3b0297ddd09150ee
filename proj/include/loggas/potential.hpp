#pragma once
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loggas/util.hpp"

namespace loggas {

struct Interval {
    double a = -std::numeric_limits<double>::infinity();
    double b = std::numeric_limits<double>::infinity();
    bool contains(double x) const { return x >= a && x <= b; }
    bool bounded() const { return std::isfinite(a) && std::isfinite(b); }
};

// Analytic one-body confining potential. Real-analytic families only:
// polynomials, or sums of closed-form terms with explicit derivative rules.
// Every potential is evaluable at complex arguments (contour quadrature
// happens off the real axis).
class Potential {
  public:
    enum class Kind { Polynomial, Sum };
    struct Term {
        enum class Type { Monomial, Log1pX2 };
        Type type = Type::Monomial;
        double coef = 0.0;
        int power = 0;  // Monomial only
    };

    Potential() = default;
    static Potential polynomial(std::vector<double> coeffs, double beta,
                                std::vector<Interval> domain = {Interval{}});
    static Potential sum(std::vector<Term> terms, double beta,
                         std::vector<Interval> domain = {Interval{}});
    // The Gaussian potential beta*x^2/4 on the whole line.
    static Potential gaussian(double beta);

    double operator()(double x) const { return evaluate(x, 0); }
    double evaluate(double x, int order) const;
    cplx evaluate_c(cplx z, int order) const;  // no domain check; order cap applies

    // liminf V(x)/(beta log|x|) > 1 on every unbounded side.
    // Decided by leading degree for polynomials, by a numerical asymptotic
    // ratio test (sampling |x| = 1e4..1e8) otherwise. Vacuously true on
    // bounded domains.
    bool confinement_check() const;

    int max_order() const;
    double beta() const { return beta_; }
    Kind kind() const { return kind_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    const std::vector<Interval>& domain() const { return domain_; }
    bool in_domain(double x) const;

    nlohmann::json to_json() const;
    static Potential from_json(const nlohmann::json& j);

  private:
    Kind kind_ = Kind::Polynomial;
    std::vector<double> coeffs_;  // ascending powers
    std::vector<Term> terms_;
    double beta_ = 2.0;
    std::vector<Interval> domain_{Interval{}};

    template <typename T>
    T eval_impl(T x, int order) const;
};

}  // namespace loggas
