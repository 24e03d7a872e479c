// Domain types for the D2D offloading incentive model: reward evaluation
// functions, UE population segments, risk environment, throttled reward
// scheme, and the instantaneous / discounted long-run utilities.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2d/solve.hpp"

namespace d2d {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class EvalFamily { Power, LogLinear };

// Concave reward evaluation v(x): either k*x^gamma (gamma in (0,1)) or
// k*ln(1+x). The power family has v'(0) = +inf, so a positive participation
// level is always worth something; the log-linear family has a finite
// marginal at zero, which lets the zero-participation threshold bind.
struct EvaluationFunction {
    EvalFamily family = EvalFamily::Power;
    double k = 1.0;
    double gamma = 0.5;  // power family only

    static EvaluationFunction power(double k, double gamma) {
        return {EvalFamily::Power, k, gamma};
    }
    static EvaluationFunction log_linear(double k) {
        return {EvalFamily::LogLinear, k, 0.0};
    }

    double value(double x) const {
        if (x == 0.0) return 0.0;
        return family == EvalFamily::Power ? k * std::pow(x, gamma)
                                           : k * std::log1p(x);
    }

    double deriv(double x) const {
        if (family == EvalFamily::Power) {
            if (x == 0.0) return kInf;
            return k * gamma * std::pow(x, gamma - 1.0);
        }
        return k / (1.0 + x);
    }

    // marginal value at zero reward; +inf for the power family
    double deriv_at_zero() const {
        return family == EvalFamily::Power ? kInf : k;
    }

    void validate() const {
        if (!(k > 0.0)) throw std::invalid_argument("eval: scale k must be > 0");
        if (family == EvalFamily::Power && !(gamma > 0.0 && gamma < 1.0))
            throw std::invalid_argument("eval: exponent gamma must be in (0,1)");
    }
};

// One population segment: evaluation function, per-task service cost c,
// per-unit-time recovery cost q, and population weight w.
struct UEType {
    EvaluationFunction eval;
    double c = 1.0;
    double q = 1.0;
    double w = 1.0;

    void validate() const {
        eval.validate();
        if (!(c > 0.0)) throw std::invalid_argument("type: service cost c must be > 0");
        if (!(q > 0.0)) throw std::invalid_argument("type: recovery cost q must be > 0");
        if (!(w >= 0.0 && w <= 1.0))
            throw std::invalid_argument("type: weight w must be in [0,1]");
    }
};

inline void validate_population(const std::vector<UEType>& types, double tol = 1e-9) {
    if (types.empty()) throw std::invalid_argument("population: no types");
    double wsum = 0.0;
    for (const auto& t : types) {
        t.validate();
        wsum += t.w;
    }
    if (std::abs(wsum - 1.0) > tol)
        throw std::invalid_argument("population: type weights must sum to 1");
}

// Attack/recovery environment. tau = beta/delta is the effective infection
// rate; rho is the UE discount rate (rho -> inf recovers myopic behavior,
// rho -> 0 the time-average utility).
struct RiskEnv {
    double beta = 0.0;
    double delta = 1.0;
    double rho = 0.0;

    double tau() const { return beta / delta; }

    void validate() const {
        if (!(beta >= 0.0 && beta <= 1.0))
            throw std::invalid_argument("env: beta must be in [0,1]");
        if (!(delta > 0.0)) throw std::invalid_argument("env: delta must be > 0");
        if (!(rho >= 0.0)) throw std::invalid_argument("env: rho must be >= 0");
        if (!std::isfinite(tau())) throw std::invalid_argument("env: tau must be finite");
    }
};

// Throttled linear reward: r(a) = r0*a up to the cap r_max, flat above.
// r_max = +inf means no throttle (M = +inf).
struct RewardScheme {
    double r0 = 1.0;
    double r_max = kInf;

    double cap() const { return r_max / r0; }  // M, tasks per unit time

    double reward(double a) const { return std::min(r0 * a, r_max); }

    void validate() const {
        if (!(r0 > 0.0)) throw std::invalid_argument("scheme: r0 must be > 0");
        if (!(r_max > 0.0)) throw std::invalid_argument("scheme: r_max must be > 0");
    }
};

struct OperatorParams {
    double b0 = 1.0;  // operator benefit per completed task

    void validate() const {
        if (!(b0 > 0.0)) throw std::invalid_argument("operator: b0 must be > 0");
    }
};

// u(a) = v(r0*a) - c*a, utility per unit time at participation rate a.
inline double instant_utility(const UEType& type, const RewardScheme& scheme, double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("instant_utility: a must be >= 0");
    if (a > scheme.cap())
        throw std::invalid_argument("instant_utility: a above the reward cap M");
    return type.eval.value(scheme.r0 * a) - type.c * a;
}

// u'(a) = r0*v'(r0*a) - c; +inf at a = 0 for the power family.
inline double instant_utility_da(const UEType& type, const RewardScheme& scheme, double a) {
    return scheme.r0 * type.eval.deriv(scheme.r0 * a) - type.c;
}

// Discounted long-run utility of committing to rate a while the system
// compromise fraction is theta. Closed form of the renewal recursion over
// the exponential infection (rate beta*theta*a) and recovery (rate delta)
// times:
//   U(a, theta) = [(rho+delta) u(a) - beta*theta*a*q] / (rho+delta + beta*theta*a)
inline double foresighted_utility(const UEType& type, const RewardScheme& scheme,
                                  const RiskEnv& env, double a, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::invalid_argument("foresighted_utility: theta must be in [0,1]");
    if (!(env.rho + env.delta > 0.0))
        throw std::invalid_argument("foresighted_utility: rho + delta must be > 0");
    const double u = instant_utility(type, scheme, a);
    const double infect_rate = env.beta * theta * a;
    return ((env.rho + env.delta) * u - infect_rate * type.q) /
           (env.rho + env.delta + infect_rate);
}

// dU/da in closed form; shares the first-order expression with the
// best-response solver.
inline double foresighted_utility_da(const UEType& type, const RewardScheme& scheme,
                                     const RiskEnv& env, double a, double theta) {
    const double u = instant_utility(type, scheme, a);
    const double du = instant_utility_da(type, scheme, a);
    const double bt = env.beta * theta;
    const double denom = env.rho + env.delta + bt * a;
    return (env.rho + env.delta) * (du * denom - bt * (u + type.q)) / (denom * denom);
}

namespace detail {

// Interior argmax of u on (0, M), closed form per family; NaN when the
// first-order condition has no positive solution (log-linear with
// r0*v'(0) <= c). Callers decide how to treat corners.
inline double attack_free_interior(const UEType& type, const RewardScheme& scheme) {
    const double r0 = scheme.r0;
    const auto& e = type.eval;
    if (e.family == EvalFamily::Power) {
        // r0*v'(r0 a) = c  =>  a = (k*gamma*r0/c)^(1/(1-gamma)) / r0
        return std::pow(e.k * e.gamma * r0 / type.c, 1.0 / (1.0 - e.gamma)) / r0;
    }
    // log-linear: r0*k/(1 + r0 a) = c  =>  a = k/c - 1/r0
    const double a = e.k / type.c - 1.0 / r0;
    return a > 0.0 ? a : std::numeric_limits<double>::quiet_NaN();
}

// argmax of u over [0, M] including corners; used by the operator-side
// optimizers where a corner just means zero (or capped) participation.
inline double attack_free_clamped(const UEType& type, const RewardScheme& scheme) {
    const double interior = attack_free_interior(type, scheme);
    if (std::isnan(interior)) return 0.0;
    const double m = scheme.cap();
    return interior < m ? interior : m;
}

}  // namespace detail

// Standing-assumption report. Clause numbering follows the model's
// admissibility conditions:
//   (1) v increasing and strictly concave,
//   (2) v(0)=0 and positive utility at the cap,
//   (3) interior optimum: v'(r0 M) < c/r0 < v'(0),
//   (A2) the attack-free optimum is nondecreasing in r0.
struct AssumptionReport {
    bool increasing_concave = false;
    bool positive_cap_utility = false;
    bool interior_optimum = false;
    bool reward_monotone = false;

    bool all() const {
        return increasing_concave && positive_cap_utility && interior_optimum &&
               reward_monotone;
    }
};

inline AssumptionReport check_assumptions(const UEType& type, const RewardScheme& scheme) {
    type.validate();
    scheme.validate();
    if (!std::isfinite(scheme.r_max))
        throw std::invalid_argument(
            "check_assumptions: clauses are defined for a finite reward cap");
    const double m = scheme.cap();
    const double xmax = scheme.r0 * m;
    AssumptionReport rep;

    // (1) finite differences at sampled points across (0, r0*M]
    rep.increasing_concave = true;
    const int n = 24;
    for (int i = 0; i < n; ++i) {
        const double x = xmax * std::pow(2.0, -(n - 1 - i));  // log-spaced
        const double h = std::max(1e-7, 1e-7 * x);
        const double v0 = type.eval.value(std::max(0.0, x - h));
        const double v1 = type.eval.value(x);
        const double v2 = type.eval.value(x + h);
        const double d1 = (v2 - v0) / (2.0 * h);
        const double d2 = (v2 - 2.0 * v1 + v0) / (h * h);
        if (!(d1 > 0.0) || !(d2 < 1e-12)) {
            rep.increasing_concave = false;
            break;
        }
    }

    // (2) v(0)=0 and u(M) > 0
    const double tol = 1e-12;
    rep.positive_cap_utility =
        std::abs(type.eval.value(0.0)) <= tol && type.eval.value(xmax) > type.c * m;

    // (3) v'(r0 M) < c/r0 < v'(0); the right inequality holds vacuously
    // when v'(0) = +inf
    const double lhs = type.eval.deriv(xmax);
    const double rhs = type.eval.deriv_at_zero();
    rep.interior_optimum =
        lhs < type.c / scheme.r0 - tol && type.c / scheme.r0 < rhs - tol;

    // (A2) sample the interior optimum on an r0 grid around the scheme's r0
    // and require monotone nondecrease; interiority itself is clause (3)'s
    // business, so the cap plays no role here
    rep.reward_monotone = true;
    const int grid = 32;
    double prev = -kInf;
    for (int i = 0; i < grid; ++i) {
        const double r = scheme.r0 * (0.25 + 3.75 * i / (grid - 1));
        const double interior = detail::attack_free_interior(type, {r, scheme.r_max});
        const double a = std::isnan(interior) ? 0.0 : interior;
        if (a < prev - 1e-12) {
            rep.reward_monotone = false;
            break;
        }
        prev = a;
    }
    return rep;
}

}  // namespace d2d
