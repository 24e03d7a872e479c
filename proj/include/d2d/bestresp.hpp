// Individual best-response participation: attack-free optimum, the
// zero-participation threshold on the compromise fraction, and the
// risk-adjusted optimum a*(theta).
#pragma once

#include <cmath>
#include <stdexcept>

#include "d2d/model.hpp"
#include "d2d/solve.hpp"

namespace d2d {

struct BestResponse {
    double a_star = 0.0;     // tasks per unit time, in [0, M]
    double theta_bar = 0.0;  // threshold; +inf means it never binds
    double residual = 0.0;   // first-order-condition residual at a_star
};

// argmax of u(a) on (0, M). Fails loudly when the optimum is not interior:
// either no positive participation is rational (r0*v'(0) <= c) or the cap
// binds (u'(M) >= 0).
inline double attack_free_optimum(const UEType& type, const RewardScheme& scheme) {
    type.validate();
    scheme.validate();
    const double interior = detail::attack_free_interior(type, scheme);
    if (std::isnan(interior))
        throw std::runtime_error(
            "attack_free_optimum: assumption clause (3) violated: r0*v'(0) <= c, "
            "no positive participation is rational");
    if (interior >= scheme.cap())
        throw std::runtime_error(
            "attack_free_optimum: assumption clause (3) violated: marginal utility "
            "at the cap is nonnegative, optimum not interior");
    return interior;
}

// theta_bar = (r0 v'(0) - c)(rho + delta) / (q beta). Participation is zero
// for theta >= theta_bar. +inf when v'(0) = +inf (power family) or when the
// environment is riskless (beta = 0 or q = 0); negative raw values clamp to 0.
inline double participation_threshold(const UEType& type, const RewardScheme& scheme,
                                      const RiskEnv& env) {
    // q = 0 is tolerated here (riskless participation, threshold +inf) even
    // though it is inadmissible elsewhere
    type.eval.validate();
    if (!(type.c > 0.0)) throw std::invalid_argument("type: service cost c must be > 0");
    if (!(type.q >= 0.0)) throw std::invalid_argument("type: recovery cost q must be >= 0");
    scheme.validate();
    env.validate();
    if (env.beta == 0.0 || type.q == 0.0) return kInf;
    const double m0 = type.eval.deriv_at_zero();
    if (!std::isfinite(m0)) return kInf;
    const double raw =
        (scheme.r0 * m0 - type.c) * (env.rho + env.delta) / (type.q * env.beta);
    return raw > 0.0 ? raw : 0.0;
}

namespace detail {

// First-order expression whose root is a*(theta):
//   f(a) = u'(a)(rho + delta + beta*theta*a) - beta*theta*(u(a) + q)
// f is strictly decreasing since f'(a) = u''(a)(rho + delta + beta*theta*a) < 0.
inline double br_foc(const UEType& type, const RewardScheme& scheme, const RiskEnv& env,
                     double theta, double a) {
    const double bt = env.beta * theta;
    return instant_utility_da(type, scheme, a) * (env.rho + env.delta + bt * a) -
           bt * (instant_utility(type, scheme, a) + type.q);
}

}  // namespace detail

inline BestResponse best_response(const UEType& type, const RewardScheme& scheme,
                                  const RiskEnv& env, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::invalid_argument("best_response: theta must be in [0,1]");
    BestResponse br;
    br.theta_bar = participation_threshold(type, scheme, env);
    if (theta >= br.theta_bar) return br;  // a_star = 0

    const double a_af = attack_free_optimum(type, scheme);
    if (env.beta * theta == 0.0) {
        // no infection pressure: the myopic and foresighted optima coincide
        br.a_star = a_af;
        br.residual = 0.0;
        return br;
    }

    // The root lies in (0, a_af): f(0+) > 0 below the threshold and
    // f(a_af) = -beta*theta*(u(a_af)+q) < 0. Check the cap end anyway; a
    // nonnegative value there would mean the utility at the cap is not
    // positive, i.e. the standing assumptions do not hold.
    const double hi = a_af;
    if (detail::br_foc(type, scheme, env, theta, hi) >= 0.0)
        throw std::runtime_error(
            "best_response: no sign change on the bracket; assumption clause (2) "
            "does not hold");
    auto f = [&](double a) { return detail::br_foc(type, scheme, env, theta, a); };
    // f(0) is +inf for the power family; bisect from a tiny positive foot
    double lo = 0.0;
    if (!std::isfinite(f(0.0))) lo = hi * 1e-300;
    const RootResult root = bisect_root(f, lo, hi, 1e-16, 200);
    br.a_star = root.x;
    // report the residual on the dU/da scale, normalized by the renewal rate
    br.residual = root.fx / (env.rho + env.delta + env.beta * theta * root.x);
    return br;
}

}  // namespace d2d
