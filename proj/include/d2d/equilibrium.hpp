// Nash equilibrium of the K-type participation game with unobservable
// compromise state: every type best-responds to the steady-state fraction
// its own collective choice induces.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2d/bestresp.hpp"
#include "d2d/epidemic.hpp"
#include "d2d/model.hpp"
#include "d2d/solve.hpp"

namespace d2d {

struct NashEquilibrium {
    std::vector<double> a_ne;         // per-type equilibrium rates
    double theta_inf = 0.0;           // equilibrium compromise fraction
    std::vector<double> theta_k_inf;  // per-type fractions
    double residual = 0.0;            // fixed-point residual at theta_inf
    double tau_c = kInf;
};

namespace detail {

// Best response with non-participating corners folded in: a type whose
// marginal value at zero cannot cover its cost simply stays out (its
// threshold is 0), which is its true optimum, not a failure.
inline double br_rate(const UEType& type, const RewardScheme& scheme, const RiskEnv& env,
                      double theta, std::size_t k) {
    try {
        return best_response(type, scheme, env, theta).a_star;
    } catch (const std::exception& e) {
        throw std::runtime_error("type " + std::to_string(k) + ": " + e.what());
    }
}

inline double af_rate(const UEType& type, const RewardScheme& scheme, std::size_t k) {
    if (std::isnan(attack_free_interior(type, scheme)))
        return 0.0;  // never participates at this reward
    try {
        return attack_free_optimum(type, scheme);
    } catch (const std::exception& e) {
        throw std::runtime_error("type " + std::to_string(k) + ": " + e.what());
    }
}

}  // namespace detail

// 1 / sum_k w_k a_AF_k(r0): the persistence threshold on tau below which the
// equilibrium keeps the network attack-free.
inline double critical_rate(const std::vector<UEType>& types, const RewardScheme& scheme) {
    validate_population(types);
    scheme.validate();
    double mix = 0.0;
    for (std::size_t k = 0; k < types.size(); ++k)
        mix += types[k].w * detail::af_rate(types[k], scheme, k);
    return mix > 0.0 ? 1.0 / mix : kInf;
}

// Unique equilibrium: theta = 0 with attack-free rates when tau <= tau_c;
// otherwise theta_inf is the unique root in (0,1) of
//   F(theta) = sum_k w_k * tau * a_k(theta) / (tau*theta*a_k(theta) + 1) - 1
// with a_k supplied by the best response (F is strictly decreasing, F(0+) > 1,
// F(1) < 1).
inline NashEquilibrium solve_ne(const std::vector<UEType>& types,
                                const RewardScheme& scheme, const RiskEnv& env) {
    validate_population(types);
    scheme.validate();
    env.validate();
    const std::size_t K = types.size();
    const double tau = env.tau();

    NashEquilibrium ne;
    ne.a_ne.assign(K, 0.0);
    ne.theta_k_inf.assign(K, 0.0);
    std::vector<double> a_af(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) a_af[k] = detail::af_rate(types[k], scheme, k);
    double mix = 0.0;
    for (std::size_t k = 0; k < K; ++k) mix += types[k].w * a_af[k];
    ne.tau_c = mix > 0.0 ? 1.0 / mix : kInf;

    if (tau <= ne.tau_c) {
        ne.a_ne = a_af;
        ne.residual = 0.0;
        return ne;
    }

    std::vector<double> rates(K, 0.0);
    auto fixed_point = [&](double theta) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            // the attack-free limit applies directly at theta = 0
            rates[k] = theta == 0.0 ? a_af[k]
                                    : detail::br_rate(types[k], scheme, env, theta, k);
            s += types[k].w * tau * rates[k] / (tau * theta * rates[k] + 1.0);
        }
        return s - 1.0;
    };
    const RootResult root = bisect_root(fixed_point, 0.0, 1.0, 1e-15, 200);
    ne.theta_inf = root.x;
    ne.residual = root.fx;
    for (std::size_t k = 0; k < K; ++k) {
        ne.a_ne[k] = detail::br_rate(types[k], scheme, env, ne.theta_inf, k);
        const double x = tau * ne.theta_inf * ne.a_ne[k];
        ne.theta_k_inf[k] = x / (x + 1.0);
    }
    return ne;
}

// Best-response dynamics variant (the observable-state narrative): types
// repeatedly best-respond to the steady state their current rates induce.
// Damped to keep the iteration from ringing; solve_ne is the authoritative
// solver and the two agree where both converge.
inline NashEquilibrium solve_ne_iterative(const std::vector<UEType>& types,
                                          const RewardScheme& scheme, const RiskEnv& env,
                                          double damping = 0.5, int max_iter = 20000,
                                          double tol = 1e-10) {
    validate_population(types);
    scheme.validate();
    env.validate();
    const std::size_t K = types.size();
    std::vector<double> weights(K);
    for (std::size_t k = 0; k < K; ++k) weights[k] = types[k].w;

    NashEquilibrium ne;
    ne.tau_c = critical_rate(types, scheme);
    double theta = env.tau() <= ne.tau_c ? 0.0 : 0.5;
    std::vector<double> rates(K, 0.0);
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t k = 0; k < K; ++k)
            rates[k] = detail::br_rate(types[k], scheme, env, theta, k);
        const SteadyState ss = steady_state_fixed_ktype(rates, weights, env);
        const double next = (1.0 - damping) * theta + damping * ss.theta_inf;
        if (std::abs(next - theta) < tol) {
            theta = next;
            break;
        }
        theta = next;
    }
    ne.theta_inf = theta;
    ne.a_ne.assign(K, 0.0);
    ne.theta_k_inf.assign(K, 0.0);
    double fp = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        ne.a_ne[k] = detail::br_rate(types[k], scheme, env, theta, k);
        const double x = env.tau() * theta * ne.a_ne[k];
        ne.theta_k_inf[k] = x / (x + 1.0);
        fp += types[k].w * env.tau() * ne.a_ne[k] / (x + 1.0);
    }
    ne.residual = theta == 0.0 ? 0.0 : fp - 1.0;
    return ne;
}

}  // namespace d2d
