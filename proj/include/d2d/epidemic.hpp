// Mean-field SIS dynamics of the compromise fraction and its steady states,
// for populations holding fixed participation rates and for strategic
// populations that re-solve their best response as the state evolves.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "d2d/bestresp.hpp"
#include "d2d/model.hpp"
#include "d2d/solve.hpp"

namespace d2d {

struct EpidemicState {
    double t = 0.0;
    double theta = 0.0;                 // aggregate compromise fraction
    std::vector<double> theta_k;        // per-type fractions
};

struct SteadyState {
    double theta_inf = 0.0;
    double tau_c = kInf;                // critical effective infection rate
    bool persistent = false;            // theta_inf > 0  <=>  tau > tau_c
    std::vector<double> theta_k;        // per-type fractions (when typed)
};

// Homogeneous population, fixed rate a: tau_c = 1/a and, above it,
// theta_inf = 1 - delta/(beta*a).
inline SteadyState steady_state_fixed_homogeneous(double a, const RiskEnv& env) {
    if (!(a >= 0.0)) throw std::invalid_argument("steady_state: a must be >= 0");
    env.validate();
    SteadyState ss;
    ss.tau_c = a > 0.0 ? 1.0 / a : kInf;
    ss.persistent = env.tau() > ss.tau_c;
    ss.theta_inf = ss.persistent ? 1.0 - env.delta / (env.beta * a) : 0.0;
    ss.theta_k = {ss.theta_inf};
    return ss;
}

// K-type population with fixed per-type rates: tau_c = 1/sum_k w_k a_k;
// above it theta_inf is the unique root in (0,1) of
//   sum_k tau*w_k*a_k / (tau*theta*a_k + 1) = 1,
// and per-type fractions follow theta_k = tau*theta*a_k / (tau*theta*a_k + 1).
inline SteadyState steady_state_fixed_ktype(const std::vector<double>& actions,
                                            const std::vector<double>& weights,
                                            const RiskEnv& env) {
    env.validate();
    if (actions.size() != weights.size() || actions.empty())
        throw std::invalid_argument("steady_state: actions/weights size mismatch");
    double wsum = 0.0, mix = 0.0;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        if (!(actions[k] >= 0.0))
            throw std::invalid_argument("steady_state: actions must be >= 0");
        if (!(weights[k] >= 0.0))
            throw std::invalid_argument("steady_state: weights must be >= 0");
        wsum += weights[k];
        mix += weights[k] * actions[k];
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("steady_state: weights must sum to 1");

    const double tau = env.tau();
    SteadyState ss;
    ss.tau_c = mix > 0.0 ? 1.0 / mix : kInf;
    ss.persistent = tau > ss.tau_c;
    ss.theta_k.assign(actions.size(), 0.0);
    if (!ss.persistent) return ss;

    auto lhs_minus_one = [&](double theta) {
        double s = 0.0;
        for (std::size_t k = 0; k < actions.size(); ++k)
            s += tau * weights[k] * actions[k] / (tau * theta * actions[k] + 1.0);
        return s - 1.0;
    };
    // strictly decreasing: lhs(0) = tau*mix > 1, lhs(1) < 1
    const RootResult root = bisect_root(lhs_minus_one, 0.0, 1.0, 1e-15, 200);
    ss.theta_inf = root.x;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        const double x = tau * ss.theta_inf * actions[k];
        ss.theta_k[k] = x / (x + 1.0);
    }
    return ss;
}

// Strategic homogeneous population: tau_c = 1/a_AF is action-independent.
// Above it the limit theta_dagger solves (1-theta)*beta*a*(theta) = delta.
inline SteadyState steady_state_strategic(const UEType& type, const RewardScheme& scheme,
                                          const RiskEnv& env) {
    env.validate();
    const double a_af = attack_free_optimum(type, scheme);
    const double tau = env.tau();
    SteadyState ss;
    ss.tau_c = 1.0 / a_af;
    ss.persistent = tau > ss.tau_c;
    if (!ss.persistent) {
        ss.theta_k = {0.0};
        return ss;
    }
    const double theta_bar = participation_threshold(type, scheme, env);
    const double hi = std::min(theta_bar, 1.0);
    auto g = [&](double theta) {
        const double a = best_response(type, scheme, env, theta).a_star;
        return (1.0 - theta) * env.beta * a - env.delta;
    };
    // g(0) = beta*a_AF - delta > 0 in the persistent regime; at the upper
    // end participation is zero (or theta = 1), so g < 0
    if (!(g(0.0) > 0.0) || !(g(hi) < 0.0))
        throw std::runtime_error("steady_state_strategic: bracket has no sign change");
    const RootResult root = bisect_root(g, 0.0, hi, 1e-15, 200);
    ss.theta_inf = root.x;
    ss.theta_k = {ss.theta_inf};
    return ss;
}

// --- trajectory integration -------------------------------------------------

struct FixedPolicy {
    std::vector<double> actions;
    std::vector<double> weights;
};

struct AdaptivePolicy {
    std::vector<UEType> types;   // weights taken from the types
    RewardScheme scheme;
};

using Policy = std::variant<FixedPolicy, AdaptivePolicy>;

struct Trajectory {
    std::vector<EpidemicState> states;
    // per-type rates chosen at each recorded step (adaptive policy only)
    std::vector<std::vector<double>> actions;
    bool converged = false;  // set by integrate_until_steady
};

// Explicit Euler stepping of
//   d theta_k = [-delta*theta_k + (1-theta_k)*beta*theta*a_k(theta)] dt
// with theta = sum_k w_k theta_k. Under the adaptive policy a_k is the best
// response re-solved each step. theta is clamped to [0,1] against round-off;
// drift past 1e-6 before clamping is a step-size failure, not absorbed.
inline Trajectory integrate_dynamics(double theta0, const RiskEnv& env,
                                     const Policy& policy, double horizon, double dt,
                                     int record_every = 1) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_dynamics: dt must be > 0");
    if (!(theta0 >= 0.0 && theta0 <= 1.0))
        throw std::invalid_argument("integrate_dynamics: theta0 must be in [0,1]");
    env.validate();

    std::vector<double> weights;
    std::vector<const UEType*> types;
    const FixedPolicy* fixed = std::get_if<FixedPolicy>(&policy);
    const AdaptivePolicy* adaptive = std::get_if<AdaptivePolicy>(&policy);
    if (fixed) {
        if (fixed->actions.size() != fixed->weights.size() || fixed->actions.empty())
            throw std::invalid_argument("integrate_dynamics: bad fixed policy");
        weights = fixed->weights;
    } else {
        validate_population(adaptive->types);
        for (const auto& t : adaptive->types) {
            weights.push_back(t.w);
            types.push_back(&t);
        }
    }
    const std::size_t K = weights.size();

    std::vector<double> theta_k(K, theta0);
    std::vector<double> a_k(K, 0.0);
    Trajectory traj;
    const long steps = static_cast<long>(std::ceil(horizon / dt));
    traj.states.reserve(static_cast<std::size_t>(steps / record_every) + 2);

    auto record = [&](double t, double theta) {
        traj.states.push_back({t, theta, theta_k});
        if (adaptive) traj.actions.push_back(a_k);
    };

    double t = 0.0;
    for (long n = 0; n <= steps; ++n) {
        double theta = 0.0;
        for (std::size_t k = 0; k < K; ++k) theta += weights[k] * theta_k[k];
        if (fixed) {
            a_k = fixed->actions;
        } else {
            for (std::size_t k = 0; k < K; ++k)
                a_k[k] = best_response(*types[k], adaptive->scheme, env, theta).a_star;
        }
        if (n % record_every == 0 || n == steps) record(t, theta);
        if (n == steps) break;
        for (std::size_t k = 0; k < K; ++k) {
            const double d =
                -env.delta * theta_k[k] + (1.0 - theta_k[k]) * env.beta * theta * a_k[k];
            double next = theta_k[k] + dt * d;
            if (next < -1e-6 || next > 1.0 + 1e-6)
                throw std::runtime_error(
                    "integrate_dynamics: state left [0,1]; decrease dt");
            theta_k[k] = std::min(1.0, std::max(0.0, next));
        }
        t += dt;
    }
    return traj;
}

// Integrate until |d theta/dt| < rate_tol for `quiet_steps` consecutive steps
// or the time cap is hit.
inline Trajectory integrate_until_steady(double theta0, const RiskEnv& env,
                                         const Policy& policy, double dt = 1e-3,
                                         double rate_tol = 1e-8, int quiet_steps = 100,
                                         double t_cap = 1e4, int record_every = 100) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_until_steady: dt must be > 0");
    if (!(theta0 >= 0.0 && theta0 <= 1.0))
        throw std::invalid_argument("integrate_until_steady: theta0 must be in [0,1]");
    env.validate();

    std::vector<double> weights;
    std::vector<const UEType*> types;
    const FixedPolicy* fixed = std::get_if<FixedPolicy>(&policy);
    const AdaptivePolicy* adaptive = std::get_if<AdaptivePolicy>(&policy);
    if (fixed) {
        if (fixed->actions.size() != fixed->weights.size() || fixed->actions.empty())
            throw std::invalid_argument("integrate_until_steady: bad fixed policy");
        weights = fixed->weights;
    } else {
        validate_population(adaptive->types);
        for (const auto& t : adaptive->types) {
            weights.push_back(t.w);
            types.push_back(&t);
        }
    }
    const std::size_t K = weights.size();
    std::vector<double> theta_k(K, theta0);
    std::vector<double> a_k(K, 0.0);
    Trajectory traj;

    int quiet = 0;
    long n = 0;
    double t = 0.0;
    while (true) {
        double theta = 0.0;
        for (std::size_t k = 0; k < K; ++k) theta += weights[k] * theta_k[k];
        if (fixed) {
            a_k = fixed->actions;
        } else {
            for (std::size_t k = 0; k < K; ++k)
                a_k[k] = best_response(*types[k], adaptive->scheme, env, theta).a_star;
        }
        if (n % record_every == 0) {
            traj.states.push_back({t, theta, theta_k});
            if (adaptive) traj.actions.push_back(a_k);
        }
        if (quiet >= quiet_steps || t >= t_cap) {
            traj.converged = quiet >= quiet_steps;
            if (n % record_every != 0) {
                traj.states.push_back({t, theta, theta_k});
                if (adaptive) traj.actions.push_back(a_k);
            }
            break;
        }
        double max_rate = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double d =
                -env.delta * theta_k[k] + (1.0 - theta_k[k]) * env.beta * theta * a_k[k];
            max_rate = std::max(max_rate, std::abs(d));
            double next = theta_k[k] + dt * d;
            if (next < -1e-6 || next > 1.0 + 1e-6)
                throw std::runtime_error(
                    "integrate_until_steady: state left [0,1]; decrease dt");
            theta_k[k] = std::min(1.0, std::max(0.0, next));
        }
        quiet = max_rate < rate_tol ? quiet + 1 : 0;
        t += dt;
        ++n;
    }
    return traj;
}

// Times for the strategic homogeneous trajectory to move from theta0 to
// theta_eps = theta_dagger +/- eps, bounded by the log-distance over the
// slowest and fastest drift rates along the path:
//   |ln theta0 - ln theta_eps| / |(1-x)beta a*(x) - delta|  at x = theta0, theta_eps.
inline std::pair<double, double> convergence_time_bounds(double theta0, double epsilon,
                                                         const RiskEnv& env,
                                                         const UEType& type,
                                                         const RewardScheme& scheme) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("convergence_time_bounds: epsilon must be > 0");
    const SteadyState ss = steady_state_strategic(type, scheme, env);
    if (!ss.persistent)
        throw std::runtime_error(
            "convergence_time_bounds: tau <= tau_c, no interior limit to approach");
    const double dag = ss.theta_inf;
    if (theta0 == dag)
        throw std::invalid_argument("convergence_time_bounds: theta0 equals the limit");
    const double theta_eps = theta0 > dag ? dag + epsilon : dag - epsilon;
    if (!(theta_eps > 0.0 && theta_eps < 1.0))
        throw std::invalid_argument("convergence_time_bounds: theta_eps outside (0,1)");
    if ((theta0 > dag && theta_eps > theta0) || (theta0 < dag && theta_eps < theta0))
        throw std::invalid_argument(
            "convergence_time_bounds: theta_eps lies beyond theta0");
    auto drift = [&](double x) {
        return (1.0 - x) * env.beta * best_response(type, scheme, env, x).a_star -
               env.delta;
    };
    const double gap = std::abs(std::log(theta0) - std::log(theta_eps));
    const double lower = gap / std::abs(drift(theta0));
    const double upper = gap / std::abs(drift(theta_eps));
    return {lower, upper};
}

}  // namespace d2d
