// Operator-side reward design: the attack-free optimum, the security-aware
// optimum via the constrained attack-free reformulation, the brute-force
// objective that validates the reformulation, and joint reward/technology
// design.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "d2d/equilibrium.hpp"
#include "d2d/model.hpp"
#include "d2d/solve.hpp"

namespace d2d {

struct RewardSolution {
    double r0_star = 0.0;
    double operator_utility = 0.0;
    bool binding = false;      // persistence constraint active at the optimum
    double a_af_mix = 0.0;     // sum_k w_k a_AF_k(r0_star)
};

// Technology development cost J(tau) = j0 * tau^-p: improving the risk
// environment (smaller tau) is more expensive.
struct TechCostFunction {
    double j0 = 1.0;
    double p = 1.0;

    double operator()(double tau) const { return j0 * std::pow(tau, -p); }

    void validate() const {
        if (!(j0 >= 0.0)) throw std::invalid_argument("tech: j0 must be >= 0");
        if (!(p > 0.0)) throw std::invalid_argument("tech: exponent must be > 0");
    }
};

struct JointSolution {
    double r0_star = 0.0;
    double tau_star = 0.0;
    double utility = 0.0;
};

// Population attack-free participation mixture A(r0) = sum_k w_k a_AF_k(r0),
// with non-participating and capped corners folded in.
inline double attack_free_mixture(const std::vector<UEType>& types, double r0,
                                  double r_max = kInf) {
    double mix = 0.0;
    for (const auto& t : types)
        mix += t.w * detail::attack_free_clamped(t, {r0, r_max});
    return mix;
}

namespace detail {

inline double af_objective(const std::vector<UEType>& types, const OperatorParams& op,
                           double r0, double r_max) {
    return (op.b0 - r0) * attack_free_mixture(types, r0, r_max);
}

}  // namespace detail

// max over r0 in (0, b0) of (b0 - r0) * A(r0); 1000-point pre-grid guards
// multimodality, golden section refines to 1e-8.
inline RewardSolution optimal_reward_attack_free(const std::vector<UEType>& types,
                                                 const OperatorParams& op,
                                                 double r_max = kInf) {
    validate_population(types);
    op.validate();
    auto h = [&](double r0) { return detail::af_objective(types, op, r0, r_max); };
    const double lo = op.b0 * 1e-9, hi = op.b0 * (1.0 - 1e-9);
    // degenerate when nobody participates at any reward in range
    bool any = false;
    for (int i = 1; i <= 64 && !any; ++i)
        any = attack_free_mixture(types, op.b0 * i / 65.0, r_max) > 0.0;
    if (!any)
        throw std::runtime_error(
            "optimal_reward_attack_free: no type participates at any reward below b0");
    RewardSolution sol;
    sol.r0_star = grid_then_golden_max(h, lo, hi, 1000, 1e-8);
    sol.operator_utility = h(sol.r0_star);
    sol.a_af_mix = attack_free_mixture(types, sol.r0_star, r_max);
    sol.binding = false;
    return sol;
}

// Security-aware optimum: maximize the attack-free objective subject to
// A(r0) <= 1/tau. A is nondecreasing in r0, so the feasible region is
// (0, rbar0] where A(rbar0) = 1/tau (or all of (0, b0) when the constraint
// never binds below b0).
inline RewardSolution optimal_reward_secure(const std::vector<UEType>& types,
                                            const OperatorParams& op, const RiskEnv& env,
                                            double r_max = kInf) {
    validate_population(types);
    op.validate();
    env.validate();
    const double tau = env.tau();
    if (!(tau > 0.0))
        throw std::invalid_argument("optimal_reward_secure: tau must be > 0");
    const double budget = 1.0 / tau;

    const double lo = op.b0 * 1e-9;
    double hi = op.b0 * (1.0 - 1e-9);
    if (attack_free_mixture(types, hi, r_max) > budget) {
        // constraint binds inside the range: find the binding reward
        auto slack = [&](double r0) {
            return attack_free_mixture(types, r0, r_max) - budget;
        };
        hi = bisect_root(slack, lo, hi, 1e-15, 200).x;
    }
    auto h = [&](double r0) { return detail::af_objective(types, op, r0, r_max); };
    bool any = false;
    for (int i = 1; i <= 64 && !any; ++i)
        any = attack_free_mixture(types, lo + (hi - lo) * i / 65.0, r_max) > 0.0;
    if (!any)
        throw std::runtime_error(
            "optimal_reward_secure: no type participates at any feasible reward");
    RewardSolution sol;
    // the pre-grid keeps the first point of a tied plateau, so utility ties
    // resolve toward the cheaper reward
    sol.r0_star = grid_then_golden_max(h, lo, hi, 1000, 1e-8);
    // boundary maxima converge to within the search tolerance of the binding
    // end; snap so the binding relation holds exactly
    if (hi - sol.r0_star <= 2e-8 * std::max(1.0, hi)) sol.r0_star = hi;
    sol.operator_utility = h(sol.r0_star);
    sol.a_af_mix = attack_free_mixture(types, sol.r0_star, r_max);
    sol.binding = std::abs(sol.a_af_mix - budget) < 1e-8;
    return sol;
}

// The original (un-reformulated) objective at a given r0: solve the
// participation game and price the effective participation mixture. This is
// the independent route that validates the constrained reformulation.
inline double operator_utility_brute(const std::vector<UEType>& types,
                                     const OperatorParams& op, const RiskEnv& env,
                                     double r0, double r_max = kInf) {
    op.validate();
    if (!(r0 > 0.0 && r0 < op.b0))
        throw std::invalid_argument("operator_utility_brute: need 0 < r0 < b0");
    const NashEquilibrium ne = solve_ne(types, {r0, r_max}, env);
    double effective = 0.0;
    for (std::size_t k = 0; k < types.size(); ++k)
        effective += types[k].w * (1.0 - ne.theta_k_inf[k]) * ne.a_ne[k];
    return (op.b0 - r0) * effective;
}

// Joint reward/technology design: with the binding relation tau = 1/A(r0)
// substituted, maximize (b0 - r0) A(r0) - J(1/A(r0)) over r0 alone.
inline JointSolution joint_optimize(const std::vector<UEType>& types,
                                    const OperatorParams& op,
                                    const TechCostFunction& tech, double r_max = kInf) {
    validate_population(types);
    op.validate();
    tech.validate();
    auto g = [&](double r0) {
        const double mix = attack_free_mixture(types, r0, r_max);
        if (mix <= 0.0) return 0.0;  // no participation, no tech spending
        return (op.b0 - r0) * mix - tech(1.0 / mix);
    };
    const double lo = op.b0 * 1e-9, hi = op.b0 * (1.0 - 1e-9);
    JointSolution sol;
    sol.r0_star = grid_then_golden_max(g, lo, hi, 1000, 1e-8);
    const double mix = attack_free_mixture(types, sol.r0_star, r_max);
    if (mix <= 0.0)
        throw std::runtime_error("joint_optimize: no participation at the optimum");
    sol.tau_star = 1.0 / mix;
    sol.utility = g(sol.r0_star);
    return sol;
}

}  // namespace d2d
