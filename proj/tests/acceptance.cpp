// Acceptance gate: end-to-end checks of the solver stack and the simulator
// against the pinned scenario numbers. Prints one PASS/FAIL line per
// criterion; the exit code is the number of failures.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "d2d/abm.hpp"
#include "d2d/bestresp.hpp"
#include "d2d/epidemic.hpp"
#include "d2d/equilibrium.hpp"
#include "d2d/harness.hpp"
#include "d2d/model.hpp"
#include "d2d/reward.hpp"
#include "d2d/rng.hpp"
#include "oracles.hpp"

using namespace d2d;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += detail.empty() ? "" : "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        detail += detail.empty() ? "" : "; ";
        detail += what;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---- shared scenario pieces -------------------------------------------------

std::vector<UEType> two_type_population() {
    return {{EvaluationFunction::power(1.0, 0.5), 0.35, 0.5, 0.3},
            {EvaluationFunction::power(1.5, 0.5), 0.35, 0.5, 0.7}};
}

const RewardScheme kScheme{2.2, kInf};
const OperatorParams kOperator{6.0};
const double kRho = 4.0;

std::map<long, double> g_eta_cache;  // keyed on (n_agents, v_max, d)

double eta_for(int n_agents, double v_max = 20.0, double d = 20.0) {
    const long key = n_agents * 100000L + static_cast<long>(v_max) * 100 +
                     static_cast<long>(d);
    auto it = g_eta_cache.find(key);
    if (it != g_eta_cache.end()) return it->second;
    SimConfig cfg;
    cfg.n_agents = n_agents;
    cfg.v_max = v_max;
    cfg.d = d;
    cfg.seed = 77;
    const double eta = estimate_eta(cfg, n_agents > 600 ? 3000 : 5000);
    g_eta_cache[key] = eta;
    return eta;
}

double tail_theta(const SimResult& res) { return terminal_theta(res, 0.1); }

// mean of terminal theta over seeds 1..n_seeds on the N=100 reference config
double seed_mean_terminal(const RiskEnv& env, SimMode mode,
                          const std::vector<double>& rates, int n_seeds, long slots) {
    const double eta = eta_for(100);
    double sum = 0.0;
    for (int seed = 1; seed <= n_seeds; ++seed) {
        SimConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        const SimResult res = run_sim(cfg, two_type_population(), kScheme, env,
                                      kOperator, mode, rates, slots, 10, eta);
        sum += tail_theta(res);
    }
    return sum / n_seeds;
}

// ---- criteria ---------------------------------------------------------------

Outcome criterion1() {
    Outcome out;
    const SteadyState ss =
        steady_state_fixed_ktype({3.0, 5.0}, {0.3, 0.7}, {0.4, 1.0, kRho});
    out.require(std::abs(ss.tau_c - 1.0 / 4.4) < 1e-12,
                "tau_c != 1/4.4 (" + fmt(ss.tau_c) + ")");
    out.note("tau_c=" + fmt(ss.tau_c));

    const long slots = 50000;
    const double extinct =
        seed_mean_terminal({0.2, 1.0, kRho}, SimMode::Fixed, {3.0, 5.0}, 10, slots);
    out.require(extinct < 0.05, "tau=0.2 not extinct (" + fmt(extinct) + ")");
    out.note("tau=0.2 terminal=" + fmt(extinct));

    const double persist =
        seed_mean_terminal({0.4, 1.0, kRho}, SimMode::Fixed, {3.0, 5.0}, 10, slots);
    out.require(std::abs(persist - 0.42) <= 0.05,
                "tau=0.4 terminal outside 0.42+-0.05 (" + fmt(persist) + ")");
    out.note("tau=0.4 terminal=" + fmt(persist) + " (analytic " + fmt(ss.theta_inf) +
             ")");
    return out;
}

Outcome criterion2() {
    Outcome out;
    const auto types = two_type_population();
    const double tau_c = critical_rate(types, kScheme);
    out.require(tau_c >= 0.118 && tau_c <= 0.120,
                "tau_c outside [0.118, 0.120] (" + fmt(tau_c) + ")");
    out.note("tau_c=" + fmt(tau_c));

    const long slots = 50000;
    const double extinct =
        seed_mean_terminal({0.1, 1.0, kRho}, SimMode::Adaptive, {}, 10, slots);
    out.require(extinct < 0.05, "tau=0.1 not extinct (" + fmt(extinct) + ")");
    out.note("tau=0.1 terminal=" + fmt(extinct));

    const double persist =
        seed_mean_terminal({0.2, 1.0, kRho}, SimMode::Adaptive, {}, 10, slots);
    out.require(persist > 0.05, "tau=0.2 did not persist (" + fmt(persist) + ")");
    out.note("tau=0.2 terminal=" + fmt(persist) + " (analytic " +
             fmt(solve_ne(types, kScheme, {0.2, 1.0, kRho}).theta_inf) + ")");

    // mean-field agreement of the adaptive simulator at a robust
    // quasi-stationary level
    const NashEquilibrium ne3 = solve_ne(types, kScheme, {0.3, 1.0, kRho});
    const double agree =
        seed_mean_terminal({0.3, 1.0, kRho}, SimMode::Adaptive, {}, 10, slots);
    out.require(std::abs(agree - ne3.theta_inf) <= 0.05,
                "tau=0.3 terminal " + fmt(agree) + " not within 0.05 of analytic " +
                    fmt(ne3.theta_inf));
    out.note("tau=0.3 agreement gap=" + fmt(std::abs(agree - ne3.theta_inf)));
    return out;
}

Outcome criterion3() {
    Outcome out;
    const auto types = two_type_population();
    const RiskEnv env{0.4, 1.0, kRho};
    const double budget = 1.0 / env.tau();

    const RewardSolution sec = optimal_reward_secure(types, kOperator, env);
    out.require(sec.binding, "persistence constraint not binding at the optimum");

    const int grid_n = 50;
    std::vector<double> r0s, utils, effs;
    for (int i = 1; i <= grid_n; ++i) {
        const double r0 = kOperator.b0 * i / (grid_n + 1);
        const NashEquilibrium ne = solve_ne(types, {r0, kInf}, env);
        double eff = 0.0;
        for (std::size_t k = 0; k < types.size(); ++k)
            eff += types[k].w * (1.0 - ne.theta_k_inf[k]) * ne.a_ne[k];
        r0s.push_back(r0);
        effs.push_back(eff);
        utils.push_back((kOperator.b0 - r0) * eff);
    }
    std::size_t arg = 0;
    for (std::size_t i = 0; i < utils.size(); ++i)
        if (utils[i] > utils[arg]) arg = i;
    out.require(arg > 0 && arg + 1 < utils.size(), "maximum not interior");
    bool unimodal = true;
    for (std::size_t i = 0; i + 1 <= arg; ++i)
        unimodal = unimodal && utils[i] <= utils[i + 1] + 1e-9;
    for (std::size_t i = arg; i + 1 < utils.size(); ++i)
        unimodal = unimodal && utils[i + 1] <= utils[i] + 1e-9;
    out.require(unimodal, "brute utility not unimodal across the grid");
    const double step = kOperator.b0 / (grid_n + 1);
    out.require(std::abs(r0s[arg] - sec.r0_star) <= step + 1e-12,
                "grid argmax " + fmt(r0s[arg]) + " not within one step of binding " +
                    fmt(sec.r0_star));
    out.note("argmax r0=" + fmt(r0s[arg]) + ", binding r0=" + fmt(sec.r0_star));

    double worst_analytic = 0.0;
    for (std::size_t i = 0; i < r0s.size(); ++i)
        if (r0s[i] > sec.r0_star)
            worst_analytic = std::max(worst_analytic, std::abs(effs[i] - budget));
    out.require(worst_analytic <= 1e-4,
                "analytic effective participation drifts " + fmt(worst_analytic));
    out.note("analytic flatness " + fmt(worst_analytic));

    // simulated flatness at every grid point beyond the binding reward; the
    // population is scaled so the quasi-stationary infected count stays well
    // clear of the absorbing boundary
    double worst_sim = 0.0;
    for (std::size_t i = 0; i < r0s.size(); ++i) {
        if (r0s[i] <= sec.r0_star) continue;
        const RewardScheme scheme{r0s[i], kInf};
        const NashEquilibrium ne = solve_ne(types, scheme, env);
        const int n_agents =
            std::min(2500, std::max(500, static_cast<int>(std::ceil(
                                        80.0 / std::max(ne.theta_inf, 1e-9)))));
        const int n_seeds = ne.theta_inf < 0.25 ? 3 : 2;
        const double eta = eta_for(n_agents);
        double eff = 0.0;
        for (int seed = 0; seed < n_seeds; ++seed) {
            SimConfig cfg;
            cfg.n_agents = n_agents;
            cfg.seed = 1000 + i * 8 + static_cast<std::uint64_t>(seed);
            cfg.theta0 = ne.theta_inf;
            const SimResult res = run_sim(cfg, types, scheme, env, kOperator,
                                          SimMode::Adaptive, {}, 10000, 10, eta);
            double e = 0.0;
            for (const auto& st : res.trace) e += st.effective_participation;
            eff += e / static_cast<double>(res.trace.size()) / n_seeds;
        }
        worst_sim = std::max(worst_sim, std::abs(eff - budget) / budget);
    }
    out.require(worst_sim <= 0.05, "simulated effective participation off by " +
                                       fmt(100 * worst_sim) + "% (> 5%)");
    out.note("simulated flatness " + fmt(100 * worst_sim) + "%");
    return out;
}

Outcome criterion4() {
    Outcome out;
    Rng rng(2024);
    double worst_r0 = 0.0, worst_util = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int K = rng.range(1, 3);
        std::vector<double> w(static_cast<std::size_t>(K));
        double wsum = 0.0;
        for (auto& x : w) {
            x = rng.uniform(0.2, 1.0);
            wsum += x;
        }
        std::vector<UEType> types;
        for (int k = 0; k < K; ++k)
            types.push_back({EvaluationFunction::power(rng.uniform(0.6, 1.6),
                                                       rng.uniform(0.35, 0.65)),
                             rng.uniform(0.25, 0.9), rng.uniform(0.5, 5),
                             w[static_cast<std::size_t>(k)] / wsum});
        const OperatorParams op{rng.uniform(2.0, 8.0)};
        const RiskEnv env{rng.uniform(0.08, 0.9), 1.0, rng.uniform(0.5, 4.0)};

        const RewardSolution sec = optimal_reward_secure(types, op, env);
        const int n = 200;
        double best_r0 = 0.0, best_v = -kInf;
        for (int i = 1; i <= n; ++i) {
            const double r0 = op.b0 * i / (n + 1);
            const double v = operator_utility_brute(types, op, env, r0);
            if (v > best_v) {
                best_v = v;
                best_r0 = r0;
            }
        }
        worst_r0 =
            std::max(worst_r0, std::abs(best_r0 - sec.r0_star) / op.b0 * (n + 1));
        worst_util = std::max(
            worst_util, std::abs(operator_utility_brute(types, op, env, sec.r0_star) -
                                 sec.operator_utility));
    }
    out.require(worst_r0 <= 1.0,
                "argmax farther than one grid step (" + fmt(worst_r0) + " steps)");
    out.require(worst_util < 1e-4, "objective mismatch at optimum " + fmt(worst_util));
    out.note("worst argmax offset " + fmt(worst_r0) + " steps, worst utility gap " +
             fmt(worst_util));
    return out;
}

Outcome criterion5() {
    Outcome out;

    // (a) best-response monotonicity ladders
    {
        Rng rng(31337);
        int violations = 0;
        for (int ladder = 0; ladder < 100; ++ladder) {
            const UEType t{EvaluationFunction::power(rng.uniform(0.6, 1.6),
                                                     rng.uniform(0.35, 0.65)),
                           rng.uniform(0.2, 0.9), rng.uniform(0.5, 6), 1.0};
            const RewardScheme s{rng.uniform(1.0, 3.0), kInf};
            const double theta = rng.uniform(0.1, 1.0);
            const double beta0 = rng.uniform(0.1, 0.5);
            const double delta0 = rng.uniform(0.4, 1.0);
            const double rho0 = rng.uniform(0.1, 1.0);
            double prev = -kInf;
            for (int i = 0; i < 5; ++i) {
                const double a =
                    best_response(t, s, {beta0, delta0, rho0 + 0.7 * i}, theta).a_star;
                if (a < prev - 1e-10) ++violations;
                prev = a;
            }
            prev = -kInf;
            for (int i = 0; i < 5; ++i) {
                const double a =
                    best_response(t, s, {beta0, delta0 + 0.5 * i, rho0}, theta).a_star;
                if (a < prev - 1e-10) ++violations;
                prev = a;
            }
            prev = kInf;
            for (int i = 0; i < 5; ++i) {
                const double a =
                    best_response(t, s, {beta0 + 0.12 * i, delta0, rho0}, theta).a_star;
                if (a > prev + 1e-10) ++violations;
                prev = a;
            }
            prev = kInf;
            for (double th : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                const double a = best_response(t, s, {beta0, delta0, rho0}, th).a_star;
                if (a > prev + 1e-10) ++violations;
                prev = a;
            }
        }
        out.require(violations == 0,
                    "monotonicity violations: " + std::to_string(violations));
    }

    // (b) closed-form discounted utility vs quadrature of its definition
    {
        Rng rng(99);
        double worst = 0.0;
        int done = 0;
        while (done < 20) {
            const UEType t{EvaluationFunction::power(rng.uniform(0.7, 1.5),
                                                     rng.uniform(0.35, 0.65)),
                           rng.uniform(0.2, 0.8), rng.uniform(0.5, 6), 1.0};
            const RewardScheme s{rng.uniform(1.0, 3.0), kInf};
            const RiskEnv env{rng.uniform(0.4, 1.0), rng.uniform(0.5, 2.0),
                              rng.uniform(0.3, 2.0)};
            const double theta = rng.uniform(0.2, 0.9);
            const double a = std::max(
                0.3, rng.uniform(0.3, 0.9) * detail::attack_free_interior(t, s));
            if (!(env.beta * theta * a > 1e-3)) continue;
            const double closed = foresighted_utility(t, s, env, a, theta);
            const double quad =
                oracles::foresighted_utility_quadrature(t, s, env, a, theta);
            worst = std::max(worst,
                             std::abs(closed - quad) / std::max(1.0, std::abs(closed)));
            ++done;
        }
        out.require(worst < 1e-4, "quadrature gap " + fmt(worst));
        out.note("utility quadrature gap " + fmt(worst));
    }

    // (c) trajectory limits vs closed-form steady states
    {
        Rng rng(7);
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            const double a = rng.uniform(3.0, 8.0);
            const RiskEnv env{rng.uniform(0.4, 1.0), rng.uniform(0.5, 1.2), 0.0};
            if (env.tau() <= 1.0 / a + 0.1) continue;
            const Trajectory tr = integrate_until_steady(
                rng.uniform(0.1, 0.9), env, FixedPolicy{{a}, {1.0}}, 1e-3, 1e-8, 100);
            const double limit = 1.0 - env.delta / (env.beta * a);
            worst = std::max(worst, std::abs(tr.states.back().theta - limit));
        }
        out.require(worst < 1e-6, "ODE limit gap " + fmt(worst));
        out.note("ODE limit gap " + fmt(worst));
    }

    // (d) equilibrium self-consistency residuals
    {
        Rng rng(13);
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            const std::vector<UEType> types = {
                {EvaluationFunction::power(rng.uniform(0.7, 1.4), 0.5),
                 rng.uniform(0.3, 0.7), rng.uniform(0.5, 4), 0.4},
                {EvaluationFunction::power(rng.uniform(0.7, 1.4), 0.5),
                 rng.uniform(0.3, 0.7), rng.uniform(0.5, 4), 0.6}};
            const RewardScheme s{rng.uniform(1.2, 3.0), kInf};
            const RiskEnv env{rng.uniform(0.2, 0.9), 1.0, rng.uniform(0.5, 3.0)};
            const NashEquilibrium ne = solve_ne(types, s, env);
            const SteadyState ss = steady_state_fixed_ktype(ne.a_ne, {0.4, 0.6}, env);
            worst = std::max(worst, std::abs(ss.theta_inf - ne.theta_inf));
            for (std::size_t k = 0; k < types.size(); ++k) {
                const double br = best_response(types[k], s, env, ne.theta_inf).a_star;
                worst = std::max(worst, std::abs(br - ne.a_ne[k]));
            }
        }
        out.require(worst < 1e-8, "self-consistency residual " + fmt(worst));
        out.note("NE residual " + fmt(worst));
    }

    // (e) convergence-speed bounds bracket measured first passages
    {
        Rng rng(47);
        int done = 0, inside = 0;
        while (done < 20) {
            const UEType t{EvaluationFunction::power(rng.uniform(0.7, 1.4), 0.5),
                           rng.uniform(0.3, 0.7), rng.uniform(0.5, 4), 1.0};
            const RewardScheme s{rng.uniform(1.5, 3.0), kInf};
            const RiskEnv env{rng.uniform(0.3, 0.9), 1.0, rng.uniform(0.5, 2.0)};
            SteadyState ss;
            try {
                ss = steady_state_strategic(t, s, env);
            } catch (const std::exception&) {
                continue;
            }
            if (!ss.persistent || ss.theta_inf < 0.03 || ss.theta_inf > 0.9) continue;
            const bool above = rng.bernoulli(0.5);
            const double theta0 =
                above ? std::min(0.97, ss.theta_inf + rng.uniform(0.1, 0.4))
                      : std::max(0.01, ss.theta_inf - rng.uniform(0.05, 0.3));
            if (std::abs(theta0 - ss.theta_inf) < 0.04) continue;
            const double eps = 0.3 * std::abs(theta0 - ss.theta_inf);
            const auto [lower, upper] = convergence_time_bounds(theta0, eps, env, t, s);
            const double target =
                theta0 > ss.theta_inf ? ss.theta_inf + eps : ss.theta_inf - eps;
            const Trajectory tr = integrate_dynamics(
                theta0, env, AdaptivePolicy{{t}, s}, upper * 1.5 + 1.0, 1e-4, 1);
            double crossing = -1.0;
            for (std::size_t i = 1; i < tr.states.size(); ++i) {
                const double a = tr.states[i - 1].theta, b = tr.states[i].theta;
                const bool crossed = theta0 > ss.theta_inf
                                         ? (a > target && b <= target)
                                         : (a < target && b >= target);
                if (crossed) {
                    crossing =
                        tr.states[i - 1].t + (target - a) / (b - a) *
                                                 (tr.states[i].t - tr.states[i - 1].t);
                    break;
                }
            }
            ++done;
            if (crossing > lower && crossing < upper) ++inside;
        }
        out.require(inside == 20,
                    "first passages inside bounds: " + std::to_string(inside) + "/20");
    }
    return out;
}

Outcome criterion6() {
    Outcome out;
    const RiskEnv env{0.4, 1.0, kRho};
    const SteadyState ss = steady_state_fixed_ktype({3.0, 5.0}, {0.3, 0.7}, env);

    auto gap_at = [&](double v_max) {
        const double eta = eta_for(100, v_max, 10.0);
        double gap = 0.0;
        for (int seed = 1; seed <= 10; ++seed) {
            SimConfig cfg;
            cfg.seed = static_cast<std::uint64_t>(seed);
            cfg.v_max = v_max;
            cfg.d = 10.0;
            const SimResult res =
                run_sim(cfg, two_type_population(), kScheme, env, kOperator,
                        SimMode::Fixed, {3.0, 5.0}, 20000, 10, eta);
            gap += std::abs(tail_theta(res) - ss.theta_inf) / 10.0;
        }
        return gap;
    };
    const double slow = gap_at(1.0);
    const double fast = gap_at(20.0);
    out.require(slow > fast, "slow-mobility gap " + fmt(slow) +
                                 " not above fast-mobility gap " + fmt(fast));
    out.note("gap v_max=1: " + fmt(slow) + ", v_max=20: " + fmt(fast));
    return out;
}

Outcome criterion7() {
    Outcome out;
    const fs::path base = fs::temp_directory_path() / "d2d_acceptance7";
    fs::remove_all(base);

    json j;
    j["schema_version"] = 1;
    j["name"] = "determinism";
    j["seed"] = 321;
    j["types"] = json::array({json{{"family", "power"},
                                   {"k", 1.0},
                                   {"gamma", 0.5},
                                   {"c", 0.35},
                                   {"q", 0.5},
                                   {"w", 0.3}},
                              json{{"family", "power"},
                                   {"k", 1.5},
                                   {"gamma", 0.5},
                                   {"c", 0.35},
                                   {"q", 0.5},
                                   {"w", 0.7}}});
    j["scheme"] = {{"r0", 2.2}};
    j["env"] = {{"beta", 0.4}, {"delta", 1.0}, {"rho", 4.0}};
    j["operator"] = {{"b0", 6.0}};
    j["fixed_rates"] = {3.0, 5.0};
    j["sim"] = {{"mode", "fixed"},
                {"horizon_slots", 3000},
                {"sample_every", 5},
                {"eta_slots", 1000}};
    j["sweep"] = {{"axes", json::array({json{{"parameter", "r0"},
                                             {"values", {0.5, 1.5, 2.5, 3.5}}}})}};

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const Scenario sc = parse_scenario(j);
    for (const char* experiment : {"simulate", "sweep"}) {
        RunOptions o1, o2;
        o1.out_dir = (base / (std::string(experiment) + "_1")).string();
        o2.out_dir = (base / (std::string(experiment) + "_2")).string();
        run_scenario(sc, experiment, o1);
        run_scenario(sc, experiment, o2);
        const char* file =
            std::string(experiment) == "simulate" ? "trace.csv" : "sweep.csv";
        const bool same =
            slurp(fs::path(o1.out_dir) / file) == slurp(fs::path(o2.out_dir) / file);
        out.require(same, std::string(experiment) + " outputs differ across reruns");
        const bool manifests_same = slurp(fs::path(o1.out_dir) / "manifest.json") ==
                                    slurp(fs::path(o2.out_dir) / "manifest.json");
        out.require(manifests_same, std::string(experiment) + " manifests differ");
    }
    return out;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> criteria = {
        {1, "fixed-action critical rate and simulated extinction/persistence",
         criterion1},
        {2, "strategic critical rate and simulated extinction/persistence",
         criterion2},
        {3, "less-is-more reward curve with flat effective participation",
         criterion3},
        {4, "reformulated reward design matches the brute-force objective",
         criterion4},
        {5, "property suites: monotonicity, quadrature, limits, residuals, bounds",
         criterion5},
        {6, "mobility sensitivity of the mean-field approximation", criterion6},
        {7, "byte-identical reruns for identical scenario and seed", criterion7},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        if (!out.pass) ++failures;
        std::printf("criterion %d [%s] %s%s%s\n", c.id, out.pass ? "PASS" : "FAIL",
                    c.name, out.detail.empty() ? "" : " -- ", out.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
