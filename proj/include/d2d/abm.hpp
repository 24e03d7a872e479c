// Discrete-time agent-based simulator: random-waypoint mobility, per-slot
// requester/server roles, proximity matching with per-task assignment,
// SIS infection and recovery, and per-slot strategic contract revision.
// Continuous-time rates convert to per-slot probabilities through the
// empirically estimated assignment rate eta.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "d2d/bestresp.hpp"
#include "d2d/model.hpp"
#include "d2d/rng.hpp"

namespace d2d {

struct SimConfig {
    int n_agents = 100;
    double area = 100.0;            // square side length, distance units
    int slots_per_unit_time = 100;
    double v_max = 20.0;            // max speed, distance per slot
    int m_max = 5;                  // max pause, slots
    double p = 0.2;                 // per-slot requester probability
    int w_max = 3;                  // max tasks per requester per slot
    double d = 20.0;                // D2D communication range
    std::uint64_t seed = 1;
    double theta0 = 0.5;            // initial infected fraction
    bool compromised_can_request = true;

    void validate() const {
        if (n_agents < 2) throw std::invalid_argument("sim: need at least 2 agents");
        if (!(area > 0.0)) throw std::invalid_argument("sim: area must be > 0");
        if (slots_per_unit_time < 1)
            throw std::invalid_argument("sim: slots_per_unit_time must be >= 1");
        if (!(v_max > 0.0)) throw std::invalid_argument("sim: v_max must be > 0");
        if (m_max < 0) throw std::invalid_argument("sim: m_max must be >= 0");
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sim: p must be in [0,1]");
        if (w_max < 1) throw std::invalid_argument("sim: w_max must be >= 1");
        if (!(d >= 0.0)) throw std::invalid_argument("sim: range d must be >= 0");
        if (!(theta0 >= 0.0 && theta0 <= 1.0))
            throw std::invalid_argument("sim: theta0 must be in [0,1]");
    }
};

enum class AgentState { Susceptible, Infected };
enum class SimMode { Fixed, Adaptive };

struct Agent {
    double x = 0.0, y = 0.0;
    double wx = 0.0, wy = 0.0;  // current waypoint
    double speed = 0.0;         // distance per slot on the current leg
    int pause = 0;
    int type = 0;
    AgentState state = AgentState::Susceptible;
    double rate = 0.0;    // contracted tasks per unit time
    double accept = 0.0;  // per-slot acceptance probability
    double utility = 0.0; // cumulative
};

struct SlotStats {
    long slot = 0;
    double theta_hat = 0.0;
    double mean_participation = 0.0;
    double effective_participation = 0.0;
    double operator_utility_rate = 0.0;  // per capita, utility per unit time
};

// Converted per-slot participation probability a / (slots*(1-p)*eta),
// clamped to [0,1]; *clamped reports when the contract rate saturates the
// slot probability.
inline double rate_to_slot_probability(double a, const SimConfig& cfg, double eta,
                                       bool* clamped = nullptr) {
    if (!(eta > 0.0))
        throw std::runtime_error("rate_to_slot_probability: eta must be > 0");
    if (!(a >= 0.0))
        throw std::invalid_argument("rate_to_slot_probability: a must be >= 0");
    const double prob = a / (cfg.slots_per_unit_time * (1.0 - cfg.p) * eta);
    if (prob > 1.0) {
        if (clamped) *clamped = true;
        return 1.0;
    }
    return prob;
}

namespace detail {

inline void new_leg(Agent& ag, const SimConfig& cfg, Rng& rng) {
    ag.wx = rng.uniform(0.0, cfg.area);
    ag.wy = rng.uniform(0.0, cfg.area);
    ag.speed = rng.uniform() * cfg.v_max;
}

// Random waypoint: move toward the waypoint at the leg speed, pause on
// arrival, then draw a fresh destination and speed. Destinations are drawn
// inside the area, so agents never leave it.
inline void move_agent(Agent& ag, const SimConfig& cfg, Rng& rng) {
    if (ag.pause > 0) {
        --ag.pause;
        if (ag.pause == 0) new_leg(ag, cfg, rng);
        return;
    }
    const double dx = ag.wx - ag.x;
    const double dy = ag.wy - ag.y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist <= ag.speed) {
        ag.x = ag.wx;
        ag.y = ag.wy;
        ag.pause = rng.range(0, cfg.m_max);
        if (ag.pause == 0) new_leg(ag, cfg, rng);
    } else {
        ag.x += ag.speed * dx / dist;
        ag.y += ag.speed * dy / dist;
    }
}

}  // namespace detail

struct SimWorld {
    SimConfig cfg;
    std::vector<UEType> types;
    RewardScheme scheme;
    RiskEnv env;
    OperatorParams op;
    SimMode mode = SimMode::Fixed;
    std::vector<double> fixed_rates;  // per type, SimMode::Fixed
    double eta = 0.0;
    Rng rng{1};
    std::vector<Agent> agents;
    long slot = 0;
    long long served_tasks = 0;    // cumulative D2D-served tasks
    long long overflow_tasks = 0;  // cumulative tasks sent to the edge server
    bool conversion_clamped = false;

    // scratch, kept across slots to avoid churn
    std::vector<char> requester;
    std::vector<char> pending_infection;
    std::vector<int> candidates;
    std::vector<std::pair<int, char>> served;  // (server, requester infected)
    std::vector<double> px, py;                // position snapshot for the scan
    std::vector<char> eligible;                // non-requester and able to serve
    std::vector<int> cell_start, cell_items;   // uniform-grid range index
};

// Per-slot probability that a potential server receives an assignment when
// everyone is obedient (every in-range non-requester accepts every task).
// Runs its own seeded world; measurement skips a short mobility burn-in.
inline double estimate_eta(const SimConfig& cfg, long slots = 5000) {
    cfg.validate();
    if (slots < 10) throw std::invalid_argument("estimate_eta: too few slots");
    Rng rng(cfg.seed ^ 0x0E7A0E7A0E7A0E7AULL);
    std::vector<Agent> agents(static_cast<std::size_t>(cfg.n_agents));
    for (auto& ag : agents) {
        ag.x = rng.uniform(0.0, cfg.area);
        ag.y = rng.uniform(0.0, cfg.area);
        detail::new_leg(ag, cfg, rng);
    }
    const long burn_in = std::min<long>(500, slots / 10);
    const std::size_t n = agents.size();
    std::vector<char> requester(n, 0);
    std::vector<double> px(n), py(n);
    const double d2 = cfg.d * cfg.d;
    long long assigned = 0, server_slots = 0;
    for (long s = 0; s < slots; ++s) {
        for (auto& ag : agents) detail::move_agent(ag, cfg, rng);
        for (std::size_t i = 0; i < n; ++i) {
            requester[i] = rng.bernoulli(cfg.p) ? 1 : 0;
            px[i] = agents[i].x;
            py[i] = agents[i].y;
        }
        const bool measure = s >= burn_in;
        if (measure)
            for (std::size_t i = 0; i < n; ++i)
                if (!requester[i]) ++server_slots;
        for (std::size_t r = 0; r < n; ++r) {
            if (!requester[r]) continue;
            const int ntasks = rng.range(1, cfg.w_max);
            bool any_candidate = false;
            for (std::size_t j = 0; j < n && !any_candidate; ++j) {
                const double dx = px[j] - px[r];
                const double dy = py[j] - py[r];
                any_candidate = !requester[j] && j != r && dx * dx + dy * dy <= d2;
            }
            // which candidate takes each task does not move the mean, so the
            // obedient run only counts assignable tasks
            if (measure && any_candidate) assigned += ntasks;
        }
    }
    if (server_slots == 0) return 0.0;
    return static_cast<double>(assigned) / static_cast<double>(server_slots);
}

namespace detail {

inline void set_contracts(SimWorld& w, double theta_hat) {
    std::vector<double> rate_by_type(w.types.size(), 0.0);
    if (w.mode == SimMode::Fixed) {
        rate_by_type = w.fixed_rates;
    } else {
        for (std::size_t k = 0; k < w.types.size(); ++k)
            rate_by_type[k] =
                best_response(w.types[k], w.scheme, w.env, theta_hat).a_star;
    }
    for (auto& ag : w.agents) {
        ag.rate = rate_by_type[static_cast<std::size_t>(ag.type)];
        bool clamped = false;
        ag.accept = rate_to_slot_probability(ag.rate, w.cfg, w.eta, &clamped);
        if (clamped) w.conversion_clamped = true;
    }
}

}  // namespace detail

inline SimWorld make_world(const SimConfig& cfg, const std::vector<UEType>& types,
                           const RewardScheme& scheme, const RiskEnv& env,
                           const OperatorParams& op, SimMode mode,
                           const std::vector<double>& fixed_rates, double eta) {
    cfg.validate();
    validate_population(types);
    scheme.validate();
    env.validate();
    if (mode == SimMode::Fixed && fixed_rates.size() != types.size())
        throw std::invalid_argument("make_world: fixed_rates size must match types");
    if (!(eta > 0.0)) throw std::runtime_error("make_world: eta must be > 0");

    SimWorld w;
    w.cfg = cfg;
    w.types = types;
    w.scheme = scheme;
    w.env = env;
    w.op = op;
    w.mode = mode;
    w.fixed_rates = fixed_rates;
    w.eta = eta;
    w.rng = Rng(cfg.seed);
    w.agents.resize(static_cast<std::size_t>(cfg.n_agents));

    std::vector<double> cum_w(types.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < types.size(); ++k) {
        acc += types[k].w;
        cum_w[k] = acc;
    }
    for (auto& ag : w.agents) {
        ag.x = w.rng.uniform(0.0, cfg.area);
        ag.y = w.rng.uniform(0.0, cfg.area);
        detail::new_leg(ag, cfg, w.rng);
        const double u = w.rng.uniform();
        ag.type = static_cast<int>(types.size()) - 1;
        for (std::size_t k = 0; k < types.size(); ++k)
            if (u < cum_w[k]) {
                ag.type = static_cast<int>(k);
                break;
            }
    }
    // seed the infection: exactly round(theta0 * N) agents, sampled without
    // replacement
    const int n_inf = static_cast<int>(std::lround(cfg.theta0 * cfg.n_agents));
    std::vector<int> order(w.agents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (int i = 0; i < n_inf; ++i) {
        const int j = i + static_cast<int>(w.rng.below(order.size() - i));
        std::swap(order[i], order[j]);
        w.agents[static_cast<std::size_t>(order[i])].state = AgentState::Infected;
    }

    const double theta_hat = static_cast<double>(n_inf) / cfg.n_agents;
    detail::set_contracts(w, theta_hat);

    w.requester.assign(w.agents.size(), 0);
    w.pending_infection.assign(w.agents.size(), 0);
    return w;
}

inline double theta_hat(const SimWorld& w) {
    int infected = 0;
    for (const auto& ag : w.agents)
        if (ag.state == AgentState::Infected) ++infected;
    return static_cast<double>(infected) / static_cast<double>(w.agents.size());
}

// One slot. Sub-phase order: move -> roles -> match -> infect -> recover ->
// revise. Matching assigns each task to ONE uniformly drawn in-range
// non-requester; an Infected candidate cannot serve and the task overflows to
// the edge, a Susceptible candidate serves with its converted acceptance
// probability. This keeps the expected served rate of a susceptible agent
// equal to its contracted rate, independent of the compromise level.
inline SlotStats step(SimWorld& w) {
    const SimConfig& cfg = w.cfg;
    const int slots = cfg.slots_per_unit_time;
    const std::size_t n = w.agents.size();

    // (1) mobility
    for (auto& ag : w.agents) detail::move_agent(ag, cfg, w.rng);

    // (2) requester roles; a "down" compromised agent neither serves nor
    // requests
    for (std::size_t i = 0; i < n; ++i) {
        const bool down = !cfg.compromised_can_request &&
                          w.agents[i].state == AgentState::Infected;
        w.requester[i] = (!down && w.rng.bernoulli(cfg.p)) ? 1 : 0;
    }

    // (3) matching, requester index order; a uniform grid with cells no
    // smaller than the D2D range keeps each lookup inside a 3x3 neighborhood
    w.served.clear();
    long long served_this_slot = 0;
    w.px.resize(n);
    w.py.resize(n);
    w.eligible.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        w.px[j] = w.agents[j].x;
        w.py[j] = w.agents[j].y;
        const bool down = !cfg.compromised_can_request &&
                          w.agents[j].state == AgentState::Infected;
        w.eligible[j] = (!w.requester[j] && !down) ? 1 : 0;
    }
    const int nc = std::max(
        1, std::min(64, static_cast<int>(cfg.area / std::max(cfg.d, 1e-12))));
    const double inv_cell = nc / cfg.area;
    auto cell_of = [&](std::size_t j) {
        const int cx = std::min(nc - 1, static_cast<int>(w.px[j] * inv_cell));
        const int cy = std::min(nc - 1, static_cast<int>(w.py[j] * inv_cell));
        return cy * nc + cx;
    };
    w.cell_start.assign(static_cast<std::size_t>(nc) * nc + 1, 0);
    w.cell_items.resize(n);
    for (std::size_t j = 0; j < n; ++j) ++w.cell_start[cell_of(j) + 1];
    for (std::size_t c = 1; c < w.cell_start.size(); ++c)
        w.cell_start[c] += w.cell_start[c - 1];
    {
        std::vector<int> cursor(w.cell_start.begin(), w.cell_start.end() - 1);
        for (std::size_t j = 0; j < n; ++j)
            w.cell_items[static_cast<std::size_t>(
                cursor[cell_of(j)]++)] = static_cast<int>(j);
    }
    const double d2 = cfg.d * cfg.d;
    for (std::size_t r = 0; r < n; ++r) {
        if (!w.requester[r]) continue;
        const int ntasks = w.rng.range(1, cfg.w_max);
        w.candidates.clear();
        const double rx = w.px[r], ry = w.py[r];
        const int rcx = std::min(nc - 1, static_cast<int>(rx * inv_cell));
        const int rcy = std::min(nc - 1, static_cast<int>(ry * inv_cell));
        for (int cy = std::max(0, rcy - 1); cy <= std::min(nc - 1, rcy + 1); ++cy)
            for (int cx = std::max(0, rcx - 1); cx <= std::min(nc - 1, rcx + 1); ++cx) {
                const int c = cy * nc + cx;
                for (int it = w.cell_start[static_cast<std::size_t>(c)];
                     it < w.cell_start[static_cast<std::size_t>(c) + 1]; ++it) {
                    const std::size_t j =
                        static_cast<std::size_t>(w.cell_items[static_cast<std::size_t>(it)]);
                    const double dx = w.px[j] - rx;
                    const double dy = w.py[j] - ry;
                    if (w.eligible[j] && j != r && dx * dx + dy * dy <= d2)
                        w.candidates.push_back(static_cast<int>(j));
                }
            }
        const char r_infected = w.agents[r].state == AgentState::Infected ? 1 : 0;
        for (int t = 0; t < ntasks; ++t) {
            if (w.candidates.empty()) {
                ++w.overflow_tasks;
                continue;
            }
            const int j = w.candidates[w.rng.below(w.candidates.size())];
            Agent& srv = w.agents[static_cast<std::size_t>(j)];
            if (srv.state == AgentState::Infected) {
                ++w.overflow_tasks;  // picked server cannot provide service
                continue;
            }
            if (w.rng.bernoulli(srv.accept)) {
                w.served.emplace_back(j, r_infected);
                ++served_this_slot;
                srv.utility -= w.types[static_cast<std::size_t>(srv.type)].c;
            } else {
                ++w.overflow_tasks;  // declined, offloaded to the edge server
            }
        }
    }
    w.served_tasks += served_this_slot;

    // reward accrual for agents normal at the start of the slot
    for (auto& ag : w.agents)
        if (ag.state == AgentState::Susceptible)
            ag.utility += w.types[static_cast<std::size_t>(ag.type)].eval.value(
                              w.scheme.reward(ag.rate)) /
                          slots;

    // (4) infection: independent Bernoulli(beta) per task served for an
    // infected requester; state changes apply after all draws
    std::fill(w.pending_infection.begin(), w.pending_infection.end(), 0);
    for (const auto& [server, from_infected] : w.served)
        if (from_infected && w.rng.bernoulli(w.env.beta))
            w.pending_infection[static_cast<std::size_t>(server)] = 1;

    // (5) recovery + recovery cost for agents infected at the start of the
    // slot; the newly infected start paying next slot
    const double recover_p = w.env.delta / slots;
    for (std::size_t i = 0; i < n; ++i) {
        if (w.agents[i].state != AgentState::Infected) continue;
        w.agents[i].utility -= w.types[static_cast<std::size_t>(w.agents[i].type)].q /
                               slots;
        if (w.rng.bernoulli(recover_p)) w.agents[i].state = AgentState::Susceptible;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (w.pending_infection[i]) w.agents[i].state = AgentState::Infected;

    // (6) contract revision against the observed compromise fraction
    const double th = theta_hat(w);
    if (w.mode == SimMode::Adaptive) detail::set_contracts(w, th);

    ++w.slot;
    SlotStats st;
    st.slot = w.slot;
    st.theta_hat = th;
    double mean_rate = 0.0, eff = 0.0;
    for (const auto& ag : w.agents) {
        mean_rate += ag.rate;
        if (ag.state == AgentState::Susceptible) eff += ag.rate;
    }
    st.mean_participation = mean_rate / static_cast<double>(n);
    st.effective_participation = eff / static_cast<double>(n);
    st.operator_utility_rate = (w.op.b0 - w.scheme.r0) *
                               static_cast<double>(served_this_slot) * slots /
                               static_cast<double>(n);
    return st;
}

struct SimResult {
    std::vector<SlotStats> trace;
    double eta = 0.0;
    long long served_tasks = 0;
    long long overflow_tasks = 0;
    bool conversion_clamped = false;
};

// Run `horizon_slots` slots, sampling every `sample_every` into the trace.
// eta <= 0 requests estimation from the obedient counterpart of cfg.
inline SimResult run_sim(const SimConfig& cfg, const std::vector<UEType>& types,
                         const RewardScheme& scheme, const RiskEnv& env,
                         const OperatorParams& op, SimMode mode,
                         const std::vector<double>& fixed_rates, long horizon_slots,
                         int sample_every = 1, double eta = 0.0,
                         long eta_slots = 5000) {
    if (horizon_slots < 1)
        throw std::invalid_argument("run_sim: horizon must be >= 1 slot");
    if (sample_every < 1) throw std::invalid_argument("run_sim: bad sample_every");
    SimResult res;
    res.eta = eta > 0.0 ? eta : estimate_eta(cfg, eta_slots);
    SimWorld w = make_world(cfg, types, scheme, env, op, mode, fixed_rates, res.eta);
    res.trace.reserve(static_cast<std::size_t>(horizon_slots / sample_every) + 1);
    for (long s = 0; s < horizon_slots; ++s) {
        const SlotStats st = step(w);
        if (st.slot % sample_every == 0 || s + 1 == horizon_slots)
            res.trace.push_back(st);
    }
    res.served_tasks = w.served_tasks;
    res.overflow_tasks = w.overflow_tasks;
    res.conversion_clamped = w.conversion_clamped;
    return res;
}

// Mean of theta_hat over the trailing fraction of a trace.
inline double terminal_theta(const SimResult& res, double tail_fraction = 0.1) {
    if (res.trace.empty()) throw std::invalid_argument("terminal_theta: empty trace");
    const std::size_t n = res.trace.size();
    const std::size_t start =
        n - std::max<std::size_t>(1, static_cast<std::size_t>(tail_fraction * n));
    double s = 0.0;
    for (std::size_t i = start; i < n; ++i) s += res.trace[i].theta_hat;
    return s / static_cast<double>(n - start);
}

}  // namespace d2d
