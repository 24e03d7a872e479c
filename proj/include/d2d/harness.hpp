// Experiment orchestration: dispatches a scenario to the named experiment,
// writes RFC-4180 CSV outputs plus a JSON run manifest, runs parameter
// sweeps (optionally in parallel), and compares mean-field predictions
// against the agent-based simulator.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "d2d/abm.hpp"
#include "d2d/csv.hpp"
#include "d2d/epidemic.hpp"
#include "d2d/equilibrium.hpp"
#include "d2d/model.hpp"
#include "d2d/reward.hpp"
#include "d2d/scenario.hpp"

namespace d2d {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> tol;
};

struct RunResult {
    std::filesystem::path manifest_path;
    std::vector<std::string> files;
    json summary;
};

struct CompareRow {
    std::string metric;
    double analytic = 0.0;
    double simulated = 0.0;
    double gap = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct AgreementReport {
    std::vector<CompareRow> rows;
    bool all_pass = true;
};

namespace detail {

inline void apply_overrides(Scenario& sc, const RunOptions& opts) {
    if (opts.seed) {
        sc.seed = *opts.seed;
        if (sc.sim) sc.sim->config.seed = *opts.seed;
    }
    if (opts.dt) sc.dynamics.dt = *opts.dt;
    if (opts.tol) sc.compare.theta_tol = *opts.tol;
}

inline void apply_axis(Scenario& sc, const std::string& parameter, double value) {
    if (parameter == "r0") sc.scheme.r0 = value;
    else if (parameter == "tau") sc.env.beta = value * sc.env.delta;
    else if (parameter == "beta") sc.env.beta = value;
    else if (parameter == "delta") sc.env.delta = value;
    else if (parameter == "rho") sc.env.rho = value;
    else if (parameter == "b0") sc.op.b0 = value;
    else throw std::invalid_argument("unknown sweep parameter: " + parameter);
    sc.scheme.validate();
    sc.env.validate();
    sc.op.validate();
}

inline std::vector<double> type_weights(const Scenario& sc) {
    std::vector<double> w;
    for (const auto& t : sc.types) w.push_back(t.w);
    return w;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr,
                                 std::size_t n_types, const std::string& hash,
                                 bool adaptive, const std::vector<double>& weights) {
    std::vector<std::string> header = {"t", "theta"};
    for (std::size_t k = 0; k < n_types; ++k)
        header.push_back("theta_" + std::to_string(k));
    if (adaptive) header.push_back("a_star");
    header.push_back("scenario_hash");
    CsvWriter csv(path.string(), header);
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const EpidemicState& s = tr.states[i];
        std::vector<double> row = {s.t, s.theta};
        row.insert(row.end(), s.theta_k.begin(), s.theta_k.end());
        if (adaptive) {
            double mix = 0.0;
            for (std::size_t k = 0; k < weights.size(); ++k)
                mix += weights[k] * tr.actions[i][k];
            row.push_back(mix);
        }
        csv.row_nums(row, hash);
    }
}

inline void write_trace_csv(const std::filesystem::path& path, const SimResult& res,
                            const std::string& hash) {
    CsvWriter csv(path.string(),
                  {"slot", "theta_hat", "mean_participation", "effective_participation",
                   "operator_utility_rate", "scenario_hash"});
    for (const SlotStats& st : res.trace)
        csv.row_nums({static_cast<double>(st.slot), st.theta_hat, st.mean_participation,
                      st.effective_participation, st.operator_utility_rate},
                     hash);
}

// one sweep point, analytic pipeline; never throws, failures go to `status`
struct SweepPoint {
    std::vector<double> axis_values;
    double tau_c = 0.0, theta_inf = 0.0, effective = 0.0, utility = 0.0, a_mix = 0.0;
    std::string status = "ok";
};

inline SweepPoint eval_sweep_point(Scenario sc, const std::vector<SweepAxis>& axes,
                                   const std::vector<std::size_t>& idx) {
    SweepPoint pt;
    try {
        for (std::size_t a = 0; a < axes.size(); ++a) {
            pt.axis_values.push_back(axes[a].values[idx[a]]);
            apply_axis(sc, axes[a].parameter, axes[a].values[idx[a]]);
        }
        const NashEquilibrium ne = solve_ne(sc.types, sc.scheme, sc.env);
        pt.tau_c = ne.tau_c;
        pt.theta_inf = ne.theta_inf;
        for (std::size_t k = 0; k < sc.types.size(); ++k) {
            pt.effective += sc.types[k].w * (1.0 - ne.theta_k_inf[k]) * ne.a_ne[k];
            pt.a_mix += sc.types[k].w * ne.a_ne[k];
        }
        pt.utility = (sc.op.b0 - sc.scheme.r0) * pt.effective;
    } catch (const std::exception& e) {
        pt.status = e.what();
    }
    return pt;
}

}  // namespace detail

// Mean-field prediction vs ABM outcome for one scenario; requires a sim
// section. Fixed mode compares against the fixed-rate steady state, adaptive
// mode against the equilibrium of the participation game.
inline AgreementReport compare_meanfield_abm(const Scenario& sc, SimResult* out_sim = nullptr) {
    if (!sc.sim) throw ScenarioError("$.sim: required for compare");
    const SimSection& sim = *sc.sim;

    double theta_pred = 0.0, eff_pred = 0.0, mix_pred = 0.0;
    if (sim.mode == "fixed") {
        const SteadyState ss =
            steady_state_fixed_ktype(sc.fixed_rates, detail::type_weights(sc), sc.env);
        theta_pred = ss.theta_inf;
        for (std::size_t k = 0; k < sc.types.size(); ++k) {
            eff_pred += sc.types[k].w * (1.0 - ss.theta_k[k]) * sc.fixed_rates[k];
            mix_pred += sc.types[k].w * sc.fixed_rates[k];
        }
    } else {
        const NashEquilibrium ne = solve_ne(sc.types, sc.scheme, sc.env);
        theta_pred = ne.theta_inf;
        for (std::size_t k = 0; k < sc.types.size(); ++k) {
            eff_pred += sc.types[k].w * (1.0 - ne.theta_k_inf[k]) * ne.a_ne[k];
            mix_pred += sc.types[k].w * ne.a_ne[k];
        }
    }

    const SimResult res = run_sim(
        sim.config, sc.types, sc.scheme, sc.env, sc.op,
        sim.mode == "fixed" ? SimMode::Fixed : SimMode::Adaptive, sc.fixed_rates,
        sim.horizon_slots, sim.sample_every, sim.eta, sim.eta_slots);
    const double tail = 0.1;
    const double theta_sim = terminal_theta(res, tail);
    double eff_sim = 0.0, mix_sim = 0.0;
    {
        const std::size_t n = res.trace.size();
        const std::size_t start =
            n - std::max<std::size_t>(1, static_cast<std::size_t>(tail * n));
        for (std::size_t i = start; i < n; ++i) {
            eff_sim += res.trace[i].effective_participation;
            mix_sim += res.trace[i].mean_participation;
        }
        eff_sim /= static_cast<double>(n - start);
        mix_sim /= static_cast<double>(n - start);
    }

    AgreementReport rep;
    auto add = [&](const std::string& metric, double pred, double simv, double tol,
                   bool relative) {
        CompareRow row;
        row.metric = metric;
        row.analytic = pred;
        row.simulated = simv;
        row.gap = std::abs(simv - pred);
        row.tolerance = tol;
        row.pass = relative ? row.gap <= tol * std::max(std::abs(pred), 1e-12)
                            : row.gap <= tol;
        rep.rows.push_back(row);
        rep.all_pass = rep.all_pass && row.pass;
    };
    add("theta_inf", theta_pred, theta_sim, sc.compare.theta_tol, false);
    if (mix_pred > 0.0) {
        add("mean_participation", mix_pred, mix_sim, sc.compare.participation_rel_tol,
            true);
        add("effective_participation", eff_pred, eff_sim,
            sc.compare.participation_rel_tol, true);
    }
    if (out_sim) *out_sim = res;
    return rep;
}

// Dispatch a scenario to the named experiment and write its outputs plus a
// manifest under opts.out_dir. Experiments: solve-br | steady-state | ne |
// reward-opt | joint-opt | simulate | sweep | compare.
inline RunResult run_scenario(Scenario sc, const std::string& experiment,
                              const RunOptions& opts) {
    namespace fs = std::filesystem;
    detail::apply_overrides(sc, opts);
    const std::string hash = scenario_hash(sc);
    const fs::path dir(opts.out_dir);
    fs::create_directories(dir);

    RunResult result;
    json summary;
    auto emit = [&](const std::string& name) {
        result.files.push_back(name);
        return (dir / name).string();
    };

    if (experiment == "solve-br") {
        std::vector<std::string> header = {"theta"};
        for (std::size_t k = 0; k < sc.types.size(); ++k)
            header.push_back("a_star_" + std::to_string(k));
        header.push_back("a_mix");
        header.push_back("scenario_hash");
        CsvWriter csv(emit("br.csv"), header);
        const int npts = 101;
        for (int i = 0; i < npts; ++i) {
            const double theta = static_cast<double>(i) / (npts - 1);
            std::vector<double> row = {theta};
            double mix = 0.0;
            for (const auto& t : sc.types) {
                const double a = best_response(t, sc.scheme, sc.env, theta).a_star;
                row.push_back(a);
                mix += t.w * a;
            }
            row.push_back(mix);
            csv.row_nums(row, hash);
        }
        json types = json::array();
        for (std::size_t k = 0; k < sc.types.size(); ++k) {
            const BestResponse br = best_response(sc.types[k], sc.scheme, sc.env, 0.0);
            json tj;
            tj["a_af"] = br.a_star;
            tj["theta_bar"] = std::isfinite(br.theta_bar)
                                  ? json(br.theta_bar)
                                  : json("inf");
            types.push_back(tj);
        }
        summary["types"] = types;
    } else if (experiment == "steady-state") {
        const bool adaptive = sc.dynamics.policy == "adaptive";
        double tau_c = 0.0, theta_inf = 0.0;
        std::vector<double> theta_k;
        Policy policy = FixedPolicy{};
        if (adaptive) {
            const NashEquilibrium ne = solve_ne(sc.types, sc.scheme, sc.env);
            tau_c = ne.tau_c;
            theta_inf = ne.theta_inf;
            theta_k = ne.theta_k_inf;
            policy = AdaptivePolicy{sc.types, sc.scheme};
        } else {
            if (sc.fixed_rates.empty())
                throw ScenarioError(
                    "$.fixed_rates: required for fixed-policy steady-state");
            const SteadyState ss = steady_state_fixed_ktype(
                sc.fixed_rates, detail::type_weights(sc), sc.env);
            tau_c = ss.tau_c;
            theta_inf = ss.theta_inf;
            theta_k = ss.theta_k;
            policy = FixedPolicy{sc.fixed_rates, detail::type_weights(sc)};
        }
        std::vector<std::string> header = {"tau", "tau_c", "theta_inf", "persistent"};
        for (std::size_t k = 0; k < theta_k.size(); ++k)
            header.push_back("theta_" + std::to_string(k));
        header.push_back("scenario_hash");
        CsvWriter csv(emit("steady_state.csv"), header);
        std::vector<double> row = {sc.env.tau(), tau_c, theta_inf,
                                   theta_inf > 0.0 ? 1.0 : 0.0};
        row.insert(row.end(), theta_k.begin(), theta_k.end());
        csv.row_nums(row, hash);
        summary["theta_inf"] = theta_inf;
        summary["tau_c"] = tau_c;
        summary["persistent"] = theta_inf > 0.0;

        const Trajectory tr = integrate_dynamics(
            sc.dynamics.theta0, sc.env, policy, sc.dynamics.horizon, sc.dynamics.dt,
            std::max(1, static_cast<int>(0.01 / sc.dynamics.dt)));
        detail::write_trajectory_csv(dir / "trajectory.csv", tr, sc.types.size(), hash,
                                     adaptive, detail::type_weights(sc));
        result.files.push_back("trajectory.csv");
    } else if (experiment == "ne") {
        const NashEquilibrium ne = solve_ne(sc.types, sc.scheme, sc.env);
        CsvWriter csv(emit("ne.csv"), {"type", "w", "a_af", "a_ne", "theta_k_inf",
                                       "scenario_hash"});
        for (std::size_t k = 0; k < sc.types.size(); ++k) {
            const double a_af =
                std::isnan(detail::attack_free_interior(sc.types[k], sc.scheme))
                    ? 0.0
                    : attack_free_optimum(sc.types[k], sc.scheme);
            csv.row_nums({static_cast<double>(k), sc.types[k].w, a_af, ne.a_ne[k],
                          ne.theta_k_inf[k]},
                         hash);
        }
        summary["theta_inf"] = ne.theta_inf;
        summary["tau_c"] = ne.tau_c;
        summary["residual"] = ne.residual;
        summary["tau"] = sc.env.tau();
    } else if (experiment == "reward-opt") {
        const RewardSolution af =
            optimal_reward_attack_free(sc.types, sc.op, sc.scheme.r_max);
        const RewardSolution sec =
            optimal_reward_secure(sc.types, sc.op, sc.env, sc.scheme.r_max);
        CsvWriter csv(emit("reward_opt.csv"),
                      {"problem", "r0_star", "operator_utility", "binding", "a_af_mix",
                       "scenario_hash"});
        csv.row({"attack_free", csv_num(af.r0_star), csv_num(af.operator_utility),
                 csv_num(af.binding ? 1 : 0), csv_num(af.a_af_mix), hash});
        csv.row({"secure", csv_num(sec.r0_star), csv_num(sec.operator_utility),
                 csv_num(sec.binding ? 1 : 0), csv_num(sec.a_af_mix), hash});
        summary["attack_free"] = {{"r0_star", af.r0_star},
                                  {"operator_utility", af.operator_utility}};
        summary["secure"] = {{"r0_star", sec.r0_star},
                             {"operator_utility", sec.operator_utility},
                             {"binding", sec.binding}};

        // brute objective sweep across r0: the less-is-more curve
        std::vector<double> grid;
        for (const auto& axis : sc.sweep)
            if (axis.parameter == "r0") grid = axis.values;
        if (grid.empty())
            for (int i = 1; i <= 50; ++i) grid.push_back(sc.op.b0 * i / 51.0);
        CsvWriter sweep(emit("reward_sweep.csv"),
                        {"r0", "theta_inf", "effective_participation",
                         "operator_utility", "status", "scenario_hash"});
        for (double r0 : grid) {
            try {
                const NashEquilibrium ne = solve_ne(sc.types, {r0, sc.scheme.r_max},
                                                    sc.env);
                double eff = 0.0;
                for (std::size_t k = 0; k < sc.types.size(); ++k)
                    eff += sc.types[k].w * (1.0 - ne.theta_k_inf[k]) * ne.a_ne[k];
                sweep.row({csv_num(r0), csv_num(ne.theta_inf), csv_num(eff),
                           csv_num((sc.op.b0 - r0) * eff), "ok", hash});
            } catch (const std::exception& e) {
                sweep.row({csv_num(r0), "", "", "", e.what(), hash});
            }
        }
    } else if (experiment == "joint-opt") {
        const JointSolution js =
            joint_optimize(sc.types, sc.op, sc.tech, sc.scheme.r_max);
        CsvWriter csv(emit("joint_opt.csv"),
                      {"r0_star", "tau_star", "utility", "scenario_hash"});
        csv.row_nums({js.r0_star, js.tau_star, js.utility}, hash);
        summary["r0_star"] = js.r0_star;
        summary["tau_star"] = js.tau_star;
        summary["utility"] = js.utility;
    } else if (experiment == "simulate") {
        if (!sc.sim) throw ScenarioError("$.sim: required for simulate");
        const SimSection& sim = *sc.sim;
        const SimResult res = run_sim(
            sim.config, sc.types, sc.scheme, sc.env, sc.op,
            sim.mode == "fixed" ? SimMode::Fixed : SimMode::Adaptive, sc.fixed_rates,
            sim.horizon_slots, sim.sample_every, sim.eta, sim.eta_slots);
        detail::write_trace_csv(dir / "trace.csv", res, hash);
        result.files.push_back("trace.csv");
        summary["eta"] = res.eta;
        summary["terminal_theta"] = terminal_theta(res);
        summary["served_tasks"] = res.served_tasks;
        summary["overflow_tasks"] = res.overflow_tasks;
        summary["conversion_clamped"] = res.conversion_clamped;
    } else if (experiment == "sweep") {
        if (sc.sweep.empty()) {
            // empty axes degrade to a single-point run
            sc.sweep.push_back({"r0", {sc.scheme.r0}});
        }
        const std::vector<SweepAxis>& axes = sc.sweep;
        std::vector<std::vector<std::size_t>> points;
        if (axes.size() == 1) {
            for (std::size_t i = 0; i < axes[0].values.size(); ++i) points.push_back({i});
        } else {
            for (std::size_t i = 0; i < axes[0].values.size(); ++i)
                for (std::size_t j = 0; j < axes[1].values.size(); ++j)
                    points.push_back({i, j});
        }
        std::vector<detail::SweepPoint> rows(points.size());
        const unsigned workers =
            std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                            static_cast<unsigned>(points.size())));
        std::vector<std::future<void>> futs;
        std::atomic<std::size_t> next{0};
        for (unsigned t = 0; t < workers; ++t)
            futs.push_back(std::async(std::launch::async, [&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= points.size()) return;
                    Scenario point_sc = sc;
                    point_sc.seed = sc.seed ^ static_cast<std::uint64_t>(i);
                    rows[i] = detail::eval_sweep_point(point_sc, axes, points[i]);
                }
            }));
        for (auto& f : futs) f.get();

        std::vector<std::string> header;
        for (const auto& axis : axes) header.push_back(axis.parameter);
        for (const char* col : {"tau_c", "theta_inf", "effective_participation",
                                "operator_utility", "a_mix_ne", "status",
                                "scenario_hash"})
            header.push_back(col);
        CsvWriter csv(emit("sweep.csv"), header);
        for (const auto& pt : rows) {
            std::vector<std::string> fields;
            for (double v : pt.axis_values) fields.push_back(csv_num(v));
            if (pt.status == "ok") {
                fields.push_back(csv_num(pt.tau_c));
                fields.push_back(csv_num(pt.theta_inf));
                fields.push_back(csv_num(pt.effective));
                fields.push_back(csv_num(pt.utility));
                fields.push_back(csv_num(pt.a_mix));
            } else {
                for (int i = 0; i < 5; ++i) fields.push_back("");
            }
            fields.push_back(pt.status);
            fields.push_back(hash);
            csv.row(fields);
        }
        summary["points"] = points.size();
    } else if (experiment == "compare") {
        SimResult res;
        const AgreementReport rep = compare_meanfield_abm(sc, &res);
        CsvWriter csv(emit("compare.csv"),
                      {"metric", "analytic", "simulated", "gap", "tolerance", "pass",
                       "scenario_hash"});
        for (const CompareRow& row : rep.rows)
            csv.row({row.metric, csv_num(row.analytic), csv_num(row.simulated),
                     csv_num(row.gap), csv_num(row.tolerance), row.pass ? "1" : "0",
                     hash});
        detail::write_trace_csv(dir / "abm_trace.csv", res, hash);
        result.files.push_back("abm_trace.csv");

        // analytic trajectory for the same setting, for side-by-side curves
        const bool adaptive = sc.sim->mode != "fixed";
        const Policy policy = adaptive
                                  ? Policy(AdaptivePolicy{sc.types, sc.scheme})
                                  : Policy(FixedPolicy{sc.fixed_rates,
                                                       detail::type_weights(sc)});
        const double horizon =
            static_cast<double>(sc.sim->horizon_slots) /
            sc.sim->config.slots_per_unit_time;
        const Trajectory tr =
            integrate_dynamics(sc.sim->config.theta0, sc.env, policy, horizon,
                               sc.dynamics.dt,
                               std::max(1, static_cast<int>(0.01 / sc.dynamics.dt)));
        detail::write_trajectory_csv(dir / "analytic_trajectory.csv", tr,
                                     sc.types.size(), hash, adaptive,
                                     detail::type_weights(sc));
        result.files.push_back("analytic_trajectory.csv");

        summary["all_pass"] = rep.all_pass;
        summary["a_af_mix"] = attack_free_mixture(sc.types, sc.scheme.r0,
                                                  sc.scheme.r_max);
        summary["a_c_ref"] = 1.0 / sc.env.tau();  // persistence-onset participation
        summary["eta"] = res.eta;
    } else {
        throw std::invalid_argument("unknown experiment: " + experiment);
    }

    json manifest;
    manifest["name"] = sc.name;
    manifest["experiment"] = experiment;
    manifest["version"] = kVersion;
    manifest["seed"] = sc.seed;
    manifest["scenario_hash"] = hash;
    manifest["scenario"] = scenario_to_json(sc);
    manifest["outputs"] = result.files;
    manifest["summary"] = summary;
    result.summary = summary;
    result.manifest_path = dir / "manifest.json";
    std::ofstream out(result.manifest_path);
    out << manifest.dump(2) << "\n";
    return result;
}

inline RunResult run_scenario_file(const std::string& path, const std::string& experiment,
                                   const RunOptions& opts) {
    return run_scenario(load_scenario(path), experiment, opts);
}

}  // namespace d2d
