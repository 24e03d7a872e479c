// Scenario files: a versioned JSON schema describing the population, the
// reward scheme, the risk environment, and optional dynamics / simulation /
// sweep sections. Validation errors carry the offending field path.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "d2d/abm.hpp"
#include "d2d/model.hpp"
#include "d2d/reward.hpp"

namespace d2d {

using nlohmann::json;

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DynamicsConfig {
    double theta0 = 0.5;
    double horizon = 100.0;
    double dt = 1e-3;
    std::string policy = "adaptive";  // "adaptive" | "fixed"
};

struct SweepAxis {
    std::string parameter;        // r0 | tau | beta | delta | rho | b0
    std::vector<double> values;   // finite, ascending
};

struct SimSection {
    SimConfig config;
    std::string mode = "adaptive";  // "fixed" | "adaptive"
    long horizon_slots = 20000;
    int sample_every = 10;
    double eta = 0.0;   // <= 0: estimate
    long eta_slots = 5000;
};

struct CompareTolerances {
    double theta_tol = 0.05;
    double participation_rel_tol = 0.10;
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    std::vector<UEType> types;
    RewardScheme scheme;
    RiskEnv env;
    OperatorParams op{6.0};
    TechCostFunction tech;
    std::vector<double> fixed_rates;
    DynamicsConfig dynamics;
    std::optional<SimSection> sim;
    std::vector<SweepAxis> sweep;
    CompareTolerances compare;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw ScenarioError(path + ": " + msg);
}

inline double num_at(const json& j, const std::string& path, const char* key,
                     double fallback, bool required = false) {
    if (!j.contains(key)) {
        if (required) fail(path + "." + key, "required field missing");
        return fallback;
    }
    if (!j[key].is_number()) fail(path + "." + key, "expected a number");
    return j[key].get<double>();
}

inline std::string str_at(const json& j, const std::string& path, const char* key,
                          const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) fail(path + "." + key, "expected a string");
    return j[key].get<std::string>();
}

inline bool bool_at(const json& j, const std::string& path, const char* key,
                    bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) fail(path + "." + key, "expected a boolean");
    return j[key].get<bool>();
}

inline UEType parse_type(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    UEType t;
    const std::string family = str_at(j, path, "family", "power");
    if (family == "power") {
        t.eval = EvaluationFunction::power(num_at(j, path, "k", 1.0),
                                           num_at(j, path, "gamma", 0.5));
    } else if (family == "log-linear") {
        t.eval = EvaluationFunction::log_linear(num_at(j, path, "k", 1.0));
    } else {
        fail(path + ".family", "expected \"power\" or \"log-linear\"");
    }
    t.c = num_at(j, path, "c", 0.0, true);
    t.q = num_at(j, path, "q", 0.0, true);
    t.w = num_at(j, path, "w", 1.0);
    try {
        t.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return t;
}

}  // namespace detail

inline Scenario parse_scenario(const json& j) {
    using detail::bool_at;
    using detail::fail;
    using detail::num_at;
    using detail::str_at;
    if (!j.is_object()) fail("$", "scenario must be a JSON object");
    const int version = static_cast<int>(num_at(j, "$", "schema_version", 0, true));
    if (version != 1) fail("$.schema_version", "unsupported schema version");

    Scenario sc;
    sc.name = str_at(j, "$", "name", "scenario");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            fail("$.seed", "expected an unsigned integer");
        sc.seed = j["seed"].get<std::uint64_t>();
    }

    if (!j.contains("types") || !j["types"].is_array() || j["types"].empty())
        fail("$.types", "expected a non-empty array");
    for (std::size_t i = 0; i < j["types"].size(); ++i)
        sc.types.push_back(
            detail::parse_type(j["types"][i], "$.types[" + std::to_string(i) + "]"));
    try {
        validate_population(sc.types);
    } catch (const std::exception& e) {
        fail("$.types", e.what());
    }

    if (j.contains("scheme")) {
        const json& s = j["scheme"];
        sc.scheme.r0 = num_at(s, "$.scheme", "r0", 1.0, true);
        sc.scheme.r_max =
            s.contains("r_max") && !s["r_max"].is_null()
                ? num_at(s, "$.scheme", "r_max", kInf)
                : kInf;
        try {
            sc.scheme.validate();
        } catch (const std::exception& e) {
            fail("$.scheme", e.what());
        }
    }

    if (j.contains("env")) {
        const json& e = j["env"];
        sc.env.beta = num_at(e, "$.env", "beta", 0.0, true);
        sc.env.delta = num_at(e, "$.env", "delta", 1.0, true);
        sc.env.rho = num_at(e, "$.env", "rho", 0.0);
        try {
            sc.env.validate();
        } catch (const std::exception& ex) {
            fail("$.env", ex.what());
        }
    }

    if (j.contains("operator")) {
        sc.op.b0 = num_at(j["operator"], "$.operator", "b0", 6.0, true);
        try {
            sc.op.validate();
        } catch (const std::exception& e) {
            fail("$.operator", e.what());
        }
    }

    if (j.contains("tech")) {
        sc.tech.j0 = num_at(j["tech"], "$.tech", "j0", 1.0);
        sc.tech.p = num_at(j["tech"], "$.tech", "p", 1.0);
        try {
            sc.tech.validate();
        } catch (const std::exception& e) {
            fail("$.tech", e.what());
        }
    }

    if (j.contains("fixed_rates")) {
        if (!j["fixed_rates"].is_array()) fail("$.fixed_rates", "expected an array");
        for (std::size_t i = 0; i < j["fixed_rates"].size(); ++i) {
            const json& v = j["fixed_rates"][i];
            if (!v.is_number())
                fail("$.fixed_rates[" + std::to_string(i) + "]", "expected a number");
            const double a = v.get<double>();
            if (!(a >= 0.0))
                fail("$.fixed_rates[" + std::to_string(i) + "]", "must be >= 0");
            sc.fixed_rates.push_back(a);
        }
        if (sc.fixed_rates.size() != sc.types.size())
            fail("$.fixed_rates", "length must match $.types");
    }

    if (j.contains("dynamics")) {
        const json& d = j["dynamics"];
        sc.dynamics.theta0 = num_at(d, "$.dynamics", "theta0", 0.5);
        sc.dynamics.horizon = num_at(d, "$.dynamics", "horizon", 100.0);
        sc.dynamics.dt = num_at(d, "$.dynamics", "dt", 1e-3);
        sc.dynamics.policy = str_at(d, "$.dynamics", "policy", "adaptive");
        if (sc.dynamics.policy != "adaptive" && sc.dynamics.policy != "fixed")
            fail("$.dynamics.policy", "expected \"adaptive\" or \"fixed\"");
        if (!(sc.dynamics.dt > 0.0)) fail("$.dynamics.dt", "must be > 0");
        if (!(sc.dynamics.theta0 >= 0.0 && sc.dynamics.theta0 <= 1.0))
            fail("$.dynamics.theta0", "must be in [0,1]");
    }

    if (j.contains("sim")) {
        const json& s = j["sim"];
        SimSection sim;
        SimConfig& c = sim.config;
        c.n_agents = static_cast<int>(num_at(s, "$.sim", "n_agents", 100));
        c.area = num_at(s, "$.sim", "area", 100.0);
        c.slots_per_unit_time =
            static_cast<int>(num_at(s, "$.sim", "slots_per_unit_time", 100));
        c.v_max = num_at(s, "$.sim", "v_max", 20.0);
        c.m_max = static_cast<int>(num_at(s, "$.sim", "m_max", 5));
        c.p = num_at(s, "$.sim", "p", 0.2);
        c.w_max = static_cast<int>(num_at(s, "$.sim", "w_max", 3));
        c.d = num_at(s, "$.sim", "d", 20.0);
        c.theta0 = num_at(s, "$.sim", "theta0", 0.5);
        c.compromised_can_request =
            bool_at(s, "$.sim", "compromised_can_request", true);
        c.seed = sc.seed;
        sim.mode = str_at(s, "$.sim", "mode", "adaptive");
        if (sim.mode != "adaptive" && sim.mode != "fixed")
            fail("$.sim.mode", "expected \"adaptive\" or \"fixed\"");
        sim.horizon_slots = static_cast<long>(num_at(s, "$.sim", "horizon_slots", 20000));
        sim.sample_every = static_cast<int>(num_at(s, "$.sim", "sample_every", 10));
        sim.eta = s.contains("eta") && !s["eta"].is_null()
                      ? num_at(s, "$.sim", "eta", 0.0)
                      : 0.0;
        sim.eta_slots = static_cast<long>(num_at(s, "$.sim", "eta_slots", 5000));
        try {
            c.validate();
        } catch (const std::exception& e) {
            fail("$.sim", e.what());
        }
        if (sim.mode == "fixed" && sc.fixed_rates.empty())
            fail("$.fixed_rates", "required for fixed-mode simulation");
        sc.sim = sim;
    }

    if (j.contains("sweep")) {
        const json& sw = j["sweep"];
        if (!sw.is_object() || !sw.contains("axes") || !sw["axes"].is_array())
            fail("$.sweep", "expected an object with an \"axes\" array");
        const json& axes = sw["axes"];
        if (axes.empty() || axes.size() > 2)
            fail("$.sweep.axes", "expected 1 or 2 axes");
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const std::string path = "$.sweep.axes[" + std::to_string(i) + "]";
            SweepAxis axis;
            axis.parameter = str_at(axes[i], path, "parameter", "");
            static const std::vector<std::string> known = {"r0",    "tau", "beta",
                                                           "delta", "rho", "b0"};
            bool ok = false;
            for (const auto& k : known) ok = ok || k == axis.parameter;
            if (!ok) fail(path + ".parameter", "unknown sweep parameter");
            if (!axes[i].contains("values") || !axes[i]["values"].is_array() ||
                axes[i]["values"].empty())
                fail(path + ".values", "expected a non-empty array");
            double prev = -kInf;
            for (std::size_t v = 0; v < axes[i]["values"].size(); ++v) {
                const json& jv = axes[i]["values"][v];
                const std::string vp = path + ".values[" + std::to_string(v) + "]";
                if (!jv.is_number()) fail(vp, "expected a number");
                const double x = jv.get<double>();
                if (!std::isfinite(x)) fail(vp, "must be finite");
                if (x < prev) fail(vp, "values must be ascending");
                prev = x;
                axis.values.push_back(x);
            }
            sc.sweep.push_back(axis);
        }
    }

    if (j.contains("compare")) {
        sc.compare.theta_tol = num_at(j["compare"], "$.compare", "theta_tol", 0.05);
        sc.compare.participation_rel_tol =
            num_at(j["compare"], "$.compare", "participation_rel_tol", 0.10);
    }
    return sc;
}

inline json scenario_to_json(const Scenario& sc) {
    json j;
    j["schema_version"] = 1;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["types"] = json::array();
    for (const auto& t : sc.types) {
        json tj;
        tj["family"] = t.eval.family == EvalFamily::Power ? "power" : "log-linear";
        tj["k"] = t.eval.k;
        if (t.eval.family == EvalFamily::Power) tj["gamma"] = t.eval.gamma;
        tj["c"] = t.c;
        tj["q"] = t.q;
        tj["w"] = t.w;
        j["types"].push_back(tj);
    }
    j["scheme"]["r0"] = sc.scheme.r0;
    if (std::isfinite(sc.scheme.r_max)) j["scheme"]["r_max"] = sc.scheme.r_max;
    j["env"]["beta"] = sc.env.beta;
    j["env"]["delta"] = sc.env.delta;
    j["env"]["rho"] = sc.env.rho;
    j["operator"]["b0"] = sc.op.b0;
    j["tech"]["j0"] = sc.tech.j0;
    j["tech"]["p"] = sc.tech.p;
    if (!sc.fixed_rates.empty()) j["fixed_rates"] = sc.fixed_rates;
    j["dynamics"]["theta0"] = sc.dynamics.theta0;
    j["dynamics"]["horizon"] = sc.dynamics.horizon;
    j["dynamics"]["dt"] = sc.dynamics.dt;
    j["dynamics"]["policy"] = sc.dynamics.policy;
    if (sc.sim) {
        const SimSection& s = *sc.sim;
        json sj;
        sj["n_agents"] = s.config.n_agents;
        sj["area"] = s.config.area;
        sj["slots_per_unit_time"] = s.config.slots_per_unit_time;
        sj["v_max"] = s.config.v_max;
        sj["m_max"] = s.config.m_max;
        sj["p"] = s.config.p;
        sj["w_max"] = s.config.w_max;
        sj["d"] = s.config.d;
        sj["theta0"] = s.config.theta0;
        sj["compromised_can_request"] = s.config.compromised_can_request;
        sj["mode"] = s.mode;
        sj["horizon_slots"] = s.horizon_slots;
        sj["sample_every"] = s.sample_every;
        if (s.eta > 0.0) sj["eta"] = s.eta;
        sj["eta_slots"] = s.eta_slots;
        j["sim"] = sj;
    }
    if (!sc.sweep.empty()) {
        j["sweep"]["axes"] = json::array();
        for (const auto& axis : sc.sweep) {
            json aj;
            aj["parameter"] = axis.parameter;
            aj["values"] = axis.values;
            j["sweep"]["axes"].push_back(aj);
        }
    }
    j["compare"]["theta_tol"] = sc.compare.theta_tol;
    j["compare"]["participation_rel_tol"] = sc.compare.participation_rel_tol;
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ScenarioError(path + ": invalid JSON: " + e.what());
    }
    // manifests embed the scenario they were produced from; accept them too
    if (j.is_object() && j.contains("scenario") && j["scenario"].is_object())
        return parse_scenario(j["scenario"]);
    return parse_scenario(j);
}

// FNV-1a over the canonical (sorted-key, no-whitespace) scenario dump.
inline std::string scenario_hash(const Scenario& sc) {
    const std::string dump = scenario_to_json(sc).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace d2d
