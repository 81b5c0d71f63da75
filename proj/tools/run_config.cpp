#include "run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <type_traits>

#include "plapflow/error.hpp"
#include "plapflow/krylov.hpp"

namespace plapflow::cli {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::NetworkFormation: return "network-formation";
        case Scenario::Plap: return "plap";
        case Scenario::Convergence: return "convergence";
        case Scenario::DiscreteStudy: return "discrete-study";
        case Scenario::Tc6Sweep: return "tc6-sweep";
    }
    return "unknown";
}

Scenario scenario_from_string(const std::string& s) {
    for (auto v : {Scenario::NetworkFormation, Scenario::Plap, Scenario::Convergence, Scenario::DiscreteStudy,
                   Scenario::Tc6Sweep}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidParameter("unknown scenario '" + s + "'");
}

RunConfig RunConfig::defaults(Scenario s) {
    RunConfig c;
    c.scenario = s;
    const char* root = std::getenv("PLAPFLOW_OUTPUT");
    const std::string base = (root != nullptr && *root != '\0') ? root : "plapflow-out";
    c.output_dir = base + "/" + to_string(s);
    switch (s) {
        case Scenario::NetworkFormation: break;
        case Scenario::Plap:
            c.n = 32;
            c.t_max = 100.0;
            break;
        case Scenario::Convergence: c.t_max = 100.0; break;
        case Scenario::Tc6Sweep:
            c.case_name = "TC6";
            c.n = 32;
            c.t_max = 1e4;
            break;
        case Scenario::DiscreteStudy: break;
    }
    return c;
}

void RunConfig::apply_paper_scale() {
    paper_scale = true;
    switch (scenario) {
        case Scenario::NetworkFormation:
            n = 512;
            t_max = 200.0;
            snapshot_times = {0.0, 1.0, 10.0, 50.0, 100.0, 200.0};
            break;
        case Scenario::Plap: n = 128; break;
        case Scenario::Convergence: levels = 5; break;
        // 3 n^2 cells on the L-shape: n = 58 gives about ten thousand elements.
        case Scenario::Tc6Sweep: n = 58; break;
        case Scenario::DiscreteStudy: refinements = 6; break;
    }
}

void RunConfig::validate() const {
    PLAPFLOW_REQUIRE(n >= 1 && n0 >= 1, InvalidParameter, "n and n0 must be positive");
    PLAPFLOW_REQUIRE(t_max > 0.0, InvalidParameter, "t_max must be positive");
    PLAPFLOW_REQUIRE(max_steps >= 1, InvalidParameter, "max_steps must be positive");
    PLAPFLOW_REQUIRE(c0 >= 0.0, InvalidParameter, "c0 must be nonnegative");
    PLAPFLOW_REQUIRE(r >= 0.0 && eps >= 0.0 && gamma > 0.0 && nu >= 0.0, InvalidParameter,
                     "need r >= 0, eps >= 0, gamma > 0, nu >= 0");
    PLAPFLOW_REQUIRE(source_width > 0.0, InvalidParameter, "source_width must be positive");
    PLAPFLOW_REQUIRE(levels >= 1 && rate_window >= 2, InvalidParameter, "need levels >= 1 and rate_window >= 2");
    PLAPFLOW_REQUIRE(samples >= 1 && refinements >= 0, InvalidParameter, "need samples >= 1 and refinements >= 0");
    PLAPFLOW_REQUIRE(graph_r >= 0.0 && graph_nu >= 0.0 && graph_gamma > 0.0 && graph_dt > 0.0 && graph_steps >= 0,
                     InvalidParameter, "bad graph model parameters");
    PLAPFLOW_REQUIRE(base == "triangle" || base == "rhombus", InvalidParameter,
                     "base must be 'triangle' or 'rhombus'");
    PLAPFLOW_REQUIRE(!p_values.empty(), InvalidParameter, "p_values must not be empty");
    for (double v : p_values) PLAPFLOW_REQUIRE(v > 2.0, InvalidParameter, "every p must exceed 2");
    plap::radial_origin_from_string(origin);
    time_config().validate();
    newton_config().validate();
}

flow::TimeControlConfig RunConfig::time_config() const {
    flow::TimeControlConfig t;
    t.kind = flow::controller_from_string(controller);
    t.dt0 = dt0;
    t.dt_min = dt_min;
    t.dt_max = dt_max;
    t.atol = time_atol;
    t.rtol = time_rtol;
    return t;
}

flow::NewtonConfig RunConfig::newton_config() const {
    flow::NewtonConfig nc;
    nc.abs_tol = newton_abs_tol;
    nc.rel_tol = newton_rel_tol;
    nc.max_iters = newton_max_iters;
    nc.variant = flow::newton_variant_from_string(newton_variant);
    nc.line_search = flow::line_search_from_string(line_search);
    nc.forcing.enabled = forcing;
    nc.krylov.method = linalg::krylov_method_from_string(krylov_method);
    nc.krylov.preconditioner = linalg::preconditioner_from_string(preconditioner);
    nc.krylov.max_iters = krylov_max_iters;
    return nc;
}

flow::StopRule RunConfig::stop_rule() const { return {tol_ss, t_max, max_steps}; }

fem::ModelParams RunConfig::network_params() const {
    fem::ModelParams m;
    m.r = r;
    m.eps = eps;
    m.gamma = gamma;
    m.nu = nu;
    return m;
}

discrete::GraphParams RunConfig::graph_params() const { return {graph_nu, graph_gamma}; }

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["scenario"] = to_string(c.scenario);
    visit_fields(c, [&](const char* key, const auto& field) { j[key] = field; });
    return j;
}

RunConfig from_json(const nlohmann::json& j, RunConfig base) {
    PLAPFLOW_REQUIRE(j.is_object(), InvalidParameter, "run config must be a JSON object");
    const auto& keys = config_keys();
    for (const auto& [key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw InvalidParameter("unknown config key '" + key + "'");
        }
    }
    if (j.contains("scenario")) base.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    visit_fields(base, [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        using T = std::decay_t<decltype(field)>;
        const auto& v = j.at(key);
        const bool ok = [&] {
            if constexpr (std::is_same_v<T, bool>) return v.is_boolean();
            else if constexpr (std::is_same_v<T, std::string>) return v.is_string();
            else if constexpr (std::is_floating_point_v<T>) return v.is_number();
            else if constexpr (std::is_integral_v<T>) return v.is_number_integer();
            else return v.is_array();
        }();
        if (!ok) throw InvalidParameter(std::string("config key '") + key + "' has the wrong type");
        try {
            field = v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidParameter(std::string("config key '") + key + "': " + e.what());
        }
    });
    return base;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k{"scenario"};
        RunConfig c;
        visit_fields(c, [&](const char* key, auto&) { k.emplace_back(key); });
        return k;
    }();
    return keys;
}

}  // namespace plapflow::cli
