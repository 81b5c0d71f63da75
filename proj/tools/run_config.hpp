#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "plapflow/discrete.hpp"
#include "plapflow/gradient_flow.hpp"
#include "plapflow/plaplacian.hpp"

namespace plapflow::cli {

enum class Scenario { NetworkFormation, Plap, Convergence, DiscreteStudy, Tc6Sweep };
std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// Flat run description. Every field is a manifest key; the CLI flag is the key
/// with underscores replaced by dashes.
struct RunConfig {
    Scenario scenario = Scenario::NetworkFormation;
    std::string output_dir;
    std::uint64_t seed = 1;
    bool paper_scale = false;

    // mesh and stop rule
    int n = 64;
    double t_max = 50.0;
    double tol_ss = -1.0;
    int max_steps = 100000;
    double c0 = 1.0;

    // network-formation model and source
    double r = 1e-4;
    double eps = 1e-3;
    double gamma = 0.75;
    double nu = 0.05;
    double source_x = 0.25;
    double source_y = 0.25;
    double source_width = 500.0;
    bool mean_correct = true;
    std::vector<double> snapshot_times{0.0, 1.0, 5.0, 10.0, 25.0, 50.0};

    // p-Laplacian cases
    std::string case_name = "TC1";
    std::string origin = "center";
    double p = 0.0;
    int levels = 4;
    int n0 = 16;
    int rate_window = 3;
    std::vector<double> p_values{5.0, 10.0, 20.0, 50.0};

    // time controller
    std::string controller = "pi";
    double dt0 = 0.01;
    double dt_min = 1e-10;
    double dt_max = 100.0;
    double time_atol = 1e-3;
    double time_rtol = 1e-3;

    // Newton-Krylov
    double newton_abs_tol = 1e-10;
    double newton_rel_tol = 1e-8;
    int newton_max_iters = 10;
    std::string newton_variant = "local-elimination";
    std::string line_search = "backtracking";
    bool forcing = true;
    std::string krylov_method = "cg";
    std::string preconditioner = "ic0";
    int krylov_max_iters = 2000;

    // graph model
    std::string study = "qz-gap";
    int samples = 1000;
    int refinements = 3;
    std::string base = "rhombus";
    double graph_r = 1.0;
    double graph_nu = 1.0;
    double graph_gamma = 2.0;
    double graph_dt = 0.1;
    int graph_steps = 100;

    /// Defaults of a scenario (desk scale), with the output root taken from
    /// PLAPFLOW_OUTPUT when set.
    static RunConfig defaults(Scenario s);
    /// Switches mesh sizes and horizons to the full-size runs.
    void apply_paper_scale();

    void validate() const;

    [[nodiscard]] flow::TimeControlConfig time_config() const;
    [[nodiscard]] flow::NewtonConfig newton_config() const;
    [[nodiscard]] flow::StopRule stop_rule() const;
    [[nodiscard]] fem::ModelParams network_params() const;
    [[nodiscard]] discrete::GraphParams graph_params() const;
};

/// Calls f(key, field) for every manifest key except "scenario".
template <class Config, class F>
void visit_fields(Config& c, F&& f) {
    f("output_dir", c.output_dir);
    f("seed", c.seed);
    f("paper_scale", c.paper_scale);
    f("n", c.n);
    f("t_max", c.t_max);
    f("tol_ss", c.tol_ss);
    f("max_steps", c.max_steps);
    f("c0", c.c0);
    f("r", c.r);
    f("eps", c.eps);
    f("gamma", c.gamma);
    f("nu", c.nu);
    f("source_x", c.source_x);
    f("source_y", c.source_y);
    f("source_width", c.source_width);
    f("mean_correct", c.mean_correct);
    f("snapshot_times", c.snapshot_times);
    f("case", c.case_name);
    f("origin", c.origin);
    f("p", c.p);
    f("levels", c.levels);
    f("n0", c.n0);
    f("rate_window", c.rate_window);
    f("p_values", c.p_values);
    f("controller", c.controller);
    f("dt0", c.dt0);
    f("dt_min", c.dt_min);
    f("dt_max", c.dt_max);
    f("time_atol", c.time_atol);
    f("time_rtol", c.time_rtol);
    f("newton_abs_tol", c.newton_abs_tol);
    f("newton_rel_tol", c.newton_rel_tol);
    f("newton_max_iters", c.newton_max_iters);
    f("newton_variant", c.newton_variant);
    f("line_search", c.line_search);
    f("forcing", c.forcing);
    f("krylov_method", c.krylov_method);
    f("preconditioner", c.preconditioner);
    f("krylov_max_iters", c.krylov_max_iters);
    f("study", c.study);
    f("samples", c.samples);
    f("refinements", c.refinements);
    f("base", c.base);
    f("graph_r", c.graph_r);
    f("graph_nu", c.graph_nu);
    f("graph_gamma", c.graph_gamma);
    f("graph_dt", c.graph_dt);
    f("graph_steps", c.graph_steps);
}

nlohmann::json to_json(const RunConfig& c);
/// Starts from `base` and overrides the keys present. Unknown keys or wrong types throw InvalidParameter.
RunConfig from_json(const nlohmann::json& j, RunConfig base);

/// All manifest keys in declaration order.
const std::vector<std::string>& config_keys();

}  // namespace plapflow::cli
