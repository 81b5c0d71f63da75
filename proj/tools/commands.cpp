#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "plapflow/error.hpp"
#include "plapflow/vtk.hpp"

#ifndef PLAPFLOW_VERSION
#define PLAPFLOW_VERSION "unknown"
#endif

namespace plapflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Artifacts {
public:
    explicit Artifacts(const RunConfig& config) : dir_(config.output_dir) {
        fs::create_directories(dir_);
        manifest_["version"] = PLAPFLOW_VERSION;
        manifest_["config"] = to_json(config);
        manifest_["files"] = json::array();
    }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name);
        if (!out) throw Error("cannot write " + (dir_ / name).string());
        manifest_["files"].push_back(name);
        return out;
    }

    fs::path path(const std::string& name) {
        manifest_["files"].push_back(name);
        return dir_ / name;
    }

    json& results() { return manifest_["results"]; }

    void finish(int exit_code) {
        manifest_["exit_code"] = exit_code;
        std::ofstream out(dir_ / "manifest.json");
        if (!out) throw Error("cannot write " + (dir_ / "manifest.json").string());
        out << std::setw(2) << manifest_ << '\n';
    }

private:
    fs::path dir_;
    json manifest_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> log10_field(std::span<const double> c) {
    std::vector<double> out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = std::log10(std::max(c[k], 1e-300));
    return out;
}

struct SteadyFields {
    std::vector<double> centre;     // |grad u|^2 - nu g(c) at the cell centre
    std::vector<double> projected;  // its P0 projection
};

SteadyFields steady_fields(const flow::Discretization& disc, const flow::State& s) {
    const auto& space = disc.space();
    const auto& params = disc.params();
    const auto grads = fem::eval_gradients(space, s.u);
    const std::size_t nq = space.rule().points.size();
    SteadyFields f;
    f.centre.resize(space.num_cells());
    std::vector<double> point_values(grads.size());
    for (std::size_t k = 0; k < space.num_cells(); ++k) {
        const double metab = params.nu * params.rate(s.c[k]);
        Vec2 mean{};
        for (std::size_t q = 0; q < nq; ++q) {
            const Vec2 g = grads[k * nq + q];
            mean = mean + (1.0 / static_cast<double>(nq)) * g;
            point_values[k * nq + q] = dot(g, g) - metab;
        }
        f.centre[k] = dot(mean, mean) - metab;
    }
    f.projected = fem::project_p0(space, point_values).values;
    return f;
}

void write_fields(const fs::path& path, const flow::Discretization& disc, const flow::State& s) {
    const auto logc = log10_field(s.c);
    const auto sf = steady_fields(disc, s);
    io::write_vtk(path, disc.mesh(), {{"u", s.u}},
                  {{"log10_c", logc}, {"steady_residual", sf.centre}, {"steady_residual_p0", sf.projected}});
}

json run_summary(const flow::RunResult& r) {
    return {{"steady", r.steady},
            {"final_time", r.state.t},
            {"accepted_steps", r.accepted_steps},
            {"attempted_steps", r.reports.size()},
            {"newton_total", r.newton_total},
            {"krylov_total", r.krylov_total},
            {"krylov_per_newton", r.krylov_per_newton()},
            {"tol_ss", r.tol_ss}};
}

plap::TestCase testcase(const RunConfig& c, double p) {
    return plap::make_testcase(c.case_name, plap::radial_origin_from_string(c.origin), p);
}

}  // namespace

int cmd_network_formation(const RunConfig& config, std::ostream& log) {
    config.validate();
    Artifacts art(config);
    const auto t0 = std::chrono::steady_clock::now();

    auto mesh =
        std::make_shared<const mesh::QuadMesh>(mesh::build_unit_square_quad(config.n, mesh::BoundaryKind::Neumann));
    const Point2 x0{config.source_x, config.source_y};
    const double width = config.source_width;
    fem::ScalarFunction s0 = [x0, width](Point2 x) {
        const Vec2 d = x - x0;
        return std::exp(-width * dot(d, d));
    };
    double mean = 0.0;
    if (config.mean_correct) mean = fem::integrate(fem::QuadSpace::unconstrained(mesh), s0) / mesh->area();
    flow::Problem problem{mesh, config.network_params(), [s0, mean](Point2 x) { return s0(x) - mean; }, {}, {}};
    const flow::Discretization disc(problem);
    const auto newton = config.newton_config();
    auto state = flow::initial_state(disc, config.c0, newton.krylov);

    std::vector<double> snapshots = config.snapshot_times;
    std::sort(snapshots.begin(), snapshots.end());
    std::size_t next = 0;
    json written = json::array();
    auto snapshot = [&](const flow::State& s) {
        while (next < snapshots.size() && s.t >= snapshots[next] - 1e-12) {
            std::ostringstream name;
            name << "c_" << std::setw(3) << std::setfill('0') << next << ".vtk";
            const auto logc = log10_field(s.c);
            io::write_vtk(art.path(name.str()), disc.mesh(), {{"u", s.u}}, {{"log10_c", logc}});
            written.push_back({{"file", name.str()}, {"requested_time", snapshots[next]}, {"time", s.t}});
            ++next;
        }
    };
    snapshot(state);

    bool monotone = true;
    bool nonnegative = true;
    double prev_energy = flow::energy(disc, state);
    double worst_increase = 0.0;
    const auto result = flow::run_to_steady(
        disc, state, config.stop_rule(), config.time_config(), newton,
        [&](const flow::State& s, const flow::StepReport& rep) {
            if (!rep.accepted) return;
            const double inc = (rep.energy - prev_energy) / std::max(1.0, std::abs(prev_energy));
            worst_increase = std::max(worst_increase, inc);
            if (inc > 1e-8) monotone = false;
            if (rep.min_c < 0.0) nonnegative = false;
            prev_energy = rep.energy;
            snapshot(s);
        });
    if (next < snapshots.size()) snapshot(flow::State{snapshots.back(), result.state.c, result.state.u});

    {
        auto out = art.open("steps.csv");
        flow::write_step_log(out, result.reports);
    }
    auto& res = art.results();
    res = run_summary(result);
    res["load_imbalance"] = disc.load_imbalance();
    res["energy_final"] = flow::energy(disc, result.state);
    res["energy_monotone"] = monotone;
    res["worst_relative_energy_increase"] = worst_increase;
    res["c_nonnegative"] = nonnegative;
    res["snapshots"] = written;
    res["runtime_s"] = seconds_since(t0);
    log << "network-formation n=" << config.n << " t=" << result.state.t << " steps=" << result.accepted_steps
        << " newton=" << result.newton_total << " energy monotone=" << (monotone ? "yes" : "no") << '\n';
    const int code = (monotone && nonnegative) ? kOk : kIncomplete;
    art.finish(code);
    return code;
}

int cmd_plap(const RunConfig& config, std::ostream& log) {
    config.validate();
    Artifacts art(config);
    const auto t0 = std::chrono::steady_clock::now();
    const auto tc = testcase(config, config.p);
    const flow::Discretization disc(plap::make_problem(tc, config.n));
    const auto newton = config.newton_config();
    const auto init = flow::initial_state(disc, config.c0, newton.krylov);
    const auto result = flow::run_to_steady(disc, init, config.stop_rule(), config.time_config(), newton);
    {
        auto out = art.open("steps.csv");
        flow::write_step_log(out, result.reports);
    }
    write_fields(art.path("fields.vtk"), disc, result.state);
    auto& res = art.results();
    res = run_summary(result);
    res["case"] = tc.name;
    res["p"] = tc.p;
    res["steady_residual"] = flow::steady_residual(disc, result.state);
    res["steady_residual_p0"] = flow::projected_steady_residual(disc, result.state);
    res["plap_energy"] = flow::plap_energy(disc, result.state);
    if (tc.has_exact) {
        res["err_Lp"] = plap::error_Lp(disc.mesh(), result.state.u, tc.exact, tc.p);
        res["err_W1p"] = plap::error_W1p(disc.mesh(), result.state.u, tc.exact_gradient, tc.p);
        res["err_quasi"] = plap::error_quasinorm(disc.mesh(), result.state.u, tc.exact_gradient, tc.p);
    }
    res["runtime_s"] = seconds_since(t0);
    log << tc.name << " n=" << config.n << " steady=" << (result.steady ? "yes" : "no")
        << " steps=" << result.accepted_steps << " newton=" << result.newton_total << '\n';
    const int code = result.steady ? kOk : kIncomplete;
    art.finish(code);
    return code;
}

int cmd_convergence(const RunConfig& config, std::ostream& log) {
    config.validate();
    Artifacts art(config);
    const auto tc = testcase(config, config.p);
    plap::StudyConfig sc;
    sc.levels = config.levels;
    sc.n0 = config.n0;
    sc.rate_window = config.rate_window;
    sc.c0 = config.c0;
    sc.stop = config.stop_rule();
    sc.time = config.time_config();
    sc.newton = config.newton_config();
    const auto table = plap::convergence_study(tc, sc, [&](const plap::ErrorReport& rep, const flow::RunResult& run) {
        auto out = art.open("steps_level" + std::to_string(rep.level) + ".csv");
        flow::write_step_log(out, run.reports);
        log << tc.name << " level " << rep.level << " h=" << rep.h << " quasi=" << rep.err_quasi
            << " steps=" << rep.steps << (rep.failure.empty() ? "" : " FAILED: " + rep.failure) << '\n';
    });
    {
        auto out = art.open("convergence.csv");
        plap::write_convergence_csv(out, table);
    }
    auto& res = art.results();
    res["case"] = tc.name;
    res["rate_Lp"] = table.rate_Lp;
    res["rate_W1p"] = table.rate_W1p;
    res["rate_quasi"] = table.rate_quasi;
    json levels = json::array();
    bool ok = true;
    for (const auto& l : table.levels) {
        levels.push_back({{"level", l.level},
                          {"h", l.h},
                          {"steady", l.steady},
                          {"steady_residual", l.steady_residual},
                          {"steps", l.steps},
                          {"newton_total", l.newton_total},
                          {"krylov_avg", l.krylov_avg},
                          {"runtime_s", l.runtime_s},
                          {"failure", l.failure}});
        ok = ok && l.failure.empty() && l.steady;
    }
    res["levels"] = levels;
    log << tc.name << " rates: Lp " << table.rate_Lp << ", W1p " << table.rate_W1p << ", quasi " << table.rate_quasi
        << '\n';
    const int code = ok ? kOk : kIncomplete;
    art.finish(code);
    return code;
}

int cmd_tc6(const RunConfig& config, std::ostream& log) {
    config.validate();
    Artifacts art(config);
    auto summary = art.open("tc6.csv");
    summary << "p,steady,steps,newton_total,krylov_avg,final_time,steady_residual,steady_residual_p0,plap_energy\n";
    summary.precision(17);
    json rows = json::array();
    bool ok = true;
    for (double p : config.p_values) {
        const auto tc = plap::make_testcase("TC6", plap::radial_origin_from_string(config.origin), p);
        const flow::Discretization disc(plap::make_problem(tc, config.n));
        const auto newton = config.newton_config();
        std::ostringstream tag;
        tag << "p" << p;
        try {
            const auto init = flow::initial_state(disc, config.c0, newton.krylov);
            const auto result = flow::run_to_steady(disc, init, config.stop_rule(), config.time_config(), newton);
            {
                auto out = art.open("steps_" + tag.str() + ".csv");
                flow::write_step_log(out, result.reports);
            }
            write_fields(art.path("fields_" + tag.str() + ".vtk"), disc, result.state);
            const double res = flow::steady_residual(disc, result.state);
            const double res0 = flow::projected_steady_residual(disc, result.state);
            const double ep = flow::plap_energy(disc, result.state);
            summary << p << ',' << (result.steady ? 1 : 0) << ',' << result.accepted_steps << ','
                    << result.newton_total << ',' << result.krylov_per_newton() << ',' << result.state.t << ','
                    << res << ',' << res0 << ',' << ep << '\n';
            auto row = run_summary(result);
            row["p"] = p;
            row["steady_residual"] = res;
            row["steady_residual_p0"] = res0;
            rows.push_back(row);
            ok = ok && result.steady;
            log << "TC6 p=" << p << " steady=" << (result.steady ? "yes" : "no") << " steps=" << result.accepted_steps
                << " residual=" << res << '\n';
        } catch (const TimeStepUnderflow& e) {
            rows.push_back({{"p", p}, {"failure", e.what()}});
            ok = false;
            log << "TC6 p=" << p << " FAILED: " << e.what() << '\n';
        }
    }
    art.results()["runs"] = rows;
    const int code = ok ? kOk : kIncomplete;
    art.finish(code);
    return code;
}

namespace {

mesh::TriBase tri_base(const std::string& s) { return s == "triangle" ? mesh::TriBase::Triangle : mesh::TriBase::Rhombus; }

/// Smooth random source: a few low Fourier modes with random phases.
fem::ScalarFunction random_source(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::array<double, 8> a{};
    for (double& v : a) v = u(rng);
    return [a](Point2 x) {
        return a[0] + a[1] * std::sin(std::numbers::pi * x.x) + a[2] * std::cos(2.0 * x.y) +
               a[3] * std::sin(3.0 * x.x + a[4]) * std::cos(2.0 * x.y + a[5]) + a[6] * x.x * x.y + a[7] * x.y;
    };
}

}  // namespace

int cmd_discrete(const RunConfig& config, std::ostream& log) {
    config.validate();
    Artifacts art(config);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto m = std::make_shared<const mesh::TriMesh>(mesh::build_equilateral_tri(config.refinements, tri_base(config.base)));
    auto& res = art.results();
    res["study"] = config.study;
    res["triangles"] = m->num_triangles();
    res["edges"] = m->num_edges();
    bool ok = true;

    auto random_conductivity = [&] {
        std::vector<double> c(m->num_edges());
        const double scale = 10.0 * unit(rng);
        for (double& v : c) v = scale * unit(rng);
        return c;
    };
    auto random_graph = [&] {
        discrete::TriGraph g;
        g.mesh = m;
        g.r = config.graph_r;
        g.conductivity = random_conductivity();
        g.source = discrete::project_sources(*m, random_source(rng));
        linalg::remove_mean(g.source);
        return g;
    };

    if (config.study == "qz-gap") {
        auto out = art.open("qz_gap.csv");
        out << "sample,gap,bound\n";
        out.precision(17);
        int violations = 0;
        for (int s = 0; s < config.samples; ++s) {
            const auto gb = discrete::qz_gap(*m, random_conductivity());
            if (!gb.holds()) ++violations;
            out << s << ',' << gb.gap << ',' << gb.bound << '\n';
        }
        res["violations"] = violations;
        ok = violations == 0;
        log << "qz-gap: " << violations << " violations in " << config.samples << " samples\n";
    } else if (config.study == "xx-identity") {
        const double dev = discrete::verify_xx_identity(*m, config.samples, config.seed);
        res["max_deviation"] = dev;
        ok = dev <= 1e-12;
        log << "xx-identity: max deviation " << dev << '\n';
    } else if (config.study == "energy-identity") {
        auto out = art.open("energy_identity.csv");
        out << "sample,E_bar,E_Q,relative_difference\n";
        out.precision(17);
        double worst = 0.0;
        for (int s = 0; s < config.samples; ++s) {
            const auto g = random_graph();
            const auto u = discrete::kirchhoff_solve(g, discrete::KirchhoffWeights::Diamond);
            const double eb = discrete::rescaled_energy(g, u, config.graph_params());
            const double eq =
                discrete::semidiscrete_energy(*m, {discrete::FieldLayout::PerDiamond, g.conductivity}, g.r,
                                              discrete::loads_from_sources(*m, g.source), config.graph_params())
                    .energy;
            const double rel = std::abs(eb - eq) / std::max(1.0, std::abs(eb));
            worst = std::max(worst, rel);
            out << s << ',' << eb << ',' << eq << ',' << rel << '\n';
        }
        res["max_relative_difference"] = worst;
        ok = worst <= 1e-10;
        log << "energy-identity: max relative difference " << worst << '\n';
    } else if (config.study == "energy-gap") {
        auto out = art.open("energy_gap.csv");
        out << "sample,E_Q,E_Z,gap,bound\n";
        out.precision(17);
        int violations = 0;
        for (int s = 0; s < config.samples; ++s) {
            const auto eg = discrete::energy_gap(random_graph(), config.graph_params());
            if (!eg.holds()) ++violations;
            out << s << ',' << eg.energy_q << ',' << eg.energy_z << ',' << eg.gap << ',' << eg.bound << '\n';
        }
        res["violations"] = violations;
        ok = violations == 0;
        log << "energy-gap: " << violations << " violations in " << config.samples << " samples\n";
    } else if (config.study == "mass-balance") {
        double worst = 0.0;
        for (int s = 0; s < config.samples; ++s) {
            const auto f = random_source(rng);
            const auto si = discrete::project_sources(*m, f);
            double sum = 0.0;
            for (double v : si) sum += v;
            const double expected = std::numbers::sqrt3 / m->h * discrete::integrate(*m, f);
            worst = std::max(worst, std::abs(sum - expected));
        }
        res["max_abs_difference"] = worst;
        ok = worst <= 1e-12;
        log << "mass-balance: max |sum S_i - sqrt(3)/h int S| = " << worst << '\n';
    } else if (config.study == "source-bound") {
        auto out = art.open("source_bound.csv");
        out << "sample,sum_squares,integral_squared,ratio\n";
        out.precision(17);
        int single_fail = 0;
        int hat_fail = 0;
        double worst_ratio = 0.0;
        for (int s = 0; s < config.samples; ++s) {
            const auto sb = discrete::source_bound(*m, random_source(rng));
            const double ratio = sb.sum_squares / sb.integral_squared;
            worst_ratio = std::max(worst_ratio, ratio);
            if (!sb.single_triangle_holds()) ++single_fail;
            if (!sb.full_hat_holds()) ++hat_fail;
            out << s << ',' << sb.sum_squares << ',' << sb.integral_squared << ',' << ratio << '\n';
        }
        res["largest_ratio"] = worst_ratio;
        res["violations_3sqrt3_over_8"] = single_fail;
        res["violations_9sqrt3_over_4"] = hat_fail;
        ok = hat_fail == 0;
        log << "source-bound: largest sum S_i^2 / int S^2 = " << worst_ratio << "; violations with 3sqrt(3)/8: "
            << single_fail << ", with 9sqrt(3)/4: " << hat_fail << '\n';
    } else if (config.study == "refinement") {
        discrete::RefinementConfig rc;
        rc.levels = std::max(2, config.refinements);
        rc.base = tri_base(config.base);
        rc.r = config.graph_r;
        rc.params = config.graph_params();
        const auto rows = discrete::refinement_study([](Point2 x) { return x.x + x.y; },
                                                     [](Point2 x) { return std::cos(std::numbers::pi * x.x); }, rc);
        auto out = art.open("refinement.csv");
        discrete::write_refinement_csv(out, rows);
        for (std::size_t i = 1; i < rows.size(); ++i) ok = ok && rows[i].gap_q < rows[i - 1].gap_q;
        res["gap_decreasing"] = ok;
        log << "refinement: gap |E_bar - E_ref| " << (ok ? "decreases" : "does not decrease") << " with h\n";
    } else if (config.study == "flow") {
        discrete::TriGraph g;
        g.mesh = m;
        g.r = config.graph_r;
        g.conductivity.assign(m->num_edges(), config.c0);
        g.source = discrete::project_sources(*m, [](Point2 x) { return std::cos(std::numbers::pi * x.x); });
        linalg::remove_mean(g.source);
        discrete::GraphFlowConfig fc;
        fc.dt = config.graph_dt;
        fc.steps = config.graph_steps;
        fc.params = config.graph_params();
        const auto traj = discrete::discrete_gradient_flow(g, fc);
        {
            auto out = art.open("flow.csv");
            out << "step,t,E\n";
            out.precision(17);
            for (std::size_t i = 0; i < traj.times.size(); ++i) {
                out << i << ',' << traj.times[i] << ',' << traj.energies[i] << '\n';
            }
        }
        {
            auto out = art.open("edges.csv");
            discrete::write_edge_list(out, *m, traj.conductivities.back());
        }
        res["rejected"] = traj.rejected;
        res["energy_initial"] = traj.energies.front();
        res["energy_final"] = traj.energies.back();
        log << "flow: E " << traj.energies.front() << " -> " << traj.energies.back() << " in " << config.graph_steps
            << " steps (" << traj.rejected << " rejected)\n";
    } else {
        throw InvalidParameter("unknown discrete study '" + config.study +
                               "' (qz-gap, xx-identity, energy-identity, energy-gap, mass-balance, source-bound, "
                               "refinement, flow)");
    }
    const int code = ok ? kOk : kIncomplete;
    art.finish(code);
    return code;
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
    try {
        switch (config.scenario) {
            case Scenario::NetworkFormation: return cmd_network_formation(config, log);
            case Scenario::Plap: return cmd_plap(config, log);
            case Scenario::Convergence: return cmd_convergence(config, log);
            case Scenario::Tc6Sweep: return cmd_tc6(config, log);
            case Scenario::DiscreteStudy: return cmd_discrete(config, log);
        }
    } catch (const IncompatibleSource& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const InvalidParameter& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const TimeStepUnderflow& e) {
        err << "error: " << e.what() << " at t=" << e.time() << " dt=" << e.dt() << '\n';
        return kSolverFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kSolverFailure;
    }
    return kInvalidInput;
}

}  // namespace plapflow::cli
