#include "plapflow/gradient_flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <utility>

#include "plapflow/error.hpp"

namespace plapflow::flow {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void normalize_mean(const Discretization& disc, std::vector<double>& u) {
    if (!disc.floating()) return;
    const double mean = fem::integrate(disc.space(), u) / disc.area();
    for (double& v : u) v -= mean;
}

std::shared_ptr<const mesh::QuadMesh> checked_mesh(std::shared_ptr<const mesh::QuadMesh> m) {
    PLAPFLOW_REQUIRE(m != nullptr, InvalidParameter, "Discretization: null mesh");
    return m;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ---------------------------------------------------------------------------

Discretization::Discretization(Problem problem)
    : problem_(std::move(problem)),
      space_(checked_mesh(problem_.mesh)) {
    problem_.params.validate();
    load_ = fem::assemble_source(space_, problem_.source, problem_.neumann_flux);
    if (space_.floating()) {
        double sum = 0.0;
        for (double v : load_) sum += v;
        imbalance_ = sum;
        const double shift = sum / static_cast<double>(load_.size());
        for (double& v : load_) v -= shift;
    }
    lift_.assign(space_.num_vertices(), 0.0);
    if (problem_.dirichlet_datum) {
        const auto& mask = space_.dirichlet();
        for (std::size_t v = 0; v < lift_.size(); ++v) {
            if (mask[v]) lift_[v] = problem_.dirichlet_datum(mesh().vertices[v]);
        }
    }
    for (double a : space_.cell_areas()) area_ += a;
}

double Residual::norm() const {
    double sq = 0.0;
    for (double v : c) sq += v * v;
    for (double v : u) sq += v * v;
    return std::sqrt(sq);
}

Residual residual(const Discretization& disc, std::span<const double> c_prev, std::span<const double> c,
                  std::span<const double> u, double dt) {
    const auto& space = disc.space();
    const auto& params = disc.params();
    PLAPFLOW_REQUIRE(c.size() == space.num_cells() && c_prev.size() == c.size(), InvalidParameter,
                     "residual: conductance has wrong length");
    PLAPFLOW_REQUIRE(u.size() == space.num_vertices(), InvalidParameter, "residual: potential has wrong length");
    PLAPFLOW_REQUIRE(dt > 0.0, InvalidParameter, "residual: dt must be > 0");

    Residual f;
    const auto q = fem::cell_gradient_energy(space, u);
    f.c.resize(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double area = space.cell_area(k);
        f.c[k] = 0.5 * (area * (c[k] - c_prev[k]) / dt + area * params.nu * params.rate(c[k]) - q[k]);
    }
    const auto ku = fem::apply_stiffness(space, c, params.r, u);
    std::vector<double> full(ku.size());
    const auto load = disc.load();
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = load[i] - ku[i];
    f.u = space.restrict_to_free(full);
    return f;
}

linalg::BlockSystem jacobian(const Discretization& disc, std::span<const double> c, std::span<const double> u,
                             double dt) {
    const auto& space = disc.space();
    linalg::BlockSystem j;
    j.a_diag = fem::assemble_a_diagonal(space, c, disc.params(), dt);
    j.b = fem::assemble_coupling(space, u);
    j.c = fem::assemble_stiffness(space, c, disc.params().r);
    j.s = linalg::assemble_schur(j.a_diag, j.b, j.c);
    return j;
}

// ---------------------------------------------------------------------------

std::string to_string(NewtonVariant v) {
    return v == NewtonVariant::Coupled ? "coupled" : "local-elimination";
}

std::string to_string(LineSearch l) { return l == LineSearch::Backtracking ? "backtracking" : "none"; }

NewtonVariant newton_variant_from_string(const std::string& s) {
    if (s == "coupled") return NewtonVariant::Coupled;
    if (s == "local-elimination") return NewtonVariant::LocalElimination;
    throw InvalidParameter("unknown Newton variant '" + s + "'");
}

LineSearch line_search_from_string(const std::string& s) {
    if (s == "none") return LineSearch::None;
    if (s == "backtracking") return LineSearch::Backtracking;
    throw InvalidParameter("unknown line search '" + s + "'");
}

std::string to_string(NewtonStatus s) {
    switch (s) {
        case NewtonStatus::Converged: return "converged";
        case NewtonStatus::MaxIterations: return "max-iterations";
        case NewtonStatus::KrylovFailure: return "krylov-failure";
        case NewtonStatus::Indefinite: return "indefinite";
        case NewtonStatus::NonFinite: return "non-finite";
        case NewtonStatus::LineSearchFailure: return "line-search-failure";
    }
    return "unknown";
}

void NewtonConfig::validate() const {
    PLAPFLOW_REQUIRE(abs_tol >= 0.0 && rel_tol >= 0.0, InvalidParameter, "NewtonConfig: negative tolerance");
    PLAPFLOW_REQUIRE(max_iters >= 1, InvalidParameter, "NewtonConfig: max_iters must be >= 1");
    PLAPFLOW_REQUIRE(forcing.eta0 > 0.0 && forcing.eta0 < 1.0 && forcing.eta_max > 0.0 && forcing.eta_max < 1.0,
                     InvalidParameter, "NewtonConfig: forcing terms must lie in (0, 1)");
}

bool solve_local_conductance(const fem::ModelParams& params, double c_prev, double q, double dt, double guess,
                             double& c_out) {
    const double b = c_prev + dt * q;
    if (!(b > 0.0)) {
        c_out = 0.0;
        return 1.0 + dt * params.rate_derivative(0.0) > 0.0;
    }
    const auto phi = [&](double c) { return c + dt * params.nu * params.rate(c) - b; };
    double lo = 0.0;
    double hi = b;
    double x = (guess > 0.0 && guess < b) ? guess : b;
    for (int it = 0; it < 400; ++it) {
        const double f = phi(x);
        if (f == 0.0) break;
        if (f < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        if (std::abs(f) <= 4.0 * kEps * b || hi - lo <= 4.0 * kEps * hi) break;
        const double d = 1.0 + dt * params.rate_derivative(x);
        double next = x - f / d;
        if (!(d > 0.0) || !std::isfinite(next) || next <= lo || next >= hi) {
            if (lo > 0.0) {
                next = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
            } else {
                next = 0.01 * hi;
            }
        }
        x = next;
    }
    c_out = x;
    return 1.0 + dt * params.rate_derivative(x) > 0.0;
}

namespace {

/// Solves every cell for the conductance consistent with u. False on indefiniteness.
bool eliminate_conductance(const Discretization& disc, std::span<const double> c_prev, std::span<const double> u,
                           double dt, std::vector<double>& c) {
    const auto& space = disc.space();
    const auto q = fem::cell_gradient_energy(space, u);
    bool ok = true;
    for (std::size_t k = 0; k < c.size(); ++k) {
        ok = solve_local_conductance(disc.params(), c_prev[k], q[k] / space.cell_area(k), dt, c[k], c[k]) && ok;
    }
    return ok;
}

constexpr int kMaxHalvings = 60;

/// Concave objective of the reduced problem: energy plus sum |K| (c - c_prev)^2 / (2 dt).
/// Its gradient in the free potential is 2 F_u when c is the eliminated conductance.
double reduced_merit(const Discretization& disc, std::span<const double> c_prev, const State& x, double dt) {
    double inertia = 0.0;
    for (std::size_t k = 0; k < x.c.size(); ++k) {
        const double d = x.c[k] - c_prev[k];
        inertia += disc.space().cell_area(k) * d * d;
    }
    return energy(disc, x) + inertia / (2.0 * dt);
}

}  // namespace

NewtonResult solve_step(const Discretization& disc, const State& prev, double dt, const NewtonConfig& config) {
    config.validate();
    const auto& space = disc.space();
    const bool local = config.variant == NewtonVariant::LocalElimination;

    NewtonResult res;
    res.state = prev;
    res.state.t = prev.t + dt;
    State& x = res.state;

    auto fail = [&](NewtonStatus status, std::string message) {
        res.status = status;
        res.message = std::move(message);
        return res;
    };

    if (local && !eliminate_conductance(disc, prev.c, x.u, dt, x.c)) {
        return fail(NewtonStatus::Indefinite, "conductance equation not monotone at the root");
    }
    Residual f = residual(disc, prev.c, x.c, x.u, dt);
    const auto measure = [local](const Residual& r) { return local ? linalg::norm2(r.u) : r.norm(); };
    double norm = measure(f);
    res.initial_norm = norm;
    const double target = std::max(config.abs_tol, config.rel_tol * norm);
    double prev_norm = norm;
    double eta = config.forcing.eta0;
    double merit = local ? reduced_merit(disc, prev.c, x, dt) : 0.0;

    for (int it = 0;; ++it) {
        res.residual_norm = norm;
        res.history.push_back(norm);
        if (!std::isfinite(norm)) return fail(NewtonStatus::NonFinite, "non-finite residual");
        if (norm <= target) {
            res.status = NewtonStatus::Converged;
            return res;
        }
        if (it == config.max_iters) {
            return fail(NewtonStatus::MaxIterations, "residual " + std::to_string(norm) + " after " +
                                                         std::to_string(it) + " iterations");
        }

        linalg::BlockSystem j;
        try {
            j = jacobian(disc, x.c, x.u, dt);
        } catch (const SingularBlock& e) {
            return fail(NewtonStatus::Indefinite, e.what());
        } catch (const AssemblyError& e) {
            return fail(NewtonStatus::Indefinite, e.what());
        }
        if (std::any_of(j.a_diag.begin(), j.a_diag.end(), [](double a) { return !(a > 0.0); })) {
            return fail(NewtonStatus::Indefinite, "nonpositive entry in the conductance block");
        }

        linalg::KrylovConfig kcfg = config.krylov;
        kcfg.constant_nullspace = disc.floating();
        if (config.forcing.enabled) {
            if (it > 0) {
                const auto& fc = config.forcing;
                double next = fc.gamma * std::pow(norm / prev_norm, fc.alpha);
                const double guard = fc.gamma * std::pow(eta, fc.alpha);
                if (guard > 0.1) next = std::max(next, guard);
                eta = std::min(next, fc.eta_max);
            }
            kcfg.rtol = 0.0;
            kcfg.atol = std::max(eta * norm, 0.5 * target);
        }

        std::vector<double> rhs_c(f.c.size());
        std::vector<double> rhs_u(f.u.size());
        for (std::size_t k = 0; k < rhs_c.size(); ++k) rhs_c[k] = local ? 0.0 : -f.c[k];
        for (std::size_t i = 0; i < rhs_u.size(); ++i) rhs_u[i] = -f.u[i];

        linalg::BlockSolution step;
        try {
            step = linalg::solve_block(j, rhs_c, rhs_u, kcfg);
        } catch (const KrylovError& e) {
            res.krylov_iterations += e.iterations();
            return fail(NewtonStatus::KrylovFailure, e.what());
        } catch (const SingularBlock& e) {
            return fail(NewtonStatus::Indefinite, e.what());
        }
        res.krylov_iterations += step.krylov.iterations;
        if (!all_finite(step.du) || !all_finite(step.dc)) return fail(NewtonStatus::NonFinite, "non-finite update");

        // Directional derivative of the merit along du is 2 F_u.du > 0 for the reduced problem.
        const double slope = 2.0 * linalg::dot(f.u, step.du);
        const bool ascent = local && slope > 0.0;
        double lambda = 1.0;
        State trial;
        Residual ft;
        double trial_norm = 0.0;
        double trial_merit = 0.0;
        for (int halvings = 0;; ++halvings) {
            trial = x;
            std::vector<double> du(step.du);
            for (double& v : du) v *= lambda;
            space.add_free(du, trial.u);
            normalize_mean(disc, trial.u);
            bool ok = true;
            if (local) {
                ok = eliminate_conductance(disc, prev.c, trial.u, dt, trial.c);
            } else {
                for (std::size_t k = 0; k < trial.c.size(); ++k) trial.c[k] += lambda * step.dc[k];
            }
            trial_norm = std::numeric_limits<double>::infinity();
            trial_merit = -std::numeric_limits<double>::infinity();
            if (ok) {
                ft = residual(disc, prev.c, trial.c, trial.u, dt);
                trial_norm = measure(ft);
                if (local) trial_merit = reduced_merit(disc, prev.c, trial, dt);
            }
            if (config.line_search == LineSearch::None) {
                if (!ok) return fail(NewtonStatus::Indefinite, "conductance equation not monotone at the root");
                break;
            }
            const bool decrease = std::isfinite(trial_norm) && trial_norm <= (1.0 - 1e-4 * lambda) * norm;
            if (ascent) {
                const double roundoff = 64.0 * kEps * (std::abs(merit) + std::abs(trial_merit));
                const bool armijo = trial_merit >= merit + 1e-4 * lambda * slope;
                if (std::isfinite(trial_merit) && (armijo || (decrease && trial_merit >= merit - roundoff))) break;
                if (halvings == kMaxHalvings) {
                    return fail(NewtonStatus::LineSearchFailure, "no sufficient increase of the reduced merit");
                }
            } else {
                if (decrease || lambda < 1.0 / 256.0) {
                    if (!ok) return fail(NewtonStatus::Indefinite, "conductance equation not monotone at the root");
                    break;
                }
            }
            lambda *= 0.5;
        }
        x = std::move(trial);
        f = std::move(ft);
        merit = trial_merit;
        prev_norm = norm;
        norm = trial_norm;
        ++res.iterations;
    }
}

// ---------------------------------------------------------------------------

std::string to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::PI: return "pi";
        case ControllerKind::Integral: return "integral";
        case ControllerKind::Fixed: return "fixed";
    }
    return "unknown";
}

ControllerKind controller_from_string(const std::string& s) {
    if (s == "pi") return ControllerKind::PI;
    if (s == "integral") return ControllerKind::Integral;
    if (s == "fixed") return ControllerKind::Fixed;
    throw InvalidParameter("unknown time controller '" + s + "'");
}

void TimeControlConfig::validate() const {
    PLAPFLOW_REQUIRE(dt_min > 0.0 && dt_min <= dt0 && dt0 <= dt_max, InvalidParameter,
                     "TimeControlConfig: need 0 < dt_min <= dt0 <= dt_max");
    PLAPFLOW_REQUIRE(shrink > 0.0 && shrink < 1.0, InvalidParameter, "TimeControlConfig: shrink must lie in (0, 1)");
    PLAPFLOW_REQUIRE(safety > 0.0 && safety <= 1.0 && growth >= 1.0, InvalidParameter,
                     "TimeControlConfig: bad safety or growth factor");
    PLAPFLOW_REQUIRE(atol > 0.0 && rtol >= 0.0, InvalidParameter, "TimeControlConfig: bad error tolerances");
}

TimeController::TimeController(TimeControlConfig config) : config_(config), dt_(config.dt0) { config_.validate(); }

void TimeController::set(double dt) { dt_ = std::min(dt, config_.dt_max); }

void TimeController::accept(double err) {
    if (config_.kind == ControllerKind::Fixed) return;
    const double e = std::max(err, 1e-10);
    double fac = 0.0;
    if (config_.kind == ControllerKind::PI) {
        fac = config_.safety * std::pow(e, -config_.k_i) * std::pow(err_prev_ / e, config_.k_p);
    } else {
        fac = config_.safety * std::pow(e, -0.5);
    }
    set(dt_ * std::clamp(fac, 0.2, config_.growth));
    err_prev_ = e;
}

void TimeController::reject(double err) {
    const double fac = std::clamp(config_.safety * std::pow(std::max(err, 1.0), -0.5), 0.2, 0.9);
    set(dt_ * fac);
}

void TimeController::fail() { set(dt_ * config_.shrink); }

// ---------------------------------------------------------------------------

double l2_norm_p0(const Discretization& disc, std::span<const double> c) {
    double sq = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) sq += disc.space().cell_area(k) * c[k] * c[k];
    return std::sqrt(sq);
}

namespace {

double error_norm(const Discretization& disc, const TimeControlConfig& cfg, std::span<const double> fine,
                  std::span<const double> coarse) {
    double sq = 0.0;
    for (std::size_t k = 0; k < fine.size(); ++k) {
        const double scale = cfg.atol + cfg.rtol * std::max(std::abs(fine[k]), std::abs(coarse[k]));
        const double e = (fine[k] - coarse[k]) / scale;
        sq += disc.space().cell_area(k) * e * e;
    }
    return std::sqrt(sq / disc.area());
}

}  // namespace

StepReport advance(const Discretization& disc, State& state, TimeController& controller, const NewtonConfig& newton,
                   double dt_cap) {
    const auto& tc = controller.config();
    if (controller.dt() < tc.dt_min) {
        throw TimeStepUnderflow("time step " + std::to_string(controller.dt()) + " below dt_min at t = " +
                                    std::to_string(state.t),
                                state.t, controller.dt());
    }
    StepReport rep;
    const double dt = std::min(controller.dt(), dt_cap);
    rep.dt = dt;
    rep.t = state.t;

    auto attempt = [&](const State& from, double h, const char* label, NewtonResult& out) {
        out = solve_step(disc, from, h, newton);
        rep.newton_iters += out.iterations;
        rep.krylov_iters += out.krylov_iterations;
        if (!out.converged()) {
            rep.note = std::string(label) + ": " + to_string(out.status);
            controller.fail();
            return false;
        }
        return true;
    };

    NewtonResult full;
    NewtonResult half1;
    NewtonResult half2;
    if (!attempt(state, dt, "full step", full)) return rep;
    if (!attempt(state, 0.5 * dt, "first half step", half1)) return rep;
    if (!attempt(half1.state, 0.5 * dt, "second half step", half2)) return rep;

    const auto& c_new = half2.state.c;
    rep.min_c = *std::min_element(c_new.begin(), c_new.end());
    if (rep.min_c < 0.0) {
        rep.note = "negative conductance";
        controller.fail();
        return rep;
    }
    rep.error_estimate = error_norm(disc, tc, c_new, full.state.c);
    if (tc.kind != ControllerKind::Fixed && rep.error_estimate > 1.0) {
        rep.note = "local error";
        controller.reject(rep.error_estimate);
        return rep;
    }

    std::vector<double> diff(c_new.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = c_new[k] - half1.state.c[k];
    rep.rate = l2_norm_p0(disc, diff) / (0.5 * dt);

    state = std::move(half2.state);
    state.t = rep.t + dt;
    rep.t = state.t;
    rep.accepted = true;
    rep.energy = energy(disc, state);
    rep.plap_energy = plap_energy(disc, state);
    rep.steady_residual = steady_residual(disc, state);
    controller.accept(rep.error_estimate);
    return rep;
}

// ---------------------------------------------------------------------------

double energy(const Discretization& disc, const State& state) {
    const auto& space = disc.space();
    const auto& params = disc.params();
    const auto q = fem::cell_gradient_energy(space, state.u);
    double pump = 0.0;
    double metabolic = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        pump += (state.c[k] + params.r) * q[k];
        metabolic += space.cell_area(k) * params.metabolic_cost(state.c[k]);
    }
    const double work = linalg::dot(disc.load(), state.u);
    return 2.0 * work - pump + metabolic;
}

double plap_energy(const Discretization& disc, const State& state) {
    const auto& params = disc.params();
    if (!(params.gamma > 1.0)) return std::numeric_limits<double>::quiet_NaN();
    const double p = params.p_exponent();
    const auto& mesh = disc.mesh();
    const auto rule = fem::gauss_quad(3);
    double sum = 0.0;
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const auto& vs = mesh.cells[k];
        for (const auto& pd : fem::cell_points(mesh, k, rule)) {
            Vec2 g{};
            for (int a = 0; a < 4; ++a) g = g + state.u[vs[a]] * pd.grad[a];
            sum += pd.jxw * std::pow(norm(g), p);
        }
    }
    return sum / p - linalg::dot(disc.load(), state.u);
}

double steady_residual(const Discretization& disc, const State& state) {
    const auto& params = disc.params();
    const auto& mesh = disc.mesh();
    const auto rule = fem::gauss_quad(3);
    double sq = 0.0;
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const auto& vs = mesh.cells[k];
        const double g = params.nu * params.rate(state.c[k]);
        for (const auto& pd : fem::cell_points(mesh, k, rule)) {
            Vec2 grad{};
            for (int a = 0; a < 4; ++a) grad = grad + state.u[vs[a]] * pd.grad[a];
            const double r = dot(grad, grad) - g;
            sq += pd.jxw * r * r;
        }
    }
    return std::sqrt(sq);
}

double projected_steady_residual(const Discretization& disc, const State& state) {
    const auto& space = disc.space();
    const auto& params = disc.params();
    const auto q = fem::cell_gradient_energy(space, state.u);
    double sq = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double area = space.cell_area(k);
        const double r = q[k] / area - params.nu * params.rate(state.c[k]);
        sq += area * r * r;
    }
    return std::sqrt(sq);
}

std::vector<double> solve_initial_potential(const Discretization& disc, std::span<const double> c,
                                            const linalg::KrylovConfig& krylov) {
    const auto& space = disc.space();
    PLAPFLOW_REQUIRE(c.size() == space.num_cells(), InvalidParameter,
                     "solve_initial_potential: conductance has wrong length");
    if (disc.floating()) {
        double l1 = 0.0;
        for (double v : disc.load()) l1 += std::abs(v);
        const double imbalance = disc.load_imbalance();
        if (std::abs(imbalance) > 1e-10 * std::max(1.0, l1)) {
            throw IncompatibleSource("pure Neumann problem: source and boundary flux do not balance (imbalance " +
                                         std::to_string(imbalance) + ")",
                                     imbalance);
        }
    }
    std::vector<double> u(disc.lift().begin(), disc.lift().end());
    const auto ku = fem::apply_stiffness(space, c, disc.params().r, u);
    std::vector<double> full(u.size());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = disc.load()[i] - ku[i];
    const auto rhs = space.restrict_to_free(full);
    const auto k = fem::assemble_stiffness(space, c, disc.params().r);
    linalg::KrylovConfig cfg = krylov;
    cfg.constant_nullspace = disc.floating();
    std::vector<double> du(rhs.size(), 0.0);
    linalg::krylov_solve(k, rhs, du, cfg);
    space.add_free(du, u);
    normalize_mean(disc, u);
    return u;
}

State initial_state(const Discretization& disc, double c0, const linalg::KrylovConfig& krylov) {
    PLAPFLOW_REQUIRE(c0 >= 0.0, InvalidParameter, "initial_state: c0 must be >= 0");
    State s;
    s.c.assign(disc.space().num_cells(), c0);
    s.u = solve_initial_potential(disc, s.c, krylov);
    return s;
}

double RunResult::krylov_per_newton() const {
    return newton_total > 0 ? static_cast<double>(krylov_total) / newton_total : 0.0;
}

RunResult run_to_steady(const Discretization& disc, State initial, const StopRule& stop,
                        const TimeControlConfig& time, const NewtonConfig& newton, const Observer& observer) {
    PLAPFLOW_REQUIRE(stop.t_max > initial.t, InvalidParameter, "run_to_steady: t_max must exceed the initial time");
    RunResult out;
    const double c0_norm = l2_norm_p0(disc, initial.c);
    out.tol_ss = stop.tol_ss >= 0.0 ? stop.tol_ss : 1e-8 * (c0_norm > 0.0 ? c0_norm : 1.0);
    out.state = std::move(initial);
    TimeController controller(time);
    const double t_end = stop.t_max;
    while (static_cast<int>(out.reports.size()) < stop.max_steps && out.state.t < t_end * (1.0 - 1e-14)) {
        StepReport rep = advance(disc, out.state, controller, newton, t_end - out.state.t);
        rep.step = static_cast<int>(out.reports.size());
        out.newton_total += rep.newton_iters;
        out.krylov_total += rep.krylov_iters;
        if (rep.accepted) ++out.accepted_steps;
        if (observer) observer(out.state, rep);
        out.reports.push_back(rep);
        if (rep.accepted && rep.rate <= out.tol_ss) {
            out.steady = true;
            break;
        }
    }
    return out;
}

void write_step_log(std::ostream& out, std::span<const StepReport> reports) {
    out << "step,t,dt,accepted,newton_iters,krylov_iters,E,E_plap,steady_residual\n";
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : reports) {
        out << r.step << ',' << r.t << ',' << r.dt << ',' << (r.accepted ? 1 : 0) << ',' << r.newton_iters << ','
            << r.krylov_iters << ',' << r.energy << ',' << r.plap_energy << ',' << r.steady_residual << '\n';
    }
    out.precision(old);
}

}  // namespace plapflow::flow
