#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "plapflow/block_system.hpp"
#include "plapflow/fem.hpp"
#include "plapflow/krylov.hpp"
#include "plapflow/mesh.hpp"

namespace plapflow::flow {

/// Continuous problem data. Empty functions are zero.
struct Problem {
    std::shared_ptr<const mesh::QuadMesh> mesh;
    fem::ModelParams params;
    fem::ScalarFunction source;
    fem::FluxFunction neumann_flux;
    fem::ScalarFunction dirichlet_datum;
};

/// Problem bound to its Q1/P0 discretization: space, load vector, Dirichlet lift.
class Discretization {
public:
    explicit Discretization(Problem problem);

    [[nodiscard]] const Problem& problem() const { return problem_; }
    [[nodiscard]] const fem::ModelParams& params() const { return problem_.params; }
    [[nodiscard]] const fem::QuadSpace& space() const { return space_; }
    [[nodiscard]] const mesh::QuadMesh& mesh() const { return space_.mesh(); }
    /// Full-vertex load; projected to zero sum when the potential is floating.
    [[nodiscard]] std::span<const double> load() const { return load_; }
    /// Sum of the raw load before projection (pure Neumann only, else 0).
    [[nodiscard]] double load_imbalance() const { return imbalance_; }
    /// Dirichlet datum on Dirichlet vertices, zero elsewhere.
    [[nodiscard]] std::span<const double> lift() const { return lift_; }
    [[nodiscard]] bool floating() const { return space_.floating(); }
    [[nodiscard]] double area() const { return area_; }

private:
    Problem problem_;
    fem::QuadSpace space_;
    std::vector<double> load_;
    std::vector<double> lift_;
    double imbalance_ = 0.0;
    double area_ = 0.0;
};

struct State {
    double t = 0.0;
    std::vector<double> c;  // per cell
    std::vector<double> u;  // per vertex
};

/// Stacked backward-Euler residual.
struct Residual {
    std::vector<double> c;  // per cell
    std::vector<double> u;  // per free vertex
    [[nodiscard]] double norm() const;
};

/// F_c,K = 1/2 (|K| (c - c_prev)/dt + |K| nu g(c) - int_K |grad u|^2),
/// F_u   = load - K(c) u restricted to the free vertices.
Residual residual(const Discretization& disc, std::span<const double> c_prev, std::span<const double> c,
                  std::span<const double> u, double dt);

/// Blocks A, B, C of dF at (c, u) and the Schur complement S.
linalg::BlockSystem jacobian(const Discretization& disc, std::span<const double> c, std::span<const double> u,
                             double dt);

enum class NewtonVariant {
    /// Cellwise exact solve of the conductance equation, Newton on the reduced potential problem.
    LocalElimination,
    /// Newton on the stacked (c, u) system.
    Coupled,
};
enum class LineSearch { None, Backtracking };

std::string to_string(NewtonVariant v);
std::string to_string(LineSearch l);
NewtonVariant newton_variant_from_string(const std::string& s);
LineSearch line_search_from_string(const std::string& s);

/// Eisenstat-Walker choice 2 forcing terms.
struct Forcing {
    bool enabled = true;
    double eta0 = 0.3;
    double eta_max = 0.9;
    double gamma = 0.9;
    double alpha = 2.0;
};

struct NewtonConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_iters = 10;
    Forcing forcing;
    LineSearch line_search = LineSearch::Backtracking;
    NewtonVariant variant = NewtonVariant::LocalElimination;
    /// Krylov settings; rtol is only used when forcing is disabled.
    linalg::KrylovConfig krylov;

    void validate() const;
};

enum class NewtonStatus { Converged, MaxIterations, KrylovFailure, Indefinite, NonFinite, LineSearchFailure };
std::string to_string(NewtonStatus s);

struct NewtonResult {
    NewtonStatus status = NewtonStatus::MaxIterations;
    int iterations = 0;
    int krylov_iterations = 0;
    double initial_norm = 0.0;
    double residual_norm = 0.0;
    std::vector<double> history;  // residual norm per iterate
    State state;
    std::string message;
    [[nodiscard]] bool converged() const { return status == NewtonStatus::Converged; }
};

/// One backward-Euler step of size dt from `prev`. Never throws on solver failure.
/// With LocalElimination the convergence test uses ||F_u|| only, since F_c vanishes to
/// roundoff by construction, and backtracking ascends the concave reduced merit.
NewtonResult solve_step(const Discretization& disc, const State& prev, double dt, const NewtonConfig& config);

/// Root of c + dt nu g(c) = c_prev + dt q in [0, c_prev + dt q] for c_prev, q >= 0.
/// Returns false when 1 + dt (alpha + beta) <= 0 at the root.
bool solve_local_conductance(const fem::ModelParams& params, double c_prev, double q, double dt, double guess,
                             double& c_out);

enum class ControllerKind { PI, Integral, Fixed };
std::string to_string(ControllerKind k);
ControllerKind controller_from_string(const std::string& s);

struct TimeControlConfig {
    ControllerKind kind = ControllerKind::PI;
    double dt0 = 0.01;
    double dt_min = 1e-10;
    double dt_max = 100.0;
    double safety = 0.9;
    double growth = 2.0;
    double shrink = 0.5;  // on nonlinear failure
    double k_i = 0.3;
    double k_p = 0.4;
    double atol = 1e-3;
    double rtol = 1e-3;

    void validate() const;
};

/// Step-size controller driven by a normalized local error estimate (accept iff err <= 1).
class TimeController {
public:
    explicit TimeController(TimeControlConfig config);

    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] const TimeControlConfig& config() const { return config_; }
    void accept(double err);
    void reject(double err);
    void fail();

private:
    void set(double dt);

    TimeControlConfig config_;
    double dt_;
    double err_prev_ = 1.0;
};

struct StepReport {
    int step = 0;
    double t = 0.0;   // time after the step if accepted
    double dt = 0.0;  // attempted step size
    bool accepted = false;
    int newton_iters = 0;
    int krylov_iters = 0;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double plap_energy = std::numeric_limits<double>::quiet_NaN();
    double steady_residual = std::numeric_limits<double>::quiet_NaN();
    double error_estimate = std::numeric_limits<double>::quiet_NaN();
    /// ||c_{n+1} - c_{n+1/2}||_2 / (dt/2) over the last half step.
    double rate = std::numeric_limits<double>::quiet_NaN();
    double min_c = std::numeric_limits<double>::quiet_NaN();
    std::string note;
};

/// Attempts one step of size min(controller dt, dt_cap) with step doubling.
/// `state` changes only when the step is accepted. Throws TimeStepUnderflow
/// when the controller drops below dt_min.
StepReport advance(const Discretization& disc, State& state, TimeController& controller, const NewtonConfig& newton,
                   double dt_cap = std::numeric_limits<double>::infinity());

/// Lyapunov functional 2 l.u - int (c+r)|grad u|^2 + int (nu/gamma)(c^2+eps)^{gamma/2};
/// equals int (c+r)|grad u|^2 + metabolic cost for homogeneous Dirichlet data.
double energy(const Discretization& disc, const State& state);
/// (1/p) int |grad u|^p - int S u - int_{Gamma_N} g_N u; NaN when gamma <= 1.
double plap_energy(const Discretization& disc, const State& state);
/// || |grad u|^2 - nu g(c) ||_{L2}, pointwise at 3x3 Gauss points.
double steady_residual(const Discretization& disc, const State& state);
/// Same quantity after projection onto piecewise constants.
double projected_steady_residual(const Discretization& disc, const State& state);
/// sqrt(sum_K |K| c_K^2)
double l2_norm_p0(const Discretization& disc, std::span<const double> c);

/// Weighted Poisson solve for the potential at fixed c. Throws IncompatibleSource
/// for a pure-Neumann problem whose load does not balance.
std::vector<double> solve_initial_potential(const Discretization& disc, std::span<const double> c,
                                            const linalg::KrylovConfig& krylov = {});
/// c = c0 everywhere and the matching potential at t = 0.
State initial_state(const Discretization& disc, double c0, const linalg::KrylovConfig& krylov = {});

struct StopRule {
    /// Absolute tolerance on ||dc/dt||_2; negative means 1e-8 ||c_0||_2.
    double tol_ss = -1.0;
    double t_max = 100.0;
    int max_steps = 100000;
};

struct RunResult {
    State state;
    std::vector<StepReport> reports;
    bool steady = false;
    int accepted_steps = 0;
    int newton_total = 0;
    long long krylov_total = 0;
    double tol_ss = 0.0;
    [[nodiscard]] double krylov_per_newton() const;
};

using Observer = std::function<void(const State&, const StepReport&)>;

/// Integrates until the stop rule holds. The observer sees every attempted step.
RunResult run_to_steady(const Discretization& disc, State initial, const StopRule& stop,
                        const TimeControlConfig& time, const NewtonConfig& newton, const Observer& observer = {});

/// CSV with header step,t,dt,accepted,newton_iters,krylov_iters,E,E_plap,steady_residual
void write_step_log(std::ostream& out, std::span<const StepReport> reports);

}  // namespace plapflow::flow
