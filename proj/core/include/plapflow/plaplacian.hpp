#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "plapflow/fem.hpp"
#include "plapflow/gradient_flow.hpp"
#include "plapflow/mesh.hpp"

namespace plapflow::plap {

/// Origin of the radial coordinate for the unit-square cases.
enum class RadialOrigin { Center, Corner };
std::string to_string(RadialOrigin o);
RadialOrigin radial_origin_from_string(const std::string& s);

enum class Domain { UnitSquare, LShape };

using GradientFunction = std::function<Vec2(Point2)>;

/// Manufactured (or exact-solution-free) p-Laplacian problem.
struct TestCase {
    std::string name;
    Domain domain = Domain::UnitSquare;
    mesh::LShapeBoundary lshape_boundary = mesh::LShapeBoundary::AllDirichlet;
    double p = 4.0;
    double gamma = 2.0;
    double sigma = 0.0;
    double a = 0.0;
    double alpha = 0.0;
    Point2 origin{};
    bool has_exact = false;
    fem::ScalarFunction exact;
    GradientFunction exact_gradient;
    fem::ScalarFunction source;
    fem::FluxFunction neumann_flux;

    /// r = 0, eps = 0, nu = 1, gamma = p / (p - 2).
    [[nodiscard]] fem::ModelParams params() const;
};

/// TC1..TC6. `p` only applies to TC6 (defaults to 5 there).
TestCase make_testcase(const std::string& name, RadialOrigin origin = RadialOrigin::Center, double p = 0.0);

/// Mesh with n cells per unit length for the case's domain.
std::shared_ptr<const mesh::QuadMesh> make_mesh(const TestCase& tc, int n);
/// Problem on that mesh; Dirichlet data from the exact solution (zero for TC6).
flow::Problem make_problem(const TestCase& tc, int n);

/// (int |u_h - u|^p)^{1/p} with 3x3 Gauss.
double error_Lp(const mesh::QuadMesh& mesh, std::span<const double> u_h, const fem::ScalarFunction& exact, double p);
/// (int |grad(u_h - u)|^p)^{1/p} with 3x3 Gauss.
double error_W1p(const mesh::QuadMesh& mesh, std::span<const double> u_h, const GradientFunction& exact_grad,
                 double p);
/// (int (|grad u| + |grad(u - u_h)|)^{p-2} |grad(u - u_h)|^2)^{1/2} with 3x3 Gauss.
double error_quasinorm(const mesh::QuadMesh& mesh, std::span<const double> u_h, const GradientFunction& exact_grad,
                       double p);

/// Least-squares slope of log(err) against log(h) over the last `window` points.
/// Throws InvalidParameter with fewer than two points; NaN if an error is not positive.
double fit_rate(std::span<const double> h, std::span<const double> err, int window = 3);

struct StudyConfig {
    int levels = 4;
    int n0 = 16;
    int rate_window = 3;
    double c0 = 1.0;
    flow::StopRule stop;
    flow::TimeControlConfig time;
    flow::NewtonConfig newton;
};

struct ErrorReport {
    int level = 0;
    double h = 0.0;
    std::size_t dofs = 0;
    double err_Lp = 0.0;
    double err_W1p = 0.0;
    double err_quasi = 0.0;
    int steps = 0;
    int newton_total = 0;
    double krylov_avg = 0.0;
    bool steady = false;
    double steady_residual = 0.0;
    double final_time = 0.0;
    double runtime_s = 0.0;
    std::string failure;  // empty on success
};

struct ConvergenceTable {
    std::string case_name;
    std::vector<ErrorReport> levels;
    double rate_Lp = 0.0;
    double rate_W1p = 0.0;
    double rate_quasi = 0.0;
};

using LevelCallback = std::function<void(const ErrorReport&, const flow::RunResult&)>;

/// Integrates the flow to steady state on n0 * 2^l cells per unit length, l < levels,
/// and fits rates over the successful levels.
ConvergenceTable convergence_study(const TestCase& tc, const StudyConfig& config, const LevelCallback& on_level = {});

/// CSV: level,h,dofs,err_Lp,err_W1p,err_quasi,steps,newton_total,krylov_avg
void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);

}  // namespace plapflow::plap
