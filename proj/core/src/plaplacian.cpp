#include "plapflow/plaplacian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "plapflow/error.hpp"

namespace plapflow::plap {

std::string to_string(RadialOrigin o) { return o == RadialOrigin::Corner ? "corner" : "center"; }

RadialOrigin radial_origin_from_string(const std::string& s) {
    if (s == "center") return RadialOrigin::Center;
    if (s == "corner") return RadialOrigin::Corner;
    throw InvalidParameter("unknown radial origin '" + s + "'");
}

fem::ModelParams TestCase::params() const {
    fem::ModelParams m;
    m.r = 0.0;
    m.eps = 0.0;
    m.nu = 1.0;
    m.gamma = gamma;
    return m;
}

namespace {

void radial_power_case(TestCase& tc) {
    const double p = tc.p;
    const double sigma = tc.sigma;
    const Point2 o = tc.origin;
    const double amp = (p - 1.0) / (sigma + p) * std::pow(sigma + 2.0, 1.0 / (1.0 - p));
    const double e = (sigma + p) / (p - 1.0);
    const double slope = std::pow(sigma + 2.0, -1.0 / (p - 1.0));
    const double ge = (sigma + 1.0) / (p - 1.0);
    tc.exact = [=](Point2 x) { return amp * (1.0 - std::pow(norm(x - o), e)); };
    tc.exact_gradient = [=](Point2 x) {
        const Vec2 d = x - o;
        const double r = norm(d);
        if (r == 0.0) return Vec2{};
        // u'(r) = -(sigma+2)^{-1/(p-1)} r^{(sigma+1)/(p-1)}
        const double du = -slope * std::pow(r, ge);
        return (du / r) * d;
    };
    tc.source = [=](Point2 x) { return std::pow(norm(x - o), sigma); };
}

void annulus_case(TestCase& tc) {
    const double p = tc.p;
    const double a = tc.a;
    const Point2 o = tc.origin;
    tc.exact = [=](Point2 x) {
        const double r = norm(x - o);
        return r < a ? 0.0 : std::pow(r - a, 4.0);
    };
    tc.exact_gradient = [=](Point2 x) {
        const Vec2 d = x - o;
        const double r = norm(d);
        if (r < a || r == 0.0) return Vec2{};
        return (4.0 * std::pow(r - a, 3.0) / r) * d;
    };
    tc.source = [=](Point2 x) {
        const double r = norm(x - o);
        if (r < a) return 0.0;
        return std::pow(4.0, p - 1.0) * std::pow(r - a, 3.0 * p - 4.0) * (2.0 - 3.0 * p + a / r);
    };
}

double polar_angle(Point2 x) {
    double th = std::atan2(x.y, x.x);
    if (th < 0.0) th += 2.0 * std::numbers::pi;
    return th;
}

void corner_case(TestCase& tc) {
    const double p = tc.p;
    const double al = tc.alpha;
    tc.exact = [=](Point2 x) { return std::pow(norm(x), al) * std::sin(al * polar_angle(x)); };
    tc.exact_gradient = [=](Point2 x) {
        const double r = norm(x);
        if (r == 0.0) return Vec2{};
        const double th = polar_angle(x);
        const double ur = al * std::pow(r, al - 1.0) * std::sin(al * th);
        const double ut = al * std::pow(r, al - 1.0) * std::cos(al * th);  // (1/r) du/dtheta
        const double ct = std::cos(th);
        const double st = std::sin(th);
        return Vec2{ur * ct - ut * st, ur * st + ut * ct};
    };
    tc.source = [=](Point2 x) {
        const double r = norm(x);
        if (r == 0.0) return 0.0;
        return -al * std::pow(std::abs(al), p - 2.0) * (al - 1.0) * (p - 2.0) *
               std::pow(r, p * al - al - p) * std::sin(al * polar_angle(x));
    };
    const auto grad = tc.exact_gradient;
    tc.neumann_flux = [=](Point2 x, Vec2 n) {
        const Vec2 g = grad(x);
        return std::pow(norm(g), p - 2.0) * dot(g, n);
    };
}

}  // namespace

TestCase make_testcase(const std::string& name, RadialOrigin origin, double p) {
    TestCase tc;
    tc.name = name;
    tc.origin = origin == RadialOrigin::Center ? Point2{0.5, 0.5} : Point2{0.0, 0.0};
    if (name == "TC1" || name == "TC2" || name == "TC4") {
        tc.p = name == "TC4" ? 20.0 : 4.0;
        tc.sigma = name == "TC1" ? 0.0 : 7.0;
        tc.has_exact = true;
        radial_power_case(tc);
    } else if (name == "TC3") {
        tc.p = 4.0;
        tc.a = 0.3;
        tc.has_exact = true;
        annulus_case(tc);
    } else if (name == "TC5") {
        tc.p = 4.0;
        tc.alpha = 2.0;
        tc.domain = Domain::LShape;
        tc.lshape_boundary = mesh::LShapeBoundary::MixedReentrantDirichlet;
        tc.origin = {};
        tc.has_exact = true;
        corner_case(tc);
    } else if (name == "TC6") {
        tc.p = p > 0.0 ? p : 5.0;
        tc.domain = Domain::LShape;
        tc.lshape_boundary = mesh::LShapeBoundary::AllDirichlet;
        tc.origin = {};
        tc.source = [](Point2) { return 2.0; };
    } else {
        throw InvalidParameter("unknown test case '" + name + "' (expected TC1..TC6)");
    }
    PLAPFLOW_REQUIRE(tc.p > 2.0, InvalidParameter, "make_testcase: p must exceed 2");
    tc.gamma = tc.p / (tc.p - 2.0);
    return tc;
}

std::shared_ptr<const mesh::QuadMesh> make_mesh(const TestCase& tc, int n) {
    if (tc.domain == Domain::LShape) return std::make_shared<const mesh::QuadMesh>(mesh::build_lshape_quad(n, tc.lshape_boundary));
    return std::make_shared<const mesh::QuadMesh>(mesh::build_unit_square_quad(n, mesh::BoundaryKind::Dirichlet));
}

flow::Problem make_problem(const TestCase& tc, int n) {
    flow::Problem pr;
    pr.mesh = make_mesh(tc, n);
    pr.params = tc.params();
    pr.source = tc.source;
    pr.neumann_flux = tc.neumann_flux;
    if (tc.has_exact) pr.dirichlet_datum = tc.exact;
    return pr;
}

namespace {

template <typename PointFn>
void for_each_point(const mesh::QuadMesh& mesh, std::span<const double> u_h, PointFn&& fn) {
    PLAPFLOW_REQUIRE(u_h.size() == mesh.num_vertices(), InvalidParameter, "error norm: field has wrong length");
    const auto rule = fem::gauss_quad(3);
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const auto& vs = mesh.cells[k];
        for (const auto& pd : fem::cell_points(mesh, k, rule)) {
            double u = 0.0;
            Vec2 g{};
            for (int a = 0; a < 4; ++a) {
                u += pd.shape[a] * u_h[vs[a]];
                g = g + u_h[vs[a]] * pd.grad[a];
            }
            fn(pd, u, g);
        }
    }
}

}  // namespace

double error_Lp(const mesh::QuadMesh& mesh, std::span<const double> u_h, const fem::ScalarFunction& exact, double p) {
    PLAPFLOW_REQUIRE(p >= 1.0, InvalidParameter, "error_Lp: p must be >= 1");
    double sum = 0.0;
    for_each_point(mesh, u_h, [&](const fem::PointData& pd, double u, Vec2) {
        sum += pd.jxw * std::pow(std::abs(u - exact(pd.x)), p);
    });
    return std::pow(sum, 1.0 / p);
}

double error_W1p(const mesh::QuadMesh& mesh, std::span<const double> u_h, const GradientFunction& exact_grad,
                 double p) {
    PLAPFLOW_REQUIRE(p >= 1.0, InvalidParameter, "error_W1p: p must be >= 1");
    double sum = 0.0;
    for_each_point(mesh, u_h, [&](const fem::PointData& pd, double, Vec2 g) {
        sum += pd.jxw * std::pow(norm(g - exact_grad(pd.x)), p);
    });
    return std::pow(sum, 1.0 / p);
}

double error_quasinorm(const mesh::QuadMesh& mesh, std::span<const double> u_h, const GradientFunction& exact_grad,
                       double p) {
    PLAPFLOW_REQUIRE(p >= 2.0, InvalidParameter, "error_quasinorm: p must be >= 2");
    double sum = 0.0;
    for_each_point(mesh, u_h, [&](const fem::PointData& pd, double, Vec2 g) {
        const Vec2 ge = exact_grad(pd.x);
        const double e = norm(ge - g);
        sum += pd.jxw * std::pow(norm(ge) + e, p - 2.0) * e * e;
    });
    return std::sqrt(sum);
}

double fit_rate(std::span<const double> h, std::span<const double> err, int window) {
    PLAPFLOW_REQUIRE(h.size() == err.size(), InvalidParameter, "fit_rate: size mismatch");
    PLAPFLOW_REQUIRE(h.size() >= 2 && window >= 2, InvalidParameter, "fit_rate: need at least two levels");
    const std::size_t m = std::min<std::size_t>(h.size(), static_cast<std::size_t>(window));
    const std::size_t first = h.size() - m;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = first; i < h.size(); ++i) {
        if (!(err[i] > 0.0) || !(h[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double x = std::log(h[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(m);
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable convergence_study(const TestCase& tc, const StudyConfig& config, const LevelCallback& on_level) {
    PLAPFLOW_REQUIRE(config.levels >= 2, InvalidParameter, "convergence_study: need at least two levels");
    PLAPFLOW_REQUIRE(config.n0 >= 1, InvalidParameter, "convergence_study: n0 must be >= 1");
    ConvergenceTable table;
    table.case_name = tc.name;
    for (int level = 0; level < config.levels; ++level) {
        const int n = config.n0 << level;
        ErrorReport rep;
        rep.level = level;
        const auto start = std::chrono::steady_clock::now();
        flow::RunResult run;
        try {
            const flow::Discretization disc(make_problem(tc, n));
            rep.h = disc.mesh().h;
            rep.dofs = disc.mesh().num_vertices() + disc.mesh().num_cells();
            run = flow::run_to_steady(disc, flow::initial_state(disc, config.c0), config.stop, config.time,
                                      config.newton);
            rep.steps = run.accepted_steps;
            rep.newton_total = run.newton_total;
            rep.krylov_avg = run.krylov_per_newton();
            rep.steady = run.steady;
            rep.final_time = run.state.t;
            rep.steady_residual = flow::steady_residual(disc, run.state);
            if (tc.has_exact) {
                rep.err_Lp = error_Lp(disc.mesh(), run.state.u, tc.exact, tc.p);
                rep.err_W1p = error_W1p(disc.mesh(), run.state.u, tc.exact_gradient, tc.p);
                rep.err_quasi = error_quasinorm(disc.mesh(), run.state.u, tc.exact_gradient, tc.p);
            }
            if (!run.steady) rep.failure = "steady state not reached by t = " + std::to_string(run.state.t);
        } catch (const Error& e) {
            rep.failure = e.what();
        }
        rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_level) on_level(rep, run);
        table.levels.push_back(rep);
    }

    std::vector<double> h, lp, w1p, quasi;
    for (const auto& r : table.levels) {
        if (!r.failure.empty()) continue;
        h.push_back(r.h);
        lp.push_back(r.err_Lp);
        w1p.push_back(r.err_W1p);
        quasi.push_back(r.err_quasi);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool fit = tc.has_exact && h.size() >= 2;
    table.rate_Lp = fit ? fit_rate(h, lp, config.rate_window) : nan;
    table.rate_W1p = fit ? fit_rate(h, w1p, config.rate_window) : nan;
    table.rate_quasi = fit ? fit_rate(h, quasi, config.rate_window) : nan;
    return table;
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
    out << "level,h,dofs,err_Lp,err_W1p,err_quasi,steps,newton_total,krylov_avg\n";
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : table.levels) {
        out << r.level << ',' << r.h << ',' << r.dofs << ',' << r.err_Lp << ',' << r.err_W1p << ',' << r.err_quasi
            << ',' << r.steps << ',' << r.newton_total << ',' << r.krylov_avg << '\n';
    }
    out.precision(old);
}

}  // namespace plapflow::plap
