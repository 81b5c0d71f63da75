#include "plapflow/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "plapflow/error.hpp"
#include "plapflow/krylov.hpp"
#include "plapflow/quadrature.hpp"

namespace plapflow::discrete {

namespace {

struct TriangleGeometry {
    double area = 0.0;
    std::array<Vec2, 3> grad{};  // P1 basis gradients
};

TriangleGeometry triangle_geometry(const mesh::TriMesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    const Point2 p[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    TriangleGeometry g;
    const double twice = cross(p[1] - p[0], p[2] - p[0]);
    g.area = 0.5 * twice;
    for (int i = 0; i < 3; ++i) {
        const Point2 a = p[(i + 1) % 3];
        const Point2 b = p[(i + 2) % 3];
        g.grad[i] = {(a.y - b.y) / twice, (b.x - a.x) / twice};
    }
    return g;
}

Vec2 edge_direction(const mesh::TriMesh& mesh, std::size_t e) {
    const auto [i, j] = mesh.edges[e];
    const Vec2 d = mesh.vertices[i] - mesh.vertices[j];
    return (1.0 / norm(d)) * d;
}

Vec2 p1_gradient(const TriangleGeometry& g, const std::array<Index, 3>& tri, std::span<const double> u) {
    Vec2 out{};
    for (int a = 0; a < 3; ++a) out = out + u[tri[a]] * g.grad[a];
    return out;
}

void require_balance(std::span<const double> s, const char* what) {
    double sum = 0.0;
    double abs_sum = 0.0;
    for (double v : s) {
        sum += v;
        abs_sum += std::abs(v);
    }
    if (std::abs(sum) > 1e-12 * std::max(1.0, abs_sum)) {
        throw IncompatibleSource(std::string(what) + ": sources do not sum to zero (imbalance " +
                                     std::to_string(sum) + ")",
                                 sum);
    }
}

std::vector<double> solve_floating(const linalg::CsrMatrix& m, std::span<const double> rhs) {
    linalg::KrylovConfig cfg;
    cfg.rtol = 1e-14;
    cfg.atol = 1e-300;
    cfg.max_iters = 20000;
    cfg.constant_nullspace = true;
    std::vector<double> x(rhs.size(), 0.0);
    linalg::krylov_solve(m, rhs, x, cfg);
    linalg::remove_mean(x);
    return x;
}

double metabolic(double c, const GraphParams& p) { return p.nu / p.gamma * std::pow(c, p.gamma); }

}  // namespace

void TriGraph::validate() const {
    PLAPFLOW_REQUIRE(mesh != nullptr, InvalidParameter, "TriGraph: missing mesh");
    PLAPFLOW_REQUIRE(conductivity.size() == mesh->num_edges(), InvalidParameter,
                     "TriGraph: one conductivity per edge required");
    PLAPFLOW_REQUIRE(source.size() == mesh->num_vertices(), InvalidParameter,
                     "TriGraph: one source per vertex required");
    PLAPFLOW_REQUIRE(r >= 0.0, InvalidParameter, "TriGraph: r must be nonnegative");
    PLAPFLOW_REQUIRE(std::all_of(conductivity.begin(), conductivity.end(), [](double c) { return c >= 0.0; }),
                     InvalidParameter, "TriGraph: conductivities must be nonnegative");
}

double interior_diamond_area(const mesh::TriMesh& mesh) { return std::numbers::sqrt3 * mesh.h * mesh.h / 6.0; }

std::vector<double> diamond_areas(const mesh::TriMesh& mesh) {
    std::vector<double> out(mesh.num_edges());
    for (std::size_t e = 0; e < out.size(); ++e) out[e] = mesh::diamond_geometry(mesh, e).area;
    return out;
}

linalg::CsrMatrix kirchhoff_matrix(const TriGraph& graph, KirchhoffWeights weights) {
    graph.validate();
    const auto& m = *graph.mesh;
    std::vector<double> w(m.num_edges(), 1.0);
    if (weights == KirchhoffWeights::Diamond) {
        const double full = interior_diamond_area(m);
        w = diamond_areas(m);
        for (double& v : w) v /= full;
    }
    std::vector<linalg::Triplet> trips;
    trips.reserve(4 * m.num_edges());
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        const auto [i, j] = m.edges[e];
        const double k = (graph.conductivity[e] + graph.r) * w[e] / m.h;
        trips.push_back({i, i, k});
        trips.push_back({j, j, k});
        trips.push_back({i, j, -k});
        trips.push_back({j, i, -k});
    }
    return linalg::CsrMatrix::from_triplets(m.num_vertices(), m.num_vertices(), std::move(trips), true);
}

std::vector<double> kirchhoff_solve(const TriGraph& graph, KirchhoffWeights weights) {
    const auto l = kirchhoff_matrix(graph, weights);
    require_balance(graph.source, "kirchhoff_solve");
    if (std::all_of(graph.source.begin(), graph.source.end(), [](double s) { return s == 0.0; })) {
        return std::vector<double>(graph.source.size(), 0.0);
    }
    return solve_floating(l, graph.source);
}

double kirchhoff_residual(const TriGraph& graph, std::span<const double> u, KirchhoffWeights weights) {
    const auto l = kirchhoff_matrix(graph, weights);
    const auto lu = l * u;
    double worst = 0.0;
    for (std::size_t i = 0; i < lu.size(); ++i) worst = std::max(worst, std::abs(lu[i] - graph.source[i]));
    return worst;
}

std::vector<double> hat_loads(const mesh::TriMesh& mesh, const fem::ScalarFunction& s) {
    const auto rule = fem::triangle_rule_degree2();
    std::vector<double> loads(mesh.num_vertices(), 0.0);
    for (const auto& tri : mesh.triangles) {
        const Point2 p0 = mesh.vertices[tri[0]];
        const Point2 e1 = mesh.vertices[tri[1]] - p0;
        const Point2 e2 = mesh.vertices[tri[2]] - p0;
        const double jac = std::abs(cross(e1, e2));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto [xi, eta] = rule.points[q];
            const double f = s(p0 + xi * e1 + eta * e2) * rule.weights[q] * jac;
            loads[tri[0]] += f * (1.0 - xi - eta);
            loads[tri[1]] += f * xi;
            loads[tri[2]] += f * eta;
        }
    }
    return loads;
}

std::vector<double> project_sources(const mesh::TriMesh& mesh, const fem::ScalarFunction& s) {
    auto out = hat_loads(mesh, s);
    const double scale = std::numbers::sqrt3 / mesh.h;
    for (double& v : out) v *= scale;
    return out;
}

std::vector<double> loads_from_sources(const mesh::TriMesh& mesh, std::span<const double> sources) {
    std::vector<double> out(sources.begin(), sources.end());
    const double scale = mesh.h / std::numbers::sqrt3;
    for (double& v : out) v *= scale;
    return out;
}

double integrate(const mesh::TriMesh& mesh, const fem::ScalarFunction& s) {
    const auto rule = fem::triangle_rule_degree2();
    double sum = 0.0;
    for (const auto& tri : mesh.triangles) {
        const Point2 p0 = mesh.vertices[tri[0]];
        const Point2 e1 = mesh.vertices[tri[1]] - p0;
        const Point2 e2 = mesh.vertices[tri[2]] - p0;
        const double jac = std::abs(cross(e1, e2));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            sum += s(p0 + rule.points[q].x * e1 + rule.points[q].y * e2) * rule.weights[q] * jac;
        }
    }
    return sum;
}

double discrete_energy(const TriGraph& graph, std::span<const double> u, const GraphParams& params) {
    graph.validate();
    const auto& m = *graph.mesh;
    double sum = 0.0;
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        const auto [i, j] = m.edges[e];
        const double du = (u[j] - u[i]) / m.h;
        const double c = graph.conductivity[e];
        sum += (c + graph.r) * du * du + metabolic(c, params);
    }
    return m.h * sum;
}

double rescaled_energy(const TriGraph& graph, std::span<const double> u, const GraphParams& params) {
    graph.validate();
    const auto& m = *graph.mesh;
    const auto vol = diamond_areas(m);
    double sum = 0.0;
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        const auto [i, j] = m.edges[e];
        const double du = (u[i] - u[j]) / m.h;
        const double c = graph.conductivity[e];
        sum += vol[e] * (2.0 * (c + graph.r) * du * du + metabolic(c, params));
    }
    return sum;
}

DiamondFields diamond_fields(const mesh::TriMesh& mesh, std::span<const double> conductivity) {
    PLAPFLOW_REQUIRE(conductivity.size() == mesh.num_edges(), InvalidParameter,
                     "diamond_fields: one conductivity per edge required");
    DiamondFields f;
    f.q.assign(conductivity.begin(), conductivity.end());
    f.x.resize(mesh.num_edges());
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) f.x[e] = edge_direction(mesh, e);
    f.z.resize(mesh.num_triangles());
    f.d.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& te = mesh.triangle_edges[t];
        const double a = conductivity[te[0]];
        const double b = conductivity[te[1]];
        const double c = conductivity[te[2]];
        f.z[t] = (a + b + c) / 3.0;
        f.d[t] = std::max({std::abs(a - b), std::abs(b - c), std::abs(a - c)});
    }
    return f;
}

SemiDiscreteResult semidiscrete_energy(const mesh::TriMesh& mesh, const PiecewiseConstant& c, double r,
                                       std::span<const double> loads, const GraphParams& params) {
    const bool diamond = c.layout == FieldLayout::PerDiamond;
    PLAPFLOW_REQUIRE(c.values.size() == (diamond ? mesh.num_edges() : mesh.num_triangles()), InvalidParameter,
                     "semidiscrete_energy: field size does not match its layout");
    PLAPFLOW_REQUIRE(loads.size() == mesh.num_vertices(), InvalidParameter,
                     "semidiscrete_energy: one load per vertex required");
    PLAPFLOW_REQUIRE(std::all_of(c.values.begin(), c.values.end(), [](double v) { return v >= 0.0; }),
                     InvalidParameter, "semidiscrete_energy: c must be nonnegative");
    require_balance(loads, "semidiscrete_energy");

    std::vector<Vec2> x(mesh.num_edges());
    for (std::size_t e = 0; e < x.size(); ++e) x[e] = edge_direction(mesh, e);
    std::vector<TriangleGeometry> geo(mesh.num_triangles());
    for (std::size_t t = 0; t < geo.size(); ++t) geo[t] = triangle_geometry(mesh, t);

    std::vector<linalg::Triplet> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& g = geo[t];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                double k = 0.0;
                if (diamond) {
                    for (const Index e : mesh.triangle_edges[t]) {
                        const double ce = c.values[e] + r;
                        k += 2.0 * ce * (g.area / 3.0) * dot(x[e], g.grad[a]) * dot(x[e], g.grad[b]);
                    }
                } else {
                    k = (c.values[t] + r) * g.area * dot(g.grad[a], g.grad[b]);
                }
                trips.push_back({tri[a], tri[b], k});
            }
        }
    }
    const auto stiffness =
        linalg::CsrMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), std::move(trips), true);

    SemiDiscreteResult res;
    if (std::all_of(loads.begin(), loads.end(), [](double v) { return v == 0.0; })) {
        res.u.assign(mesh.num_vertices(), 0.0);
    } else {
        res.u = solve_floating(stiffness, loads);
    }

    double grad_sq = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& g = geo[t];
        const Vec2 grad = p1_gradient(g, mesh.triangles[t], res.u);
        grad_sq += g.area * dot(grad, grad);
        for (const Index e : mesh.triangle_edges[t]) {
            const double ce = diamond ? c.values[e] : c.values[t];
            const double xg = dot(x[e], grad);
            res.kinetic += (g.area / 3.0) * 2.0 * (ce + r) * xg * xg;
            res.metabolic += (g.area / 3.0) * metabolic(ce, params);
        }
    }
    res.energy = res.kinetic + res.metabolic;
    res.grad_l2 = std::sqrt(grad_sq);
    return res;
}

double verify_xx_identity(const mesh::TriMesh& mesh, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Vec2> x(mesh.num_edges());
    for (std::size_t e = 0; e < x.size(); ++e) x[e] = edge_direction(mesh, e);
    std::vector<double> u(mesh.num_vertices());
    std::vector<double> v(mesh.num_vertices());
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        for (auto& val : u) val = dist(rng);
        for (auto& val : v) val = dist(rng);
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const auto g = triangle_geometry(mesh, t);
            const Vec2 gu = p1_gradient(g, mesh.triangles[t], u);
            const Vec2 gv = p1_gradient(g, mesh.triangles[t], v);
            double lhs = 0.0;
            for (const Index e : mesh.triangle_edges[t]) lhs += (g.area / 3.0) * dot(x[e], gu) * dot(x[e], gv);
            const double rhs = 0.5 * g.area * dot(gu, gv);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

GapBound qz_gap(const mesh::TriMesh& mesh, std::span<const double> conductivity) {
    const auto f = diamond_fields(mesh, conductivity);
    GapBound out;
    double max_d = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        for (const Index e : mesh.triangle_edges[t]) out.gap = std::max(out.gap, std::abs(f.q[e] - f.z[t]));
        max_d = std::max(max_d, f.d[t]);
    }
    out.bound = 2.0 / 3.0 * max_d;
    return out;
}

EnergyGap energy_gap(const TriGraph& graph, const GraphParams& params) {
    graph.validate();
    PLAPFLOW_REQUIRE(params.gamma >= 1.0, InvalidParameter, "energy_gap: requires gamma >= 1");
    const auto& m = *graph.mesh;
    const auto loads = loads_from_sources(m, graph.source);
    const auto f = diamond_fields(m, graph.conductivity);
    const auto eq = semidiscrete_energy(m, {FieldLayout::PerDiamond, f.q}, graph.r, loads, params);
    const auto ez = semidiscrete_energy(m, {FieldLayout::PerTriangle, f.z}, graph.r, loads, params);
    const double c_max = *std::max_element(graph.conductivity.begin(), graph.conductivity.end());
    const double max_d = f.d.empty() ? 0.0 : *std::max_element(f.d.begin(), f.d.end());
    EnergyGap out;
    out.energy_q = eq.energy;
    out.energy_z = ez.energy;
    out.gap = std::abs(eq.energy - ez.energy);
    out.bound = 2.0 / 3.0 * max_d *
                (2.0 * eq.grad_l2 * ez.grad_l2 + m.area() * params.nu * std::pow(c_max, params.gamma - 1.0));
    return out;
}

SourceBound source_bound(const mesh::TriMesh& mesh, const fem::ScalarFunction& s) {
    SourceBound out;
    for (double v : project_sources(mesh, s)) out.sum_squares += v * v;
    out.integral_squared = integrate(mesh, [&](Point2 p) {
        const double v = s(p);
        return v * v;
    });
    out.single_triangle_constant = 3.0 * std::numbers::sqrt3 / 8.0;
    out.full_hat_constant = 9.0 * std::numbers::sqrt3 / 4.0;
    return out;
}

GraphFlowResult discrete_gradient_flow(const TriGraph& graph, const GraphFlowConfig& config) {
    graph.validate();
    PLAPFLOW_REQUIRE(config.dt > 0.0 && config.dt_min > 0.0 && config.steps >= 0, InvalidParameter,
                     "discrete_gradient_flow: need dt > 0, dt_min > 0, steps >= 0");
    PLAPFLOW_REQUIRE(config.params.nu >= 0.0 && config.params.gamma > 0.0, InvalidParameter,
                     "discrete_gradient_flow: need nu >= 0 and gamma > 0");
    const auto& m = *graph.mesh;
    const auto& p = config.params;

    TriGraph g = graph;
    auto u = kirchhoff_solve(g, KirchhoffWeights::Plain);
    double e = discrete_energy(g, u, p);
    GraphFlowResult res;
    res.times.push_back(0.0);
    res.energies.push_back(e);
    res.conductivities.push_back(g.conductivity);

    double t = 0.0;
    double dt = config.dt;
    for (int step = 0; step < config.steps;) {
        if (dt < config.dt_min) {
            throw TimeStepUnderflow("discrete_gradient_flow: dt fell below dt_min", t, dt);
        }
        TriGraph trial = g;
        bool negative = false;
        for (std::size_t k = 0; k < m.num_edges(); ++k) {
            const auto [i, j] = m.edges[k];
            const double du = (u[j] - u[i]) / m.h;
            const double c = g.conductivity[k];
            double decay = 0.0;
            if (c > 0.0) {
                decay = p.nu * std::pow(c, p.gamma - 2.0);
            } else if (p.gamma == 2.0) {
                decay = p.nu;
            }
            const double next = (c + dt * du * du) / (1.0 + dt * decay);
            if (!(next >= 0.0) || !std::isfinite(next)) negative = true;
            trial.conductivity[k] = next;
        }
        if (!negative) {
            auto u_next = kirchhoff_solve(trial, KirchhoffWeights::Plain);
            const double e_next = discrete_energy(trial, u_next, p);
            if (e_next <= e + 1e-12 * std::max(1.0, std::abs(e))) {
                g = std::move(trial);
                u = std::move(u_next);
                e = e_next;
                t += dt;
                ++step;
                res.times.push_back(t);
                res.energies.push_back(e);
                res.conductivities.push_back(g.conductivity);
                dt = std::min(2.0 * dt, config.dt);
                continue;
            }
        }
        ++res.rejected;
        dt *= 0.5;
    }
    return res;
}

std::vector<RefinementRow> refinement_study(const fem::ScalarFunction& c, const fem::ScalarFunction& s,
                                            const RefinementConfig& config) {
    PLAPFLOW_REQUIRE(config.levels >= 2, InvalidParameter, "refinement_study: needs at least two levels");
    PLAPFLOW_REQUIRE(config.reference_extra >= 1, InvalidParameter, "refinement_study: reference_extra must be >= 1");
    PLAPFLOW_REQUIRE(config.r > 0.0, InvalidParameter, "refinement_study: r must be positive");

    const auto balanced_loads = [&](const mesh::TriMesh& m) {
        auto loads = hat_loads(m, s);
        const auto mass = hat_loads(m, [](Point2) { return 1.0; });
        double total = 0.0;
        for (double v : loads) total += v;
        const double mean = total / m.area();
        for (std::size_t i = 0; i < loads.size(); ++i) loads[i] -= mean * mass[i];
        return loads;
    };
    const auto sample_triangles = [&](const mesh::TriMesh& m) {
        std::vector<double> out(m.num_triangles());
        for (std::size_t t = 0; t < out.size(); ++t) {
            const auto& tri = m.triangles[t];
            const Point2 centroid =
                (1.0 / 3.0) * (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]);
            out[t] = std::max(0.0, c(centroid));
        }
        return out;
    };

    const auto fine = mesh::build_equilateral_tri(config.levels + config.reference_extra, config.base);
    const double e_ref = semidiscrete_energy(fine, {FieldLayout::PerTriangle, sample_triangles(fine)}, config.r,
                                             balanced_loads(fine), config.params)
                             .energy;

    std::vector<RefinementRow> rows;
    for (int level = 1; level <= config.levels; ++level) {
        auto m = std::make_shared<const mesh::TriMesh>(mesh::build_equilateral_tri(level, config.base));
        TriGraph g;
        g.mesh = m;
        g.r = config.r;
        g.conductivity.resize(m->num_edges());
        for (std::size_t e = 0; e < m->num_edges(); ++e) {
            const auto [i, j] = m->edges[e];
            g.conductivity[e] = std::max(0.0, c(0.5 * (m->vertices[i] + m->vertices[j])));
        }
        const auto loads = balanced_loads(*m);
        g.source.resize(loads.size());
        const double scale = std::numbers::sqrt3 / m->h;
        for (std::size_t i = 0; i < loads.size(); ++i) g.source[i] = scale * loads[i];
        // Sources summed to zero up to roundoff in the loads; remove that residue too.
        linalg::remove_mean(g.source);

        const auto u = kirchhoff_solve(g, KirchhoffWeights::Diamond);
        const auto f = diamond_fields(*m, g.conductivity);
        RefinementRow row;
        row.level = level;
        row.h = m->h;
        row.edges = m->num_edges();
        row.energy_bar = rescaled_energy(g, u, config.params);
        row.energy_z = semidiscrete_energy(*m, {FieldLayout::PerTriangle, f.z}, config.r,
                                           loads_from_sources(*m, g.source), config.params)
                           .energy;
        row.energy_ref = e_ref;
        row.gap_q = std::abs(row.energy_bar - e_ref);
        row.gap_z = std::abs(row.energy_z - e_ref);
        rows.push_back(row);
    }
    return rows;
}

void write_refinement_csv(std::ostream& out, std::span<const RefinementRow> rows) {
    out << "level,h,edges,E_bar,E_Z,E_ref,gap_Q,gap_Z\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.level << ',' << r.h << ',' << r.edges << ',' << r.energy_bar << ',' << r.energy_z << ','
            << r.energy_ref << ',' << r.gap_q << ',' << r.gap_z << '\n';
    }
}

void write_edge_list(std::ostream& out, const mesh::TriMesh& mesh, std::span<const double> conductivity) {
    PLAPFLOW_REQUIRE(conductivity.size() == mesh.num_edges(), InvalidParameter,
                     "write_edge_list: one conductivity per edge required");
    out << "edge,i,j,xi,yi,xj,yj,C\n";
    out.precision(17);
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const auto [i, j] = mesh.edges[e];
        const Point2 a = mesh.vertices[i];
        const Point2 b = mesh.vertices[j];
        out << e << ',' << i << ',' << j << ',' << a.x << ',' << a.y << ',' << b.x << ',' << b.y << ','
            << conductivity[e] << '\n';
    }
}

}  // namespace plapflow::discrete
