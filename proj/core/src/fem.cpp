#include "plapflow/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "plapflow/error.hpp"

namespace plapflow::fem {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void ModelParams::validate() const {
    PLAPFLOW_REQUIRE(r >= 0.0, InvalidParameter, "ModelParams: r must be >= 0");
    PLAPFLOW_REQUIRE(nu > 0.0, InvalidParameter, "ModelParams: nu must be > 0");
    PLAPFLOW_REQUIRE(gamma > 0.0, InvalidParameter, "ModelParams: gamma must be > 0");
    PLAPFLOW_REQUIRE(eps >= 0.0, InvalidParameter, "ModelParams: eps must be >= 0");
}

double ModelParams::rate(double c) const {
    const double s = c * c + eps;
    if (s == 0.0) return 0.0;
    return std::pow(s, 0.5 * (gamma - 2.0)) * c;
}

double ModelParams::alpha(double c) const {
    const double s = c * c + eps;
    if (s == 0.0) return gamma < 2.0 ? kInf : (gamma == 2.0 ? nu : 0.0);
    return nu * std::pow(s, 0.5 * (gamma - 2.0));
}

double ModelParams::beta(double c) const {
    const double s = c * c + eps;
    if (s == 0.0) return gamma < 2.0 ? -kInf : 0.0;
    return nu * (gamma - 2.0) * std::pow(s, 0.5 * (gamma - 4.0)) * c * c;
}

double ModelParams::rate_derivative(double c) const {
    const double s = c * c + eps;
    if (s == 0.0) {
        // limit of nu (gamma - 1) |c|^{gamma - 2}
        if (gamma > 2.0 || gamma == 1.0) return 0.0;
        if (gamma == 2.0) return nu;
        return gamma > 1.0 ? kInf : -kInf;
    }
    return nu * std::pow(s, 0.5 * (gamma - 4.0)) * (eps + (gamma - 1.0) * c * c);
}

double ModelParams::positivity_bound(double c) const { return rate_derivative(c); }

double ModelParams::metabolic_cost(double c) const {
    return nu / gamma * std::pow(c * c + eps, 0.5 * gamma);
}

double ModelParams::p_exponent() const {
    PLAPFLOW_REQUIRE(gamma > 1.0, InvalidParameter, "p_exponent: requires gamma > 1");
    return 2.0 * gamma / (gamma - 1.0);
}

std::vector<PointData> cell_points(const mesh::QuadMesh& mesh, std::size_t cell, const QuadratureRule& rule) {
    const auto& c = mesh.cells[cell];
    std::array<Point2, 4> xv;
    for (int a = 0; a < 4; ++a) xv[a] = mesh.vertices[c[a]];
    std::vector<PointData> out(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double xi = rule.points[q].x;
        const double eta = rule.points[q].y;
        const std::array<double, 4> n = {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
        const std::array<double, 4> dxi = {-(1 - eta), 1 - eta, eta, -eta};
        const std::array<double, 4> deta = {-(1 - xi), -xi, xi, 1 - xi};
        double j11 = 0, j12 = 0, j21 = 0, j22 = 0;
        Point2 x{};
        for (int a = 0; a < 4; ++a) {
            x = x + n[a] * xv[a];
            j11 += dxi[a] * xv[a].x;
            j12 += deta[a] * xv[a].x;
            j21 += dxi[a] * xv[a].y;
            j22 += deta[a] * xv[a].y;
        }
        const double det = j11 * j22 - j12 * j21;
        PLAPFLOW_REQUIRE(det > 0.0, InvalidParameter, "cell_points: degenerate cell " + std::to_string(cell));
        PointData& pd = out[q];
        pd.x = x;
        pd.jxw = det * rule.weights[q];
        pd.shape = n;
        for (int a = 0; a < 4; ++a) {
            // J^{-T} (dxi, deta)
            pd.grad[a] = {(j22 * dxi[a] - j21 * deta[a]) / det, (-j12 * dxi[a] + j11 * deta[a]) / det};
        }
    }
    return out;
}

QuadSpace::QuadSpace(std::shared_ptr<const mesh::QuadMesh> mesh, std::vector<bool> dirichlet)
    : mesh_(std::move(mesh)), dirichlet_(std::move(dirichlet)), rule_(gauss_quad(2)) {
    PLAPFLOW_REQUIRE(mesh_ != nullptr, InvalidParameter, "QuadSpace: null mesh");
    PLAPFLOW_REQUIRE(dirichlet_.size() == mesh_->num_vertices(), InvalidParameter,
                     "QuadSpace: Dirichlet mask has wrong length");
    build();
}

QuadSpace::QuadSpace(std::shared_ptr<const mesh::QuadMesh> mesh)
    : QuadSpace(mesh, mesh ? mesh->dirichlet_vertices() : std::vector<bool>{}) {}

QuadSpace QuadSpace::unconstrained(std::shared_ptr<const mesh::QuadMesh> mesh) {
    std::vector<bool> none(mesh->num_vertices(), false);
    return QuadSpace(std::move(mesh), std::move(none));
}

void QuadSpace::build() {
    const auto& m = *mesh_;
    vertex_to_free_.assign(m.num_vertices(), -1);
    free_to_vertex_.clear();
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        if (dirichlet_[v]) continue;
        vertex_to_free_[v] = static_cast<Index>(free_to_vertex_.size());
        free_to_vertex_.push_back(static_cast<Index>(v));
    }

    const std::size_t nq = rule_.points.size();
    point_data_.clear();
    point_data_.reserve(m.num_cells() * nq);
    areas_.assign(m.num_cells(), 0.0);
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        for (const auto& pd : cell_points(m, k, rule_)) {
            areas_[k] += pd.jxw;
            point_data_.push_back(pd);
        }
    }

    std::vector<linalg::Triplet> kt;
    std::vector<linalg::Triplet> bt;
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        const auto& cell = m.cells[k];
        for (int a = 0; a < 4; ++a) {
            const Index i = vertex_to_free_[cell[a]];
            if (i < 0) continue;
            bt.push_back({i, static_cast<Index>(k), 0.0});
            for (int b = 0; b < 4; ++b) {
                const Index j = vertex_to_free_[cell[b]];
                if (j >= 0) kt.push_back({i, j, 0.0});
            }
        }
    }
    stiffness_pattern_ = linalg::CsrMatrix::from_triplets(num_free(), num_free(), std::move(kt), true);
    coupling_pattern_ = linalg::CsrMatrix::from_triplets(num_free(), m.num_cells(), std::move(bt), false);

    stiffness_slots_.assign(16 * m.num_cells(), -1);
    coupling_slots_.assign(4 * m.num_cells(), -1);
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        const auto& cell = m.cells[k];
        for (int a = 0; a < 4; ++a) {
            const Index i = vertex_to_free_[cell[a]];
            if (i < 0) continue;
            coupling_slots_[4 * k + a] = coupling_pattern_.find(i, k);
            for (int b = 0; b < 4; ++b) {
                const Index j = vertex_to_free_[cell[b]];
                if (j >= 0) stiffness_slots_[16 * k + 4 * a + b] = stiffness_pattern_.find(i, j);
            }
        }
    }
}

std::span<const PointData> QuadSpace::points(std::size_t cell) const {
    const std::size_t nq = rule_.points.size();
    return {point_data_.data() + cell * nq, nq};
}

std::vector<double> QuadSpace::restrict_to_free(std::span<const double> full) const {
    std::vector<double> out(num_free());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = full[free_to_vertex_[i]];
    return out;
}

void QuadSpace::add_free(std::span<const double> delta, std::span<double> full) const {
    for (std::size_t i = 0; i < delta.size(); ++i) full[free_to_vertex_[i]] += delta[i];
}

namespace {

std::array<double, 16> local_stiffness(std::span<const PointData> pts) {
    std::array<double, 16> local{};
    for (const auto& pd : pts) {
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) local[4 * a + b] += pd.jxw * dot(pd.grad[a], pd.grad[b]);
        }
    }
    return local;
}

Vec2 gradient_at(const PointData& pd, const std::array<Index, 4>& cell, std::span<const double> u) {
    Vec2 g{};
    for (int a = 0; a < 4; ++a) g = g + u[cell[a]] * pd.grad[a];
    return g;
}

}  // namespace

linalg::CsrMatrix assemble_stiffness(const QuadSpace& space, std::span<const double> c, double r) {
    PLAPFLOW_REQUIRE(c.size() == space.num_cells(), InvalidParameter, "assemble_stiffness: c has wrong length");
    linalg::CsrMatrix k = space.stiffness_pattern();
    auto values = k.values();
    std::fill(values.begin(), values.end(), 0.0);
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        const double coeff = c[cell] + r;
        if (coeff < 0.0) {
            throw AssemblyError("assemble_stiffness: negative permeability c + r = " + std::to_string(coeff) +
                                    " on cell " + std::to_string(cell),
                                cell);
        }
        const auto local = local_stiffness(space.points(cell));
        const auto slots = space.stiffness_slots(cell);
        for (int e = 0; e < 16; ++e) {
            if (slots[e] >= 0) values[slots[e]] += coeff * local[e];
        }
    }
    return k;
}

std::vector<double> apply_stiffness(const QuadSpace& space, std::span<const double> c, double r,
                                    std::span<const double> u_full) {
    std::vector<double> out(space.num_vertices(), 0.0);
    const auto& mesh = space.mesh();
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        const auto local = local_stiffness(space.points(cell));
        const auto& vs = mesh.cells[cell];
        const double coeff = c[cell] + r;
        for (int a = 0; a < 4; ++a) {
            double sum = 0.0;
            for (int b = 0; b < 4; ++b) sum += local[4 * a + b] * u_full[vs[b]];
            out[vs[a]] += coeff * sum;
        }
    }
    return out;
}

linalg::CsrMatrix assemble_coupling(const QuadSpace& space, std::span<const double> u_full) {
    PLAPFLOW_REQUIRE(u_full.size() == space.num_vertices(), InvalidParameter, "assemble_coupling: u has wrong length");
    linalg::CsrMatrix b = space.coupling_pattern();
    auto values = b.values();
    std::fill(values.begin(), values.end(), 0.0);
    const auto& mesh = space.mesh();
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        const auto& vs = mesh.cells[cell];
        std::array<double, 4> local{};
        for (const auto& pd : space.points(cell)) {
            const Vec2 gu = gradient_at(pd, vs, u_full);
            for (int a = 0; a < 4; ++a) local[a] -= pd.jxw * dot(gu, pd.grad[a]);
        }
        const auto slots = space.coupling_slots(cell);
        for (int a = 0; a < 4; ++a) {
            if (slots[a] >= 0) values[slots[a]] = local[a];
        }
    }
    return b;
}

std::vector<double> assemble_a_diagonal(const QuadSpace& space, std::span<const double> c, const ModelParams& params,
                                        double dt) {
    PLAPFLOW_REQUIRE(dt > 0.0, InvalidParameter, "assemble_a_diagonal: dt must be > 0");
    std::vector<double> a(space.num_cells());
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = 0.5 * space.cell_area(k) * (1.0 / dt + params.rate_derivative(c[k]));
    }
    return a;
}

std::vector<double> assemble_source(const QuadSpace& space, const ScalarFunction& source, const FluxFunction& flux) {
    const auto& mesh = space.mesh();
    std::vector<double> f(space.num_vertices(), 0.0);
    if (source) {
        const QuadratureRule rule = gauss_quad(3);
        for (std::size_t cell = 0; cell < mesh.num_cells(); ++cell) {
            const auto& vs = mesh.cells[cell];
            for (const auto& pd : cell_points(mesh, cell, rule)) {
                const double s = source(pd.x);
                for (int a = 0; a < 4; ++a) f[vs[a]] += pd.jxw * s * pd.shape[a];
            }
        }
    }
    if (flux) {
        const QuadratureRule line = gauss_line(3);
        for (const auto& e : mesh.boundary_edges) {
            if (e.kind != mesh::BoundaryKind::Neumann) continue;
            const Point2 pa = mesh.vertices[e.v[0]];
            const Point2 pb = mesh.vertices[e.v[1]];
            const double len = norm(pb - pa);
            for (std::size_t q = 0; q < line.points.size(); ++q) {
                const double s = line.points[q].x;
                const Point2 x = (1.0 - s) * pa + s * pb;
                const double g = flux(x, e.normal) * line.weights[q] * len;
                f[e.v[0]] += g * (1.0 - s);
                f[e.v[1]] += g * s;
            }
        }
    }
    return f;
}

std::vector<Vec2> eval_gradients(const QuadSpace& space, std::span<const double> u_full) {
    std::vector<Vec2> out;
    out.reserve(space.num_cells() * space.rule().points.size());
    const auto& mesh = space.mesh();
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        for (const auto& pd : space.points(cell)) out.push_back(gradient_at(pd, mesh.cells[cell], u_full));
    }
    return out;
}

std::vector<double> cell_gradient_energy(const QuadSpace& space, std::span<const double> u_full) {
    std::vector<double> out(space.num_cells(), 0.0);
    const auto& mesh = space.mesh();
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        for (const auto& pd : space.points(cell)) {
            const Vec2 g = gradient_at(pd, mesh.cells[cell], u_full);
            out[cell] += pd.jxw * dot(g, g);
        }
    }
    return out;
}

FieldP0 project_p0(const QuadSpace& space, const ScalarFunction& f) {
    FieldP0 out{std::vector<double>(space.num_cells(), 0.0)};
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        double sum = 0.0;
        for (const auto& pd : space.points(cell)) sum += pd.jxw * f(pd.x);
        out.values[cell] = sum / space.cell_area(cell);
    }
    return out;
}

FieldP0 project_p0(const QuadSpace& space, std::span<const double> point_values) {
    const std::size_t nq = space.rule().points.size();
    PLAPFLOW_REQUIRE(point_values.size() == nq * space.num_cells(), InvalidParameter,
                     "project_p0: expected one value per quadrature point");
    FieldP0 out{std::vector<double>(space.num_cells(), 0.0)};
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        const auto pts = space.points(cell);
        double sum = 0.0;
        for (std::size_t q = 0; q < nq; ++q) sum += pts[q].jxw * point_values[cell * nq + q];
        out.values[cell] = sum / space.cell_area(cell);
    }
    return out;
}

std::vector<double> interpolate(const mesh::QuadMesh& mesh, const ScalarFunction& f) {
    std::vector<double> out(mesh.num_vertices());
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = f(mesh.vertices[v]);
    return out;
}

double integrate(const QuadSpace& space, std::span<const double> u_full) {
    double sum = 0.0;
    const auto& mesh = space.mesh();
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        const auto& vs = mesh.cells[cell];
        for (const auto& pd : space.points(cell)) {
            double u = 0.0;
            for (int a = 0; a < 4; ++a) u += pd.shape[a] * u_full[vs[a]];
            sum += pd.jxw * u;
        }
    }
    return sum;
}

double integrate(const QuadSpace& space, const ScalarFunction& f) {
    const QuadratureRule rule = gauss_quad(3);
    double sum = 0.0;
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        for (const auto& pd : cell_points(space.mesh(), cell, rule)) sum += pd.jxw * f(pd.x);
    }
    return sum;
}

}  // namespace plapflow::fem
