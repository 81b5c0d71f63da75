#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "plapflow/mesh.hpp"
#include "plapflow/quadrature.hpp"
#include "plapflow/sparse.hpp"

namespace plapflow::fem {

/// Coefficients of the conductance law with the regularized metabolic cost
/// (nu / gamma) (c^2 + eps)^{gamma/2}.
struct ModelParams {
    double r = 0.0;      // background permeability
    double nu = 1.0;     // metabolic constant
    double gamma = 2.0;  // metabolic exponent
    double eps = 0.0;    // regularization

    /// Throws InvalidParameter unless r >= 0, nu > 0, gamma > 0, eps >= 0.
    void validate() const;

    /// (c^2 + eps)^{(gamma-2)/2} c, the c-derivative of the cost divided by nu.
    [[nodiscard]] double rate(double c) const;
    /// nu (c^2 + eps)^{(gamma-2)/2}
    [[nodiscard]] double alpha(double c) const;
    /// nu (gamma-2) (c^2 + eps)^{(gamma-4)/2} c^2
    [[nodiscard]] double beta(double c) const;
    /// alpha + beta = d/dc [nu rate(c)], with the limits at c^2 + eps = 0 resolved.
    [[nodiscard]] double rate_derivative(double c) const;
    /// (nu / gamma) (c^2 + eps)^{gamma/2}
    [[nodiscard]] double metabolic_cost(double c) const;
    /// Lower bound nu (c^2+eps)^{(gamma-4)/2} (eps + (gamma-1) c^2) on alpha + beta.
    [[nodiscard]] double positivity_bound(double c) const;
    /// p = 2 gamma / (gamma - 1); requires gamma > 1.
    [[nodiscard]] double p_exponent() const;
};

/// Piecewise constant field, one value per cell.
struct FieldP0 {
    std::vector<double> values;
};

/// Continuous bilinear field, one value per vertex.
struct FieldQ1 {
    std::vector<double> values;
    std::vector<bool> dirichlet_mask;
};

/// Data of one quadrature point on a physical cell.
struct PointData {
    Point2 x;
    double jxw = 0.0;                  // |det J| times weight
    std::array<double, 4> shape{};     // bilinear shape values
    std::array<Vec2, 4> grad{};        // physical gradients
};

/// Evaluates the bilinear map of `cell` at every point of `rule`.
std::vector<PointData> cell_points(const mesh::QuadMesh& mesh, std::size_t cell, const QuadratureRule& rule);

/// Q1 potential space with Dirichlet condensation plus cached 2x2 Gauss data,
/// and the sparsity patterns of the stiffness (free x free) and coupling
/// (free x cell) matrices.
class QuadSpace {
public:
    QuadSpace(std::shared_ptr<const mesh::QuadMesh> mesh, std::vector<bool> dirichlet);
    /// Dirichlet set taken from the mesh boundary tags.
    explicit QuadSpace(std::shared_ptr<const mesh::QuadMesh> mesh);
    /// No Dirichlet condensation at all.
    static QuadSpace unconstrained(std::shared_ptr<const mesh::QuadMesh> mesh);

    [[nodiscard]] const mesh::QuadMesh& mesh() const { return *mesh_; }
    [[nodiscard]] std::shared_ptr<const mesh::QuadMesh> mesh_ptr() const { return mesh_; }
    [[nodiscard]] std::size_t num_cells() const { return mesh_->num_cells(); }
    [[nodiscard]] std::size_t num_vertices() const { return mesh_->num_vertices(); }
    [[nodiscard]] std::size_t num_free() const { return free_to_vertex_.size(); }
    [[nodiscard]] Index free_index(std::size_t vertex) const { return vertex_to_free_[vertex]; }
    [[nodiscard]] std::span<const Index> free_vertices() const { return free_to_vertex_; }
    [[nodiscard]] const std::vector<bool>& dirichlet() const { return dirichlet_; }
    /// No Dirichlet vertex: the potential is defined up to a constant.
    [[nodiscard]] bool floating() const { return free_to_vertex_.size() == mesh_->num_vertices(); }

    [[nodiscard]] const QuadratureRule& rule() const { return rule_; }
    [[nodiscard]] std::span<const PointData> points(std::size_t cell) const;
    [[nodiscard]] double cell_area(std::size_t cell) const { return areas_[cell]; }
    [[nodiscard]] std::span<const double> cell_areas() const { return areas_; }

    /// Restriction of a vertex vector to the free vertices.
    [[nodiscard]] std::vector<double> restrict_to_free(std::span<const double> full) const;
    /// full[v] += delta[free(v)]
    void add_free(std::span<const double> delta, std::span<double> full) const;

    // Patterns: values positions for local entries (-1 for condensed ones).
    [[nodiscard]] const linalg::CsrMatrix& stiffness_pattern() const { return stiffness_pattern_; }
    [[nodiscard]] const linalg::CsrMatrix& coupling_pattern() const { return coupling_pattern_; }
    [[nodiscard]] std::span<const std::ptrdiff_t, 16> stiffness_slots(std::size_t cell) const {
        return std::span<const std::ptrdiff_t, 16>(stiffness_slots_.data() + 16 * cell, 16);
    }
    [[nodiscard]] std::span<const std::ptrdiff_t, 4> coupling_slots(std::size_t cell) const {
        return std::span<const std::ptrdiff_t, 4>(coupling_slots_.data() + 4 * cell, 4);
    }

private:
    void build();

    std::shared_ptr<const mesh::QuadMesh> mesh_;
    std::vector<bool> dirichlet_;
    std::vector<Index> vertex_to_free_;
    std::vector<Index> free_to_vertex_;
    QuadratureRule rule_;
    std::vector<PointData> point_data_;
    std::vector<double> areas_;
    linalg::CsrMatrix stiffness_pattern_;
    linalg::CsrMatrix coupling_pattern_;
    std::vector<std::ptrdiff_t> stiffness_slots_;
    std::vector<std::ptrdiff_t> coupling_slots_;
};

using ScalarFunction = std::function<double(Point2)>;
/// Neumann datum evaluated at a boundary point with the outward unit normal.
using FluxFunction = std::function<double(Point2, Vec2)>;

/// C_ij = int (c + r) grad phi_i . grad phi_j over the free vertices.
/// Throws AssemblyError if c + r < 0 on some cell.
linalg::CsrMatrix assemble_stiffness(const QuadSpace& space, std::span<const double> c, double r);

/// Full-vertex product K(c) u without condensation (matrix-free).
std::vector<double> apply_stiffness(const QuadSpace& space, std::span<const double> c, double r,
                                    std::span<const double> u_full);

/// B_iK = -int_K grad u . grad phi_i, rows over free vertices, columns over cells.
linalg::CsrMatrix assemble_coupling(const QuadSpace& space, std::span<const double> u_full);

/// Entries (|K| / 2) (1/dt + alpha(c_K) + beta(c_K)) of the diagonal conductance block.
std::vector<double> assemble_a_diagonal(const QuadSpace& space, std::span<const double> c, const ModelParams& params,
                                        double dt);

/// Load vector over all vertices: int S phi_i dx + int_{Gamma_N} g_N phi_i ds.
/// Either function may be empty (treated as zero). Uses 3x3 Gauss in cells and
/// 3-point Gauss on edges.
std::vector<double> assemble_source(const QuadSpace& space, const ScalarFunction& source, const FluxFunction& flux);

/// Gradients of the bilinear interpolant at the cached quadrature points, cell-major.
std::vector<Vec2> eval_gradients(const QuadSpace& space, std::span<const double> u_full);

/// Per-cell integral of |grad u|^2 (exact for Q1 with the 2x2 rule).
std::vector<double> cell_gradient_energy(const QuadSpace& space, std::span<const double> u_full);

/// L2 projection onto piecewise constants (cell averages by 2x2 Gauss).
FieldP0 project_p0(const QuadSpace& space, const ScalarFunction& f);
/// Same for a field given by its values at the cached quadrature points (cell-major).
FieldP0 project_p0(const QuadSpace& space, std::span<const double> point_values);

/// Nodal interpolant.
std::vector<double> interpolate(const mesh::QuadMesh& mesh, const ScalarFunction& f);

/// int_Omega u_h dx.
double integrate(const QuadSpace& space, std::span<const double> u_full);
/// int_Omega f dx with the 3x3 Gauss rule used by assemble_source.
double integrate(const QuadSpace& space, const ScalarFunction& f);

}  // namespace plapflow::fem
