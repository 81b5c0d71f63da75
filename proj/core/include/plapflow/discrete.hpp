#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "plapflow/fem.hpp"
#include "plapflow/mesh.hpp"
#include "plapflow/sparse.hpp"

namespace plapflow::discrete {

/// Equilateral triangulation seen as a graph with edge conductivities and vertex sources.
struct TriGraph {
    std::shared_ptr<const mesh::TriMesh> mesh;
    std::vector<double> conductivity;  // per edge, >= 0
    std::vector<double> source;        // per vertex
    double r = 1.0;

    /// Throws InvalidParameter on size mismatch, negative conductivity or r < 0.
    void validate() const;
};

/// Coefficients of the metabolic term nu/gamma C^gamma.
struct GraphParams {
    double nu = 1.0;
    double gamma = 2.0;
};

enum class KirchhoffWeights {
    /// -sum_j (C_ij + r)(U_j - U_i)/h = S_i
    Plain,
    /// Same with each edge weighted by its diamond area over the interior one
    /// (boundary edges count one half). This is the law whose solution is the
    /// nodal trace of the X(x)X finite element solve with c = Q[C].
    Diamond,
};

/// Interior diamond area sqrt(3) h^2 / 6.
double interior_diamond_area(const mesh::TriMesh& mesh);
/// Area of the diamond attached to every edge.
std::vector<double> diamond_areas(const mesh::TriMesh& mesh);

/// Graph Laplacian with edge weights (C + r) w_e / h. L * 1 = 0 exactly.
linalg::CsrMatrix kirchhoff_matrix(const TriGraph& graph, KirchhoffWeights weights = KirchhoffWeights::Plain);

/// Zero-mean potentials. Throws IncompatibleSource when |sum S_i| > 1e-12 max(1, sum |S_i|).
std::vector<double> kirchhoff_solve(const TriGraph& graph, KirchhoffWeights weights = KirchhoffWeights::Plain);
/// max_i |(L U)_i - S_i|
double kirchhoff_residual(const TriGraph& graph, std::span<const double> u,
                          KirchhoffWeights weights = KirchhoffWeights::Plain);

/// int S psi_i with the degree-2 rule on every triangle.
std::vector<double> hat_loads(const mesh::TriMesh& mesh, const fem::ScalarFunction& s);
/// S_i = sqrt(3)/h int S psi_i.
std::vector<double> project_sources(const mesh::TriMesh& mesh, const fem::ScalarFunction& s);
/// Inverse scaling: int S psi_i = h / sqrt(3) S_i.
std::vector<double> loads_from_sources(const mesh::TriMesh& mesh, std::span<const double> sources);
/// int S over the triangulation with the same rule.
double integrate(const mesh::TriMesh& mesh, const fem::ScalarFunction& s);

/// E = h sum_e [(C + r)(dU/h)^2 + nu/gamma C^gamma]
double discrete_energy(const TriGraph& graph, std::span<const double> u, const GraphParams& params);
/// E_bar = sum_e vol_e [2 (C + r)(dU/h)^2 + nu/gamma C^gamma] with the per-edge diamond area.
double rescaled_energy(const TriGraph& graph, std::span<const double> u, const GraphParams& params);

struct DiamondFields {
    std::vector<double> q;  // per edge
    std::vector<double> z;  // per triangle, mean of its three edges
    std::vector<Vec2> x;    // per edge, unit direction
    std::vector<double> d;  // per triangle, max pairwise difference of its edge values
};
DiamondFields diamond_fields(const mesh::TriMesh& mesh, std::span<const double> conductivity);

enum class FieldLayout { PerDiamond, PerTriangle };

struct PiecewiseConstant {
    FieldLayout layout = FieldLayout::PerTriangle;
    std::vector<double> values;
};

struct SemiDiscreteResult {
    double energy = 0.0;
    double kinetic = 0.0;    // int 2 (c + r)|X . grad u|^2
    double metabolic = 0.0;  // int nu/gamma c^gamma
    double grad_l2 = 0.0;    // ||grad u||_{L2}
    std::vector<double> u;   // zero mean
};

/// P1 solve of 2 int (c + r) grad psi . (X(x)X) grad u = int S psi and the energy
/// int 2 (c + r)|X . grad u|^2 + nu/gamma c^gamma. A per-diamond field uses the
/// explicit X(x)X assembly, a per-triangle field the plain form with half the stiffness.
/// `loads` are the hat integrals int S psi_i.
SemiDiscreteResult semidiscrete_energy(const mesh::TriMesh& mesh, const PiecewiseConstant& c, double r,
                                       std::span<const double> loads, const GraphParams& params);

/// Largest |int_T grad u.(X(x)X) grad v - 1/2 int_T grad u.grad v| over all triangles
/// and `samples` random P1 pairs with nodal values in [-1, 1].
double verify_xx_identity(const mesh::TriMesh& mesh, int samples, std::uint64_t seed);

struct GapBound {
    double gap = 0.0;
    double bound = 0.0;
    [[nodiscard]] bool holds() const { return gap <= bound; }
};

/// (||Q - Z||_inf, 2/3 max_T D)
GapBound qz_gap(const mesh::TriMesh& mesh, std::span<const double> conductivity);

struct EnergyGap : GapBound {
    double energy_q = 0.0;
    double energy_z = 0.0;
};

/// |E[Q] - E[Z]| against 2/3 max D (2 ||grad u_Q|| ||grad u_Z|| + |Omega| nu ||C||_inf^{gamma-1}).
/// The graph sources are turned into hat loads. Requires gamma >= 1.
EnergyGap energy_gap(const TriGraph& graph, const GraphParams& params);

struct SourceBound {
    double sum_squares = 0.0;      // sum_i S_i^2
    double integral_squared = 0.0; // int S^2
    double single_triangle_constant = 0.0;  // 3 sqrt(3) / 8
    double full_hat_constant = 0.0;         // 9 sqrt(3) / 4
    [[nodiscard]] bool single_triangle_holds() const {
        return sum_squares <= single_triangle_constant * integral_squared;
    }
    [[nodiscard]] bool full_hat_holds() const { return sum_squares <= full_hat_constant * integral_squared; }
};

/// Evaluates sum S_i^2 against both candidate constants times int S^2.
SourceBound source_bound(const mesh::TriMesh& mesh, const fem::ScalarFunction& s);

struct GraphFlowConfig {
    double dt = 0.1;
    int steps = 100;
    double dt_min = 1e-12;
    GraphParams params;
};

struct GraphFlowResult {
    std::vector<double> times;
    std::vector<double> energies;  // unrescaled E after each accepted step, index 0 is the start
    std::vector<std::vector<double>> conductivities;
    int rejected = 0;
};

/// dC/dt = (dU/h)^2 - nu C^{gamma-1} on every edge with the plain Kirchhoff law.
/// Semi-implicit update C+ = (C + dt q) / (1 + dt nu C^{gamma-2}); a step that makes C
/// negative or increases E is rejected and dt halved. Throws TimeStepUnderflow below dt_min.
GraphFlowResult discrete_gradient_flow(const TriGraph& graph, const GraphFlowConfig& config);

struct RefinementRow {
    int level = 0;
    double h = 0.0;
    std::size_t edges = 0;
    double energy_bar = 0.0;  // E_bar[C] = E[Q[C]]
    double energy_z = 0.0;    // E[Z[C]]
    double energy_ref = 0.0;  // fine P1 solve with c sampled per triangle
    double gap_q = 0.0;       // |E_bar - E_ref|
    double gap_z = 0.0;       // |E[Z] - E_ref|
};

struct RefinementConfig {
    int levels = 4;
    int reference_extra = 2;
    mesh::TriBase base = mesh::TriBase::Rhombus;
    double r = 1.0;
    GraphParams params;
};

/// Samples c at edge midpoints on refinements 1..levels. The source is corrected
/// to zero discrete mean on every level.
std::vector<RefinementRow> refinement_study(const fem::ScalarFunction& c, const fem::ScalarFunction& s,
                                            const RefinementConfig& config);

/// CSV: level,h,edges,E_bar,E_Z,E_ref,gap_Q,gap_Z
void write_refinement_csv(std::ostream& out, std::span<const RefinementRow> rows);
/// CSV: edge,i,j,xi,yi,xj,yj,C
void write_edge_list(std::ostream& out, const mesh::TriMesh& mesh, std::span<const double> conductivity);

}  // namespace plapflow::discrete
