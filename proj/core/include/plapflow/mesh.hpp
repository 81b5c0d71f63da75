#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "plapflow/geometry.hpp"

namespace plapflow::mesh {

enum class BoundaryKind { Dirichlet, Neumann };

struct BoundaryEdge {
    std::array<Index, 2> v{};  // oriented so that the domain lies to the left
    BoundaryKind kind = BoundaryKind::Dirichlet;
    Vec2 normal{};  // outward unit normal
};

/// Conforming quadrilateral mesh. Cells are counterclockwise vertex quadruples.
struct QuadMesh {
    std::vector<Point2> vertices;
    std::vector<std::array<Index, 4>> cells;
    std::vector<BoundaryEdge> boundary_edges;
    double h = 0.0;

    [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
    [[nodiscard]] std::size_t num_cells() const { return cells.size(); }
    [[nodiscard]] double cell_area(std::size_t cell) const;
    [[nodiscard]] double area() const;
    [[nodiscard]] bool pure_neumann() const;
    /// Vertices lying on at least one Dirichlet edge.
    [[nodiscard]] std::vector<bool> dirichlet_vertices() const;
};

/// Unit square [0,1]^2 with n x n cells; every boundary edge gets `kind`.
QuadMesh build_unit_square_quad(int n, BoundaryKind kind = BoundaryKind::Dirichlet);

enum class LShapeBoundary {
    /// Re-entrant edges {0}x[-1,0] and [0,1]x{0} Dirichlet, the rest Neumann.
    MixedReentrantDirichlet,
    AllDirichlet,
};

/// L-shaped domain (-1,1)^2 \ [0,1)x(-1,0] with n cells per unit length.
QuadMesh build_lshape_quad(int n, LShapeBoundary boundary = LShapeBoundary::AllDirichlet);

/// Uniform refinement: every cell is split into four; coarse vertices keep their indices.
QuadMesh refine(const QuadMesh& coarse);

/// Positive Jacobian determinant at all four corners of every cell.
bool all_cells_convex(const QuadMesh& mesh);

// ---------------------------------------------------------------------------

struct TriMesh {
    std::vector<Point2> vertices;
    std::vector<std::array<Index, 3>> triangles;  // counterclockwise
    std::vector<std::array<Index, 2>> edges;      // (i, j) with i < j
    std::vector<std::array<Index, 2>> edge_to_triangles;  // second entry -1 on the boundary
    std::vector<std::array<Index, 3>> triangle_edges;     // edge k is opposite local vertex k
    double h = 0.0;

    [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
    [[nodiscard]] std::size_t num_edges() const { return edges.size(); }
    [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }
    [[nodiscard]] bool is_boundary_edge(std::size_t e) const { return edge_to_triangles[e][1] < 0; }
    [[nodiscard]] double triangle_area() const;  // sqrt(3)/4 h^2
    [[nodiscard]] double area() const;
    /// Neighbouring vertices through an edge, with the connecting edge id.
    [[nodiscard]] std::vector<std::vector<std::array<Index, 2>>> vertex_neighbours() const;
};

enum class TriBase {
    Triangle,  // single equilateral triangle, edge length 1
    Rhombus,   // two triangles sharing an edge, 60/120 degree rhombus
};

/// Equilateral triangulation obtained by `refinements` rounds of midpoint refinement.
TriMesh build_equilateral_tri(int refinements, TriBase base = TriBase::Triangle);

struct DiamondInfo {
    double area = 0.0;
    bool boundary = false;  // only the half inside the single adjacent triangle
    /// One-third slices of the adjacent triangles: (triangle, area).
    std::vector<std::pair<Index, double>> halves;
};

/// Region of the triangulation nearest to `edge`. Boundary edges only get the
/// slice of their single adjacent triangle.
DiamondInfo diamond_geometry(const TriMesh& mesh, std::size_t edge);

}  // namespace plapflow::mesh
