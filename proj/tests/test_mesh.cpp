#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "plapflow/error.hpp"
#include "plapflow/mesh.hpp"

using namespace plapflow;
using namespace plapflow::mesh;

TEST(QuadMesh, UnitSquareCounts) {
    const auto m = build_unit_square_quad(4);
    EXPECT_EQ(m.num_vertices(), 25u);
    EXPECT_EQ(m.num_cells(), 16u);
    EXPECT_EQ(m.boundary_edges.size(), 16u);
    EXPECT_DOUBLE_EQ(m.h, 0.25);
    EXPECT_NEAR(m.area(), 1.0, 1e-14);
    EXPECT_TRUE(all_cells_convex(m));
    EXPECT_FALSE(m.pure_neumann());
}

TEST(QuadMesh, NeumannSquareHasNoDirichletVertex) {
    const auto m = build_unit_square_quad(3, BoundaryKind::Neumann);
    EXPECT_TRUE(m.pure_neumann());
    for (bool d : m.dirichlet_vertices()) EXPECT_FALSE(d);
}

TEST(QuadMesh, BoundaryNormalsPointOutward) {
    const auto m = build_unit_square_quad(5);
    for (const auto& e : m.boundary_edges) {
        const Point2 mid = 0.5 * (m.vertices[e.v[0]] + m.vertices[e.v[1]]);
        const Point2 out = mid + 1e-3 * e.normal;
        const bool outside = out.x < 0.0 || out.x > 1.0 || out.y < 0.0 || out.y > 1.0;
        EXPECT_TRUE(outside);
        EXPECT_NEAR(norm(e.normal), 1.0, 1e-14);
        // domain on the left of the oriented edge
        const Vec2 t = m.vertices[e.v[1]] - m.vertices[e.v[0]];
        EXPECT_LT(cross(t, e.normal), 0.0);
    }
}

TEST(QuadMesh, LShapeCountsAndArea) {
    for (int n : {1, 2, 5}) {
        const auto m = build_lshape_quad(n);
        EXPECT_EQ(m.num_cells(), static_cast<std::size_t>(3 * n * n));
        EXPECT_NEAR(m.area(), 3.0, 1e-13);
        EXPECT_TRUE(all_cells_convex(m));
        for (const auto& v : m.vertices) EXPECT_FALSE(v.x > 0.0 && v.y < 0.0);
    }
}

TEST(QuadMesh, LShapeMixedBoundaryTagsReentrantEdges) {
    const auto m = build_lshape_quad(4, LShapeBoundary::MixedReentrantDirichlet);
    int dirichlet = 0;
    for (const auto& e : m.boundary_edges) {
        const Point2 a = m.vertices[e.v[0]];
        const Point2 b = m.vertices[e.v[1]];
        const bool reentrant = (a.x == 0.0 && b.x == 0.0 && a.y <= 0.0 && b.y <= 0.0) ||
                               (a.y == 0.0 && b.y == 0.0 && a.x >= 0.0 && b.x >= 0.0);
        EXPECT_EQ(e.kind == BoundaryKind::Dirichlet, reentrant);
        dirichlet += e.kind == BoundaryKind::Dirichlet;
    }
    EXPECT_EQ(dirichlet, 8);
}

TEST(QuadMesh, RefineKeepsCoarseVerticesAndArea) {
    const auto coarse = build_lshape_quad(2);
    const auto fine = refine(coarse);
    EXPECT_EQ(fine.num_cells(), 4 * coarse.num_cells());
    EXPECT_EQ(fine.boundary_edges.size(), 2 * coarse.boundary_edges.size());
    for (std::size_t v = 0; v < coarse.num_vertices(); ++v) EXPECT_EQ(fine.vertices[v], coarse.vertices[v]);
    EXPECT_NEAR(fine.area(), coarse.area(), 1e-13);
    EXPECT_DOUBLE_EQ(fine.h, 0.5 * coarse.h);
    EXPECT_TRUE(all_cells_convex(fine));
    // same vertex set as building the finer mesh directly
    EXPECT_EQ(fine.num_vertices(), build_lshape_quad(4).num_vertices());
}

TEST(QuadMesh, RejectsNonPositiveSize) {
    EXPECT_THROW(build_unit_square_quad(0), InvalidParameter);
    EXPECT_THROW(build_lshape_quad(-1), InvalidParameter);
}

TEST(TriMesh, EquilateralCounts) {
    for (int k = 0; k <= 4; ++k) {
        const auto m = build_equilateral_tri(k, TriBase::Triangle);
        const std::size_t n = std::size_t{1} << k;
        EXPECT_EQ(m.num_triangles(), n * n);
        EXPECT_EQ(m.num_vertices(), (n + 1) * (n + 2) / 2);
        EXPECT_EQ(m.num_edges(), 3 * n * (n + 1) / 2);
        EXPECT_DOUBLE_EQ(m.h, 1.0 / static_cast<double>(n));
        EXPECT_NEAR(m.area(), std::sqrt(3.0) / 4.0, 1e-14);
    }
    const auto r = build_equilateral_tri(2, TriBase::Rhombus);
    EXPECT_EQ(r.num_triangles(), 32u);
    EXPECT_NEAR(r.area(), std::sqrt(3.0) / 2.0, 1e-14);
}

TEST(TriMesh, EdgesHaveLengthHAndConsistentAdjacency) {
    const auto m = build_equilateral_tri(3, TriBase::Rhombus);
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        const auto [i, j] = m.edges[e];
        EXPECT_LT(i, j);
        EXPECT_NEAR(norm(m.vertices[j] - m.vertices[i]), m.h, 1e-14);
        for (Index t : m.edge_to_triangles[e]) {
            if (t < 0) continue;
            const auto& te = m.triangle_edges[t];
            EXPECT_TRUE(te[0] == static_cast<Index>(e) || te[1] == static_cast<Index>(e) ||
                        te[2] == static_cast<Index>(e));
        }
    }
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles[t];
        // counterclockwise, and edge k is opposite local vertex k
        EXPECT_GT(cross(m.vertices[tri[1]] - m.vertices[tri[0]], m.vertices[tri[2]] - m.vertices[tri[0]]), 0.0);
        for (int k = 0; k < 3; ++k) {
            const auto [a, b] = m.edges[m.triangle_edges[t][k]];
            EXPECT_NE(a, tri[k]);
            EXPECT_NE(b, tri[k]);
        }
    }
}

TEST(TriMesh, BoundaryEdgeCount) {
    const auto m = build_equilateral_tri(3, TriBase::Triangle);
    std::size_t boundary = 0;
    for (std::size_t e = 0; e < m.num_edges(); ++e) boundary += m.is_boundary_edge(e);
    EXPECT_EQ(boundary, 3u * 8u);
}

TEST(TriMesh, DiamondGeometry) {
    const auto m = build_equilateral_tri(2, TriBase::Triangle);
    const double interior = std::sqrt(3.0) * m.h * m.h / 6.0;
    double total = 0.0;
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        const auto d = diamond_geometry(m, e);
        EXPECT_EQ(d.boundary, m.is_boundary_edge(e));
        EXPECT_NEAR(d.area, d.boundary ? 0.5 * interior : interior, 1e-15);
        EXPECT_EQ(d.halves.size(), d.boundary ? 1u : 2u);
        total += d.area;
    }
    // diamonds tile the domain
    EXPECT_NEAR(total, m.area(), 1e-14);
}

TEST(TriMesh, VertexNeighbours) {
    const auto m = build_equilateral_tri(3, TriBase::Triangle);
    const auto nbr = m.vertex_neighbours();
    std::size_t degree_sum = 0;
    for (const auto& list : nbr) {
        degree_sum += list.size();
        EXPECT_LE(list.size(), 6u);
    }
    EXPECT_EQ(degree_sum, 2 * m.num_edges());
}
