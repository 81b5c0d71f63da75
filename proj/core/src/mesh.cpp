#include "plapflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include "plapflow/error.hpp"

namespace plapflow::mesh {

namespace {

using EdgeKey = std::pair<Index, Index>;

EdgeKey make_key(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Collect the edges used by exactly one cell, oriented as in that cell.
void classify_boundary(QuadMesh& mesh, const std::function<BoundaryKind(Point2)>& kind_at) {
    std::map<EdgeKey, std::pair<int, std::array<Index, 2>>> count;
    for (const auto& cell : mesh.cells) {
        for (int k = 0; k < 4; ++k) {
            const Index a = cell[k];
            const Index b = cell[(k + 1) % 4];
            auto& entry = count[make_key(a, b)];
            ++entry.first;
            entry.second = {a, b};
        }
    }
    mesh.boundary_edges.clear();
    for (const auto& [key, entry] : count) {
        if (entry.first != 1) continue;
        const auto [a, b] = entry.second;
        const Point2 pa = mesh.vertices[a];
        const Point2 pb = mesh.vertices[b];
        const Vec2 t = pb - pa;
        const double len = norm(t);
        BoundaryEdge edge;
        edge.v = {a, b};
        edge.normal = {t.y / len, -t.x / len};
        edge.kind = kind_at(0.5 * (pa + pb));
        mesh.boundary_edges.push_back(edge);
    }
}

}  // namespace

double QuadMesh::cell_area(std::size_t cell) const {
    const auto& c = cells[cell];
    double twice = 0.0;
    for (int k = 0; k < 4; ++k) {
        twice += cross(vertices[c[k]], vertices[c[(k + 1) % 4]]);
    }
    return 0.5 * twice;
}

double QuadMesh::area() const {
    double total = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) total += cell_area(c);
    return total;
}

bool QuadMesh::pure_neumann() const {
    return std::none_of(boundary_edges.begin(), boundary_edges.end(),
                        [](const BoundaryEdge& e) { return e.kind == BoundaryKind::Dirichlet; });
}

std::vector<bool> QuadMesh::dirichlet_vertices() const {
    std::vector<bool> mask(vertices.size(), false);
    for (const auto& e : boundary_edges) {
        if (e.kind != BoundaryKind::Dirichlet) continue;
        mask[e.v[0]] = true;
        mask[e.v[1]] = true;
    }
    return mask;
}

QuadMesh build_unit_square_quad(int n, BoundaryKind kind) {
    PLAPFLOW_REQUIRE(n >= 1, InvalidParameter, "build_unit_square_quad: n must be >= 1, got " + std::to_string(n));
    QuadMesh mesh;
    const int np = n + 1;
    mesh.vertices.reserve(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < np; ++i) {
            mesh.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    auto id = [np](int i, int j) { return static_cast<Index>(j * np + i); };
    mesh.cells.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            mesh.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    mesh.h = 1.0 / n;
    classify_boundary(mesh, [kind](Point2) { return kind; });
    return mesh;
}

QuadMesh build_lshape_quad(int n, LShapeBoundary boundary) {
    PLAPFLOW_REQUIRE(n >= 1, InvalidParameter, "build_lshape_quad: n must be >= 1, got " + std::to_string(n));
    // Integer lattice [-n, n]^2; the cell with lower-left corner (i, j) is
    // dropped when it lies in the removed quadrant i >= 0, j < 0.
    const auto in_domain = [](int i, int j) { return !(i >= 0 && j < 0); };
    const int np = 2 * n + 1;
    std::vector<Index> lattice(static_cast<std::size_t>(np) * np, -1);
    QuadMesh mesh;
    auto vertex = [&](int i, int j) {
        Index& slot = lattice[static_cast<std::size_t>(j + n) * np + (i + n)];
        if (slot < 0) {
            slot = static_cast<Index>(mesh.vertices.size());
            mesh.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
        return slot;
    };
    for (int j = -n; j < n; ++j) {
        for (int i = -n; i < n; ++i) {
            if (!in_domain(i, j)) continue;
            mesh.cells.push_back({vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)});
        }
    }
    mesh.h = 1.0 / n;
    classify_boundary(mesh, [boundary](Point2 mid) {
        if (boundary == LShapeBoundary::AllDirichlet) return BoundaryKind::Dirichlet;
        const bool reentrant_vertical = mid.x == 0.0 && mid.y <= 0.0;
        const bool reentrant_horizontal = mid.y == 0.0 && mid.x >= 0.0;
        return (reentrant_vertical || reentrant_horizontal) ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
    });
    return mesh;
}

QuadMesh refine(const QuadMesh& coarse) {
    QuadMesh fine;
    fine.vertices = coarse.vertices;
    std::map<EdgeKey, Index> midpoint;
    auto mid = [&](Index a, Index b) {
        const auto key = make_key(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const Index id = static_cast<Index>(fine.vertices.size());
        fine.vertices.push_back(0.5 * (coarse.vertices[a] + coarse.vertices[b]));
        midpoint.emplace(key, id);
        return id;
    };
    fine.cells.reserve(coarse.cells.size() * 4);
    for (const auto& c : coarse.cells) {
        const Index m01 = mid(c[0], c[1]);
        const Index m12 = mid(c[1], c[2]);
        const Index m23 = mid(c[2], c[3]);
        const Index m30 = mid(c[3], c[0]);
        const Index centre = static_cast<Index>(fine.vertices.size());
        fine.vertices.push_back(0.25 * (coarse.vertices[c[0]] + coarse.vertices[c[1]] + coarse.vertices[c[2]] +
                                        coarse.vertices[c[3]]));
        fine.cells.push_back({c[0], m01, centre, m30});
        fine.cells.push_back({m01, c[1], m12, centre});
        fine.cells.push_back({centre, m12, c[2], m23});
        fine.cells.push_back({m30, centre, m23, c[3]});
    }
    for (const auto& e : coarse.boundary_edges) {
        const Index m = midpoint.at(make_key(e.v[0], e.v[1]));
        fine.boundary_edges.push_back({{e.v[0], m}, e.kind, e.normal});
        fine.boundary_edges.push_back({{m, e.v[1]}, e.kind, e.normal});
    }
    fine.h = 0.5 * coarse.h;
    return fine;
}

bool all_cells_convex(const QuadMesh& mesh) {
    for (const auto& c : mesh.cells) {
        for (int k = 0; k < 4; ++k) {
            const Point2 prev = mesh.vertices[c[(k + 3) % 4]];
            const Point2 here = mesh.vertices[c[k]];
            const Point2 next = mesh.vertices[c[(k + 1) % 4]];
            if (cross(next - here, prev - here) <= 0.0) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

double TriMesh::triangle_area() const { return std::numbers::sqrt3 / 4.0 * h * h; }

double TriMesh::area() const { return triangle_area() * static_cast<double>(triangles.size()); }

std::vector<std::vector<std::array<Index, 2>>> TriMesh::vertex_neighbours() const {
    std::vector<std::vector<std::array<Index, 2>>> nbr(vertices.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [a, b] = edges[e];
        nbr[a].push_back({b, static_cast<Index>(e)});
        nbr[b].push_back({a, static_cast<Index>(e)});
    }
    return nbr;
}

namespace {

void build_tri_topology(TriMesh& mesh) {
    std::map<EdgeKey, Index> edge_id;
    mesh.edges.clear();
    mesh.edge_to_triangles.clear();
    mesh.triangle_edges.assign(mesh.triangles.size(), {});
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const auto key = make_key(tri[(k + 1) % 3], tri[(k + 2) % 3]);
            auto [it, inserted] = edge_id.emplace(key, static_cast<Index>(mesh.edges.size()));
            if (inserted) {
                mesh.edges.push_back({key.first, key.second});
                mesh.edge_to_triangles.push_back({static_cast<Index>(t), -1});
            } else {
                mesh.edge_to_triangles[it->second][1] = static_cast<Index>(t);
            }
            mesh.triangle_edges[t][k] = it->second;
        }
    }
}

}  // namespace

TriMesh build_equilateral_tri(int refinements, TriBase base) {
    PLAPFLOW_REQUIRE(refinements >= 0, InvalidParameter, "build_equilateral_tri: refinements must be >= 0");
    const double s3 = std::numbers::sqrt3;
    TriMesh mesh;
    mesh.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.5 * s3}};
    mesh.triangles = {{0, 1, 2}};
    if (base == TriBase::Rhombus) {
        mesh.vertices.push_back({1.5, 0.5 * s3});
        mesh.triangles.push_back({1, 3, 2});
    }
    mesh.h = 1.0;
    for (int level = 0; level < refinements; ++level) {
        std::map<EdgeKey, Index> midpoint;
        auto mid = [&](Index a, Index b) {
            const auto key = make_key(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const Index id = static_cast<Index>(mesh.vertices.size());
            mesh.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<Index, 3>> fine;
        fine.reserve(mesh.triangles.size() * 4);
        for (const auto& t : mesh.triangles) {
            const Index m01 = mid(t[0], t[1]);
            const Index m12 = mid(t[1], t[2]);
            const Index m20 = mid(t[2], t[0]);
            fine.push_back({t[0], m01, m20});
            fine.push_back({m01, t[1], m12});
            fine.push_back({m20, m12, t[2]});
            fine.push_back({m01, m12, m20});
        }
        mesh.triangles = std::move(fine);
        mesh.h *= 0.5;
    }
    build_tri_topology(mesh);
    return mesh;
}

DiamondInfo diamond_geometry(const TriMesh& mesh, std::size_t edge) {
    PLAPFLOW_REQUIRE(edge < mesh.edges.size(), InvalidParameter, "diamond_geometry: edge id out of range");
    DiamondInfo info;
    const double slice = mesh.triangle_area() / 3.0;
    for (const Index t : mesh.edge_to_triangles[edge]) {
        if (t < 0) continue;
        info.halves.emplace_back(t, slice);
        info.area += slice;
    }
    info.boundary = mesh.is_boundary_edge(edge);
    return info;
}

}  // namespace plapflow::mesh
