#include "plapflow/vtk.hpp"

#include <fstream>
#include <iomanip>
#include <limits>

#include "plapflow/error.hpp"

namespace plapflow::io {

namespace {

constexpr int kVtkTriangle = 5;
constexpr int kVtkQuad = 9;

template <std::size_t N>
void write_grid(std::ostream& out, const std::vector<Point2>& vertices,
                const std::vector<std::array<Index, N>>& cells, int cell_type,
                const std::vector<NamedField>& point_fields, const std::vector<NamedField>& cell_fields,
                const std::string& title) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << vertices.size() << " double\n";
    for (const auto& p : vertices) out << p.x << ' ' << p.y << " 0\n";
    out << "CELLS " << cells.size() << ' ' << cells.size() * (N + 1) << '\n';
    for (const auto& c : cells) {
        out << N;
        for (const Index v : c) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << cells.size() << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) out << cell_type << '\n';

    auto emit = [&out](const NamedField& f) {
        out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (const double v : f.values) out << v << '\n';
    };
    if (!cell_fields.empty()) {
        out << "CELL_DATA " << cells.size() << '\n';
        for (const auto& f : cell_fields) {
            PLAPFLOW_REQUIRE(f.values.size() == cells.size(), InvalidParameter,
                             "write_vtk: cell field '" + f.name + "' has wrong length");
            emit(f);
        }
    }
    if (!point_fields.empty()) {
        out << "POINT_DATA " << vertices.size() << '\n';
        for (const auto& f : point_fields) {
            PLAPFLOW_REQUIRE(f.values.size() == vertices.size(), InvalidParameter,
                             "write_vtk: point field '" + f.name + "' has wrong length");
            emit(f);
        }
    }
}

}  // namespace

void write_vtk(std::ostream& out, const mesh::QuadMesh& mesh, const std::vector<NamedField>& point_fields,
               const std::vector<NamedField>& cell_fields, const std::string& title) {
    write_grid(out, mesh.vertices, mesh.cells, kVtkQuad, point_fields, cell_fields, title);
}

void write_vtk(std::ostream& out, const mesh::TriMesh& mesh, const std::vector<NamedField>& point_fields,
               const std::vector<NamedField>& cell_fields, const std::string& title) {
    write_grid(out, mesh.vertices, mesh.triangles, kVtkTriangle, point_fields, cell_fields, title);
}

void write_vtk(const std::filesystem::path& path, const mesh::QuadMesh& mesh,
               const std::vector<NamedField>& point_fields, const std::vector<NamedField>& cell_fields) {
    std::ofstream out(path);
    PLAPFLOW_REQUIRE(out.good(), Error, "write_vtk: cannot open " + path.string());
    write_vtk(out, mesh, point_fields, cell_fields, path.stem().string());
}

}  // namespace plapflow::io
