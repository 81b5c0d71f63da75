#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "plapflow/mesh.hpp"

namespace plapflow::io {

struct NamedField {
    std::string name;
    std::span<const double> values;
};

/// Legacy ASCII VTK, UNSTRUCTURED_GRID. Point fields go to POINT_DATA (one
/// value per vertex), cell fields to CELL_DATA (one value per cell).
void write_vtk(std::ostream& out, const mesh::QuadMesh& mesh, const std::vector<NamedField>& point_fields,
               const std::vector<NamedField>& cell_fields, const std::string& title = "plapflow");
void write_vtk(std::ostream& out, const mesh::TriMesh& mesh, const std::vector<NamedField>& point_fields,
               const std::vector<NamedField>& cell_fields, const std::string& title = "plapflow");

void write_vtk(const std::filesystem::path& path, const mesh::QuadMesh& mesh,
               const std::vector<NamedField>& point_fields, const std::vector<NamedField>& cell_fields);

}  // namespace plapflow::io
