#include <gtest/gtest.h>

#include <sstream>

#include "plapflow/vtk.hpp"

using namespace plapflow;

namespace {

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

bool has_line(const std::vector<std::string>& ls, const std::string& l) {
    return std::find(ls.begin(), ls.end(), l) != ls.end();
}

}  // namespace

TEST(Vtk, QuadMeshLayout) {
    const auto m = mesh::build_unit_square_quad(2);
    std::vector<double> u(m.num_vertices(), 1.5), c(m.num_cells(), 2.0);
    std::ostringstream out;
    io::write_vtk(out, m, {{"u", u}}, {{"c", c}}, "demo");
    const auto ls = lines(out.str());
    ASSERT_GE(ls.size(), 4u);
    EXPECT_EQ(ls[0], "# vtk DataFile Version 3.0");
    EXPECT_EQ(ls[1], "demo");
    EXPECT_EQ(ls[2], "ASCII");
    EXPECT_EQ(ls[3], "DATASET UNSTRUCTURED_GRID");
    EXPECT_TRUE(has_line(ls, "POINTS 9 double"));
    EXPECT_TRUE(has_line(ls, "CELLS 4 20"));
    EXPECT_TRUE(has_line(ls, "CELL_TYPES 4"));
    EXPECT_TRUE(has_line(ls, "POINT_DATA 9"));
    EXPECT_TRUE(has_line(ls, "CELL_DATA 4"));
    EXPECT_TRUE(has_line(ls, "SCALARS u double 1"));
    EXPECT_TRUE(has_line(ls, "SCALARS c double 1"));
    EXPECT_EQ(std::count(ls.begin(), ls.end(), "9"), 4);  // VTK_QUAD
}

TEST(Vtk, TriMeshLayout) {
    const auto m = mesh::build_equilateral_tri(1);
    std::ostringstream out;
    io::write_vtk(out, m, {}, {});
    const auto ls = lines(out.str());
    EXPECT_TRUE(has_line(ls, "POINTS 6 double"));
    EXPECT_TRUE(has_line(ls, "CELLS 4 16"));
    EXPECT_EQ(std::count(ls.begin(), ls.end(), "5"), 4);  // VTK_TRIANGLE
}

TEST(Vtk, WrongFieldLengthThrows) {
    const auto m = mesh::build_unit_square_quad(2);
    std::vector<double> bad(3, 0.0);
    std::ostringstream out;
    EXPECT_THROW(io::write_vtk(out, m, {{"u", bad}}, {}), std::exception);
}
