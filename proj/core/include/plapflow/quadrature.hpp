#pragma once

#include <vector>

#include "plapflow/geometry.hpp"

namespace plapflow::fem {

/// Points and weights on a reference cell; weights sum to the reference area.
struct QuadratureRule {
    std::vector<Point2> points;
    std::vector<double> weights;
    int degree = 0;  // exact for polynomials of this (per-variable) degree
};

/// 1D Gauss-Legendre rule on [0, 1] with n points (1 <= n <= 5).
QuadratureRule gauss_line(int n);
/// Tensor Gauss-Legendre rule on the unit square [0,1]^2.
QuadratureRule gauss_quad(int n);
/// Degree-2 three-point rule on the reference triangle (0,0), (1,0), (0,1).
QuadratureRule triangle_rule_degree2();

}  // namespace plapflow::fem
