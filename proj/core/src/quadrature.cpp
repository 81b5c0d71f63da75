#include "plapflow/quadrature.hpp"

#include <array>
#include <cmath>
#include <string>

#include "plapflow/error.hpp"

namespace plapflow::fem {

QuadratureRule gauss_line(int n) {
    // Nodes and weights on [-1, 1].
    static const std::array<std::vector<std::pair<double, double>>, 5> table = {{
        {{0.0, 2.0}},
        {{-0.57735026918962576451, 1.0}, {0.57735026918962576451, 1.0}},
        {{-0.77459666924148337704, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {0.77459666924148337704, 5.0 / 9.0}},
        {{-0.86113631159405257522, 0.34785484513745385737},
         {-0.33998104358485626480, 0.65214515486254614263},
         {0.33998104358485626480, 0.65214515486254614263},
         {0.86113631159405257522, 0.34785484513745385737}},
        {{-0.90617984593866399280, 0.23692688505618908751},
         {-0.53846931010568309104, 0.47862867049936646804},
         {0.0, 0.56888888888888888889},
         {0.53846931010568309104, 0.47862867049936646804},
         {0.90617984593866399280, 0.23692688505618908751}},
    }};
    PLAPFLOW_REQUIRE(n >= 1 && n <= 5, InvalidParameter, "gauss_line: unsupported point count " + std::to_string(n));
    QuadratureRule rule;
    rule.degree = 2 * n - 1;
    for (const auto& [x, w] : table[n - 1]) {
        rule.points.push_back({0.5 * (x + 1.0), 0.0});
        rule.weights.push_back(0.5 * w);
    }
    return rule;
}

QuadratureRule gauss_quad(int n) {
    const QuadratureRule line = gauss_line(n);
    QuadratureRule rule;
    rule.degree = line.degree;
    for (std::size_t j = 0; j < line.points.size(); ++j) {
        for (std::size_t i = 0; i < line.points.size(); ++i) {
            rule.points.push_back({line.points[i].x, line.points[j].x});
            rule.weights.push_back(line.weights[i] * line.weights[j]);
        }
    }
    return rule;
}

QuadratureRule triangle_rule_degree2() {
    QuadratureRule rule;
    rule.degree = 2;
    rule.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
    rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return rule;
}

}  // namespace plapflow::fem
