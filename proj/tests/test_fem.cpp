#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "plapflow/error.hpp"
#include "plapflow/fem.hpp"
#include "plapflow/krylov.hpp"
#include "plapflow/quadrature.hpp"

using namespace plapflow;
using namespace plapflow::fem;

namespace {

double integrate_rule(const QuadratureRule& q, auto f) {
    double s = 0.0;
    for (std::size_t k = 0; k < q.points.size(); ++k) s += q.weights[k] * f(q.points[k]);
    return s;
}

std::shared_ptr<const mesh::QuadMesh> square(int n, mesh::BoundaryKind kind = mesh::BoundaryKind::Dirichlet) {
    return std::make_shared<const mesh::QuadMesh>(mesh::build_unit_square_quad(n, kind));
}

/// Unit square with its interior vertices moved, so cells are general quadrilaterals.
std::shared_ptr<const mesh::QuadMesh> distorted_square(int n, unsigned seed) {
    auto m = mesh::build_unit_square_quad(n);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& v : m.vertices) {
        if (v.x > 0.0 && v.x < 1.0 && v.y > 0.0 && v.y < 1.0) v = v + Point2{u(rng) * m.h, u(rng) * m.h};
    }
    return std::make_shared<const mesh::QuadMesh>(std::move(m));
}

}  // namespace

TEST(Quadrature, GaussLineExactness) {
    for (int n = 1; n <= 5; ++n) {
        const auto q = gauss_line(n);
        EXPECT_EQ(q.points.size(), static_cast<std::size_t>(n));
        for (int d = 0; d <= 2 * n - 1; ++d) {
            EXPECT_NEAR(integrate_rule(q, [d](Point2 x) { return std::pow(x.x, d); }), 1.0 / (d + 1), 1e-14)
                << "n=" << n << " degree " << d;
        }
    }
    EXPECT_THROW(gauss_line(0), InvalidParameter);
    EXPECT_THROW(gauss_line(6), InvalidParameter);
}

TEST(Quadrature, TensorRuleExactness) {
    const auto q = gauss_quad(3);
    EXPECT_EQ(q.points.size(), 9u);
    for (int a = 0; a <= 5; ++a) {
        for (int b = 0; b <= 5; ++b) {
            const double exact = 1.0 / ((a + 1) * (b + 1));
            EXPECT_NEAR(integrate_rule(q, [a, b](Point2 x) { return std::pow(x.x, a) * std::pow(x.y, b); }), exact,
                        1e-14);
        }
    }
}

TEST(Quadrature, TriangleRuleDegreeTwo) {
    const auto q = triangle_rule_degree2();
    EXPECT_NEAR(std::accumulate(q.weights.begin(), q.weights.end(), 0.0), 0.5, 1e-15);
    // int x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    EXPECT_NEAR(integrate_rule(q, [](Point2 x) { return x.x; }), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(integrate_rule(q, [](Point2 x) { return x.x * x.y; }), 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(integrate_rule(q, [](Point2 x) { return x.y * x.y; }), 1.0 / 12.0, 1e-15);
}

TEST(ModelParams, DerivativesMatchFiniteDifferences) {
    for (double gamma : {0.75, 1.5, 2.0, 3.0}) {
        ModelParams m{1e-4, 0.7, gamma, 1e-3};
        for (double c : {0.01, 0.3, 2.0}) {
            const double h = 1e-6 * c;
            const double fd_rate = m.nu * (m.rate(c + h) - m.rate(c - h)) / (2 * h);
            EXPECT_NEAR(m.rate_derivative(c), fd_rate, 1e-6 * std::max(1.0, std::abs(fd_rate)));
            EXPECT_NEAR(m.alpha(c) + m.beta(c), m.rate_derivative(c), 1e-12 * std::max(1.0, std::abs(fd_rate)));
            const double fd_cost = (m.metabolic_cost(c + h) - m.metabolic_cost(c - h)) / (2 * h);
            EXPECT_NEAR(fd_cost, m.nu * m.rate(c), 1e-6 * std::max(1.0, std::abs(fd_cost)));
            // alpha + beta factors exactly into the bound
            EXPECT_NEAR(m.positivity_bound(c), m.rate_derivative(c), 1e-12 * std::max(1.0, std::abs(fd_rate)));
        }
    }
    ModelParams m;
    m.gamma = 4.0 / 3.0;
    EXPECT_NEAR(m.p_exponent(), 8.0, 1e-14);
    m.nu = -1.0;
    EXPECT_THROW(m.validate(), InvalidParameter);
}

TEST(QuadSpace, CondensationAndPatterns) {
    const QuadSpace space(square(4));
    EXPECT_EQ(space.num_free(), 9u);
    EXPECT_FALSE(space.floating());
    const auto un = QuadSpace::unconstrained(square(4));
    EXPECT_EQ(un.num_free(), 25u);
    EXPECT_TRUE(un.floating());
    std::vector<double> full(space.num_vertices());
    std::iota(full.begin(), full.end(), 0.0);
    const auto r = space.restrict_to_free(full);
    ASSERT_EQ(r.size(), 9u);
    std::vector<double> back(space.num_vertices(), 0.0);
    space.add_free(r, back);
    for (std::size_t v = 0; v < back.size(); ++v) {
        EXPECT_EQ(back[v], space.dirichlet()[v] ? 0.0 : full[v]);
    }
}

TEST(Assembly, StiffnessStencilOnUniformGrid) {
    const auto space = QuadSpace::unconstrained(square(4));
    const std::vector<double> c(space.num_cells(), 1.0);
    const auto k = assemble_stiffness(space, c, 0.0);
    EXPECT_LT(k.max_asymmetry(), 1e-15);
    // interior vertex (2,2) = 12: the classic Q1 stencil 8/3, -1/3
    EXPECT_NEAR(k.at(12, 12), 8.0 / 3.0, 1e-14);
    EXPECT_NEAR(k.at(12, 13), -1.0 / 3.0, 1e-14);
    EXPECT_NEAR(k.at(12, 18), -1.0 / 3.0, 1e-14);
    EXPECT_NEAR(k.at(0, 0), 2.0 / 3.0, 1e-14);
    const std::vector<double> ones(space.num_vertices(), 1.0);
    for (double v : k * ones) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Assembly, MatrixFreeProductAgreesWithAssembledMatrix) {
    const auto m = distorted_square(5, 9);
    const auto space = QuadSpace::unconstrained(m);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> c(space.num_cells()), x(space.num_vertices());
    for (double& v : c) v = u(rng);
    for (double& v : x) v = u(rng);
    const auto k = assemble_stiffness(space, c, 0.3);
    const auto kx = k * x;
    const auto free_kx = apply_stiffness(space, c, 0.3, x);
    for (std::size_t i = 0; i < kx.size(); ++i) EXPECT_NEAR(kx[i], free_kx[i], 1e-13);
}

TEST(Assembly, NegativePermeabilityIsRejected) {
    const QuadSpace space(square(2));
    std::vector<double> c(space.num_cells(), 1.0);
    c[3] = -2.0;
    try {
        assemble_stiffness(space, c, 1.0);
        FAIL() << "expected AssemblyError";
    } catch (const AssemblyError& e) {
        EXPECT_EQ(e.cell(), 3u);
    }
}

TEST(Assembly, CouplingIsDerivativeOfStiffnessAction) {
    // B_iK = -d/dc_K (K(c) u)_i, which is linear in c.
    const auto m = distorted_square(3, 4);
    const QuadSpace space(m);
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(space.num_vertices()), c(space.num_cells(), 1.0);
    for (double& v : x) v = u(rng);
    const auto b = assemble_coupling(space, x);
    const auto base = space.restrict_to_free(apply_stiffness(space, c, 0.0, x));
    for (std::size_t cell = 0; cell < space.num_cells(); ++cell) {
        auto c2 = c;
        c2[cell] += 1.0;
        const auto bumped = space.restrict_to_free(apply_stiffness(space, c2, 0.0, x));
        for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(-(bumped[i] - base[i]), b.at(i, cell), 1e-13);
    }
}

TEST(Assembly, CellGradientEnergyOfLinearFunction) {
    const auto m = distorted_square(4, 2);
    const QuadSpace space(m);
    const auto u = interpolate(*m, [](Point2 x) { return 2.0 * x.x - 3.0 * x.y; });
    const auto q = cell_gradient_energy(space, u);
    for (std::size_t k = 0; k < q.size(); ++k) EXPECT_NEAR(q[k], 13.0 * space.cell_area(k), 1e-12);
    for (const auto& g : eval_gradients(space, u)) {
        EXPECT_NEAR(g.x, 2.0, 1e-12);
        EXPECT_NEAR(g.y, -3.0, 1e-12);
    }
}

TEST(Assembly, ADiagonal) {
    const QuadSpace space(square(2));
    ModelParams p{0.0, 2.0, 2.0, 0.0};
    const std::vector<double> c(space.num_cells(), 0.5);
    const auto a = assemble_a_diagonal(space, c, p, 0.1);
    // (|K|/2)(1/dt + nu) with gamma = 2
    for (double v : a) EXPECT_NEAR(v, 0.125 * (10.0 + 2.0), 1e-14);
}

TEST(Assembly, SourceAndFluxLoads) {
    const auto space = QuadSpace::unconstrained(square(4, mesh::BoundaryKind::Neumann));
    const auto load = assemble_source(space, [](Point2 x) { return 1.0 + x.x * x.y; }, {});
    EXPECT_NEAR(std::accumulate(load.begin(), load.end(), 0.0), 1.25, 1e-14);
    // flux g.n with g = (1, 0): +1 on x = 1, -1 on x = 0, zero in total
    const auto flux = assemble_source(space, {}, [](Point2, Vec2 n) { return n.x; });
    EXPECT_NEAR(std::accumulate(flux.begin(), flux.end(), 0.0), 0.0, 1e-14);
    EXPECT_NEAR(flux[4], 0.125, 1e-14);  // corner (1, 0)
    EXPECT_NEAR(flux[9], 0.25, 1e-14);   // (1, 0.25)
}

TEST(Assembly, BilinearFunctionsAreReproducedExactly) {
    // -Laplace u = 0 for u = x y; the Q1 solve with its Dirichlet trace is exact on any affine mesh.
    const auto m = square(6);
    const QuadSpace space(m);
    const fem::ScalarFunction exact = [](Point2 x) { return x.x * x.y + 0.5 * x.x - x.y; };
    const auto full = interpolate(*m, exact);
    std::vector<double> lift(full.size(), 0.0);
    for (std::size_t v = 0; v < full.size(); ++v) lift[v] = space.dirichlet()[v] ? full[v] : 0.0;
    const std::vector<double> c(space.num_cells(), 1.0);
    auto rhs = space.restrict_to_free(apply_stiffness(space, c, 0.0, lift));
    for (double& v : rhs) v = -v;
    const auto k = assemble_stiffness(space, c, 0.0);
    std::vector<double> x(rhs.size(), 0.0);
    linalg::KrylovConfig cfg;
    cfg.rtol = 1e-14;
    linalg::krylov_solve(k, rhs, x, cfg);
    space.add_free(x, lift);
    for (std::size_t v = 0; v < full.size(); ++v) EXPECT_NEAR(lift[v], full[v], 1e-12);
}

TEST(Projection, CellAveragesAndIntegrals) {
    const auto m = distorted_square(4, 6);
    const QuadSpace space(m);
    const auto p0 = project_p0(space, [](Point2 x) { return 3.0 * x.x + 1.0; });
    double total = 0.0;
    for (std::size_t k = 0; k < p0.values.size(); ++k) total += p0.values[k] * space.cell_area(k);
    EXPECT_NEAR(total, 2.5, 1e-13);
    EXPECT_NEAR(integrate(space, [](Point2 x) { return 3.0 * x.x + 1.0; }), 2.5, 1e-13);
    const auto u = interpolate(*m, [](Point2 x) { return x.y; });
    EXPECT_NEAR(integrate(space, u), 0.5, 1e-13);
}
