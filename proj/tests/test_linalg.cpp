#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "plapflow/block_system.hpp"
#include "plapflow/error.hpp"
#include "plapflow/krylov.hpp"
#include "plapflow/sparse.hpp"

using namespace plapflow;
using namespace plapflow::linalg;

namespace {

Eigen::MatrixXd dense(const CsrMatrix& m) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (Index k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k) d(i, m.col_idx()[k]) += m.values()[k];
    }
    return d;
}

CsrMatrix random_sparse(std::size_t rows, std::size_t cols, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (p(rng) < density) t.push_back({static_cast<Index>(i), static_cast<Index>(j), u(rng)});
        }
    }
    return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

/// Random SPD matrix: 2D five-point Laplacian with random positive edge weights plus a small shift.
CsrMatrix random_spd(int n, std::mt19937_64& rng, double shift = 1e-2) {
    std::uniform_real_distribution<double> w(0.1, 10.0);
    std::vector<Triplet> t;
    auto id = [n](int i, int j) { return static_cast<Index>(j * n + i); };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            t.push_back({id(i, j), id(i, j), shift});
            auto link = [&](Index a, Index b) {
                const double v = w(rng);
                t.push_back({a, a, v});
                t.push_back({b, b, v});
                t.push_back({a, b, -v});
                t.push_back({b, a, -v});
            };
            if (i + 1 < n) link(id(i, j), id(i + 1, j));
            if (j + 1 < n) link(id(i, j), id(i, j + 1));
        }
    }
    return CsrMatrix::from_triplets(static_cast<std::size_t>(n * n), static_cast<std::size_t>(n * n), std::move(t),
                                    true);
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST(Csr, FromTripletsSumsDuplicatesAndSorts) {
    const auto m = CsrMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}, {0, 1, 0.0}});
    EXPECT_EQ(m.nnz(), 3u);
    EXPECT_DOUBLE_EQ(m.at(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(m.at(1, 2), 5.0);
    EXPECT_DOUBLE_EQ(m.at(1, 0), 3.0);
    EXPECT_DOUBLE_EQ(m.at(0, 0), 0.0);
    EXPECT_EQ(m.find(0, 0), -1);
    EXPECT_EQ(m.col_idx()[1], 0);
    EXPECT_EQ(m.col_idx()[2], 2);
}

TEST(Csr, ProductsMatchDense) {
    std::mt19937_64 rng(7);
    const auto a = random_sparse(13, 9, 0.3, rng);
    const auto b = random_sparse(9, 11, 0.3, rng);
    const Eigen::MatrixXd da = dense(a);
    const Eigen::MatrixXd db = dense(b);
    EXPECT_LT((dense(multiply(a, b)) - da * db).norm(), 1e-13);
    EXPECT_LT((dense(a.transpose()) - da.transpose()).norm(), 1e-15);
    const auto c = random_sparse(13, 9, 0.2, rng);
    EXPECT_LT((dense(add(a, c, 2.0, -0.5)) - (2.0 * da - 0.5 * dense(c))).norm(), 1e-14);

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(9), y(13);
    for (double& v : x) v = u(rng);
    for (double& v : y) v = u(rng);
    EXPECT_LT((to_eigen(a * x) - da * to_eigen(x)).norm(), 1e-14);
    std::vector<double> aty(9);
    a.transpose_multiply(y, aty);
    EXPECT_LT((to_eigen(aty) - da.transpose() * to_eigen(y)).norm(), 1e-14);
}

TEST(Csr, ScaleColumnsDiagonalAndSymmetry) {
    std::mt19937_64 rng(3);
    auto m = random_spd(4, rng);
    EXPECT_EQ(m.max_asymmetry(), 0.0);
    const auto d = m.diagonal();
    const Eigen::MatrixXd dm = dense(m);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_DOUBLE_EQ(d[i], dm(i, i));
    std::vector<double> s(m.cols());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = 1.0 + static_cast<double>(j);
    m.scale_columns(s);
    EXPECT_LT((dense(m) - dm * to_eigen(s).asDiagonal()).norm(), 1e-13);
    EXPECT_GT(m.max_asymmetry(), 0.0);
}

TEST(Csr, MatrixMarketHeader) {
    std::ostringstream out;
    write_matrix_market(out, CsrMatrix::identity(3));
    const auto text = out.str();
    EXPECT_EQ(text.rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
    EXPECT_NE(text.find("3 3 3"), std::string::npos);
}

TEST(Krylov, CgMatchesDenseSolveForEveryPreconditioner) {
    std::mt19937_64 rng(11);
    const auto m = random_spd(9, rng);
    std::vector<double> rhs(m.rows());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : rhs) v = u(rng);
    const Eigen::VectorXd exact = dense(m).ldlt().solve(to_eigen(rhs));
    for (auto pc : {PreconditionerKind::None, PreconditionerKind::Jacobi, PreconditionerKind::IncompleteCholesky0}) {
        KrylovConfig cfg;
        cfg.rtol = 1e-12;
        cfg.preconditioner = pc;
        std::vector<double> x(rhs.size(), 0.0);
        const auto rep = krylov_solve(m, rhs, x, cfg);
        EXPECT_TRUE(rep.converged);
        EXPECT_LT((to_eigen(x) - exact).norm() / exact.norm(), 1e-9) << to_string(pc);
    }
}

TEST(Krylov, GmresMatchesDenseSolveOnNonsymmetricSystem) {
    std::mt19937_64 rng(5);
    auto m = add(random_spd(6, rng), random_sparse(36, 36, 0.05, rng));
    std::vector<double> rhs(m.rows(), 1.0);
    const Eigen::VectorXd exact = dense(m).partialPivLu().solve(to_eigen(rhs));
    KrylovConfig cfg;
    cfg.method = KrylovMethod::GMRES;
    cfg.preconditioner = PreconditionerKind::Jacobi;
    cfg.rtol = 1e-12;
    cfg.restart = 40;
    std::vector<double> x(rhs.size(), 0.0);
    krylov_solve(m, rhs, x, cfg);
    EXPECT_LT((to_eigen(x) - exact).norm() / exact.norm(), 1e-9);
}

TEST(Krylov, IncompleteCholeskyIsExactWithoutFill) {
    // Tridiagonal SPD: IC(0) equals the complete factorization, so PCG needs one iteration.
    const std::size_t n = 40;
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({static_cast<Index>(i), static_cast<Index>(i), 2.5});
        if (i + 1 < n) {
            t.push_back({static_cast<Index>(i), static_cast<Index>(i + 1), -1.0});
            t.push_back({static_cast<Index>(i + 1), static_cast<Index>(i), -1.0});
        }
    }
    const auto m = CsrMatrix::from_triplets(n, n, t, true);
    std::vector<double> rhs(n, 1.0), x(n, 0.0);
    KrylovConfig cfg;
    cfg.rtol = 1e-12;
    const auto rep = krylov_solve(m, rhs, x, cfg);
    EXPECT_LE(rep.iterations, 1);
    IncompleteCholesky0 ic(m);
    EXPECT_EQ(ic.shift(), 0.0);
}

TEST(Krylov, ConstantNullspaceGivesZeroMeanSolution) {
    // Path-graph Laplacian: singular with kernel span{1}.
    const std::size_t n = 30;
    std::vector<Triplet> t;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto a = static_cast<Index>(i), b = static_cast<Index>(i + 1);
        t.insert(t.end(), {{a, a, 1.0}, {b, b, 1.0}, {a, b, -1.0}, {b, a, -1.0}});
    }
    const auto m = CsrMatrix::from_triplets(n, n, t, true);
    std::vector<double> rhs(n, 0.0);
    rhs[0] = 1.0;
    rhs[n - 1] = -1.0;
    rhs[5] = 0.3;  // inconsistent part, projected away
    KrylovConfig cfg;
    cfg.constant_nullspace = true;
    cfg.rtol = 1e-12;
    std::vector<double> x(n, 0.0);
    krylov_solve(m, rhs, x, cfg);
    double mean = 0.0;
    for (double v : x) mean += v / static_cast<double>(n);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    auto projected = rhs;
    remove_mean(projected);
    const auto mx = m * x;
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(mx[i], projected[i], 1e-9);
}

TEST(Krylov, ThrowsWhenIterationBudgetIsExhausted) {
    std::mt19937_64 rng(2);
    const auto m = random_spd(12, rng, 1e-6);
    std::vector<double> rhs(m.rows(), 1.0), x(m.rows(), 0.0);
    KrylovConfig cfg;
    cfg.preconditioner = PreconditionerKind::None;
    cfg.max_iters = 3;
    cfg.rtol = 1e-14;
    EXPECT_THROW(krylov_solve(m, rhs, x, cfg), KrylovError);
}

TEST(Krylov, StringRoundTrip) {
    for (auto k : {KrylovMethod::CG, KrylovMethod::GMRES}) EXPECT_EQ(krylov_method_from_string(to_string(k)), k);
    for (auto p : {PreconditionerKind::None, PreconditionerKind::Jacobi, PreconditionerKind::IncompleteCholesky0}) {
        EXPECT_EQ(preconditioner_from_string(to_string(p)), p);
    }
    EXPECT_THROW(krylov_method_from_string("bicgstab"), InvalidParameter);
}

namespace {

BlockSystem random_blocks(std::size_t ncells, int grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(0.5, 3.0);
    BlockSystem j;
    j.a_diag.resize(ncells);
    for (double& v : j.a_diag) v = a(rng);
    j.c = random_spd(grid, rng);
    j.b = random_sparse(j.c.rows(), ncells, 0.2, rng);
    j.s = assemble_schur(j.a_diag, j.b, j.c);
    return j;
}

Eigen::MatrixXd dense_jacobian(const BlockSystem& j) {
    const auto nc = static_cast<Eigen::Index>(j.a_diag.size());
    const auto nu = static_cast<Eigen::Index>(j.c.rows());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nc + nu, nc + nu);
    for (Eigen::Index k = 0; k < nc; ++k) m(k, k) = j.a_diag[k];
    const Eigen::MatrixXd b = dense(j.b);
    m.block(0, nc, nc, nu) = b.transpose();
    m.block(nc, 0, nu, nc) = b;
    m.block(nc, nc, nu, nu) = -dense(j.c);
    return m;
}

}  // namespace

TEST(BlockSystem, SchurComplementMatchesDense) {
    std::mt19937_64 rng(21);
    const auto j = random_blocks(20, 5, rng);
    const Eigen::MatrixXd b = dense(j.b);
    const Eigen::MatrixXd expected =
        dense(j.c) + b * to_eigen(j.a_diag).cwiseInverse().asDiagonal() * b.transpose();
    EXPECT_LT((dense(j.s) - expected).norm(), 1e-12 * expected.norm());
}

TEST(BlockSystem, SolveMatchesDenseLu) {
    std::mt19937_64 rng(17);
    for (int grid : {2, 4, 6}) {
        const auto j = random_blocks(static_cast<std::size_t>(grid * grid), grid, rng);
        const auto nc = j.a_diag.size();
        const auto nu = j.c.rows();
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> rc(nc), ru(nu);
        for (double& v : rc) v = u(rng);
        for (double& v : ru) v = u(rng);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(nc + nu));
        rhs << to_eigen(rc), to_eigen(ru);
        const Eigen::VectorXd exact = dense_jacobian(j).partialPivLu().solve(rhs);
        KrylovConfig cfg;
        cfg.rtol = 1e-13;
        const auto sol = solve_block(j, rc, ru, cfg);
        Eigen::VectorXd got(exact.size());
        got << to_eigen(sol.dc), to_eigen(sol.du);
        EXPECT_LT((got - exact).norm() / exact.norm(), 1e-10);
        EXPECT_LT(sol.block_residual, 1e-10 * rhs.norm());
    }
}

TEST(BlockSystem, ApplyMatchesDense) {
    std::mt19937_64 rng(4);
    const auto j = random_blocks(12, 3, rng);
    std::vector<double> dc(12), du(9), oc(12), ou(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : dc) v = u(rng);
    for (double& v : du) v = u(rng);
    block_apply(j, dc, du, oc, ou);
    Eigen::VectorXd x(21), y(21);
    x << to_eigen(dc), to_eigen(du);
    y << to_eigen(oc), to_eigen(ou);
    EXPECT_LT((dense_jacobian(j) * x - y).norm(), 1e-13);
}

TEST(BlockSystem, ZeroDiagonalEntryIsSingular) {
    std::mt19937_64 rng(1);
    auto j = random_blocks(4, 2, rng);
    j.a_diag[2] = 0.0;
    EXPECT_THROW(assemble_schur(j.a_diag, j.b, j.c), SingularBlock);
}
