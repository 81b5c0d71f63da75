#include "plapflow/block_system.hpp"

#include <cmath>
#include <string>

#include "plapflow/error.hpp"

namespace plapflow::linalg {

CsrMatrix assemble_schur(std::span<const double> a_diag, const CsrMatrix& b, const CsrMatrix& c) {
    PLAPFLOW_REQUIRE(a_diag.size() == b.cols() && b.rows() == c.rows() && c.rows() == c.cols(), InvalidParameter,
                     "assemble_schur: block shapes do not match");
    std::vector<double> inv(a_diag.size());
    for (std::size_t k = 0; k < a_diag.size(); ++k) {
        if (a_diag[k] == 0.0 || std::isnan(a_diag[k])) {
            throw SingularBlock("assemble_schur: A entry " + std::to_string(k) + " is " + std::to_string(a_diag[k]));
        }
        inv[k] = 1.0 / a_diag[k];
    }
    const CsrMatrix bt = b.transpose();
    CsrMatrix scaled = b;
    scaled.scale_columns(inv);
    CsrMatrix s = add(c, multiply(scaled, bt));
    s.set_symmetric(c.symmetric());
    return s;
}

void block_apply(const BlockSystem& blocks, std::span<const double> dc, std::span<const double> du,
                 std::span<double> out_c, std::span<double> out_u) {
    blocks.b.transpose_multiply(du, out_c);
    for (std::size_t k = 0; k < dc.size(); ++k) {
        if (dc[k] != 0.0) out_c[k] += blocks.a_diag[k] * dc[k];
    }
    std::vector<double> tmp(du.size());
    blocks.b.multiply(dc, out_u);
    blocks.c.multiply(du, tmp);
    for (std::size_t i = 0; i < du.size(); ++i) out_u[i] -= tmp[i];
}

BlockSolution solve_block(const BlockSystem& blocks, std::span<const double> rhs_c, std::span<const double> rhs_u,
                          const KrylovConfig& config) {
    const auto pc = make_preconditioner(config.preconditioner, blocks.s);
    return solve_block(blocks, rhs_c, rhs_u, config, *pc);
}

BlockSolution solve_block(const BlockSystem& blocks, std::span<const double> rhs_c, std::span<const double> rhs_u,
                          const KrylovConfig& config, const Preconditioner& schur_pc) {
    const std::size_t nc = blocks.a_diag.size();
    const std::size_t nu = blocks.c.rows();
    PLAPFLOW_REQUIRE(rhs_c.size() == nc && rhs_u.size() == nu, InvalidParameter, "solve_block: rhs size mismatch");
    PLAPFLOW_REQUIRE(blocks.s.rows() == nu, InvalidParameter, "solve_block: Schur complement not assembled");

    BlockSolution sol;
    std::vector<double> t(nc);
    for (std::size_t k = 0; k < nc; ++k) t[k] = rhs_c[k] / blocks.a_diag[k];
    std::vector<double> schur_rhs(nu);
    blocks.b.multiply(t, schur_rhs);
    for (std::size_t i = 0; i < nu; ++i) schur_rhs[i] -= rhs_u[i];

    sol.du.assign(nu, 0.0);
    sol.krylov = krylov_solve(blocks.s, schur_rhs, sol.du, config, schur_pc);

    sol.dc.resize(nc);
    blocks.b.transpose_multiply(sol.du, sol.dc);
    for (std::size_t k = 0; k < nc; ++k) sol.dc[k] = (rhs_c[k] - sol.dc[k]) / blocks.a_diag[k];

    std::vector<double> jc(nc), ju(nu);
    block_apply(blocks, sol.dc, sol.du, jc, ju);
    double sq = 0.0;
    for (std::size_t k = 0; k < nc; ++k) sq += (jc[k] - rhs_c[k]) * (jc[k] - rhs_c[k]);
    for (std::size_t i = 0; i < nu; ++i) sq += (ju[i] - rhs_u[i]) * (ju[i] - rhs_u[i]);
    sol.block_residual = std::sqrt(sq);
    return sol;
}

}  // namespace plapflow::linalg
