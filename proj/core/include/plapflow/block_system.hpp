#pragma once

#include <span>
#include <vector>

#include "plapflow/krylov.hpp"
#include "plapflow/sparse.hpp"

namespace plapflow::linalg {

/// Saddle-point Jacobian J = [[A, B^T], [B, -C]] with diagonal A (one entry per
/// cell), B of shape potential x conductance and C of shape potential x potential.
struct BlockSystem {
    std::vector<double> a_diag;
    CsrMatrix b;
    CsrMatrix c;
    /// S = C + B A^{-1} B^T, filled by `assemble_schur`.
    CsrMatrix s;
};

/// S = C + B A^{-1} B^T. Throws SingularBlock on a zero or non-finite-inverse A entry.
CsrMatrix assemble_schur(std::span<const double> a_diag, const CsrMatrix& b, const CsrMatrix& c);

struct BlockSolution {
    std::vector<double> dc;
    std::vector<double> du;
    KrylovReport krylov;
    /// ||J (dc, du) - (rhs_c, rhs_u)||_2
    double block_residual = 0.0;
};

/// Solves J (dc, du) = (rhs_c, rhs_u) through the exact factorization
///   t = A^{-1} rhs_c,  S du = B t - rhs_u,  dc = A^{-1} (rhs_c - B^T du).
/// Requires blocks.s to be assembled. KrylovError propagates.
BlockSolution solve_block(const BlockSystem& blocks, std::span<const double> rhs_c, std::span<const double> rhs_u,
                          const KrylovConfig& config);
BlockSolution solve_block(const BlockSystem& blocks, std::span<const double> rhs_c, std::span<const double> rhs_u,
                          const KrylovConfig& config, const Preconditioner& schur_pc);

/// (out_c, out_u) = J (dc, du)
void block_apply(const BlockSystem& blocks, std::span<const double> dc, std::span<const double> du,
                 std::span<double> out_c, std::span<double> out_u);

}  // namespace plapflow::linalg
