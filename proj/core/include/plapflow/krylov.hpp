#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plapflow/sparse.hpp"

namespace plapflow::linalg {

enum class KrylovMethod { CG, GMRES };
enum class PreconditionerKind { None, Jacobi, IncompleteCholesky0 };

std::string to_string(KrylovMethod m);
std::string to_string(PreconditionerKind p);
KrylovMethod krylov_method_from_string(const std::string& s);
PreconditionerKind preconditioner_from_string(const std::string& s);

struct KrylovConfig {
    KrylovMethod method = KrylovMethod::CG;
    double rtol = 1e-8;
    double atol = 0.0;
    int max_iters = 2000;
    int restart = 30;
    PreconditionerKind preconditioner = PreconditionerKind::IncompleteCholesky0;
    /// The operator has the constant vector in its kernel (pure Neumann):
    /// the right-hand side is projected and the solution returned with zero mean.
    bool constant_nullspace = false;
};

struct KrylovReport {
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;
    double rhs_norm = 0.0;
};

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    /// z = P^{-1} r
    virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(std::span<const double> r, std::span<double> z) const override;
};

class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const CsrMatrix& m);
    void apply(std::span<const double> r, std::span<double> z) const override;

private:
    std::vector<double> inv_diag_;
};

/// Zero-fill incomplete Cholesky on the lower triangle of a symmetric matrix.
/// When a pivot breaks down (singular or indefinite input) the factorization is
/// retried on M + shift * diag(M) with a growing shift.
class IncompleteCholesky0 final : public Preconditioner {
public:
    explicit IncompleteCholesky0(const CsrMatrix& m);
    void apply(std::span<const double> r, std::span<double> z) const override;
    [[nodiscard]] double shift() const { return shift_; }

private:
    bool factor(const CsrMatrix& m, double shift);

    std::size_t n_ = 0;
    std::vector<Index> row_ptr_;  // strictly lower part, then the diagonal in diag_
    std::vector<Index> col_idx_;
    std::vector<double> values_;
    std::vector<double> diag_;
    double shift_ = 0.0;
};

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const CsrMatrix& m);

/// Solves M x = rhs starting from the incoming x. Converged when
/// ||rhs - M x|| <= max(atol, rtol ||rhs||). Throws KrylovError otherwise.
KrylovReport krylov_solve(const CsrMatrix& m, std::span<const double> rhs, std::span<double> x,
                          const KrylovConfig& config);
/// Same, with a caller-owned preconditioner (reused across solves).
KrylovReport krylov_solve(const CsrMatrix& m, std::span<const double> rhs, std::span<double> x,
                          const KrylovConfig& config, const Preconditioner& pc);

}  // namespace plapflow::linalg
