#include "plapflow/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plapflow/error.hpp"

namespace plapflow::linalg {

std::string to_string(KrylovMethod m) { return m == KrylovMethod::CG ? "cg" : "gmres"; }

std::string to_string(PreconditionerKind p) {
    switch (p) {
        case PreconditionerKind::None: return "none";
        case PreconditionerKind::Jacobi: return "jacobi";
        case PreconditionerKind::IncompleteCholesky0: return "ic0";
    }
    return "?";
}

KrylovMethod krylov_method_from_string(const std::string& s) {
    if (s == "cg") return KrylovMethod::CG;
    if (s == "gmres") return KrylovMethod::GMRES;
    throw InvalidParameter("unknown Krylov method '" + s + "'");
}

PreconditionerKind preconditioner_from_string(const std::string& s) {
    if (s == "none") return PreconditionerKind::None;
    if (s == "jacobi") return PreconditionerKind::Jacobi;
    if (s == "ic0") return PreconditionerKind::IncompleteCholesky0;
    throw InvalidParameter("unknown preconditioner '" + s + "'");
}

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    std::copy(r.begin(), r.end(), z.begin());
}

JacobiPreconditioner::JacobiPreconditioner(const CsrMatrix& m) : inv_diag_(m.diagonal()) {
    for (double& d : inv_diag_) d = (d != 0.0 && std::isfinite(d)) ? 1.0 / d : 1.0;
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
}

IncompleteCholesky0::IncompleteCholesky0(const CsrMatrix& m) : n_(m.rows()) {
    PLAPFLOW_REQUIRE(m.rows() == m.cols(), InvalidParameter, "IncompleteCholesky0: matrix must be square");
    double shift = 0.0;
    while (!factor(m, shift)) {
        shift = shift == 0.0 ? 1e-3 : 10.0 * shift;
        PLAPFLOW_REQUIRE(shift < 1e3, SingularBlock, "IncompleteCholesky0: factorization failed for every shift");
    }
    shift_ = shift;
}

bool IncompleteCholesky0::factor(const CsrMatrix& m, double shift) {
    const auto rp = m.row_ptr();
    const auto ci = m.col_idx();
    const auto v = m.values();
    row_ptr_.assign(n_ + 1, 0);
    col_idx_.clear();
    values_.clear();
    diag_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (Index k = rp[i]; k < rp[i + 1]; ++k) {
            if (static_cast<std::size_t>(ci[k]) < i) {
                col_idx_.push_back(ci[k]);
                values_.push_back(v[k]);
            } else if (static_cast<std::size_t>(ci[k]) == i) {
                diag_[i] = v[k] * (1.0 + shift);
            }
        }
        row_ptr_[i + 1] = static_cast<Index>(col_idx_.size());
    }
    // Row-oriented IC(0): L_ik = (a_ik - sum_{j<k} L_ij L_kj) / L_kk, L_ii = sqrt(a_ii - sum L_ij^2).
    for (std::size_t i = 0; i < n_; ++i) {
        const Index begin = row_ptr_[i];
        const Index end = row_ptr_[i + 1];
        for (Index p = begin; p < end; ++p) {
            const Index k = col_idx_[p];
            double sum = values_[p];
            Index a = begin;
            Index b = row_ptr_[k];
            const Index b_end = row_ptr_[k + 1];
            while (a < p && b < b_end) {
                if (col_idx_[a] < col_idx_[b]) {
                    ++a;
                } else if (col_idx_[b] < col_idx_[a]) {
                    ++b;
                } else {
                    sum -= values_[a++] * values_[b++];
                }
            }
            values_[p] = sum / diag_[k];
        }
        double d = diag_[i];
        for (Index p = begin; p < end; ++p) d -= values_[p] * values_[p];
        const double reference = std::abs(m.at(i, i));
        if (!(d > 1e-12 * reference) || !std::isfinite(d)) return false;
        diag_[i] = std::sqrt(d);
    }
    return true;
}

void IncompleteCholesky0::apply(std::span<const double> r, std::span<double> z) const {
    // L y = r
    for (std::size_t i = 0; i < n_; ++i) {
        double sum = r[i];
        for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) sum -= values_[p] * z[col_idx_[p]];
        z[i] = sum / diag_[i];
    }
    // L^T x = y, column sweep over the rows of L
    for (std::size_t ii = n_; ii-- > 0;) {
        z[ii] /= diag_[ii];
        const double zi = z[ii];
        for (Index p = row_ptr_[ii]; p < row_ptr_[ii + 1]; ++p) z[col_idx_[p]] -= values_[p] * zi;
    }
}

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const CsrMatrix& m) {
    switch (kind) {
        case PreconditionerKind::None: return std::make_unique<IdentityPreconditioner>();
        case PreconditionerKind::Jacobi: return std::make_unique<JacobiPreconditioner>(m);
        case PreconditionerKind::IncompleteCholesky0: return std::make_unique<IncompleteCholesky0>(m);
    }
    throw InvalidParameter("make_preconditioner: unknown kind");
}

namespace {

KrylovReport conjugate_gradient(const CsrMatrix& m, std::span<const double> rhs, std::span<double> x,
                                const KrylovConfig& cfg, const Preconditioner& pc, double target) {
    const std::size_t n = rhs.size();
    std::vector<double> r(n), z(n), p(n), q(n);
    m.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
    if (cfg.constant_nullspace) remove_mean(r);
    KrylovReport report;
    report.residual_norm = norm2(r);
    if (report.residual_norm <= target) {
        report.converged = true;
        return report;
    }
    pc.apply(r, z);
    if (cfg.constant_nullspace) remove_mean(z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= cfg.max_iters; ++it) {
        m.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0) || !std::isfinite(pq)) {
            throw KrylovError("CG breakdown: non-positive curvature", it, report.residual_norm);
        }
        const double alpha = rz / pq;
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        if (cfg.constant_nullspace) remove_mean(r);
        report.iterations = it;
        report.residual_norm = norm2(r);
        if (report.residual_norm <= target) {
            report.converged = true;
            return report;
        }
        pc.apply(r, z);
        if (cfg.constant_nullspace) remove_mean(z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return report;
}

/// Restarted GMRES with right preconditioning: solves M P^{-1} y = rhs, x = P^{-1} y.
KrylovReport gmres(const CsrMatrix& m, std::span<const double> rhs, std::span<double> x, const KrylovConfig& cfg,
                   const Preconditioner& pc, double target) {
    const std::size_t n = rhs.size();
    const int restart = std::max(1, cfg.restart);
    std::vector<std::vector<double>> basis(restart + 1, std::vector<double>(n));
    std::vector<std::vector<double>> hess(restart + 1, std::vector<double>(restart, 0.0));
    std::vector<double> cs(restart), sn(restart), g(restart + 1), y(restart);
    std::vector<double> r(n), w(n), z(n);
    KrylovReport report;
    int total = 0;
    while (true) {
        m.multiply(x, r);
        for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
        if (cfg.constant_nullspace) remove_mean(r);
        const double beta = norm2(r);
        report.residual_norm = beta;
        if (beta <= target) {
            report.converged = true;
            break;
        }
        if (total >= cfg.max_iters) break;
        for (std::size_t i = 0; i < n; ++i) basis[0][i] = r[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        int k = 0;
        for (; k < restart && total < cfg.max_iters; ++k) {
            ++total;
            pc.apply(basis[k], z);
            if (cfg.constant_nullspace) remove_mean(z);
            m.multiply(z, w);
            for (int j = 0; j <= k; ++j) {
                hess[j][k] = dot(w, basis[j]);
                axpy(-hess[j][k], basis[j], w);
            }
            hess[k + 1][k] = norm2(w);
            if (hess[k + 1][k] > 0.0) {
                for (std::size_t i = 0; i < n; ++i) basis[k + 1][i] = w[i] / hess[k + 1][k];
            }
            for (int j = 0; j < k; ++j) {
                const double t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            const double denom = std::hypot(hess[k][k], hess[k + 1][k]);
            if (denom == 0.0) throw KrylovError("GMRES breakdown", total, report.residual_norm);
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            report.residual_norm = std::abs(g[k + 1]);
            if (report.residual_norm <= target) {
                ++k;
                break;
            }
        }
        for (int i = k - 1; i >= 0; --i) {
            double sum = g[i];
            for (int j = i + 1; j < k; ++j) sum -= hess[i][j] * y[j];
            y[i] = sum / hess[i][i];
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int j = 0; j < k; ++j) axpy(y[j], basis[j], w);
        pc.apply(w, z);
        if (cfg.constant_nullspace) remove_mean(z);
        axpy(1.0, z, x);
    }
    report.iterations = total;
    return report;
}

}  // namespace

KrylovReport krylov_solve(const CsrMatrix& m, std::span<const double> rhs, std::span<double> x,
                          const KrylovConfig& config) {
    const auto pc = make_preconditioner(config.preconditioner, m);
    return krylov_solve(m, rhs, x, config, *pc);
}

KrylovReport krylov_solve(const CsrMatrix& m, std::span<const double> rhs, std::span<double> x,
                          const KrylovConfig& config, const Preconditioner& pc) {
    PLAPFLOW_REQUIRE(m.rows() == m.cols(), InvalidParameter, "krylov_solve: matrix must be square");
    PLAPFLOW_REQUIRE(rhs.size() == m.rows() && x.size() == m.rows(), InvalidParameter, "krylov_solve: size mismatch");
    PLAPFLOW_REQUIRE(config.rtol >= 0.0 && config.atol >= 0.0 && config.max_iters >= 1, InvalidParameter,
                     "krylov_solve: invalid tolerances");
    PLAPFLOW_REQUIRE(config.method != KrylovMethod::CG || m.symmetric(), InvalidParameter,
                     "krylov_solve: CG requires a matrix flagged symmetric");
    std::vector<double> b(rhs.begin(), rhs.end());
    if (config.constant_nullspace) {
        remove_mean(b);
        remove_mean(x);
    }
    const double rhs_norm = norm2(b);
    const double target = std::max(config.atol, config.rtol * rhs_norm);
    KrylovReport report = config.method == KrylovMethod::CG ? conjugate_gradient(m, b, x, config, pc, target)
                                                            : gmres(m, b, x, config, pc, target);
    report.rhs_norm = rhs_norm;
    if (config.constant_nullspace) remove_mean(x);
    if (!report.converged) {
        throw KrylovError("Krylov solver did not converge in " + std::to_string(report.iterations) +
                              " iterations (residual " + std::to_string(report.residual_norm) + ")",
                          report.iterations, report.residual_norm);
    }
    return report;
}

}  // namespace plapflow::linalg
