#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "plapflow/geometry.hpp"

namespace plapflow::linalg {

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique per row.
/// The symmetric flag is a promise checked by `max_asymmetry`, not a storage mode:
/// both triangles are always stored.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
              std::vector<double> values, bool symmetric = false);

    /// Duplicates are summed; explicit zeros are kept.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets,
                                   bool symmetric = false);
    static CsrMatrix identity(std::size_t n);
    static CsrMatrix diagonal(std::span<const double> d);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t nnz() const { return values_.size(); }
    [[nodiscard]] bool symmetric() const { return symmetric_; }
    void set_symmetric(bool flag) { symmetric_ = flag; }

    [[nodiscard]] std::span<const Index> row_ptr() const { return row_ptr_; }
    [[nodiscard]] std::span<const Index> col_idx() const { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }

    /// Entry (i, j), zero when outside the pattern.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;
    /// Position of (i, j) in values(), or -1.
    [[nodiscard]] std::ptrdiff_t find(std::size_t i, std::size_t j) const;

    /// y = M x
    void multiply(std::span<const double> x, std::span<double> y) const;
    /// y = M^T x
    void transpose_multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const;

    [[nodiscard]] CsrMatrix transpose() const;
    [[nodiscard]] std::vector<double> diagonal() const;
    void scale(double s);
    /// Multiplies column j by d[j].
    void scale_columns(std::span<const double> d);
    /// max |M_ij - M_ji|; requires a square matrix.
    [[nodiscard]] double max_asymmetry() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Index> row_ptr_{0};
    std::vector<Index> col_idx_;
    std::vector<double> values_;
    bool symmetric_ = false;
};

/// a * A + b * B on the union pattern.
CsrMatrix add(const CsrMatrix& a_mat, const CsrMatrix& b_mat, double a = 1.0, double b = 1.0);
/// Sparse product A * B (Gustavson, dense accumulator).
CsrMatrix multiply(const CsrMatrix& a_mat, const CsrMatrix& b_mat);

/// MatrixMarket coordinate real general.
void write_matrix_market(std::ostream& out, const CsrMatrix& m);

// Small dense-vector helpers used across the solvers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// Removes the arithmetic mean.
void remove_mean(std::span<double> v);

}  // namespace plapflow::linalg
