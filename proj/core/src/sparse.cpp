#include "plapflow/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <string>

#include "plapflow/error.hpp"

namespace plapflow::linalg {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
                     std::vector<double> values, bool symmetric)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)),
      symmetric_(symmetric) {
    PLAPFLOW_REQUIRE(row_ptr_.size() == rows_ + 1, InvalidParameter, "CsrMatrix: row_ptr has wrong length");
    PLAPFLOW_REQUIRE(col_idx_.size() == values_.size(), InvalidParameter, "CsrMatrix: col/value length mismatch");
    PLAPFLOW_REQUIRE(static_cast<std::size_t>(row_ptr_.back()) == values_.size(), InvalidParameter,
                     "CsrMatrix: row_ptr does not end at nnz");
    for (std::size_t i = 0; i < rows_; ++i) {
        for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            PLAPFLOW_REQUIRE(col_idx_[k] >= 0 && static_cast<std::size_t>(col_idx_[k]) < cols_, InvalidParameter,
                             "CsrMatrix: column index out of range");
            PLAPFLOW_REQUIRE(k == row_ptr_[i] || col_idx_[k - 1] < col_idx_[k], InvalidParameter,
                             "CsrMatrix: columns must be sorted and unique in row " + std::to_string(i));
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets,
                                   bool symmetric) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Index> row_ptr(rows + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    col_idx.reserve(triplets.size());
    values.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        PLAPFLOW_REQUIRE(t.row >= 0 && static_cast<std::size_t>(t.row) < rows && t.col >= 0 &&
                             static_cast<std::size_t>(t.col) < cols,
                         InvalidParameter, "from_triplets: index out of range");
        if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
            values.back() += t.value;
            continue;
        }
        col_idx.push_back(t.col);
        values.push_back(t.value);
        ++row_ptr[t.row + 1];
    }
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    return {rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values), symmetric};
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<double> ones(n, 1.0);
    return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
    const std::size_t n = d.size();
    std::vector<Index> row_ptr(n + 1);
    std::vector<Index> col_idx(n);
    std::iota(row_ptr.begin(), row_ptr.end(), 0);
    std::iota(col_idx.begin(), col_idx.end(), 0);
    return {n, n, std::move(row_ptr), std::move(col_idx), std::vector<double>(d.begin(), d.end()), true};
}

std::ptrdiff_t CsrMatrix::find(std::size_t i, std::size_t j) const {
    const auto first = col_idx_.begin() + row_ptr_[i];
    const auto last = col_idx_.begin() + row_ptr_[i + 1];
    const auto it = std::lower_bound(first, last, static_cast<Index>(j));
    if (it == last || *it != static_cast<Index>(j)) return -1;
    return it - col_idx_.begin();
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    const auto pos = find(i, j);
    return pos < 0 ? 0.0 : values_[pos];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    PLAPFLOW_REQUIRE(x.size() == cols_ && y.size() == rows_, InvalidParameter, "multiply: size mismatch");
    for (std::size_t i = 0; i < rows_; ++i) {
        double sum = 0.0;
        for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) sum += values_[k] * x[col_idx_[k]];
        y[i] = sum;
    }
}

void CsrMatrix::transpose_multiply(std::span<const double> x, std::span<double> y) const {
    PLAPFLOW_REQUIRE(x.size() == rows_ && y.size() == cols_, InvalidParameter, "transpose_multiply: size mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double xi = x[i];
        for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * xi;
    }
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<Index> row_ptr(cols_ + 1, 0);
    for (const Index c : col_idx_) ++row_ptr[c + 1];
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    std::vector<Index> next(row_ptr.begin(), row_ptr.end() - 1);
    std::vector<Index> col_idx(values_.size());
    std::vector<double> values(values_.size());
    for (std::size_t i = 0; i < rows_; ++i) {
        for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const Index dst = next[col_idx_[k]]++;
            col_idx[dst] = static_cast<Index>(i);
            values[dst] = values_[k];
        }
    }
    return {cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values), symmetric_};
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

void CsrMatrix::scale(double s) {
    for (double& v : values_) v *= s;
}

void CsrMatrix::scale_columns(std::span<const double> d) {
    PLAPFLOW_REQUIRE(d.size() == cols_, InvalidParameter, "scale_columns: size mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= d[col_idx_[k]];
    symmetric_ = false;
}

double CsrMatrix::max_asymmetry() const {
    PLAPFLOW_REQUIRE(rows_ == cols_, InvalidParameter, "max_asymmetry: matrix is not square");
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            worst = std::max(worst, std::abs(values_[k] - at(col_idx_[k], i)));
        }
    }
    return worst;
}

CsrMatrix add(const CsrMatrix& a_mat, const CsrMatrix& b_mat, double a, double b) {
    PLAPFLOW_REQUIRE(a_mat.rows() == b_mat.rows() && a_mat.cols() == b_mat.cols(), InvalidParameter,
                     "add: shape mismatch");
    const auto ar = a_mat.row_ptr();
    const auto ac = a_mat.col_idx();
    const auto av = a_mat.values();
    const auto br = b_mat.row_ptr();
    const auto bc = b_mat.col_idx();
    const auto bv = b_mat.values();
    std::vector<Index> row_ptr(a_mat.rows() + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    col_idx.reserve(a_mat.nnz() + b_mat.nnz());
    values.reserve(a_mat.nnz() + b_mat.nnz());
    for (std::size_t i = 0; i < a_mat.rows(); ++i) {
        Index p = ar[i];
        Index q = br[i];
        while (p < ar[i + 1] || q < br[i + 1]) {
            if (q >= br[i + 1] || (p < ar[i + 1] && ac[p] < bc[q])) {
                col_idx.push_back(ac[p]);
                values.push_back(a * av[p++]);
            } else if (p >= ar[i + 1] || bc[q] < ac[p]) {
                col_idx.push_back(bc[q]);
                values.push_back(b * bv[q++]);
            } else {
                col_idx.push_back(ac[p]);
                values.push_back(a * av[p++] + b * bv[q++]);
            }
        }
        row_ptr[i + 1] = static_cast<Index>(col_idx.size());
    }
    return {a_mat.rows(), a_mat.cols(), std::move(row_ptr), std::move(col_idx), std::move(values),
            a_mat.symmetric() && b_mat.symmetric()};
}

CsrMatrix multiply(const CsrMatrix& a_mat, const CsrMatrix& b_mat) {
    PLAPFLOW_REQUIRE(a_mat.cols() == b_mat.rows(), InvalidParameter, "multiply: inner dimensions differ");
    const auto ar = a_mat.row_ptr();
    const auto ac = a_mat.col_idx();
    const auto av = a_mat.values();
    const auto br = b_mat.row_ptr();
    const auto bc = b_mat.col_idx();
    const auto bv = b_mat.values();
    const std::size_t ncols = b_mat.cols();
    std::vector<double> accum(ncols, 0.0);
    std::vector<Index> marker(ncols, -1);
    std::vector<Index> row_cols;
    std::vector<Index> row_ptr(a_mat.rows() + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    for (std::size_t i = 0; i < a_mat.rows(); ++i) {
        row_cols.clear();
        for (Index p = ar[i]; p < ar[i + 1]; ++p) {
            const double aik = av[p];
            const Index k = ac[p];
            for (Index q = br[k]; q < br[k + 1]; ++q) {
                const Index j = bc[q];
                if (marker[j] != static_cast<Index>(i)) {
                    marker[j] = static_cast<Index>(i);
                    accum[j] = 0.0;
                    row_cols.push_back(j);
                }
                accum[j] += aik * bv[q];
            }
        }
        std::sort(row_cols.begin(), row_cols.end());
        for (const Index j : row_cols) {
            col_idx.push_back(j);
            values.push_back(accum[j]);
        }
        row_ptr[i + 1] = static_cast<Index>(col_idx.size());
    }
    return {a_mat.rows(), ncols, std::move(row_ptr), std::move(col_idx), std::move(values), false};
}

void write_matrix_market(std::ostream& out, const CsrMatrix& m) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto rp = m.row_ptr();
    const auto ci = m.col_idx();
    const auto v = m.values();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (Index k = rp[i]; k < rp[i + 1]; ++k) out << i + 1 << ' ' << ci[k] + 1 << ' ' << v[k] << '\n';
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void remove_mean(std::span<double> v) {
    if (v.empty()) return;
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

}  // namespace plapflow::linalg
