#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mkrem {

using DenseVector = std::vector<double>;

// Thrown when an iterative/direct solve fails to meet its residual contract.
class NumericError : public std::runtime_error {
  public:
    NumericError(const std::string& what, double residual = -1.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

struct Triplet {
    std::int32_t row;
    std::int32_t col;
    double value;
};

// Row-compressed sparse matrix. Column indices are strictly increasing
// within a row and all stored values are finite; both invariants are
// enforced at construction. Instances are immutable afterwards.
class SparseMatrix {
  public:
    SparseMatrix() = default;

    // Duplicate (row, col) entries are summed; exact zeros are pruned.
    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
    static SparseMatrix from_dense(int rows, int cols, const std::vector<double>& row_major,
                                   double drop_tol = 0.0);
    static SparseMatrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }

    std::span<const std::int32_t> row_cols(int r) const {
        return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[r + 1]};
    }
    std::span<const double> row_values(int r) const {
        return {values_.data() + row_ptr_[r], values_.data() + row_ptr_[r + 1]};
    }

    const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::int32_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    double coeff(int r, int c) const;
    int max_row_nnz() const;
    std::vector<double> to_dense() const;  // row-major; small matrices only

  private:
    static SparseMatrix from_sorted(int rows, int cols, std::vector<std::int64_t> ptr,
                                    std::vector<std::int32_t> idx, std::vector<double> vals);

    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::int64_t> row_ptr_ = {0};
    std::vector<std::int32_t> col_idx_;
    std::vector<double> values_;

    friend SparseMatrix spmm(const SparseMatrix&, const SparseMatrix&);
    friend SparseMatrix transpose(const SparseMatrix&);
    friend SparseMatrix solve_sparse(const SparseMatrix&, const SparseMatrix&, double);
};

DenseVector matvec(const SparseMatrix& a, const DenseVector& v);

// Computes transpose(a) * v by scattering rows; the transpose is never
// materialized.
DenseVector matvec_transpose(const SparseMatrix& a, const DenseVector& v);

SparseMatrix transpose(const SparseMatrix& a);

// Sparse-sparse product with explicit zeros pruned.
SparseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b);

// Solves (a + ridge*I) x = b for each column of b via sparse LU. Throws
// NumericError (carrying the achieved residual) if the relative residual
// exceeds 1e-8. When non-null, `achieved_rel_residual` receives the
// Frobenius-relative residual of the ridged system.
SparseMatrix solve_sparse(const SparseMatrix& a, const SparseMatrix& b, double ridge = 0.0,
                          double* achieved_rel_residual = nullptr);
DenseVector solve_sparse(const SparseMatrix& a, const DenseVector& b, double ridge = 0.0);

double frobenius_norm(const SparseMatrix& a);

DenseVector hadamard(const DenseVector& u, const DenseVector& v);

// Elementwise division; denominators below `floor` are replaced by `floor`
// (standard EM safeguard against empty bins).
DenseVector hadamard_div(const DenseVector& u, const DenseVector& v, double floor = 1e-12);

// Dense helpers shared across modules.
double dot(const DenseVector& u, const DenseVector& v);
double vec_sum(const DenseVector& v);
double norm2(const DenseVector& v);
double max_abs(const DenseVector& v);
DenseVector ones(std::size_t n);
DenseVector zeros(std::size_t n);
void axpy(double alpha, const DenseVector& x, DenseVector& y);  // y += alpha*x

}  // namespace mkrem
