#include "mkrem/linalg.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace mkrem {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

SparseMatrix SparseMatrix::from_sorted(int rows, int cols, std::vector<std::int64_t> ptr,
                                       std::vector<std::int32_t> idx, std::vector<double> vals) {
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_ = std::move(ptr);
    m.col_idx_ = std::move(idx);
    m.values_ = std::move(vals);
    return m;
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    require(rows >= 0 && cols >= 0, "from_triplets: negative dimensions");
    for (const auto& t : entries) {
        require(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols,
                "from_triplets: index out of bounds");
        if (!std::isfinite(t.value)) throw NumericError("from_triplets: non-finite value");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    std::vector<std::int64_t> ptr(static_cast<std::size_t>(rows) + 1, 0);
    std::vector<std::int32_t> idx;
    std::vector<double> vals;
    idx.reserve(entries.size());
    vals.reserve(entries.size());

    std::size_t k = 0;
    for (int r = 0; r < rows; ++r) {
        while (k < entries.size() && entries[k].row == r) {
            double v = entries[k].value;
            const std::int32_t c = entries[k].col;
            ++k;
            while (k < entries.size() && entries[k].row == r && entries[k].col == c) {
                v += entries[k].value;  // sum duplicates
                ++k;
            }
            if (v != 0.0) {
                idx.push_back(c);
                vals.push_back(v);
            }
        }
        ptr[static_cast<std::size_t>(r) + 1] = static_cast<std::int64_t>(idx.size());
    }
    return from_sorted(rows, cols, std::move(ptr), std::move(idx), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(int rows, int cols, const std::vector<double>& row_major,
                                      double drop_tol) {
    require(row_major.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
            "from_dense: size mismatch");
    std::vector<Triplet> ts;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = row_major[static_cast<std::size_t>(r) * cols + c];
            if (std::abs(v) > drop_tol) ts.push_back({r, c, v});
        }
    return from_triplets(rows, cols, std::move(ts));
}

SparseMatrix SparseMatrix::identity(int n) {
    std::vector<std::int64_t> ptr(static_cast<std::size_t>(n) + 1);
    std::vector<std::int32_t> idx(static_cast<std::size_t>(n));
    std::vector<double> vals(static_cast<std::size_t>(n), 1.0);
    for (int i = 0; i <= n; ++i) ptr[i] = i;
    for (int i = 0; i < n; ++i) idx[i] = i;
    return from_sorted(n, n, std::move(ptr), std::move(idx), std::move(vals));
}

double SparseMatrix::coeff(int r, int c) const {
    const auto cols = row_cols(r);
    const auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return 0.0;
    return values_[row_ptr_[r] + (it - cols.begin())];
}

int SparseMatrix::max_row_nnz() const {
    std::int64_t best = 0;
    for (int r = 0; r < rows_; ++r) best = std::max(best, row_ptr_[r + 1] - row_ptr_[r]);
    return static_cast<int>(best);
}

std::vector<double> SparseMatrix::to_dense() const {
    std::vector<double> d(static_cast<std::size_t>(rows_) * cols_, 0.0);
    for (int r = 0; r < rows_; ++r)
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            d[static_cast<std::size_t>(r) * cols_ + col_idx_[k]] = values_[k];
    return d;
}

DenseVector matvec(const SparseMatrix& a, const DenseVector& v) {
    require(static_cast<std::size_t>(a.cols()) == v.size(), "matvec: dimension mismatch");
    DenseVector out(static_cast<std::size_t>(a.rows()), 0.0);
    const auto& ptr = a.row_ptr();
    const auto& idx = a.col_idx();
    const auto& vals = a.values();
    for (int r = 0; r < a.rows(); ++r) {
        double acc = 0.0;
        for (std::int64_t k = ptr[r]; k < ptr[r + 1]; ++k) acc += vals[k] * v[idx[k]];
        out[r] = acc;
    }
    return out;
}

DenseVector matvec_transpose(const SparseMatrix& a, const DenseVector& v) {
    require(static_cast<std::size_t>(a.rows()) == v.size(), "matvec_transpose: dimension mismatch");
    DenseVector out(static_cast<std::size_t>(a.cols()), 0.0);
    const auto& ptr = a.row_ptr();
    const auto& idx = a.col_idx();
    const auto& vals = a.values();
    for (int r = 0; r < a.rows(); ++r) {
        const double vr = v[r];
        if (vr == 0.0) continue;
        for (std::int64_t k = ptr[r]; k < ptr[r + 1]; ++k) out[idx[k]] += vals[k] * vr;
    }
    return out;
}

SparseMatrix transpose(const SparseMatrix& a) {
    std::vector<std::int64_t> ptr(static_cast<std::size_t>(a.cols_) + 1, 0);
    for (const auto c : a.col_idx_) ++ptr[static_cast<std::size_t>(c) + 1];
    for (int c = 0; c < a.cols_; ++c) ptr[c + 1] += ptr[c];

    std::vector<std::int32_t> idx(a.col_idx_.size());
    std::vector<double> vals(a.values_.size());
    std::vector<std::int64_t> cursor(ptr.begin(), ptr.end() - 1);
    for (int r = 0; r < a.rows_; ++r) {
        for (std::int64_t k = a.row_ptr_[r]; k < a.row_ptr_[r + 1]; ++k) {
            const std::int64_t dst = cursor[a.col_idx_[k]]++;
            idx[dst] = r;
            vals[dst] = a.values_[k];
        }
    }
    return SparseMatrix::from_sorted(a.cols_, a.rows_, std::move(ptr), std::move(idx),
                                     std::move(vals));
}

SparseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b) {
    require(a.cols() == b.rows(), "spmm: dimension mismatch");
    const int n = b.cols();

    std::vector<std::int64_t> ptr(static_cast<std::size_t>(a.rows()) + 1, 0);
    std::vector<std::int32_t> idx;
    std::vector<double> vals;

    // Gustavson row products: dense accumulator plus a row marker so each
    // output column is discovered once.
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    std::vector<int> mark(static_cast<std::size_t>(n), -1);
    std::vector<std::int32_t> touched;
    touched.reserve(static_cast<std::size_t>(n));

    for (int r = 0; r < a.rows(); ++r) {
        touched.clear();
        for (std::int64_t ka = a.row_ptr_[r]; ka < a.row_ptr_[r + 1]; ++ka) {
            const std::int32_t j = a.col_idx_[ka];
            const double av = a.values_[ka];
            for (std::int64_t kb = b.row_ptr_[j]; kb < b.row_ptr_[j + 1]; ++kb) {
                const std::int32_t c = b.col_idx_[kb];
                if (mark[c] != r) {
                    mark[c] = r;
                    acc[c] = 0.0;
                    touched.push_back(c);
                }
                acc[c] += av * b.values_[kb];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (const auto c : touched) {
            if (acc[c] != 0.0) {
                idx.push_back(c);
                vals.push_back(acc[c]);
            }
        }
        ptr[static_cast<std::size_t>(r) + 1] = static_cast<std::int64_t>(idx.size());
    }
    return SparseMatrix::from_sorted(a.rows(), n, std::move(ptr), std::move(idx), std::move(vals));
}

namespace {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

EigenSparse to_eigen_with_ridge(const SparseMatrix& a, double ridge) {
    std::vector<Eigen::Triplet<double, std::int64_t>> ts;
    ts.reserve(static_cast<std::size_t>(a.nnz()) + (ridge > 0.0 ? a.rows() : 0));
    for (int r = 0; r < a.rows(); ++r) {
        const auto cols = a.row_cols(r);
        const auto vals = a.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) ts.emplace_back(r, cols[k], vals[k]);
    }
    if (ridge > 0.0)
        for (int i = 0; i < a.rows(); ++i) ts.emplace_back(i, i, ridge);
    EigenSparse m(a.rows(), a.cols());
    m.setFromTriplets(ts.begin(), ts.end());
    m.makeCompressed();
    return m;
}

}  // namespace

SparseMatrix solve_sparse(const SparseMatrix& a, const SparseMatrix& b, double ridge,
                          double* achieved_rel_residual) {
    require(a.rows() == a.cols(), "solve_sparse: matrix must be square");
    require(a.rows() == b.rows(), "solve_sparse: dimension mismatch");
    require(ridge >= 0.0, "solve_sparse: ridge must be nonnegative");

    const EigenSparse m = to_eigen_with_ridge(a, ridge);
    Eigen::SparseLU<EigenSparse> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw NumericError("solve_sparse: LU factorization failed (singular matrix?)");

    const SparseMatrix bt = transpose(b);  // row r of bt = column r of b
    const int n = a.rows();
    const int ncols = b.cols();

    // Entries far below the solution scale carry no signal; pruning them
    // keeps the result from going needlessly dense. Done per column while
    // solving so dense intermediate columns are never all retained.
    constexpr double kPruneRel = 1e-14;
    std::vector<Triplet> ts;
    Eigen::VectorXd rhs(n), x(n);
    double resid_sq = 0.0, bnorm_sq = 0.0, xmax = 0.0;
    for (int c = 0; c < ncols; ++c) {
        rhs.setZero();
        const auto rows = bt.row_cols(c);
        const auto vals = bt.row_values(c);
        for (std::size_t k = 0; k < rows.size(); ++k) rhs[rows[k]] = vals[k];
        bnorm_sq += rhs.squaredNorm();
        x = lu.solve(rhs);
        resid_sq += (m * x - rhs).squaredNorm();
        const double cmax = x.cwiseAbs().maxCoeff();
        xmax = std::max(xmax, cmax);
        const double ctol = cmax * kPruneRel;
        for (int i = 0; i < n; ++i)
            if (std::abs(x[i]) > ctol)
                ts.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(c), x[i]});
    }

    const double rel = bnorm_sq > 0.0 ? std::sqrt(resid_sq / bnorm_sq) : 0.0;
    if (achieved_rel_residual) *achieved_rel_residual = rel;
    if (!std::isfinite(rel) || rel > 1e-8)
        throw NumericError("solve_sparse: residual above 1e-8", rel);

    const double tol = xmax * kPruneRel;
    std::erase_if(ts, [tol](const Triplet& t) { return std::abs(t.value) <= tol; });
    return SparseMatrix::from_triplets(n, ncols, std::move(ts));
}

DenseVector solve_sparse(const SparseMatrix& a, const DenseVector& b, double ridge) {
    require(a.rows() == a.cols(), "solve_sparse: matrix must be square");
    require(static_cast<std::size_t>(a.rows()) == b.size(), "solve_sparse: dimension mismatch");
    require(ridge >= 0.0, "solve_sparse: ridge must be nonnegative");

    const EigenSparse m = to_eigen_with_ridge(a, ridge);
    Eigen::SparseLU<EigenSparse> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
        throw NumericError("solve_sparse: LU factorization failed (singular matrix?)");

    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    const Eigen::VectorXd x = lu.solve(rhs);
    const double bn = rhs.norm();
    const double rel = bn > 0.0 ? (m * x - rhs).norm() / bn : 0.0;
    if (!std::isfinite(rel) || rel > 1e-8)
        throw NumericError("solve_sparse: residual above 1e-8", rel);
    return DenseVector(x.data(), x.data() + x.size());
}

DenseVector hadamard(const DenseVector& u, const DenseVector& v) {
    require(u.size() == v.size(), "hadamard: length mismatch");
    DenseVector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * v[i];
    return out;
}

DenseVector hadamard_div(const DenseVector& u, const DenseVector& v, double floor) {
    require(u.size() == v.size(), "hadamard_div: length mismatch");
    require(floor > 0.0, "hadamard_div: floor must be positive");
    DenseVector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] / std::max(v[i], floor);
    return out;
}

double dot(const DenseVector& u, const DenseVector& v) {
    require(u.size() == v.size(), "dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
}

double vec_sum(const DenseVector& v) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc;
}

double norm2(const DenseVector& v) { return std::sqrt(dot(v, v)); }

double max_abs(const DenseVector& v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

double frobenius_norm(const SparseMatrix& a) {
    double acc = 0.0;
    for (const double v : a.values()) acc += v * v;
    return std::sqrt(acc);
}

DenseVector ones(std::size_t n) { return DenseVector(n, 1.0); }
DenseVector zeros(std::size_t n) { return DenseVector(n, 0.0); }

void axpy(double alpha, const DenseVector& x, DenseVector& y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace mkrem
