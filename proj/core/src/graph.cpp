#include "mkrem/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mkrem {

void GraphSpec::validate() const {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(window_m))));
    if (window_m < 1 || side * side != window_m || side % 2 == 0)
        throw std::invalid_argument("GraphSpec: window_m must be an odd perfect square");
    if (knn < 1) throw std::invalid_argument("GraphSpec: knn must be >= 1");
    if (!(eps_t > 0.0)) throw std::invalid_argument("GraphSpec: eps_t must be positive");
    if (t_max < 1) throw std::invalid_argument("GraphSpec: t_max must be >= 1");
}

Eigen::MatrixXd feature_windows(const DenseVector& img, int width, int height, int window_m) {
    if (img.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("feature_windows: image size mismatch");
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(window_m))));
    if (side * side != window_m)
        throw std::invalid_argument("feature_windows: window_m must be a perfect square");
    const int half = side / 2;

    Eigen::MatrixXd y(width * height, window_m);
    for (int iy = 0; iy < height; ++iy) {
        for (int ix = 0; ix < width; ++ix) {
            const int i = iy * width + ix;
            int k = 0;
            for (int dy = -half; dy <= half; ++dy)
                for (int dx = -half; dx <= half; ++dx, ++k) {
                    const int cy = iy + dy, cx = ix + dx;
                    y(i, k) = (cy < 0 || cy >= height || cx < 0 || cx >= width)
                                  ? 0.0
                                  : img[static_cast<std::size_t>(cy) * width + cx];
                }
        }
    }
    return y;
}

SparseMatrix markov_matrix(const Eigen::MatrixXd& y, int knn, int knn_graph) {
    const int m = static_cast<int>(y.rows());
    if (knn + 1 > m) throw std::invalid_argument("markov_matrix: knn + 1 must be <= M");

    // All pairwise window distances for one row at a time.
    std::vector<double> dist(static_cast<std::size_t>(m));
    std::vector<double> bandwidth(static_cast<std::size_t>(m));
    std::vector<std::vector<int>> keep(static_cast<std::size_t>(m));
    std::vector<double> sorter;
    double emax = 0.0;

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) dist[j] = (y.row(i) - y.row(j)).norm();
        emax = std::max(emax, *std::max_element(dist.begin(), dist.end()));

        sorter.assign(dist.begin(), dist.end());
        std::nth_element(sorter.begin(), sorter.begin() + knn, sorter.end());
        bandwidth[i] = sorter[knn];  // (knn+1)-smallest, self distance included

        if (knn_graph > 0 && knn_graph + 1 < m) {
            std::vector<std::pair<double, int>> order(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) order[j] = {dist[j], j};
            const int take = knn_graph + 1;  // self rides along
            std::partial_sort(order.begin(), order.begin() + take, order.end());
            keep[i].reserve(take);
            for (int k = 0; k < take; ++k) keep[i].push_back(order[k].second);
        } else {
            keep[i].resize(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) keep[i][j] = j;
        }
    }

    const double floor = 1e-12 * emax;
    std::vector<Triplet> ts;
    if (emax == 0.0) {
        // All windows identical: uniform transition matrix.
        const double z = 1.0 / m;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) ts.push_back({i, j, z});
        return SparseMatrix::from_triplets(m, m, std::move(ts));
    }

    // W(i,j) on the kept support; emitting the mirrored entry realizes
    // W + W^T through duplicate summation.
    for (int i = 0; i < m; ++i) {
        const double b = std::max(bandwidth[i], floor);
        for (const int j : keep[i]) {
            const double e = (y.row(i) - y.row(j)).norm() / b;
            const double w = std::exp(-e * e);
            ts.push_back({i, j, w});
            ts.push_back({j, i, w});
        }
    }
    SparseMatrix wsym = SparseMatrix::from_triplets(m, m, std::move(ts));

    std::vector<Triplet> zts;
    zts.reserve(static_cast<std::size_t>(wsym.nnz()));
    for (int i = 0; i < m; ++i) {
        const auto cols = wsym.row_cols(i);
        const auto vals = wsym.row_values(i);
        double s = 0.0;
        for (const double v : vals) s += v;
        for (std::size_t k = 0; k < cols.size(); ++k) zts.push_back({i, cols[k], vals[k] / s});
    }
    return SparseMatrix::from_triplets(m, m, std::move(zts));
}

namespace {

Eigen::MatrixXd z_times(const SparseMatrix& z, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    for (int r = 0; r < z.rows(); ++r) {
        const auto cols = z.row_cols(r);
        const auto vals = z.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) out.row(r) += vals[k] * y.row(cols[k]);
    }
    return out;
}

}  // namespace

int select_power(const SparseMatrix& z, const Eigen::MatrixXd& y, double eps_t, int t_max,
                 bool* converged) {
    if (z.rows() != z.cols() || z.rows() != y.rows())
        throw std::invalid_argument("select_power: dimension mismatch");
    if (converged) *converged = true;

    Eigen::MatrixXd prev = y;
    for (int t = 1; t <= t_max; ++t) {
        const Eigen::MatrixXd next = z_times(z, prev);
        const double denom = prev.squaredNorm();
        const double ratio = denom > 0.0 ? (next - prev).squaredNorm() / denom : 0.0;
        if (ratio <= eps_t) return t;
        prev = next;
    }
    if (converged) *converged = false;
    return t_max;
}

DenseVector LaplacianPack::apply_q(const DenseVector& v) const {
    DenseVector zt = v;
    for (int k = 0; k < t; ++k) zt = matvec(z, zt);
    if (symmetrize_q) {
        DenseVector ztt = v;
        for (int k = 0; k < t; ++k) ztt = matvec_transpose(z, ztt);
        for (std::size_t i = 0; i < zt.size(); ++i) zt[i] = 0.5 * (zt[i] + ztt[i]);
    }
    DenseVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - zt[i];
    return out;
}

DenseVector LaplacianPack::apply_qa(const SparseMatrix& k_ma, const DenseVector& a) const {
    return matvec_transpose(k_ma, apply_q(matvec(k_ma, a)));
}

SparseMatrix LaplacianPack::q_matrix() const {
    SparseMatrix zt = z;
    for (int k = 1; k < t; ++k) zt = spmm(zt, z);
    if (symmetrize_q) {
        SparseMatrix ztt = transpose(zt);
        std::vector<Triplet> ts;
        for (int r = 0; r < zt.rows(); ++r) {
            const auto cols = zt.row_cols(r);
            const auto vals = zt.row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) ts.push_back({r, cols[k], 0.5 * vals[k]});
        }
        for (int r = 0; r < ztt.rows(); ++r) {
            const auto cols = ztt.row_cols(r);
            const auto vals = ztt.row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) ts.push_back({r, cols[k], 0.5 * vals[k]});
        }
        zt = SparseMatrix::from_triplets(zt.rows(), zt.cols(), std::move(ts));
    }
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(zt.nnz()) + zt.rows());
    for (int r = 0; r < zt.rows(); ++r) {
        const auto cols = zt.row_cols(r);
        const auto vals = zt.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) ts.push_back({r, cols[k], -vals[k]});
        ts.push_back({r, r, 1.0});
    }
    return SparseMatrix::from_triplets(zt.rows(), zt.cols(), std::move(ts));
}

SparseMatrix LaplacianPack::qa_matrix(const SparseMatrix& k_ma) const {
    if (k_ma.rows() != z.rows())
        throw std::invalid_argument("qa_matrix: K_Ma shape mismatch");
    SparseMatrix qa = spmm(transpose(k_ma), spmm(q_matrix(), k_ma));
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(qa.nnz()));
    for (int r = 0; r < qa.rows(); ++r) {
        const auto cols = qa.row_cols(r);
        const auto vals = qa.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (std::abs(vals[k]) >= 1e-14) ts.push_back({r, cols[k], vals[k]});
    }
    return SparseMatrix::from_triplets(qa.rows(), qa.cols(), std::move(ts));
}

LaplacianPack build_laplacian(const std::vector<DenseVector>& priors, int width, int height,
                              const GraphSpec& spec) {
    spec.validate();
    if (priors.empty()) throw std::invalid_argument("build_laplacian: no priors");

    const int m = width * height;
    Eigen::MatrixXd y_all(m, spec.window_m * static_cast<int>(priors.size()));
    SparseMatrix z;
    for (std::size_t i = 0; i < priors.size(); ++i) {
        const Eigen::MatrixXd y = feature_windows(priors[i], width, height, spec.window_m);
        y_all.middleCols(static_cast<int>(i) * spec.window_m, spec.window_m) = y;
        SparseMatrix zi = markov_matrix(y, spec.knn, spec.knn_graph);
        if (i == 0) {
            z = std::move(zi);
        } else {
            std::vector<Triplet> ts;
            for (const SparseMatrix* src : {&z, &zi})
                for (int r = 0; r < src->rows(); ++r) {
                    const auto cols = src->row_cols(r);
                    const auto vals = src->row_values(r);
                    for (std::size_t k = 0; k < cols.size(); ++k)
                        ts.push_back({r, cols[k], vals[k]});
                }
            z = SparseMatrix::from_triplets(m, m, std::move(ts));
        }
    }
    if (priors.size() > 1) {
        std::vector<Triplet> ts;
        const double inv = 1.0 / static_cast<double>(priors.size());
        for (int r = 0; r < z.rows(); ++r) {
            const auto cols = z.row_cols(r);
            const auto vals = z.row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) ts.push_back({r, cols[k], vals[k] * inv});
        }
        z = SparseMatrix::from_triplets(m, m, std::move(ts));
    }

    LaplacianPack pack;
    pack.symmetrize_q = spec.symmetrize_q;
    pack.t = select_power(z, y_all, spec.eps_t, spec.t_max, &pack.power_converged);
    pack.z = std::move(z);
    return pack;
}

}  // namespace mkrem
