#include "mkrem/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mkrem {

void KernelSpec::validate() const {
    if (kind == KernelKind::gaussian && !(sigma > 0.0))
        throw std::invalid_argument("KernelSpec: sigma must be positive");
    if (kind == KernelKind::polynomial && degree < 1)
        throw std::invalid_argument("KernelSpec: degree must be >= 1");
    if (neighborhood == NeighborhoodMode::window && (window_j < 1 || window_j % 2 == 0))
        throw std::invalid_argument("KernelSpec: window J must be odd and >= 1");
    if (neighborhood == NeighborhoodMode::knn && knn < 1)
        throw std::invalid_argument("KernelSpec: knn must be >= 1");
    if (feature == FeatureMode::patch && (feature_window < 1 || feature_window % 2 == 0))
        throw std::invalid_argument("KernelSpec: feature window must be odd and >= 1");
}

double kernel_value(const KernelSpec& spec, std::span<const double> u,
                    std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("kernel_value: feature length mismatch");
    if (spec.kind == KernelKind::gaussian) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double d = u[k] - v[k];
            d2 += d * d;
        }
        return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
    }
    double ip = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) ip += u[k] * v[k];
    return std::pow(ip + spec.gamma, spec.degree);
}

std::vector<double> kernel_features(const std::vector<DenseVector>& priors, int width,
                                    int height, const KernelSpec& spec, int* feature_dim) {
    if (priors.empty()) throw std::invalid_argument("kernel_features: no prior images");
    const std::size_t m = static_cast<std::size_t>(width) * height;
    for (const auto& p : priors)
        if (p.size() != m) throw std::invalid_argument("kernel_features: prior size mismatch");

    const int fw = spec.feature == FeatureMode::patch ? spec.feature_window : 1;
    const int half = fw / 2;
    const int per_prior = fw * fw;
    const int dim = per_prior * static_cast<int>(priors.size());
    if (feature_dim) *feature_dim = dim;

    std::vector<double> feats(m * static_cast<std::size_t>(dim));
    for (std::size_t t = 0; t < priors.size(); ++t) {
        const DenseVector& img = priors[t];
        double mu = 0.0, sd = 1.0;
        if (spec.zscore_features) {
            mu = vec_sum(img) / static_cast<double>(m);
            double var = 0.0;
            for (const double x : img) var += (x - mu) * (x - mu);
            sd = std::sqrt(var / static_cast<double>(m));
            if (!(sd > 0.0)) sd = 1.0;
        }
        for (int iy = 0; iy < height; ++iy) {
            for (int ix = 0; ix < width; ++ix) {
                const std::size_t i = static_cast<std::size_t>(iy) * width + ix;
                double* f = feats.data() + i * dim + t * per_prior;
                int k = 0;
                for (int dy = -half; dy <= half; ++dy) {
                    const int cy = std::clamp(iy + dy, 0, height - 1);
                    for (int dx = -half; dx <= half; ++dx) {
                        const int cx = std::clamp(ix + dx, 0, width - 1);
                        f[k++] = (img[static_cast<std::size_t>(cy) * width + cx] - mu) / sd;
                    }
                }
            }
        }
    }
    return feats;
}

namespace {

SparseMatrix normalize_rows_of(SparseMatrix k) {
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(k.nnz()));
    for (int r = 0; r < k.rows(); ++r) {
        const auto cols = k.row_cols(r);
        const auto vals = k.row_values(r);
        double s = 0.0;
        for (const double v : vals) s += v;
        if (s == 0.0) throw NumericError("build_single_kernel: zero row sum in normalization");
        for (std::size_t j = 0; j < cols.size(); ++j)
            ts.push_back({r, cols[j], vals[j] / s});
    }
    return SparseMatrix::from_triplets(k.rows(), k.cols(), std::move(ts));
}

}  // namespace

SparseMatrix build_single_kernel(const std::vector<DenseVector>& priors, int width, int height,
                                 const KernelSpec& spec) {
    spec.validate();
    int dim = 0;
    const std::vector<double> feats = kernel_features(priors, width, height, spec, &dim);
    const int m = width * height;
    const auto feat = [&](int i) {
        return std::span<const double>(feats.data() + static_cast<std::size_t>(i) * dim,
                                       static_cast<std::size_t>(dim));
    };

    std::vector<Triplet> ts;
    if (spec.neighborhood == NeighborhoodMode::window) {
        const int half = spec.window_j / 2;
        ts.reserve(static_cast<std::size_t>(m) * spec.window_j);
        for (int iy = 0; iy < height; ++iy) {
            for (int ix = 0; ix < width; ++ix) {
                const int i = iy * width + ix;
                for (int dy = -half; dy <= half; ++dy) {
                    const int jy = iy + dy;
                    if (jy < 0 || jy >= height) continue;
                    for (int dx = -half; dx <= half; ++dx) {
                        const int jx = ix + dx;
                        if (jx < 0 || jx >= width) continue;
                        const int j = jy * width + jx;
                        ts.push_back({i, j, kernel_value(spec, feat(i), feat(j))});
                    }
                }
            }
        }
    } else {
        if (spec.knn + 1 > m)
            throw std::invalid_argument("build_single_kernel: knn too large for image");
        std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const auto fi = feat(i);
            for (int j = 0; j < m; ++j) {
                const auto fj = feat(j);
                double d2 = 0.0;
                for (int k = 0; k < dim; ++k) {
                    const double d = fi[k] - fj[k];
                    d2 += d * d;
                }
                dist[j] = {d2, j};
            }
            // k nearest in feature space, self included; index order breaks ties
            std::partial_sort(dist.begin(), dist.begin() + spec.knn, dist.end());
            for (int k = 0; k < spec.knn; ++k) {
                const int j = dist[k].second;
                ts.push_back({i, j, kernel_value(spec, fi, feat(j))});
            }
        }
    }

    SparseMatrix k = SparseMatrix::from_triplets(m, m, std::move(ts));
    return spec.normalize_rows ? normalize_rows_of(std::move(k)) : k;
}

SparseMatrix build_multi_kernel(const std::vector<DenseVector>& priors, int width, int height,
                                const MultiKernelSpec& spec) {
    if (spec.factors.empty())
        throw std::invalid_argument("build_multi_kernel: G must be >= 1");
    SparseMatrix k = build_single_kernel(priors, width, height, spec.factors[0]);
    for (std::size_t l = 1; l < spec.factors.size(); ++l)
        k = spmm(k, build_single_kernel(priors, width, height, spec.factors[l]));
    return k;
}

SparseMatrix factorize(const SparseMatrix& k_ma, const SparseMatrix& k_mb, double ridge) {
    if (k_ma.rows() != k_ma.cols() || k_mb.rows() != k_mb.cols() || k_ma.rows() != k_mb.rows())
        throw std::invalid_argument("factorize: both matrices must be M x M");
    const double bnorm = frobenius_norm(k_mb);
    if (bnorm == 0.0) return SparseMatrix::from_triplets(k_ma.rows(), k_ma.cols(), {});

    double rel = 0.0;
    try {
        SparseMatrix kt = solve_sparse(k_ma, k_mb, 0.0, &rel);
        if (rel <= 1e-6) return kt;
    } catch (const NumericError&) {
        // fall through to the ridged solve
    }

    double eps = ridge;
    if (eps < 0.0) {
        double trace = 0.0;
        for (int i = 0; i < k_ma.rows(); ++i) trace += k_ma.coeff(i, i);
        eps = 1e-8 * trace / std::max(1, k_ma.rows());
    }
    SparseMatrix kt = solve_sparse(k_ma, k_mb, eps, &rel);
    // || K_Ma*Kt - K_Mb ||_F <= ||(K_Ma + eps I)*Kt - K_Mb||_F + eps*||Kt||_F
    const double bound = rel * bnorm + eps * frobenius_norm(kt);
    if (bound / bnorm > 1e-6)
        throw NumericError("factorize: residual above 1e-6", bound / bnorm);
    return kt;
}

}  // namespace mkrem
