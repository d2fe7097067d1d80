#include "mkrem/dictionary.hpp"

#include "mkrem/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mkrem {

void PatchOperator::validate() const {
    if (patch_w < 1 || stride < 1)
        throw std::invalid_argument("PatchOperator: patch_w and stride must be >= 1");
    if (width < patch_w || height < patch_w)
        throw std::invalid_argument("PatchOperator: patches must fit inside the image");
}

Eigen::MatrixXd extract_patches(const PatchOperator& op, const DenseVector& img) {
    op.validate();
    if (img.size() != static_cast<std::size_t>(op.width) * op.height)
        throw std::invalid_argument("extract_patches: image size mismatch");
    Eigen::MatrixXd out(op.patch_dim(), op.n_patches());
    int k = 0;
    for (int py = 0; py + op.patch_w <= op.height; py += op.stride) {
        for (int px = 0; px + op.patch_w <= op.width; px += op.stride, ++k) {
            int e = 0;
            for (int dy = 0; dy < op.patch_w; ++dy)
                for (int dx = 0; dx < op.patch_w; ++dx, ++e)
                    out(e, k) = img[static_cast<std::size_t>(py + dy) * op.width + (px + dx)];
        }
    }
    return out;
}

DenseVector reassemble_patches(const PatchOperator& op, const Eigen::MatrixXd& patches) {
    op.validate();
    if (patches.rows() != op.patch_dim() || patches.cols() != op.n_patches())
        throw std::invalid_argument("reassemble_patches: patch matrix shape mismatch");
    DenseVector acc(static_cast<std::size_t>(op.width) * op.height, 0.0);
    std::vector<int> count(acc.size(), 0);
    int k = 0;
    for (int py = 0; py + op.patch_w <= op.height; py += op.stride) {
        for (int px = 0; px + op.patch_w <= op.width; px += op.stride, ++k) {
            int e = 0;
            for (int dy = 0; dy < op.patch_w; ++dy)
                for (int dx = 0; dx < op.patch_w; ++dx, ++e) {
                    const std::size_t j = static_cast<std::size_t>(py + dy) * op.width + (px + dx);
                    acc[j] += patches(e, k);
                    ++count[j];
                }
        }
    }
    for (std::size_t j = 0; j < acc.size(); ++j)
        if (count[j] > 0) acc[j] /= count[j];
    return acc;
}

namespace {

// Shared OMP core working from the Gram matrix: correlations are
// maintained as D^T r = D^T y - G_S c and the residual norm via
// ||r||^2 = ||y||^2 - (D_S^T y)^T c, both exact for the LS refit.
SparseCode omp_with_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& dty, double y_sq,
                         int s) {
    const int n_atoms = static_cast<int>(gram.cols());
    s = std::min(s, n_atoms);

    SparseCode code;
    if (s < 1) throw std::invalid_argument("omp: sparsity must be >= 1");

    std::vector<char> banned(static_cast<std::size_t>(n_atoms), 0);
    std::vector<int> support;
    Eigen::VectorXd corr = dty;
    Eigen::VectorXd coef;
    double err_sq = y_sq;
    const double stop_tol = 1e-10;
    const double corr_tol = 1e-12 * std::max(1.0, std::sqrt(y_sq));

    while (static_cast<int>(support.size()) < s) {
        if (std::sqrt(std::max(err_sq, 0.0)) < stop_tol) break;

        int best = -1;
        double best_abs = 0.0;
        for (int j = 0; j < n_atoms; ++j) {
            if (banned[j]) continue;
            const double a = std::abs(corr[j]);
            if (a > best_abs) {  // strict >: ties resolve to the lowest index
                best_abs = a;
                best = j;
            }
        }
        if (best < 0 || best_abs <= corr_tol) break;
        banned[best] = 1;
        support.push_back(best);

        const int k = static_cast<int>(support.size());
        Eigen::MatrixXd g(k, k);
        Eigen::VectorXd rhs(k);
        for (int a = 0; a < k; ++a) {
            rhs[a] = dty[support[a]];
            for (int b = 0; b < k; ++b) g(a, b) = gram(support[a], support[b]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
        bool ok = ldlt.info() == Eigen::Success;
        if (ok) {
            const auto d = ldlt.vectorD();
            ok = d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff());
        }
        if (!ok) {
            support.pop_back();  // rank-deficient: drop the atom, keep going
            continue;
        }
        coef = ldlt.solve(rhs);

        corr = dty;
        for (int a = 0; a < k; ++a) corr -= gram.col(support[a]) * coef[a];
        err_sq = y_sq - rhs.dot(coef);
    }

    code.idx = std::move(support);
    code.val.assign(code.idx.size(), 0.0);
    for (std::size_t a = 0; a < code.idx.size(); ++a) code.val[a] = coef[static_cast<int>(a)];
    return code;
}

Eigen::VectorXd densify(const SparseCode& c, int n) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < c.idx.size(); ++a) out[c.idx[a]] = c.val[a];
    return out;
}

}  // namespace

SparseCode omp(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& y, int s) {
    if (atoms.rows() != y.size()) throw std::invalid_argument("omp: dimension mismatch");
    const Eigen::MatrixXd gram = atoms.transpose() * atoms;
    return omp_with_gram(gram, atoms.transpose() * y, y.squaredNorm(), s);
}

Dictionary ksvd_learn(const Eigen::MatrixXd& data, int n_atoms, int sparsity, int n_iters,
                      std::uint64_t seed, std::vector<double>* objective_trace) {
    const int m = static_cast<int>(data.rows());
    const int n = static_cast<int>(data.cols());
    if (n < 1) throw std::invalid_argument("ksvd_learn: need at least one data column");
    if (n_atoms < 1 || sparsity < 1 || n_iters < 1)
        throw std::invalid_argument("ksvd_learn: n_atoms, sparsity, n_iters must be >= 1");

    Rng rng(seed, 0x6b737664ULL);
    const auto random_unit = [&](Eigen::VectorXd& v) {
        do {
            for (int i = 0; i < m; ++i) v[i] = rng.normal();
        } while (v.norm() < 1e-12);
        v /= v.norm();
    };

    // Init from a seeded sample of data columns (distinct while possible).
    Eigen::MatrixXd atoms(m, n_atoms);
    {
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[i] = i;
        for (int i = 0; i < std::min(n_atoms, n); ++i) {
            const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
            std::swap(order[i], order[j]);
        }
        Eigen::VectorXd v(m);
        for (int k = 0; k < n_atoms; ++k) {
            if (k < n && data.col(order[k]).norm() > 1e-12) {
                atoms.col(k) = data.col(order[k]).normalized();
            } else {
                random_unit(v);
                atoms.col(k) = v;
            }
        }
    }

    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(n_atoms, n);
    std::vector<std::vector<int>> users(static_cast<std::size_t>(n_atoms));

    for (int round = 0; round < n_iters; ++round) {
        // Sparse-coding stage.
        const Eigen::MatrixXd gram = atoms.transpose() * atoms;
        const Eigen::MatrixXd dty_all = atoms.transpose() * data;
        for (auto& u : users) u.clear();
        for (int j = 0; j < n; ++j) {
            const SparseCode c =
                omp_with_gram(gram, dty_all.col(j), data.col(j).squaredNorm(), sparsity);
            coeffs.col(j) = densify(c, n_atoms);
            for (const int k : c.idx) users[k].push_back(j);
        }

        // Dictionary-update stage on the running residual R = data - D C.
        Eigen::MatrixXd resid = data - atoms * coeffs;
        std::vector<char> claimed(static_cast<std::size_t>(n), 0);
        for (int k = 0; k < n_atoms; ++k) {
            const auto& omega = users[k];
            if (omega.empty()) {
                // Replace the dead atom by the worst-represented column.
                int worst = -1;
                double worst_sq = -1.0;
                for (int j = 0; j < n; ++j) {
                    if (claimed[j]) continue;
                    const double e = resid.col(j).squaredNorm();
                    if (e > worst_sq) {
                        worst_sq = e;
                        worst = j;
                    }
                }
                if (worst >= 0 && data.col(worst).norm() > 1e-12) {
                    claimed[worst] = 1;
                    atoms.col(k) = data.col(worst).normalized();
                } else {
                    Eigen::VectorXd v(m);
                    random_unit(v);
                    atoms.col(k) = v;
                }
                continue;
            }

            Eigen::MatrixXd err(m, static_cast<int>(omega.size()));
            for (std::size_t t = 0; t < omega.size(); ++t)
                err.col(static_cast<int>(t)) =
                    resid.col(omega[t]) + atoms.col(k) * coeffs(k, omega[t]);

            Eigen::JacobiSVD<Eigen::MatrixXd> svd(err,
                                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
            Eigen::VectorXd u = svd.matrixU().col(0);
            Eigen::VectorXd v = svd.matrixV().col(0) * svd.singularValues()[0];
            // Deterministic sign: largest-magnitude component of u positive.
            int imax = 0;
            for (int i = 1; i < m; ++i)
                if (std::abs(u[i]) > std::abs(u[imax])) imax = i;
            if (u[imax] < 0.0) {
                u = -u;
                v = -v;
            }
            atoms.col(k) = u;
            for (std::size_t t = 0; t < omega.size(); ++t) {
                coeffs(k, omega[t]) = v[static_cast<int>(t)];
                resid.col(omega[t]) = err.col(static_cast<int>(t)) - u * v[static_cast<int>(t)];
            }
        }

        if (objective_trace) objective_trace->push_back((data - atoms * coeffs).norm());
    }

    Dictionary d;
    d.atoms = std::move(atoms);
    const int pw = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    d.patch_w = pw * pw == m ? pw : 0;
    return d;
}

Eigen::MatrixXd build_learning_data(const SparseMatrix& k_mb,
                                    const std::vector<DenseVector>& priors,
                                    const PatchOperator& op, int n_train, std::uint64_t seed) {
    op.validate();
    if (priors.empty()) throw std::invalid_argument("build_learning_data: no priors");
    if (k_mb.rows() != k_mb.cols() ||
        k_mb.rows() != op.width * op.height)
        throw std::invalid_argument("build_learning_data: K_Mb shape mismatch");

    const int per_prior = op.n_patches();
    Eigen::MatrixXd all(op.patch_dim(), per_prior * static_cast<int>(priors.size()));
    for (std::size_t t = 0; t < priors.size(); ++t) {
        DenseVector b;
        try {
            b = solve_sparse(k_mb, priors[t], 0.0);
        } catch (const NumericError&) {
            double trace = 0.0;
            for (int i = 0; i < k_mb.rows(); ++i) trace += k_mb.coeff(i, i);
            b = solve_sparse(k_mb, priors[t], 1e-8 * trace / std::max(1, k_mb.rows()));
        }
        all.middleCols(static_cast<int>(t) * per_prior, per_prior) = extract_patches(op, b);
    }

    const int total = static_cast<int>(all.cols());
    if (n_train <= 0 || n_train >= total) return all;

    std::vector<int> order(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) order[i] = i;
    Rng rng(seed, 0x747261696eULL);
    for (int i = 0; i < n_train; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(total - i)));
        std::swap(order[i], order[j]);
    }
    std::sort(order.begin(), order.begin() + n_train);
    Eigen::MatrixXd out(op.patch_dim(), n_train);
    for (int i = 0; i < n_train; ++i) out.col(i) = all.col(order[i]);
    return out;
}

Dictionary map_dictionary(const SparseMatrix& k_tilde, const Dictionary& d_b,
                          const PatchOperator& op) {
    op.validate();
    const int mp = op.patch_dim();
    if (d_b.atoms.rows() != mp)
        throw std::invalid_argument("map_dictionary: atom dimension mismatch");
    if (k_tilde.rows() != k_tilde.cols() || k_tilde.rows() != op.width * op.height)
        throw std::invalid_argument("map_dictionary: Ktilde shape mismatch");

    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(mp, mp);
    std::vector<int> support(static_cast<std::size_t>(mp));
    for (int py = 0; py + op.patch_w <= op.height; py += op.stride) {
        for (int px = 0; px + op.patch_w <= op.width; px += op.stride) {
            int e = 0;
            for (int dy = 0; dy < op.patch_w; ++dy)
                for (int dx = 0; dx < op.patch_w; ++dx, ++e)
                    support[e] = (py + dy) * op.width + (px + dx);
            for (int a = 0; a < mp; ++a)
                for (int b = 0; b < mp; ++b) local(a, b) += k_tilde.coeff(support[a], support[b]);
        }
    }
    local /= static_cast<double>(op.n_patches());

    Dictionary out;
    out.patch_w = op.patch_w;
    out.atoms = local * d_b.atoms;
    for (int k = 0; k < out.atoms.cols(); ++k) {
        const double nrm = out.atoms.col(k).norm();
        if (nrm > 1e-12)
            out.atoms.col(k) /= nrm;
        else
            out.atoms.col(k) = d_b.atoms.col(k);  // degenerate mapping: keep the source atom
    }
    return out;
}

DenseVector code_coefficients(const Dictionary& d_a, const DenseVector& field,
                              const PatchOperator& op, int sparsity) {
    op.validate();
    if (d_a.atoms.rows() != op.patch_dim())
        throw std::invalid_argument("code_coefficients: atom dimension mismatch");

    const Eigen::MatrixXd patches = extract_patches(op, field);
    const Eigen::MatrixXd gram = d_a.atoms.transpose() * d_a.atoms;
    const Eigen::MatrixXd dty_all = d_a.atoms.transpose() * patches;

    Eigen::MatrixXd coded(op.patch_dim(), op.n_patches());
    for (int j = 0; j < patches.cols(); ++j) {
        const SparseCode c =
            omp_with_gram(gram, dty_all.col(j), patches.col(j).squaredNorm(), sparsity);
        Eigen::VectorXd approx = Eigen::VectorXd::Zero(op.patch_dim());
        for (std::size_t a = 0; a < c.idx.size(); ++a)
            approx += d_a.atoms.col(c.idx[a]) * c.val[a];
        coded.col(j) = approx;
    }
    return reassemble_patches(op, coded);
}

}  // namespace mkrem
