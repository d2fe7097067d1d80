#pragma once

#include "mkrem/dictionary.hpp"
#include "mkrem/graph.hpp"
#include "mkrem/linalg.hpp"
#include "mkrem/projector.hpp"

#include <cstdint>
#include <vector>

namespace mkrem {

enum class Algorithm { mlem, mlem_f, kem, krem, mkrem };

Algorithm algorithm_from_string(const std::string& name);
std::string algorithm_name(Algorithm a);

struct ReconConfig {
    Algorithm algorithm = Algorithm::mlem;
    int n_iters = 100;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double denom_floor = 0.0;    // <= 0 selects 1e-8 * mean(sensitivity denominator)
    double ratio_floor = 1e-12;  // floor for the p / pbar division
    int record_every = 1;
    std::uint64_t seed = 0;
    bool grad_outside_kt = false;  // study variant: penalty gradients added outside K^T
    int filter_window = 5;         // mlem_f post-filter
    double filter_sigma = 1.0;

    void validate() const;
};

struct DictionaryPack {
    Dictionary atoms;  // a-space dictionary
    PatchOperator op;
    int sparsity = 50;
};

struct ReconResult {
    std::vector<int> iterations;      // recorded iteration indices, 1-based
    std::vector<DenseVector> images;  // x at those iterations
    DenseVector final_image;
    DenseVector final_coefficients;   // kernel coefficients a (or x for MLEM)
};

// One regularized MLEM update. `penalty_grad`, when present, is added to
// the sensitivity denominator; `sens` is the cached backprojection of ones
// (recomputed if null).
DenseVector mlem_step(const SystemModel& model, const DenseVector& x,
                      const DenseVector* penalty_grad, const DenseVector& p,
                      double denom_floor = 0.0, double ratio_floor = 1e-12,
                      const DenseVector* sens = nullptr);

// Kernelized EM update (no regularizers).
DenseVector kem_step(const SystemModel& model, const SparseMatrix& k, const DenseVector& a,
                     const DenseVector& p, double denom_floor = 0.0, double ratio_floor = 1e-12,
                     const DenseVector* sens = nullptr);

// Multi-kernel regularized EM update. `dict_field` is the reassembled
// sparse approximation D_a c^n of the current coefficient image; the graph
// term applies Q_a = K_Ma^T Q K_Ma. Both penalty gradients sit inside the
// K^T product (the `grad_outside_kt` variant moves them out). The
// denominator is floored and the result clamped to keep iterates
// nonnegative.
DenseVector mkrem_step(const SystemModel& model, const SparseMatrix& k_ma, const DenseVector& a,
                       const DenseVector& p, const DenseVector* dict_field,
                       const LaplacianPack* lap, double beta1, double beta2,
                       double denom_floor = 0.0, double ratio_floor = 1e-12,
                       const DenseVector* sens = nullptr, bool grad_outside_kt = false);

// Normalized Gaussian blur with replicated borders.
DenseVector gaussian_postfilter(const DenseVector& img, int width, int height, int window,
                                double sigma);

// Poisson log-likelihood sum_i (p_i log pbar_i - pbar_i), constant term
// dropped.
double poisson_loglik(const SystemModel& model, const DenseVector& x, const DenseVector& p);

// Full reconstruction. `kernel` is required for kem/krem/mkrem; `dict` when
// beta1 > 0 and `lap` when beta2 > 0 (mkrem/krem). The coefficient field
// starts at all ones; x = K a is recorded every record_every iterations
// (the mlem_f trace records filtered snapshots, the iteration itself is
// never filtered).
ReconResult run(const SystemModel& model, const ReconConfig& cfg, const SparseMatrix* kernel,
                const DictionaryPack* dict, const LaplacianPack* lap, const DenseVector& p);

}  // namespace mkrem
