#pragma once

#include "mkrem/linalg.hpp"

#include <span>
#include <vector>

namespace mkrem {

enum class KernelKind { gaussian, polynomial };
enum class NeighborhoodMode { window, knn };
enum class FeatureMode { intensity, patch };

// One kernel-matrix factor. `window_j` is the width of the square spatial
// neighborhood (J voxels per side); `feature_window` the width of the
// intensity patch fed to the kernel function.
struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double sigma = 0.5;
    double gamma = 0.0;
    int degree = 1;
    NeighborhoodMode neighborhood = NeighborhoodMode::window;
    int window_j = 21;
    int knn = 50;
    FeatureMode feature = FeatureMode::patch;
    int feature_window = 3;
    bool zscore_features = true;
    bool normalize_rows = true;

    void validate() const;
};

struct MultiKernelSpec {
    std::vector<KernelSpec> factors;  // product order, length G >= 1
};

double kernel_value(const KernelSpec& spec, std::span<const double> u,
                    std::span<const double> v);

// Per-voxel feature vectors (row-major, M x feature_dim): the voxel's
// z-scored intensity or intensity patch from every prior, concatenated.
// Patches are clamped at the image border.
std::vector<double> kernel_features(const std::vector<DenseVector>& priors, int width,
                                    int height, const KernelSpec& spec, int* feature_dim);

// M x M kernel matrix restricted to the spatial window (or feature-space
// kNN set) of each voxel, optionally row-normalized.
SparseMatrix build_single_kernel(const std::vector<DenseVector>& priors, int width, int height,
                                 const KernelSpec& spec);

// Ordered product of the G factor matrices.
SparseMatrix build_multi_kernel(const std::vector<DenseVector>& priors, int width, int height,
                                const MultiKernelSpec& spec);

// Solves K_Ma * Ktilde = K_Mb. Tries the plain solve first and falls back
// to a ridge (negative = auto: 1e-8 * trace(K_Ma)/M). Guarantees
// ||K_Ma*Ktilde - K_Mb||_F / ||K_Mb||_F <= 1e-6 or throws NumericError.
SparseMatrix factorize(const SparseMatrix& k_ma, const SparseMatrix& k_mb, double ridge = -1.0);

}  // namespace mkrem
