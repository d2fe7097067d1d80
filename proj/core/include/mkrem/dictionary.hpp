#pragma once

#include "mkrem/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mkrem {

// Extracts square patch_w x patch_w patches at every stride-aligned
// position fully inside the image.
struct PatchOperator {
    int patch_w = 5;
    int stride = 1;
    int width = 0;
    int height = 0;

    int patch_dim() const { return patch_w * patch_w; }
    int nx() const { return (width - patch_w) / stride + 1; }
    int ny() const { return (height - patch_w) / stride + 1; }
    int n_patches() const { return nx() * ny(); }
    void validate() const;
};

// Column k is the flattened patch at grid position k (row-major over valid
// positions; row-major within the patch).
Eigen::MatrixXd extract_patches(const PatchOperator& op, const DenseVector& img);

// Each pixel becomes the average of all patch copies covering it; pixels
// covered by no patch stay zero.
DenseVector reassemble_patches(const PatchOperator& op, const Eigen::MatrixXd& patches);

struct SparseCode {
    std::vector<int> idx;
    std::vector<double> val;
    int nnz() const { return static_cast<int>(idx.size()); }
};

struct Dictionary {
    Eigen::MatrixXd atoms;  // patch_dim x S, unit-norm columns
    int patch_w = 0;
    int size() const { return static_cast<int>(atoms.cols()); }
};

// Orthogonal matching pursuit: greedy max-|correlation| selection (ties
// to the lowest atom index), least-squares refit on the support each step,
// early stop once the residual norm drops below 1e-10. Atoms that would
// make the support rank-deficient are dropped and excluded from further
// selection.
SparseCode omp(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& y, int s);

// K-SVD dictionary learning: alternates OMP coding of all columns with
// per-atom rank-1 SVD updates (coefficients of the using columns updated
// simultaneously). Unused atoms are replaced by the currently
// worst-represented data column. When non-null, objective_trace receives
// ||data - D C||_F after every alternation round.
Dictionary ksvd_learn(const Eigen::MatrixXd& data, int n_atoms, int sparsity, int n_iters,
                      std::uint64_t seed, std::vector<double>* objective_trace = nullptr);

// Solves K_Mb * B = X for every prior image, extracts patches of the
// solutions, and subsamples n_train columns with a seeded RNG
// (n_train <= 0 keeps everything).
Eigen::MatrixXd build_learning_data(const SparseMatrix& k_mb,
                                    const std::vector<DenseVector>& priors,
                                    const PatchOperator& op, int n_train, std::uint64_t seed);

// Maps a b-space dictionary into a-space through the patch restriction of
// Ktilde: the rows/columns of Ktilde on each patch support are averaged
// into one patch_dim x patch_dim local operator which is applied to every
// atom; atoms are re-normalized (scales absorbed into coefficients).
Dictionary map_dictionary(const SparseMatrix& k_tilde, const Dictionary& d_b,
                          const PatchOperator& op);

// Codes the patches of `field` against the dictionary with OMP and returns
// the reassembled sparse approximation D_a c (same length as `field`).
DenseVector code_coefficients(const Dictionary& d_a, const DenseVector& field,
                              const PatchOperator& op, int sparsity);

}  // namespace mkrem
