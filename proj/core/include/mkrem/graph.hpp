#pragma once

#include "mkrem/linalg.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mkrem {

struct GraphSpec {
    int window_m = 9;     // feature window size (perfect square)
    int knn = 7;          // bandwidth: b_i is the (knn+1)-smallest row distance
    int knn_graph = 32;   // affinity support per voxel; 0 keeps the dense graph
    double eps_t = 1e-4;  // diffusion-power convergence threshold
    int t_max = 8;
    bool symmetrize_q = false;

    void validate() const;
};

// Row i is the flattened sqrt(m) x sqrt(m) window around voxel i,
// zero-padded at the borders.
Eigen::MatrixXd feature_windows(const DenseVector& img, int width, int height, int window_m);

// Markov transition matrix of the window-feature graph:
// E(i,j) = ||y_i - y_j||, W(i,j) = exp(-(E(i,j)/b_i)^2) with the adaptive
// bandwidth b_i, symmetrized to W + W^T and row-normalized. knn_graph > 0
// restricts the support to the union of each voxel's nearest windows.
SparseMatrix markov_matrix(const Eigen::MatrixXd& y, int knn, int knn_graph);

// Smallest t >= 1 with ||Z^t Y - Z^{t-1} Y||_F^2 / ||Z^{t-1} Y||_F^2 <= eps_t;
// returns t_max (converged=false) if never met.
int select_power(const SparseMatrix& z, const Eigen::MatrixXd& y, double eps_t, int t_max,
                 bool* converged = nullptr);

// Q = I - Z^t and Q_a = K_Ma^T Q K_Ma. Both are applied as operator
// compositions; the explicit sparse matrices (dense fill makes them
// impractical at full image scale) are materialized on demand for small
// problems and tests.
struct LaplacianPack {
    SparseMatrix z;
    int t = 1;
    bool power_converged = true;
    bool symmetrize_q = false;

    DenseVector apply_q(const DenseVector& v) const;
    DenseVector apply_qa(const SparseMatrix& k_ma, const DenseVector& a) const;
    SparseMatrix q_matrix() const;
    SparseMatrix qa_matrix(const SparseMatrix& k_ma) const;  // entries < 1e-14 pruned
};

// Z averaged over the training images, then the diffusion power selected
// on their stacked window features.
LaplacianPack build_laplacian(const std::vector<DenseVector>& priors, int width, int height,
                              const GraphSpec& spec);

}  // namespace mkrem
