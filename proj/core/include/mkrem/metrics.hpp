#pragma once

#include "mkrem/linalg.hpp"

#include <utility>
#include <vector>

namespace mkrem {

// Per-realization, per-recorded-iteration reconstructions against one
// fixed reference image.
struct EnsembleResult {
    std::vector<int> iterations;                      // shared recorded indices
    std::vector<std::vector<DenseVector>> images;     // [realization][iteration]
    DenseVector reference;

    void validate() const;
};

// MSE(x, f) = sum_j (x_j - f_j)^2 / sum_j f_j^2
double mse(const DenseVector& x, const DenseVector& f);

// Signed relative total bias of the ensemble-mean image:
// sum_j (xbar_j - f_j) / sum_j f_j
double bias(const DenseVector& xbar, const DenseVector& f);

// (1/O) sum_i sum_j (x_j^i - mean_i x_j^i)^2 / sum_j f_j^2 over the images
// of one iteration across realizations.
double variance(const std::vector<DenseVector>& realizations, const DenseVector& f);

// Mean over realizations of MSE at each recorded iteration.
std::vector<std::pair<int, double>> amse_curve(const EnsembleResult& ensemble);

DenseVector ensemble_mean(const std::vector<DenseVector>& realizations);

// Pixel values of one image row, in column order.
std::vector<double> line_profile(const DenseVector& x, int width, int height, int row);

}  // namespace mkrem
