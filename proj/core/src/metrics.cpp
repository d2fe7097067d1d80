#include "mkrem/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace mkrem {

void EnsembleResult::validate() const {
    if (images.empty()) throw std::invalid_argument("EnsembleResult: no realizations");
    for (const auto& r : images) {
        if (r.size() != iterations.size())
            throw std::invalid_argument("EnsembleResult: iteration counts differ");
        for (const auto& img : r)
            if (img.size() != reference.size())
                throw std::invalid_argument("EnsembleResult: image length mismatch");
    }
}

double mse(const DenseVector& x, const DenseVector& f) {
    if (x.size() != f.size()) throw std::invalid_argument("mse: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - f[j];
        num += d * d;
        den += f[j] * f[j];
    }
    if (!(den > 0.0)) throw std::invalid_argument("mse: reference has zero energy");
    return num / den;
}

double bias(const DenseVector& xbar, const DenseVector& f) {
    if (xbar.size() != f.size()) throw std::invalid_argument("bias: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        num += xbar[j] - f[j];
        den += f[j];
    }
    if (den == 0.0) throw std::invalid_argument("bias: reference sums to zero");
    return num / den;
}

DenseVector ensemble_mean(const std::vector<DenseVector>& realizations) {
    if (realizations.empty()) throw std::invalid_argument("ensemble_mean: empty ensemble");
    DenseVector mean(realizations[0].size(), 0.0);
    for (const auto& x : realizations) {
        if (x.size() != mean.size()) throw std::invalid_argument("ensemble_mean: length mismatch");
        axpy(1.0, x, mean);
    }
    const double inv = 1.0 / static_cast<double>(realizations.size());
    for (double& v : mean) v *= inv;
    return mean;
}

double variance(const std::vector<DenseVector>& realizations, const DenseVector& f) {
    if (realizations.empty()) throw std::invalid_argument("variance: empty ensemble");
    const DenseVector mean = ensemble_mean(realizations);
    double den = 0.0;
    for (const double v : f) den += v * v;
    if (!(den > 0.0)) throw std::invalid_argument("variance: reference has zero energy");

    double acc = 0.0;
    for (const auto& x : realizations) {
        if (x.size() != f.size()) throw std::invalid_argument("variance: length mismatch");
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - mean[j];
            acc += d * d;
        }
    }
    return acc / (static_cast<double>(realizations.size()) * den);
}

std::vector<std::pair<int, double>> amse_curve(const EnsembleResult& ensemble) {
    ensemble.validate();
    std::vector<std::pair<int, double>> curve;
    curve.reserve(ensemble.iterations.size());
    for (std::size_t t = 0; t < ensemble.iterations.size(); ++t) {
        double acc = 0.0;
        for (const auto& r : ensemble.images) acc += mse(r[t], ensemble.reference);
        curve.emplace_back(ensemble.iterations[t],
                           acc / static_cast<double>(ensemble.images.size()));
    }
    return curve;
}

std::vector<double> line_profile(const DenseVector& x, int width, int height, int row) {
    if (x.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("line_profile: image size mismatch");
    if (row < 0 || row >= height) throw std::invalid_argument("line_profile: row out of range");
    return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(row) * width,
                               x.begin() + static_cast<std::ptrdiff_t>(row + 1) * width);
}

}  // namespace mkrem
