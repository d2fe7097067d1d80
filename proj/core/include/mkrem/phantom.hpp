#pragma once

#include "mkrem/linalg.hpp"

#include <cstdint>
#include <vector>

namespace mkrem {

// Region intensities are arbitrary units; the prior deliberately orders
// them differently from the activity (anatomical rather than functional
// contrast).
struct PhantomConfig {
    double activity_background = 0.0;
    double activity_white = 1.0;
    double activity_gray = 4.0;
    double activity_ventricle = 0.5;
    double activity_lesion = 6.0;
    double prior_background = 0.0;
    double prior_white = 3.0;
    double prior_gray = 1.0;
    double prior_ventricle = 4.0;
    double prior_noise_frac = 0.02;  // sigma as fraction of prior dynamic range
    int n_priors = 1;
    std::uint64_t seed = 0;
};

struct PhantomPair {
    int width = 0;
    int height = 0;
    DenseVector activity;                // reference PET image f
    std::vector<DenseVector> priors;     // training images (noisy, lesion-free)
    std::vector<std::uint8_t> lesion_mask;
    int lesion_row = -1;                 // row through the lesion center (-1 if none)
};

struct NoiseSpec {
    double target_counts = 64000;
    std::uint64_t seed = 0;
    int n_realizations = 10;
};

// Piecewise-constant head phantom: background, elliptical gray-matter band,
// white-matter interior, two ventricles, and an optional small bright
// lesion in the white matter. Priors share the region boundaries with
// different intensities, no lesion, and additive Gaussian noise.
PhantomPair make_brain_like_phantom(int width, int height, bool lesion,
                                    const PhantomConfig& cfg = {});

// Rescales so the output sums exactly to target_counts.
DenseVector scale_to_counts(const DenseVector& clean, double target_counts);

// Independent Poisson draw per bin; pure function of (seed, mean).
DenseVector poissonize(const DenseVector& mean, std::uint64_t seed);

}  // namespace mkrem
