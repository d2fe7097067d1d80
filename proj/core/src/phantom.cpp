#include "mkrem/phantom.hpp"

#include "mkrem/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mkrem {

namespace {

bool inside_ellipse(double x, double y, double cx, double cy, double a, double b) {
    const double u = (x - cx) / a;
    const double v = (y - cy) / b;
    return u * u + v * v <= 1.0;
}

enum class Region { background, gray, white, ventricle, lesion };

}  // namespace

PhantomPair make_brain_like_phantom(int width, int height, bool lesion,
                                    const PhantomConfig& cfg) {
    if (width < 16 || height < 16)
        throw std::invalid_argument("make_brain_like_phantom: dimensions must be >= 16");
    if (cfg.n_priors < 1)
        throw std::invalid_argument("make_brain_like_phantom: n_priors must be >= 1");

    const double w = width, h = height;
    const double cx = 0.5 * w, cy = 0.5 * h;
    // Head outline holds the gray-matter band; white matter fills the
    // interior ellipse; two ventricles sit beside the midline.
    const double head_a = 0.45 * w, head_b = 0.45 * h;
    const double white_a = 0.34 * w, white_b = 0.34 * h;
    const double vent_a = 0.08 * w, vent_b = 0.16 * h;
    const double vent_dx = 0.10 * w;
    const double les_cx = cx + 0.20 * w, les_cy = cy - 0.15 * h;
    const double les_r = std::max(1.5, 3.0 * w / 64.0);

    PhantomPair out;
    out.width = width;
    out.height = height;
    out.activity.assign(static_cast<std::size_t>(width) * height, 0.0);
    out.lesion_mask.assign(out.activity.size(), 0);

    std::vector<Region> regions(out.activity.size(), Region::background);
    for (int iy = 0; iy < height; ++iy) {
        for (int ix = 0; ix < width; ++ix) {
            const double x = ix + 0.5, y = iy + 0.5;
            const std::size_t j = static_cast<std::size_t>(iy) * width + ix;
            if (!inside_ellipse(x, y, cx, cy, head_a, head_b)) continue;
            if (inside_ellipse(x, y, cx - vent_dx, cy, vent_a, vent_b) ||
                inside_ellipse(x, y, cx + vent_dx, cy, vent_a, vent_b)) {
                regions[j] = Region::ventricle;
            } else if (inside_ellipse(x, y, cx, cy, white_a, white_b)) {
                regions[j] = Region::white;
            } else {
                regions[j] = Region::gray;
            }
            if (lesion && regions[j] == Region::white &&
                inside_ellipse(x, y, les_cx, les_cy, les_r, les_r)) {
                regions[j] = Region::lesion;
                out.lesion_mask[j] = 1;
            }
        }
    }
    if (lesion) out.lesion_row = static_cast<int>(les_cy);

    for (std::size_t j = 0; j < regions.size(); ++j) {
        switch (regions[j]) {
            case Region::background: out.activity[j] = cfg.activity_background; break;
            case Region::gray: out.activity[j] = cfg.activity_gray; break;
            case Region::white: out.activity[j] = cfg.activity_white; break;
            case Region::ventricle: out.activity[j] = cfg.activity_ventricle; break;
            case Region::lesion: out.activity[j] = cfg.activity_lesion; break;
        }
    }

    const double pr_lo = std::min({cfg.prior_background, cfg.prior_white, cfg.prior_gray,
                                   cfg.prior_ventricle});
    const double pr_hi = std::max({cfg.prior_background, cfg.prior_white, cfg.prior_gray,
                                   cfg.prior_ventricle});
    const double sigma = cfg.prior_noise_frac * (pr_hi - pr_lo);

    for (int t = 0; t < cfg.n_priors; ++t) {
        DenseVector prior(out.activity.size(), 0.0);
        Rng rng(cfg.seed, Rng::mix(0x7072696f72ULL, static_cast<std::uint64_t>(t)));
        for (std::size_t j = 0; j < regions.size(); ++j) {
            double v = cfg.prior_background;
            switch (regions[j]) {
                case Region::background: v = cfg.prior_background; break;
                case Region::gray: v = cfg.prior_gray; break;
                case Region::white:
                case Region::lesion: v = cfg.prior_white; break;  // lesion invisible in prior
                case Region::ventricle: v = cfg.prior_ventricle; break;
            }
            prior[j] = v + sigma * rng.normal();
        }
        out.priors.push_back(std::move(prior));
    }
    return out;
}

DenseVector scale_to_counts(const DenseVector& clean, double target_counts) {
    const double total = vec_sum(clean);
    if (!(total > 0.0))
        throw std::invalid_argument("scale_to_counts: sinogram must have positive sum");
    if (!(target_counts > 0.0))
        throw std::invalid_argument("scale_to_counts: target_counts must be positive");
    const double scale = target_counts / total;
    DenseVector out(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) out[i] = clean[i] * scale;
    return out;
}

DenseVector poissonize(const DenseVector& mean, std::uint64_t seed) {
    DenseVector out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (mean[i] < 0.0) throw std::invalid_argument("poissonize: negative mean");
        // Counter-style stream: one generator per bin keyed by (seed, bin),
        // so bins are independent and order of evaluation is irrelevant.
        Rng rng(seed, i);
        out[i] = static_cast<double>(rng.poisson(mean[i]));
    }
    return out;
}

}  // namespace mkrem
