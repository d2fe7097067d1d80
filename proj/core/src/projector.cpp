#include "mkrem/projector.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mkrem {

void Geometry::validate() const {
    if (image_width < 1 || image_height < 1 || n_angles < 1 || n_radial < 1)
        throw std::invalid_argument("Geometry: all counts must be >= 1");
    if (!(pixel_size > 0.0)) throw std::invalid_argument("Geometry: pixel_size must be positive");
}

namespace {

// Exact crossing-length trace of one ray through the pixel grid. Segment
// midpoints pick the owning pixel, which keeps gridline-riding rays
// consistent (they land in the upper/right cell).
void trace_ray(const Geometry& g, double ox, double oy, double dx, double dy, int row,
               std::vector<Triplet>& out) {
    const double px = g.pixel_size;
    const double x0 = -0.5 * g.image_width * px;
    const double y0 = -0.5 * g.image_height * px;
    const double x1 = -x0;
    const double y1 = -y0;
    constexpr double kParallel = 1e-12;

    double t_lo = -1e30, t_hi = 1e30;
    if (std::abs(dx) > kParallel) {
        const double ta = (x0 - ox) / dx, tb = (x1 - ox) / dx;
        t_lo = std::max(t_lo, std::min(ta, tb));
        t_hi = std::min(t_hi, std::max(ta, tb));
    } else if (ox < x0 || ox > x1) {
        return;
    }
    if (std::abs(dy) > kParallel) {
        const double ta = (y0 - oy) / dy, tb = (y1 - oy) / dy;
        t_lo = std::max(t_lo, std::min(ta, tb));
        t_hi = std::min(t_hi, std::max(ta, tb));
    } else if (oy < y0 || oy > y1) {
        return;
    }
    if (t_hi - t_lo <= kParallel) return;

    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(g.image_width + g.image_height) + 2);
    ts.push_back(t_lo);
    ts.push_back(t_hi);
    if (std::abs(dx) > kParallel)
        for (int k = 0; k <= g.image_width; ++k) {
            const double t = (x0 + k * px - ox) / dx;
            if (t > t_lo && t < t_hi) ts.push_back(t);
        }
    if (std::abs(dy) > kParallel)
        for (int k = 0; k <= g.image_height; ++k) {
            const double t = (y0 + k * px - oy) / dy;
            if (t > t_lo && t < t_hi) ts.push_back(t);
        }
    std::sort(ts.begin(), ts.end());

    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const double len = ts[k + 1] - ts[k];
        if (len <= kParallel) continue;
        const double tm = 0.5 * (ts[k] + ts[k + 1]);
        const int ix = static_cast<int>(std::floor((ox + tm * dx - x0) / px));
        const int iy = static_cast<int>(std::floor((oy + tm * dy - y0) / px));
        if (ix < 0 || ix >= g.image_width || iy < 0 || iy >= g.image_height) continue;
        out.push_back({static_cast<std::int32_t>(row),
                       static_cast<std::int32_t>(iy * g.image_width + ix), len});
    }
}

}  // namespace

SparseMatrix build_system_matrix(const Geometry& geom) {
    geom.validate();
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(geom.num_bins()) *
                    static_cast<std::size_t>(geom.image_width + geom.image_height));

    const double s_center = 0.5 * (geom.n_radial - 1);
    for (int ia = 0; ia < geom.n_angles; ++ia) {
        const double theta = 3.14159265358979323846 * ia / geom.n_angles;
        const double dx = std::cos(theta), dy = std::sin(theta);
        for (int ir = 0; ir < geom.n_radial; ++ir) {
            const double s = (ir - s_center) * geom.pixel_size;
            trace_ray(geom, -s * dy, s * dx, dx, dy, ia * geom.n_radial + ir, entries);
        }
    }
    return SparseMatrix::from_triplets(geom.num_bins(), geom.num_voxels(), std::move(entries));
}

SystemModel::SystemModel(Geometry geom, SparseMatrix h, DenseVector r, DenseVector norm)
    : geom_(geom), h_(std::move(h)), r_(std::move(r)), norm_(std::move(norm)) {
    geom_.validate();
    if (h_.rows() != geom_.num_bins() || h_.cols() != geom_.num_voxels())
        throw std::invalid_argument("SystemModel: H shape does not match geometry");
    if (r_.empty()) r_.assign(static_cast<std::size_t>(geom_.num_bins()), 0.0);
    if (r_.size() != static_cast<std::size_t>(geom_.num_bins()))
        throw std::invalid_argument("SystemModel: r length mismatch");
    for (const double v : r_)
        if (v < 0.0) throw std::invalid_argument("SystemModel: r must be nonnegative");
    if (!norm_.empty() && norm_.size() != static_cast<std::size_t>(geom_.num_bins()))
        throw std::invalid_argument("SystemModel: norm length mismatch");
}

DenseVector SystemModel::forward(const DenseVector& x) const {
    DenseVector p = matvec(h_, x);
    if (!norm_.empty())
        for (std::size_t i = 0; i < p.size(); ++i) p[i] *= norm_[i];
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += r_[i];
    return p;
}

DenseVector SystemModel::backproject(const DenseVector& q) const {
    if (norm_.empty()) return matvec_transpose(h_, q);
    return matvec_transpose(h_, hadamard(norm_, q));
}

DenseVector SystemModel::sensitivity() const {
    return backproject(ones(static_cast<std::size_t>(geom_.num_bins())));
}

}  // namespace mkrem
