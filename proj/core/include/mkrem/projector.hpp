#pragma once

#include "mkrem/linalg.hpp"

namespace mkrem {

// 2-D parallel-beam geometry. Angles are uniform over [0, pi); rays at
// angle theta travel along (cos theta, sin theta) with perpendicular
// offsets s_j = (j - (n_radial-1)/2) * pixel_size, so the detector is
// centered on the image. Sinogram bins are ordered angle-major:
// bin = angle_index * n_radial + radial_index.
struct Geometry {
    int image_width = 64;
    int image_height = 64;
    int n_angles = 90;
    int n_radial = 95;
    double pixel_size = 1.0;

    int num_voxels() const { return image_width * image_height; }
    int num_bins() const { return n_angles * n_radial; }
    void validate() const;
};

// H(i,j) = intersection length of ray i with pixel j.
SparseMatrix build_system_matrix(const Geometry& geom);

// Forward/back projection pair around H with optional per-bin
// multiplicative correction `norm` and additive expectation `r`:
//   forward(x)   = norm o (H x) + r
//   backproject(q) = H^T (norm o q)
// so the two stay adjoint (r excluded) and the sensitivity image is
// backproject(1_N). Immutable after construction.
class SystemModel {
  public:
    SystemModel(Geometry geom, SparseMatrix h, DenseVector r = {}, DenseVector norm = {});

    const Geometry& geom() const { return geom_; }
    const SparseMatrix& h() const { return h_; }
    const DenseVector& r() const { return r_; }
    const DenseVector& norm() const { return norm_; }

    DenseVector forward(const DenseVector& x) const;
    DenseVector backproject(const DenseVector& q) const;
    DenseVector sensitivity() const;  // backproject(1_N)

  private:
    Geometry geom_;
    SparseMatrix h_;
    DenseVector r_;
    DenseVector norm_;  // empty means all ones
};

}  // namespace mkrem
