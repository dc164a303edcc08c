#include "shortmr/transform.hpp"

#include <algorithm>
#include <cmath>

#include "shortmr/errors.hpp"

namespace shortmr {

SpatialTransform SpatialTransform::identity_transform() {
  SpatialTransform t;
  t.kind = Kind::identity;
  return t;
}

SpatialTransform SpatialTransform::from_affine(const std::array<double, 16>& m) {
  SpatialTransform t;
  t.kind = Kind::affine;
  t.affine = m;
  invert_affine(m);  // reject singular matrices up front
  return t;
}

SpatialTransform SpatialTransform::from_displacement(Volume dz, Volume dy,
                                                     Volume dx) {
  if (dz.shape != dy.shape || dy.shape != dx.shape) {
    throw ValidationError("displacement field: component shapes differ");
  }
  validate_volume(dz, "displacement dz");
  validate_volume(dy, "displacement dy");
  validate_volume(dx, "displacement dx");
  SpatialTransform t;
  t.kind = Kind::displacement;
  t.disp_z = std::move(dz);
  t.disp_y = std::move(dy);
  t.disp_x = std::move(dx);
  return t;
}

std::array<double, 16> invert_affine(const std::array<double, 16>& m) {
  // Gauss-Jordan with partial pivoting on the augmented 4x8 system.
  double a[4][8] = {};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) a[r][c] = m[r * 4 + c];
    a[r][4 + r] = 1.0;
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-12) {
      throw ValidationError("affine transform is not invertible");
    }
    if (piv != col) std::swap_ranges(a[piv], a[piv] + 8, a[col]);
    const double inv = 1.0 / a[col][col];
    for (int c = 0; c < 8; ++c) a[col][c] *= inv;
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (int c = 0; c < 8; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, 16> out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[r * 4 + c] = a[r][4 + c];
  return out;
}

namespace {

// Samples v at fractional voxel coordinates; zero outside [0, n-1] per axis.
float sample_zero_fill(const Volume& v, double z, double y, double x,
                       Interp mode) {
  const double dmax = static_cast<double>(v.shape[0] - 1);
  const double hmax = static_cast<double>(v.shape[1] - 1);
  const double wmax = static_cast<double>(v.shape[2] - 1);
  const double tol = 1e-9;
  if (z < -tol || z > dmax + tol || y < -tol || y > hmax + tol || x < -tol ||
      x > wmax + tol) {
    return 0.0f;
  }
  z = std::clamp(z, 0.0, dmax);
  y = std::clamp(y, 0.0, hmax);
  x = std::clamp(x, 0.0, wmax);
  if (mode == Interp::nearest) {
    return v.at(static_cast<std::int64_t>(std::floor(z + 0.5)),
                static_cast<std::int64_t>(std::floor(y + 0.5)),
                static_cast<std::int64_t>(std::floor(x + 0.5)));
  }
  const auto z0 = static_cast<std::int64_t>(std::floor(z));
  const auto y0 = static_cast<std::int64_t>(std::floor(y));
  const auto x0 = static_cast<std::int64_t>(std::floor(x));
  const auto z1 = std::min<std::int64_t>(z0 + 1, v.shape[0] - 1);
  const auto y1 = std::min<std::int64_t>(y0 + 1, v.shape[1] - 1);
  const auto x1 = std::min<std::int64_t>(x0 + 1, v.shape[2] - 1);
  const double fz = z - static_cast<double>(z0);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  const double c00 = v.at(z0, y0, x0) * (1 - fx) + v.at(z0, y0, x1) * fx;
  const double c01 = v.at(z0, y1, x0) * (1 - fx) + v.at(z0, y1, x1) * fx;
  const double c10 = v.at(z1, y0, x0) * (1 - fx) + v.at(z1, y0, x1) * fx;
  const double c11 = v.at(z1, y1, x0) * (1 - fx) + v.at(z1, y1, x1) * fx;
  const double c0 = c00 * (1 - fy) + c01 * fy;
  const double c1 = c10 * (1 - fy) + c11 * fy;
  return static_cast<float>(c0 * (1 - fz) + c1 * fz);
}

}  // namespace

Volume apply_transform(const Volume& v, const SpatialTransform& t, Interp mode,
                       std::optional<Shape3> target_shape,
                       std::optional<Spacing3> target_spacing) {
  validate_volume(v);
  if (t.kind == SpatialTransform::Kind::identity && !target_shape) {
    return v;
  }

  Shape3 tshape;
  Spacing3 tspacing;
  if (t.kind == SpatialTransform::Kind::displacement) {
    tshape = target_shape.value_or(t.disp_z.shape);
    tspacing = target_spacing.value_or(t.disp_z.spacing);
    if (tshape != t.disp_z.shape) {
      throw ValidationError("displacement field shape must match target space");
    }
  } else {
    tshape = target_shape.value_or(v.shape);
    tspacing = target_spacing.value_or(v.spacing);
  }

  Volume out(tshape, tspacing);

  if (t.kind == SpatialTransform::Kind::identity) {
    if (tshape == v.shape) {
      out.data = v.data;
      return out;
    }
    // identity mapping between differently sized grids: voxelwise copy on the
    // overlapping index range, zero elsewhere
    for (std::int64_t z = 0; z < std::min(tshape[0], v.shape[0]); ++z)
      for (std::int64_t y = 0; y < std::min(tshape[1], v.shape[1]); ++y)
        for (std::int64_t x = 0; x < std::min(tshape[2], v.shape[2]); ++x)
          out.at(z, y, x) = v.at(z, y, x);
    return out;
  }

  std::array<double, 16> inv{};
  if (t.kind == SpatialTransform::Kind::affine) inv = invert_affine(t.affine);

  for (std::int64_t z = 0; z < tshape[0]; ++z) {
    for (std::int64_t y = 0; y < tshape[1]; ++y) {
      for (std::int64_t x = 0; x < tshape[2]; ++x) {
        // mm position of the output voxel in atlas space
        const double pz = static_cast<double>(z) * tspacing[0];
        const double py = static_cast<double>(y) * tspacing[1];
        const double px = static_cast<double>(x) * tspacing[2];
        double sz, sy, sx;
        if (t.kind == SpatialTransform::Kind::affine) {
          sz = inv[0] * pz + inv[1] * py + inv[2] * px + inv[3];
          sy = inv[4] * pz + inv[5] * py + inv[6] * px + inv[7];
          sx = inv[8] * pz + inv[9] * py + inv[10] * px + inv[11];
        } else {
          sz = pz + t.disp_z.at(z, y, x);
          sy = py + t.disp_y.at(z, y, x);
          sx = px + t.disp_x.at(z, y, x);
        }
        out.at(z, y, x) = sample_zero_fill(v, sz / v.spacing[0],
                                           sy / v.spacing[1],
                                           sx / v.spacing[2], mode);
      }
    }
  }
  return out;
}

}  // namespace shortmr
