#include "shortmr/volume.hpp"

#include <algorithm>
#include <cmath>

#include "shortmr/errors.hpp"
#include "shortmr/kernels.hpp"

namespace shortmr {

Volume::Volume(Shape3 s, Spacing3 sp) : shape(s), spacing(sp) {
  if (s[0] < 1 || s[1] < 1 || s[2] < 1) {
    throw ValidationError("volume shape components must be >= 1");
  }
  data.assign(static_cast<std::size_t>(s[0] * s[1] * s[2]), 0.0f);
}

void validate_volume(const Volume& v, const std::string& what) {
  if (v.shape[0] < 1 || v.shape[1] < 1 || v.shape[2] < 1) {
    throw ValidationError(what + ": shape components must be >= 1");
  }
  const auto expect =
      static_cast<std::size_t>(v.shape[0] * v.shape[1] * v.shape[2]);
  if (v.data.size() != expect) {
    throw ValidationError(what + ": element count does not match shape");
  }
  if (v.spacing[0] <= 0 || v.spacing[1] <= 0 || v.spacing[2] <= 0) {
    throw ValidationError(what + ": spacing must be positive");
  }
  for (float x : v.data) {
    if (!std::isfinite(x)) {
      throw ValidationError(what + ": non-finite intensity");
    }
  }
}

Volume normalize_zscore(const Volume& v) {
  validate_volume(v);
  const auto& k = kernels::active();
  const std::size_t n = v.data.size();
  if (n < 2) throw ValidationError("normalize_zscore: zero variance");
  const double mean = k.sum(n, v.data.data()) / static_cast<double>(n);
  const double var =
      k.sumsq_diff(n, v.data.data(), static_cast<float>(mean)) /
      static_cast<double>(n);
  if (var <= 0.0) throw ValidationError("normalize_zscore: zero variance");
  const double inv_std = 1.0 / std::sqrt(var);
  Volume out = v;
  k.shift_scale(n, static_cast<float>(-mean), static_cast<float>(inv_std),
                out.data.data());
  return out;
}

namespace {

inline std::int64_t nearest_src(std::int64_t o, std::int64_t n_out,
                                std::int64_t n_in) {
  // align-corners-false: src_center = (o + 0.5) * n_in / n_out
  double c = (static_cast<double>(o) + 0.5) * static_cast<double>(n_in) /
             static_cast<double>(n_out);
  auto idx = static_cast<std::int64_t>(std::floor(c));
  return std::clamp<std::int64_t>(idx, 0, n_in - 1);
}

inline void linear_coord(std::int64_t o, std::int64_t n_out, std::int64_t n_in,
                         std::int64_t& i0, std::int64_t& i1, double& frac) {
  double c = (static_cast<double>(o) + 0.5) * static_cast<double>(n_in) /
                 static_cast<double>(n_out) -
             0.5;
  c = std::clamp(c, 0.0, static_cast<double>(n_in - 1));
  i0 = static_cast<std::int64_t>(std::floor(c));
  i1 = std::min(i0 + 1, n_in - 1);
  frac = c - static_cast<double>(i0);
}

}  // namespace

Volume resample(const Volume& v, Shape3 target, Interp mode) {
  validate_volume(v);
  if (target[0] < 1 || target[1] < 1 || target[2] < 1) {
    throw ValidationError("resample: target shape components must be >= 1");
  }
  if (target == v.shape && mode == Interp::nearest) return v;

  Volume out(target, v.spacing);
  // keep physical extent metadata consistent with the resize
  for (int a = 0; a < 3; ++a) {
    out.spacing[a] = v.spacing[a] * static_cast<double>(v.shape[a]) /
                     static_cast<double>(target[a]);
  }

  if (mode == Interp::nearest) {
    for (std::int64_t z = 0; z < target[0]; ++z) {
      const std::int64_t sz = nearest_src(z, target[0], v.shape[0]);
      for (std::int64_t y = 0; y < target[1]; ++y) {
        const std::int64_t sy = nearest_src(y, target[1], v.shape[1]);
        for (std::int64_t x = 0; x < target[2]; ++x) {
          out.at(z, y, x) = v.at(sz, sy, nearest_src(x, target[2], v.shape[2]));
        }
      }
    }
    return out;
  }

  for (std::int64_t z = 0; z < target[0]; ++z) {
    std::int64_t z0, z1;
    double fz;
    linear_coord(z, target[0], v.shape[0], z0, z1, fz);
    for (std::int64_t y = 0; y < target[1]; ++y) {
      std::int64_t y0, y1;
      double fy;
      linear_coord(y, target[1], v.shape[1], y0, y1, fy);
      for (std::int64_t x = 0; x < target[2]; ++x) {
        std::int64_t x0, x1;
        double fx;
        linear_coord(x, target[2], v.shape[2], x0, x1, fx);
        const double c00 = v.at(z0, y0, x0) * (1 - fx) + v.at(z0, y0, x1) * fx;
        const double c01 = v.at(z0, y1, x0) * (1 - fx) + v.at(z0, y1, x1) * fx;
        const double c10 = v.at(z1, y0, x0) * (1 - fx) + v.at(z1, y0, x1) * fx;
        const double c11 = v.at(z1, y1, x0) * (1 - fx) + v.at(z1, y1, x1) * fx;
        const double c0 = c00 * (1 - fy) + c01 * fy;
        const double c1 = c10 * (1 - fy) + c11 * fy;
        out.at(z, y, x) = static_cast<float>(c0 * (1 - fz) + c1 * fz);
      }
    }
  }
  return out;
}

}  // namespace shortmr
