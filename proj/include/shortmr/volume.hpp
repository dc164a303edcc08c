#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace shortmr {

using Shape3 = std::array<std::int64_t, 3>;     // (D, H, W)
using Spacing3 = std::array<double, 3>;         // mm per voxel along (D, H, W)

// A 3D scalar grid. data is row-major with the last axis fastest:
// index (z, y, x) -> data[(z * H + y) * W + x].
struct Volume {
  Shape3 shape{0, 0, 0};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::vector<float> data;

  Volume() = default;
  Volume(Shape3 s, Spacing3 sp = {1.0, 1.0, 1.0});

  std::int64_t d() const { return shape[0]; }
  std::int64_t h() const { return shape[1]; }
  std::int64_t w() const { return shape[2]; }
  std::size_t size() const { return data.size(); }

  float& at(std::int64_t z, std::int64_t y, std::int64_t x) {
    return data[static_cast<std::size_t>((z * shape[1] + y) * shape[2] + x)];
  }
  float at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return data[static_cast<std::size_t>((z * shape[1] + y) * shape[2] + x)];
  }
};

// Throws ValidationError if shape is degenerate, the element count is wrong,
// or any value is non-finite.
void validate_volume(const Volume& v, const std::string& what = "volume");

enum class Interp { trilinear, nearest };

// Per-volume z-score: zero mean, unit population standard deviation.
// Throws on constant volumes ("zero variance").
Volume normalize_zscore(const Volume& v);

// Resize to target_shape under the align-corners-false convention; source
// coordinates are clamped to the grid (edge replication). nearest is intended
// for label grids.
Volume resample(const Volume& v, Shape3 target_shape, Interp mode);

}  // namespace shortmr
