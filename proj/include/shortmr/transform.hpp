#pragma once

#include <array>
#include <optional>

#include "shortmr/volume.hpp"

namespace shortmr {

// Spatial transform into atlas space. Affine matrices are 4x4 row-major over
// mm coordinates and map source positions to atlas positions; displacement
// fields follow the pull-back convention (source_mm = atlas_mm + disp(atlas)).
struct SpatialTransform {
  enum class Kind { identity, affine, displacement } kind = Kind::identity;
  std::array<double, 16> affine{};  // row-major, used when kind == affine
  // mm offsets per axis, shapes define the target grid; used for displacement
  Volume disp_z, disp_y, disp_x;

  static SpatialTransform identity_transform();
  static SpatialTransform from_affine(const std::array<double, 16>& m);
  static SpatialTransform from_displacement(Volume dz, Volume dy, Volume dx);
};

// Resamples v into atlas space. Identity returns a voxelwise-equal copy.
// Voxels that map outside the source grid are filled with 0. target_shape
// defaults to the source grid for identity/affine and to the field grid for
// displacement transforms. Throws on non-invertible affines.
Volume apply_transform(const Volume& v, const SpatialTransform& t, Interp mode,
                       std::optional<Shape3> target_shape = std::nullopt,
                       std::optional<Spacing3> target_spacing = std::nullopt);

// 4x4 inverse; throws ValidationError when singular.
std::array<double, 16> invert_affine(const std::array<double, 16>& m);

}  // namespace shortmr
