#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "shortmr/atlas.hpp"
#include "shortmr/volume.hpp"

namespace shortmr::io {

// Single-file little-endian NIfTI-1 subset: 348-byte header, magic "n+1\0",
// no extensions, vox_offset 352, dim = [3, D, H, W, 1, 1, 1, 1] with spacing
// in pixdim[1..3]. Fields outside the subset are written as zeros.
enum class NiftiDType : std::int16_t {
  int16 = 4,
  int32 = 8,
  float32 = 16,
};

Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& v, const std::filesystem::path& path,
                  NiftiDType dtype = NiftiDType::float32);

// Integer label grids (atlas payloads) must carry an integer datatype.
struct LabelGrid {
  Shape3 shape{0, 0, 0};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::vector<std::int32_t> labels;
};

LabelGrid read_labels(const std::filesystem::path& path);
void write_labels(const LabelGrid& grid, const std::filesystem::path& path);

// Atlas round-trip: labels as int32 NIfTI plus a JSON sidecar with omega and
// region names.
void save_atlas(const Atlas& atlas, const std::filesystem::path& volume_path,
                const std::filesystem::path& names_path);
Atlas load_atlas(const std::filesystem::path& volume_path,
                 const std::filesystem::path& names_path);

}  // namespace shortmr::io
