#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shortmr/volume.hpp"

namespace shortmr {

// A labeled partition of a volume grid: label 0 is background, labels 1..omega
// are named regions. Layout matches Volume (last axis fastest).
struct Atlas {
  Shape3 shape{0, 0, 0};
  Spacing3 spacing{1.0, 1.0, 1.0};
  int omega = 0;
  std::vector<std::int32_t> labels;
  std::vector<std::string> region_names;  // size omega, index = region id - 1

  std::int32_t at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return labels[static_cast<std::size_t>((z * shape[1] + y) * shape[2] + x)];
  }
};

// Checks label range, that every region id in 1..omega occurs, and name count.
void validate_atlas(const Atlas& a);

// Voxel count per region id (index 0 unused).
std::vector<std::int64_t> region_sizes(const Atlas& a);

}  // namespace shortmr
