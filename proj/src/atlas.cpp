#include "shortmr/atlas.hpp"

#include "shortmr/errors.hpp"

namespace shortmr {

void validate_atlas(const Atlas& a) {
  if (a.shape[0] < 1 || a.shape[1] < 1 || a.shape[2] < 1) {
    throw ValidationError("atlas: shape components must be >= 1");
  }
  if (a.omega < 1) throw ValidationError("atlas: omega must be >= 1");
  const auto expect =
      static_cast<std::size_t>(a.shape[0] * a.shape[1] * a.shape[2]);
  if (a.labels.size() != expect) {
    throw ValidationError("atlas: label count does not match shape");
  }
  std::vector<bool> seen(static_cast<std::size_t>(a.omega) + 1, false);
  for (std::int32_t v : a.labels) {
    if (v < 0 || v > a.omega) {
      throw ValidationError("atlas: label outside {0..omega}");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  for (int r = 1; r <= a.omega; ++r) {
    if (!seen[static_cast<std::size_t>(r)]) {
      throw ValidationError("atlas: region " + std::to_string(r) +
                            " has no voxels");
    }
  }
  if (!a.region_names.empty() &&
      a.region_names.size() != static_cast<std::size_t>(a.omega)) {
    throw ValidationError("atlas: region name count does not match omega");
  }
}

std::vector<std::int64_t> region_sizes(const Atlas& a) {
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(a.omega) + 1, 0);
  for (std::int32_t v : a.labels) {
    if (v >= 0 && v <= a.omega) ++sizes[static_cast<std::size_t>(v)];
  }
  return sizes;
}

}  // namespace shortmr
