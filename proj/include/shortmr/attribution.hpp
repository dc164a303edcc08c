#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shortmr/rng.hpp"
#include "shortmr/training.hpp"
#include "shortmr/volume.hpp"

namespace shortmr {

// Nonnegative attribution map aligned to the input sample.
struct AttributionVolume {
  Volume vol;
  std::string model_id;
  std::string sample_id;
  int target_class = 0;
  std::string feature_layer;
  bool zero_gradient = false;  // gradient vanished everywhere; map is all zero
};

// Positive GradCAM at the model's designated feature layer: channel weights
// are the spatial means of d(logit_target)/dA_k, the weighted activation sum
// is clamped at zero and trilinearly upsampled to the input grid. A vanishing
// gradient yields an all-zero map with zero_gradient set rather than an error.
AttributionVolume gradcam3d(const TrainedModel& model, const Volume& x,
                            int target_class, const std::string& sample_id = "");

// Any argmax classifier; must be safe to call concurrently.
using Predictor = std::function<int(const Volume&)>;

Predictor predictor_of(const TrainedModel& model);

// Non-overlapping tiling of the volume; border tiles may be smaller.
struct PatchGrid {
  Shape3 volume_shape{0, 0, 0};
  Shape3 patch{4, 4, 4};
  Shape3 tiles{0, 0, 0};

  std::int64_t count() const { return tiles[0] * tiles[1] * tiles[2]; }
  // half-open voxel bounds of patch p: {z0,z1,y0,y1,x0,x1}
  std::array<std::int64_t, 6> box(std::int64_t p) const;
};

PatchGrid make_patch_grid(Shape3 volume_shape, Shape3 patch_size);

struct StabilitySpec {
  Shape3 patch_size{4, 4, 4};
  double top_fraction = 0.125;
  std::vector<int> radii;
  int trials = 1000;
  float fill_value = 0.0f;
  std::optional<Volume> brain_mask;  // voxels > 0.5 count as brain
  unsigned threads = 0;
};

void validate_stability_spec(const StabilitySpec& spec);

// Patch ids sorted by descending mean attribution (ties by id); the first
// ceil(top_fraction * P) are the retained top patches.
std::vector<std::int64_t> rank_patches(const Volume& attr, const PatchGrid& grid);

// Monte-Carlo probability that the prediction on the top-patches-only input
// survives restoring a uniformly random subset of up to `radius` masked brain
// patches (subset size uniform on {0..radius}). radius 0 is exactly 1.
double soft_stability(const Predictor& predict, const Volume& x,
                      const AttributionVolume& attr, const StabilitySpec& spec,
                      int radius, const Rng& rng);

// Per-radius soft stability for one sample; trial streams derive per radius.
std::vector<std::pair<int, double>> stability_curve(
    const Predictor& predict, const Volume& x, const AttributionVolume& attr,
    const StabilitySpec& spec, const Rng& rng);

// Averaged over a sample set, with independent streams per (sample, radius).
std::vector<std::pair<int, double>> stability_curve_mean(
    const Predictor& predict, const std::vector<const Volume*>& xs,
    const std::vector<const AttributionVolume*>& attrs,
    const StabilitySpec& spec, const Rng& rng);

}  // namespace shortmr
