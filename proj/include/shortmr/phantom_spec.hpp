#pragma once

#include <cstdint>
#include <set>

#include "shortmr/types.hpp"
#include "shortmr/volume.hpp"

namespace shortmr {

enum class AtlasScheme { grid, voronoi };

// Synthetic cohort recipe. The protected-attribute signal is an additive
// intensity delta inside attr_regions for group-1 subjects; the disease
// signal is a multiplicative darkening inside disease_regions for AD
// subjects. Both are confined to their regions so downstream claims can be
// checked against ground truth.
struct PhantomSpec {
  Shape3 shape{32, 32, 32};
  int omega = 16;
  AtlasScheme scheme = AtlasScheme::grid;
  std::set<int> attr_regions;
  std::set<int> disease_regions;
  Attribute signal_attribute = Attribute::sex;
  double attr_effect = 0.5;     // additive delta for group-1 subjects
  double disease_effect = 0.8;  // multiplicative factor in (0,1] for AD
  double noise_sigma = 0.05;
  double anatomy_jitter = 0.0;  // std of the smooth per-subject field
  int samples_per_subject = 1;
  std::uint64_t seed = 0;
};

void validate_phantom_spec(const PhantomSpec& spec);

}  // namespace shortmr
