#pragma once

#include <vector>

#include "shortmr/atlas.hpp"
#include "shortmr/cohort.hpp"
#include "shortmr/phantom_spec.hpp"
#include "shortmr/rng.hpp"

namespace shortmr {

// Ellipsoidal brain mask inscribed in the grid; nonzero inside.
std::vector<std::uint8_t> ellipsoid_mask(Shape3 shape);

// Partition of the in-mask voxels into omega regions. grid: near-cubic
// axis-aligned blocks; voronoi: nearest of omega seeded sites. Deterministic
// in seed; all omega labels always present.
Atlas synthetic_atlas(Shape3 shape, int omega, AtlasScheme scheme,
                      std::uint64_t seed);

// One sample volume for a subject. rng must be the subject/sample stream.
Volume generate_subject(const PhantomSpec& spec, const SubjectRecord& rec,
                        const Atlas& atlas, Rng& rng);

struct DemographicGroup {
  Sex sex = Sex::female;
  Race race = Race::white;
  Diagnosis diagnosis = Diagnosis::cn;
  double age = 70.0;
  int n_subjects = 0;
};

// Cohort with the requested composition. Subject streams derive from
// (spec.seed, subject index), so cohorts are bit-reproducible and editing one
// group never perturbs another subject's volumes.
Cohort generate_cohort(const PhantomSpec& spec,
                       const std::vector<DemographicGroup>& demographics,
                       const Atlas& atlas);

}  // namespace shortmr
