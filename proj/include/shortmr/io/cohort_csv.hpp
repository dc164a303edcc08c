#pragma once

#include <filesystem>

#include "shortmr/cohort.hpp"

namespace shortmr::io {

// CSV manifest with header
//   subject_id,sample_id,sex,race,age,diagnosis,volume_path
// one row per sample; volume paths resolve relative to the manifest.

// Writes manifest.csv plus one NIfTI per sample under dir/volumes/.
// Returns the manifest path.
std::filesystem::path save_cohort(const Cohort& cohort,
                                  const std::filesystem::path& dir);

Cohort load_cohort(const std::filesystem::path& manifest_path);

}  // namespace shortmr::io
