#pragma once

#include <filesystem>

#include "shortmr/training.hpp"

namespace shortmr::io {

// Single-file container: "SMCK" magic, format version, a JSON block with the
// model spec / train config / history / selection results, then the raw
// float32 parameters (little-endian).
void save_checkpoint(const TrainedModel& model,
                     const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace shortmr::io
