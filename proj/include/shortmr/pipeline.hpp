#pragma once

#include <filesystem>
#include <string>

#include "shortmr/io/run_config.hpp"
#include "shortmr/transform.hpp"

namespace shortmr {

// Pipeline commands, each writing its artifacts under cfg.out_dir():
//   generate  -> cohort/            manifest, volumes, atlas, ground truth
//   curate    -> curation/          baseline/biased/attribute pairs + audit
//   train     -> models/            checkpoints, eval reports, delta report
//   attribute -> attributions/      GradCAM volumes in atlas space + manifest
//   analyze   -> analysis/          rank report + stability curves
//   report    -> report/            delta, scatter and region overlay figures
// Downstream commands refuse to run before their upstream artifacts exist.
void run_generate(const io::RunConfig& cfg);
void run_curate(const io::RunConfig& cfg);
void run_train(const io::RunConfig& cfg);
void run_attribute(const io::RunConfig& cfg);
void run_analyze(const io::RunConfig& cfg);
void run_report(const io::RunConfig& cfg);

// Dispatch by command name; throws ValidationError for unknown commands.
void run_pipeline(const std::string& command, const io::RunConfig& cfg);

// DatasetPair artifact round-trip (curation/*.json).
void save_pair(const DatasetPair& pair, const std::filesystem::path& path);
DatasetPair load_pair(const std::filesystem::path& path);

// Transform sidecar: {"kind": "identity" | "affine" | "displacement", ...}.
SpatialTransform load_transform_file(const std::filesystem::path& path);

}  // namespace shortmr
