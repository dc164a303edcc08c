#pragma once

#include <filesystem>
#include <vector>

#include "shortmr/atlas.hpp"
#include "shortmr/plot/canvas.hpp"
#include "shortmr/rankstats.hpp"
#include "shortmr/training.hpp"

namespace shortmr::plot {

// Baseline-vs-biased performance deltas: per-class F1 in the left panel,
// per-group accuracy in the right one. Each line runs from the baseline value
// to the biased value; the number above is the baseline, the signed number
// below the delta.
void write_delta_figure(const std::filesystem::path& path,
                        const EvalReport& baseline, const EvalReport& biased);

// Scatter of the difference vectors (B on x, P on y) with the top shared
// regions highlighted. Annotates Spearman rho with the parametric and
// permutation p-values, or an explicit "undefined correlation" note.
void write_rank_scatter(const std::filesystem::path& path,
                        const RankReport& report,
                        const std::vector<std::string>& region_names);

// Orthogonal mid-slices with the top shared regions tinted over a grayscale
// background; darker tint = more important (more negative B+P).
void write_region_overlay(const std::filesystem::path& path, const Atlas& atlas,
                          const Volume& background, const RankReport& report);

}  // namespace shortmr::plot
