#pragma once

#include <span>
#include <vector>

#include "shortmr/atlas.hpp"
#include "shortmr/attribution.hpp"
#include "shortmr/rng.hpp"

namespace shortmr {

// Mean attribution per region: component j (0-based index, region j+1) is the
// attribution sum over region voxels divided by the region size. Background
// (label 0) is excluded. Errors on empty regions, naming the region.
std::vector<double> regional_means(const Volume& attr_atlas_space,
                                   const Atlas& atlas);

// Descending fractional ranks: the largest value gets rank 1; ties receive
// the average of the ranks they span, so the total is always omega(omega+1)/2.
std::vector<double> rank_vector(std::span<const double> values);

// Per-sample rank vectors averaged componentwise over the test samples.
std::vector<double> mean_rank_vector(
    const std::vector<const AttributionVolume*>& attrs, const Atlas& atlas);
std::vector<double> mean_rank_vector_from_means(
    const std::vector<std::vector<double>>& per_sample_means);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when either input is constant
};

// Spearman's rank correlation with average-rank ties; the p-value comes from
// the t-distribution approximation with n-2 degrees of freedom.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct PermutationResult {
  double p_value = 1.0;
  double rho_observed = 0.0;
  bool degenerate = false;  // observed correlation undefined
};

// Null: with r_ba held fixed, r_bi and r_pa are replaced by independent
// uniform permutations of {1..omega}; p = (1 + #{|rho'| >= |rho_obs|}) / (M+1).
PermutationResult permutation_test(std::span<const double> r_ba,
                                   std::span<const double> r_bi,
                                   std::span<const double> r_pa, int m,
                                   const Rng& rng);

// Region ids (1-based) of the k smallest components of B+P, ascending by
// value, ties broken by region id.
std::vector<int> top_shared_regions(std::span<const double> b,
                                    std::span<const double> p, int k);

struct RankReport {
  std::vector<double> r_ba, r_bi, r_pa;
  std::vector<double> b, p;
  SpearmanResult correlation;
  PermutationResult permutation;
  std::vector<int> top_regions;
  int top_k = 5;
  int permutations = 999;
};

RankReport build_rank_report(const std::vector<double>& r_ba,
                             const std::vector<double>& r_bi,
                             const std::vector<double>& r_pa, int top_k, int m,
                             const Rng& rng);

}  // namespace shortmr
