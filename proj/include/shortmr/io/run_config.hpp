#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shortmr/attribution.hpp"
#include "shortmr/curation.hpp"
#include "shortmr/net/cnn3d.hpp"
#include "shortmr/phantom.hpp"
#include "shortmr/training.hpp"

namespace shortmr::io {

// Flat `key = value` configuration. Unknown keys are rejected; missing
// required keys are rejected; optional keys fall back to the documented
// defaults. See configs/ for annotated examples.
class RunConfig {
 public:
  static RunConfig parse_file(const std::filesystem::path& path);
  static RunConfig parse_string(const std::string& text);

  // overrides from the CLI
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::int64_t> get_ints(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  std::uint64_t seed() const;
  std::filesystem::path out_dir() const;

  PhantomSpec phantom_spec() const;
  std::vector<DemographicGroup> demographics() const;
  AtlasScheme atlas_scheme() const;
  SplitSpec split_spec() const;
  Attribute attribute() const;
  CellBudgets baseline_budgets() const;
  // per-class totals left zero; the curate step fills them from the realized
  // baseline so the pairs stay comparable
  BiasSpec bias_spec() const;
  ModelSpec model_spec() const;
  TrainConfig train_config() const;
  StabilitySpec stability_spec() const;

  enum class Normalization { per_volume, per_dataset, none };
  Normalization normalization() const;
  enum class CamTarget { predicted, label };
  CamTarget cam_target() const;
  int analysis_permutations() const;
  int analysis_top_k() const;
  int attribution_max_samples() const;  // 0 = all test samples
  int stability_samples() const;
  std::vector<std::string> stability_models() const;
  std::string transform_file() const;  // empty = identity

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  void validate() const;
  std::map<std::string, std::string> values_;
};

}  // namespace shortmr::io
