#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "shortmr/cohort.hpp"

namespace shortmr {

enum class StratumField { diagnosis, sex, race, age_bin };

// Subject-level split policy. test fraction is 1 - train_fraction; the
// validation set is carved out of train. Strata with fewer than
// min_stratum_subjects merge into the stratum differing only in age_bin when
// merge_small_strata is set, otherwise the split errors.
struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction_of_train = 0.1;
  std::set<StratumField> strata = {StratumField::diagnosis, StratumField::sex,
                                   StratumField::race, StratumField::age_bin};
  bool merge_small_strata = true;
  int min_stratum_subjects = 2;
};

void validate_split_spec(const SplitSpec& spec);

// Majority design of the biased training set: majority_group[y] is the
// protected group forming the training majority within diagnostic class y.
// The default {1, 0} places (A1, Y0) and (A0, Y1) in the majority. p_train is
// the majority fraction per class in train, p_test the (flipped) fraction in
// test. Budgets are subject counts per diagnostic class.
struct BiasSpec {
  Attribute attribute = Attribute::sex;
  std::array<int, 2> majority_group = {1, 0};
  double p_train = 0.9;
  double p_test = 0.1;
  std::array<int, 2> train_per_class = {0, 0};
  std::array<int, 2> test_per_class = {0, 0};
};

void validate_bias_spec(const BiasSpec& spec);

// Subjects used per (class, group) cell of the baseline design; the split
// into train/test happens inside make_baseline.
struct CellBudgets {
  Attribute attribute = Attribute::sex;
  std::array<std::array<int, 2>, 2> count = {{{0, 0}, {0, 0}}};  // [y][a]
};

struct PairEntry {
  std::string subject_id;
  std::string sample_id;
  int group = 0;  // protected group under the pair's attribute
  int label = 0;  // diagnostic class
};

// S (subjects) and N (samples) per protected group, kept per split and class.
struct GroupCounts {
  std::array<std::int64_t, 2> subjects = {0, 0};
  std::array<std::int64_t, 2> samples = {0, 0};
};
using CompositionTable = std::array<std::array<GroupCounts, 2>, 3>;  // [split][y]

struct DatasetPair {
  Attribute attribute = Attribute::sex;
  std::string design;  // "baseline", "biased", "split"
  std::vector<PairEntry> train, val, test;
  CompositionTable declared{};
};

CompositionTable realized_composition(const DatasetPair& pair);

struct SplitIds {
  std::vector<std::string> train, val, test;
};

// Subject-level stratified split with largest-remainder allocation per
// stratum (ties broken by a seeded shuffle). All samples of a subject follow
// the subject.
SplitIds stratified_split(const Cohort& cohort, const SplitSpec& spec,
                          std::uint64_t seed);

// Experiment-1 style dataset: a stratified split of the whole cohort packaged
// as a DatasetPair under the given attribute.
DatasetPair make_split_pair(const Cohort& cohort, const SplitSpec& spec,
                            Attribute attribute, std::uint64_t seed);

// Baseline design: group proportions within each diagnostic class match
// between train and test (within one subject).
DatasetPair make_baseline(const Cohort& cohort, const CellBudgets& budgets,
                          const SplitSpec& spec, std::uint64_t seed);

// Biased design: training majority cells become the test minority.
DatasetPair make_biased(const Cohort& cohort, const BiasSpec& bias,
                        const SplitSpec& spec, std::uint64_t seed);

struct AuditCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool all_pass = false;
};

// Verifies subject-disjointness within each pair, per-class subject totals
// equal across pairs within +-1, and declared-vs-realized composition.
// Violations are reported, not thrown.
AuditReport audit_pair(const DatasetPair& baseline, const DatasetPair& biased);

// Midpoint of the cohort's [min, max] age; subjects at or above are 'older'.
double age_threshold(const std::vector<SubjectRecord>& subjects);

}  // namespace shortmr
