#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shortmr/cohort.hpp"
#include "shortmr/curation.hpp"
#include "shortmr/net/cnn3d.hpp"

namespace shortmr {

enum class Target { attribute, diagnosis };
enum class SelectionMetric { val_loss, val_f1 };

struct TrainConfig {
  int max_epochs = 20;
  int batch_size = 4;
  int grad_accum = 1;
  double learning_rate = 1e-3;
  int cosine_horizon = 0;  // 0 -> max_epochs
  double weight_decay = 1e-2;
  int patience = 5;
  SelectionMetric selection = SelectionMetric::val_f1;
  unsigned threads = 0;  // 0 -> hardware concurrency
  std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& cfg);

// Inverse probability weights w_c = N / (2 n_c); throws when a class is
// missing.
std::pair<double, double> class_weights(const std::vector<int>& labels);

struct EpochStats {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1_macro = 0.0;
  std::array<double, 2> val_f1 = {0.0, 0.0};
};

using History = std::vector<EpochStats>;

struct TrainedModel {
  ModelSpec spec;
  net::Cnn3d<float> net;
  TrainConfig cfg;
  Target target = Target::diagnosis;
  History history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  double best_val_loss = 0.0;
  std::string model_id;

  explicit TrainedModel(const ModelSpec& s) : spec(s), net(s) {}

  std::vector<float> logits(const Volume& x) const;
  int predict(const Volume& x) const;
  int predict(const Volume& x, net::Cnn3d<float>::Workspace& ws) const;
};

struct EvalReport {
  Attribute attribute = Attribute::sex;
  std::int64_t n = 0;
  std::array<std::array<std::int64_t, 2>, 2> confusion{};  // [true][pred]
  std::array<std::optional<double>, 2> f1;
  double macro_f1 = 0.0;
  double overall_accuracy = 0.0;
  std::array<std::optional<double>, 2> group_accuracy;       // by A
  std::array<std::int64_t, 2> group_n = {0, 0};
  std::array<std::array<std::optional<double>, 2>, 2> cell_accuracy;  // [y][a]
  std::array<std::array<std::int64_t, 2>, 2> cell_n{};
};

struct DeltaReport {
  std::array<std::optional<double>, 2> d_f1;
  std::optional<double> d_macro_f1;
  std::optional<double> d_overall_accuracy;
  std::array<std::optional<double>, 2> d_group_accuracy;
  std::array<std::array<std::optional<double>, 2>, 2> d_cell_accuracy;
};

// Label of an entry under the training target.
int entry_label(const PairEntry& e, Target t);

// Trains on pair.train, selects the best checkpoint on pair.val, and returns
// the model with per-epoch history. Verifies subject disjointness before
// touching any volume. Loss is class-weighted cross entropy (weights from the
// train split), optimizer AdamW under a cosine learning rate schedule.
TrainedModel train_classifier(const ModelSpec& spec, const Cohort& cohort,
                              const DatasetPair& pair, Target target,
                              const TrainConfig& cfg);

EvalReport evaluate(const TrainedModel& model, const Cohort& cohort,
                    const std::vector<PairEntry>& split, Target target,
                    Attribute attribute, unsigned threads = 0);

// biased minus baseline, componentwise; entries undefined on either side stay
// undefined. Throws on mismatched group sets.
DeltaReport delta_report(const EvalReport& baseline, const EvalReport& biased);

// Weighted cross entropy averaged over the batch: (1/N) sum_i w_{y_i} CE_i.
// Exposed for the loss-invariance property test.
double weighted_ce_loss(const std::vector<std::array<float, 2>>& logits,
                        const std::vector<int>& labels, double w0, double w1);

}  // namespace shortmr
