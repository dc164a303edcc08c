#include "shortmr/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "shortmr/errors.hpp"
#include "shortmr/kernels.hpp"
#include "shortmr/parallel.hpp"

namespace shortmr {

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (cfg.grad_accum < 1) throw ValidationError("train: grad_accum must be >= 1");
  if (cfg.patience < 1) throw ValidationError("train: patience must be >= 1");
  if (!(cfg.learning_rate > 0)) {
    throw ValidationError("train: learning_rate must be positive");
  }
  if (cfg.weight_decay < 0) {
    throw ValidationError("train: weight_decay must be >= 0");
  }
  if (cfg.cosine_horizon < 0) {
    throw ValidationError("train: cosine_horizon must be >= 0");
  }
}

std::pair<double, double> class_weights(const std::vector<int>& labels) {
  std::int64_t n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0) {
      ++n0;
    } else if (y == 1) {
      ++n1;
    } else {
      throw ValidationError("class_weights: labels must be 0 or 1");
    }
  }
  if (n0 == 0 || n1 == 0) {
    throw ValidationError("class_weights: class " +
                          std::string(n0 == 0 ? "0" : "1") + " missing");
  }
  const double n = static_cast<double>(n0 + n1);
  return {n / (2.0 * static_cast<double>(n0)), n / (2.0 * static_cast<double>(n1))};
}

int entry_label(const PairEntry& e, Target t) {
  return t == Target::diagnosis ? e.label : e.group;
}

namespace {

// Stable two-class softmax cross entropy. Returns loss; fills dlogits with
// weight * (p - onehot) when requested.
double ce_loss2(const float* logits, int label, double weight, float* dlogits) {
  const double l0 = logits[0], l1 = logits[1];
  const double m = std::max(l0, l1);
  const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
  const double z = e0 + e1;
  const double p0 = e0 / z, p1 = e1 / z;
  const double py = label == 0 ? p0 : p1;
  const double loss = weight * -std::log(std::max(py, 1e-300));
  if (dlogits) {
    dlogits[0] = static_cast<float>(weight * (p0 - (label == 0 ? 1.0 : 0.0)));
    dlogits[1] = static_cast<float>(weight * (p1 - (label == 1 ? 1.0 : 0.0)));
  }
  return loss;
}

struct Metrics {
  std::array<std::array<std::int64_t, 2>, 2> confusion{};
  std::array<std::optional<double>, 2> f1;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

Metrics metrics_from(const std::vector<int>& labels,
                     const std::vector<int>& preds) {
  Metrics m;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.confusion[static_cast<std::size_t>(labels[i])]
               [static_cast<std::size_t>(preds[i])]++;
    if (labels[i] == preds[i]) ++correct;
  }
  double f1_sum = 0.0;
  int f1_n = 0;
  for (int c = 0; c < 2; ++c) {
    const auto tp = m.confusion[static_cast<std::size_t>(c)]
                               [static_cast<std::size_t>(c)];
    const auto fn = m.confusion[static_cast<std::size_t>(c)]
                               [static_cast<std::size_t>(1 - c)];
    const auto fp = m.confusion[static_cast<std::size_t>(1 - c)]
                               [static_cast<std::size_t>(c)];
    const auto denom = 2 * tp + fp + fn;
    if (denom > 0) {
      m.f1[static_cast<std::size_t>(c)] =
          2.0 * static_cast<double>(tp) / static_cast<double>(denom);
      f1_sum += *m.f1[static_cast<std::size_t>(c)];
      ++f1_n;
    }
  }
  m.macro_f1 = f1_n > 0 ? f1_sum / f1_n : 0.0;
  m.accuracy = labels.empty()
                   ? 0.0
                   : static_cast<double>(correct) / static_cast<double>(labels.size());
  return m;
}

const Volume& sample_volume(const Cohort& cohort, const std::string& sid) {
  auto it = cohort.samples.find(sid);
  if (it == cohort.samples.end()) {
    throw ValidationError("sample '" + sid + "' missing from cohort");
  }
  return it->second;
}

void check_disjoint(const DatasetPair& pair) {
  std::set<std::string> seen;
  const std::vector<PairEntry>* splits[3] = {&pair.train, &pair.val, &pair.test};
  for (int s = 0; s < 3; ++s) {
    std::set<std::string> own;
    for (const auto& e : *splits[s]) own.insert(e.subject_id);
    for (const auto& id : own) {
      if (!seen.insert(id).second) {
        throw ValidationError("subject overlap across splits: '" + id + "'");
      }
    }
  }
}

}  // namespace

double weighted_ce_loss(const std::vector<std::array<float, 2>>& logits,
                        const std::vector<int>& labels, double w0, double w1) {
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    acc += ce_loss2(logits[i].data(), labels[i],
                    labels[i] == 0 ? w0 : w1, nullptr);
  }
  return logits.empty() ? 0.0 : acc / static_cast<double>(logits.size());
}

std::vector<float> TrainedModel::logits(const Volume& x) const {
  auto ws = net.make_workspace();
  net.forward(x.data.data(), ws);
  return ws.logits;
}

int TrainedModel::predict(const Volume& x) const {
  auto ws = net.make_workspace();
  return predict(x, ws);
}

int TrainedModel::predict(const Volume& x,
                          net::Cnn3d<float>::Workspace& ws) const {
  net.forward(x.data.data(), ws);
  return ws.logits[1] > ws.logits[0] ? 1 : 0;
}

TrainedModel train_classifier(const ModelSpec& spec, const Cohort& cohort,
                              const DatasetPair& pair, Target target,
                              const TrainConfig& cfg) {
  validate_model_spec(spec);
  validate_train_config(cfg);
  if (pair.train.empty()) throw ValidationError("train: empty training split");
  if (pair.val.empty()) throw ValidationError("train: empty validation split");
  check_disjoint(pair);

  struct Item {
    const Volume* vol;
    int label;
  };
  auto collect = [&](const std::vector<PairEntry>& entries) {
    std::vector<Item> items;
    items.reserve(entries.size());
    for (const auto& e : entries) {
      const Volume& v = sample_volume(cohort, e.sample_id);
      if (v.shape != spec.input_shape) {
        throw ValidationError("train: sample '" + e.sample_id +
                              "' shape does not match model input");
      }
      items.push_back({&v, entry_label(e, target)});
    }
    return items;
  };
  const auto train_items = collect(pair.train);
  const auto val_items = collect(pair.val);

  std::vector<int> train_labels;
  for (const auto& it : train_items) train_labels.push_back(it.label);
  const auto [w0, w1] = class_weights(train_labels);

  TrainedModel model(spec);
  model.cfg = cfg;
  model.target = target;
  Rng root(cfg.seed);
  {
    Rng init = root.derive("init");
    model.net.init_params(init);
  }

  const std::size_t n_params = model.net.param_count();
  std::vector<float> adam_m(n_params, 0.0f), adam_v(n_params, 0.0f);
  std::vector<float> master_grad(n_params, 0.0f);
  const unsigned threads =
      cfg.threads == 0 ? std::min<unsigned>(default_threads(),
                                            static_cast<unsigned>(cfg.batch_size))
                       : cfg.threads;

  std::vector<net::Cnn3d<float>::Workspace> workspaces;
  for (unsigned t = 0; t < std::max(1u, threads); ++t) {
    workspaces.push_back(model.net.make_workspace());
  }
  std::vector<std::vector<float>> slot_grads(
      static_cast<std::size_t>(cfg.batch_size),
      std::vector<float>(n_params, 0.0f));
  std::vector<double> slot_loss(static_cast<std::size_t>(cfg.batch_size), 0.0);

  const int horizon = cfg.cosine_horizon > 0 ? cfg.cosine_horizon : cfg.max_epochs;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t adam_step = 0;

  std::vector<float> best_params;
  double best_f1 = -std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int strikes = 0;

  const auto& k = kernels::active();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr =
        cfg.learning_rate * 0.5 *
        (1.0 + std::cos(3.14159265358979323846 *
                        std::min<double>(epoch - 1, horizon) / horizon));

    std::vector<std::size_t> order(train_items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    {
      Rng shuf = root.derive("shuffle", epoch);
      shuf.shuffle(order);
    }

    double epoch_loss = 0.0;
    std::size_t pos = 0;
    std::size_t step_samples = 0;
    int micro_in_step = 0;

    auto apply_step = [&]() {
      if (step_samples == 0) return;
      const float inv = 1.0f / static_cast<float>(step_samples);
      k.scale(n_params, inv, master_grad.data());
      ++adam_step;
      const float bc1 =
          1.0f / (1.0f - static_cast<float>(std::pow(beta1, adam_step)));
      const float bc2 =
          1.0f / (1.0f - static_cast<float>(std::pow(beta2, adam_step)));
      k.adamw(n_params, model.net.params().data(), master_grad.data(),
              adam_m.data(), adam_v.data(), static_cast<float>(lr),
              static_cast<float>(beta1), static_cast<float>(beta2),
              static_cast<float>(eps), static_cast<float>(cfg.weight_decay),
              bc1, bc2);
      std::fill(master_grad.begin(), master_grad.end(), 0.0f);
      step_samples = 0;
      micro_in_step = 0;
    };

    while (pos < order.size()) {
      const std::size_t bsz =
          std::min<std::size_t>(cfg.batch_size, order.size() - pos);
      parallel_for(bsz, threads, [&](std::size_t s) {
        auto& ws = workspaces[s % workspaces.size()];
        auto& g = slot_grads[s];
        std::fill(g.begin(), g.end(), 0.0f);
        const Item& item = train_items[order[pos + s]];
        model.net.forward(item.vol->data.data(), ws);
        float dlogits[2];
        slot_loss[s] = ce_loss2(ws.logits.data(), item.label,
                                item.label == 0 ? w0 : w1, dlogits);
        model.net.backward(dlogits, ws, g.data());
      });
      for (std::size_t s = 0; s < bsz; ++s) {
        epoch_loss += slot_loss[s];
        k.axpy(n_params, 1.0f, slot_grads[s].data(), master_grad.data());
      }
      step_samples += bsz;
      ++micro_in_step;
      pos += bsz;
      if (micro_in_step >= cfg.grad_accum) apply_step();
    }
    apply_step();

    const double train_loss = epoch_loss / static_cast<double>(train_items.size());

    // validation pass
    std::vector<int> val_preds(val_items.size());
    std::vector<double> val_losses(val_items.size());
    parallel_for(val_items.size(), threads, [&](std::size_t i) {
      auto& ws = workspaces[i % workspaces.size()];
      model.net.forward(val_items[i].vol->data.data(), ws);
      val_preds[i] = ws.logits[1] > ws.logits[0] ? 1 : 0;
      val_losses[i] = ce_loss2(ws.logits.data(), val_items[i].label,
                               val_items[i].label == 0 ? w0 : w1, nullptr);
    });
    double val_loss = 0.0;
    for (double l : val_losses) val_loss += l;
    val_loss /= static_cast<double>(val_items.size());
    std::vector<int> val_labels;
    for (const auto& it : val_items) val_labels.push_back(it.label);
    const Metrics vm = metrics_from(val_labels, val_preds);

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw RuntimeFailure("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch));
    }

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    st.train_loss = train_loss;
    st.val_loss = val_loss;
    st.val_f1_macro = vm.macro_f1;
    st.val_f1 = {vm.f1[0].value_or(0.0), vm.f1[1].value_or(0.0)};
    model.history.push_back(st);

    bool improved = false;
    if (cfg.selection == SelectionMetric::val_f1) {
      improved = vm.macro_f1 > best_f1 ||
                 (vm.macro_f1 == best_f1 && val_loss < best_loss);
    } else {
      improved = val_loss < best_loss;
    }
    if (improved) {
      best_f1 = vm.macro_f1;
      best_loss = val_loss;
      best_epoch = epoch;
      best_params = model.net.params();
      strikes = 0;
    } else {
      ++strikes;
      if (strikes >= cfg.patience) break;
    }
  }

  model.net.params() = best_params;
  model.best_epoch = best_epoch;
  model.best_val_f1 = best_f1;
  model.best_val_loss = best_loss;
  return model;
}

EvalReport evaluate(const TrainedModel& model, const Cohort& cohort,
                    const std::vector<PairEntry>& split, Target target,
                    Attribute attribute, unsigned threads) {
  if (split.empty()) throw ValidationError("evaluate: empty split");
  EvalReport rep;
  rep.attribute = attribute;
  rep.n = static_cast<std::int64_t>(split.size());

  std::vector<int> preds(split.size());
  std::vector<net::Cnn3d<float>::Workspace> workspaces;
  const unsigned t = threads == 0 ? default_threads() : threads;
  for (unsigned i = 0; i < t; ++i) workspaces.push_back(model.net.make_workspace());
  parallel_for(split.size(), t, [&](std::size_t i) {
    preds[i] = model.predict(sample_volume(cohort, split[i].sample_id),
                             workspaces[i % workspaces.size()]);
  });

  std::vector<int> labels;
  for (const auto& e : split) labels.push_back(entry_label(e, target));
  const Metrics m = metrics_from(labels, preds);
  rep.confusion = m.confusion;
  rep.f1 = m.f1;
  rep.macro_f1 = m.macro_f1;
  rep.overall_accuracy = m.accuracy;

  std::array<std::int64_t, 2> g_correct = {0, 0};
  std::array<std::array<std::int64_t, 2>, 2> c_correct{};
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto a = static_cast<std::size_t>(split[i].group);
    const auto y = static_cast<std::size_t>(split[i].label);
    rep.group_n[a]++;
    rep.cell_n[y][a]++;
    if (preds[i] == labels[i]) {
      g_correct[a]++;
      c_correct[y][a]++;
    }
  }
  for (int a = 0; a < 2; ++a) {
    if (rep.group_n[static_cast<std::size_t>(a)] > 0) {
      rep.group_accuracy[static_cast<std::size_t>(a)] =
          static_cast<double>(g_correct[static_cast<std::size_t>(a)]) /
          static_cast<double>(rep.group_n[static_cast<std::size_t>(a)]);
    }
  }
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      if (rep.cell_n[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)] > 0) {
        rep.cell_accuracy[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)] =
            static_cast<double>(
                c_correct[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)]) /
            static_cast<double>(
                rep.cell_n[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)]);
      }
    }
  }
  return rep;
}

DeltaReport delta_report(const EvalReport& baseline, const EvalReport& biased) {
  if (baseline.attribute != biased.attribute) {
    throw ValidationError("delta_report: attribute mismatch");
  }
  for (int a = 0; a < 2; ++a) {
    if (baseline.group_accuracy[static_cast<std::size_t>(a)].has_value() !=
        biased.group_accuracy[static_cast<std::size_t>(a)].has_value()) {
      throw ValidationError("delta_report: mismatched group sets");
    }
  }
  DeltaReport d;
  auto diff = [](const std::optional<double>& a,
                 const std::optional<double>& b) -> std::optional<double> {
    if (a && b) return *b - *a;
    return std::nullopt;
  };
  for (int c = 0; c < 2; ++c) {
    d.d_f1[static_cast<std::size_t>(c)] =
        diff(baseline.f1[static_cast<std::size_t>(c)],
             biased.f1[static_cast<std::size_t>(c)]);
  }
  d.d_macro_f1 = biased.macro_f1 - baseline.macro_f1;
  d.d_overall_accuracy = biased.overall_accuracy - baseline.overall_accuracy;
  for (int a = 0; a < 2; ++a) {
    d.d_group_accuracy[static_cast<std::size_t>(a)] =
        diff(baseline.group_accuracy[static_cast<std::size_t>(a)],
             biased.group_accuracy[static_cast<std::size_t>(a)]);
  }
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      d.d_cell_accuracy[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)] =
          diff(baseline.cell_accuracy[static_cast<std::size_t>(y)]
                                     [static_cast<std::size_t>(a)],
               biased.cell_accuracy[static_cast<std::size_t>(y)]
                                   [static_cast<std::size_t>(a)]);
    }
  }
  return d;
}

}  // namespace shortmr
