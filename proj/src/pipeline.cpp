#include "shortmr/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "shortmr/attribution.hpp"
#include "shortmr/errors.hpp"
#include "shortmr/kernels.hpp"
#include "shortmr/io/checkpoint.hpp"
#include "shortmr/io/cohort_csv.hpp"
#include "shortmr/io/nifti.hpp"
#include "shortmr/io/reports.hpp"
#include "shortmr/parallel.hpp"
#include "shortmr/phantom.hpp"
#include "shortmr/plot/figures.hpp"
#include "shortmr/rankstats.hpp"

namespace shortmr {

namespace {

using io::RunConfig;
using nlohmann::json;

void require_artifact(const std::filesystem::path& p, const std::string& what,
                      const std::string& prior) {
  if (!std::filesystem::exists(p)) {
    throw ValidationError(what + " not found; run " + prior);
  }
}

// Per-volume z-score (or dataset-level stats) applied once when a command
// loads the cohort; models always consume the prepared volumes.
Cohort prepare_cohort(const RunConfig& cfg, Cohort cohort) {
  switch (cfg.normalization()) {
    case RunConfig::Normalization::none:
      return cohort;
    case RunConfig::Normalization::per_volume: {
      for (auto& [sid, vol] : cohort.samples) vol = normalize_zscore(vol);
      return cohort;
    }
    case RunConfig::Normalization::per_dataset: {
      double sum = 0.0, count = 0.0;
      const auto& k = kernels::active();
      for (const auto& [sid, vol] : cohort.samples) {
        sum += k.sum(vol.data.size(), vol.data.data());
        count += static_cast<double>(vol.data.size());
      }
      const double mean = sum / count;
      double ss = 0.0;
      for (const auto& [sid, vol] : cohort.samples) {
        ss += k.sumsq_diff(vol.data.size(), vol.data.data(),
                           static_cast<float>(mean));
      }
      const double std = std::sqrt(ss / count);
      if (std <= 0.0) {
        throw ValidationError("per-dataset normalization: zero variance");
      }
      for (auto& [sid, vol] : cohort.samples) {
        k.shift_scale(vol.data.size(), static_cast<float>(-mean),
                      static_cast<float>(1.0 / std), vol.data.data());
      }
      return cohort;
    }
  }
  return cohort;
}

Cohort load_prepared_cohort(const RunConfig& cfg) {
  const auto manifest = cfg.out_dir() / "cohort" / "manifest.csv";
  require_artifact(manifest, "cohort", "generate");
  return prepare_cohort(cfg, io::load_cohort(manifest));
}

Atlas load_run_atlas(const RunConfig& cfg) {
  const auto vol = cfg.out_dir() / "cohort" / "atlas.nii";
  require_artifact(vol, "atlas", "generate");
  return io::load_atlas(vol, cfg.out_dir() / "cohort" / "atlas_regions.json");
}

json entries_to_json(const std::vector<PairEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back(json{{"subject_id", e.subject_id},
                       {"sample_id", e.sample_id},
                       {"group", e.group},
                       {"label", e.label}});
  }
  return arr;
}

std::vector<PairEntry> entries_from_json(const json& arr) {
  std::vector<PairEntry> out;
  for (const auto& e : arr) {
    out.push_back(PairEntry{e.at("subject_id").get<std::string>(),
                            e.at("sample_id").get<std::string>(),
                            e.at("group").get<int>(), e.at("label").get<int>()});
  }
  return out;
}

// One entry per subject, in subject order; caps the list when max > 0.
std::vector<PairEntry> one_per_subject(const std::vector<PairEntry>& entries,
                                       int max) {
  std::vector<PairEntry> out;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.subject_id).second) out.push_back(e);
  }
  if (max > 0 && static_cast<int>(out.size()) > max) {
    out.resize(static_cast<std::size_t>(max));
  }
  return out;
}

struct ModelSlot {
  const char* name;          // artifact stem
  Target target;
  const char* pair_file;     // curation artifact it trains/evaluates on
};

constexpr ModelSlot kModels[] = {
    {"baseline", Target::diagnosis, "baseline.json"},
    {"biased", Target::diagnosis, "biased.json"},
    {"attribute", Target::attribute, "attribute_split.json"},
};

}  // namespace

void save_pair(const DatasetPair& pair, const std::filesystem::path& path) {
  json j;
  j["attribute"] = to_string(pair.attribute);
  j["design"] = pair.design;
  j["train"] = entries_to_json(pair.train);
  j["val"] = entries_to_json(pair.val);
  j["test"] = entries_to_json(pair.test);
  j["composition"] = io::composition_to_json(pair.declared);
  io::write_json(j, path);
}

DatasetPair load_pair(const std::filesystem::path& path) {
  const json j = io::read_json(path);
  DatasetPair pair;
  pair.attribute = attribute_from_string(j.at("attribute").get<std::string>());
  pair.design = j.at("design").get<std::string>();
  pair.train = entries_from_json(j.at("train"));
  pair.val = entries_from_json(j.at("val"));
  pair.test = entries_from_json(j.at("test"));
  pair.declared = realized_composition(pair);
  return pair;
}

SpatialTransform load_transform_file(const std::filesystem::path& path) {
  const json j = io::read_json(path);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return SpatialTransform::identity_transform();
  if (kind == "affine") {
    const auto m = j.at("matrix").get<std::vector<double>>();
    if (m.size() != 16) {
      throw ValidationError("transform file: affine matrix needs 16 entries");
    }
    std::array<double, 16> a{};
    std::copy(m.begin(), m.end(), a.begin());
    return SpatialTransform::from_affine(a);
  }
  if (kind == "displacement") {
    const auto base = path.parent_path();
    return SpatialTransform::from_displacement(
        io::read_volume(base / j.at("dz").get<std::string>()),
        io::read_volume(base / j.at("dy").get<std::string>()),
        io::read_volume(base / j.at("dx").get<std::string>()));
  }
  throw ValidationError("transform file: unknown kind '" + kind + "'");
}

void run_generate(const RunConfig& cfg) {
  const PhantomSpec spec = cfg.phantom_spec();
  const auto demographics = cfg.demographics();
  const Atlas atlas =
      synthetic_atlas(spec.shape, spec.omega, spec.scheme, spec.seed);
  const Cohort cohort = generate_cohort(spec, demographics, atlas);

  const auto dir = cfg.out_dir() / "cohort";
  io::save_cohort(cohort, dir);
  io::save_atlas(atlas, dir / "atlas.nii", dir / "atlas_regions.json");

  json gt;
  gt["attr_regions"] = std::vector<int>(spec.attr_regions.begin(),
                                        spec.attr_regions.end());
  gt["disease_regions"] = std::vector<int>(spec.disease_regions.begin(),
                                           spec.disease_regions.end());
  gt["signal_attribute"] = to_string(spec.signal_attribute);
  gt["attr_effect"] = spec.attr_effect;
  gt["disease_effect"] = spec.disease_effect;
  gt["noise_sigma"] = spec.noise_sigma;
  gt["anatomy_jitter"] = spec.anatomy_jitter;
  gt["omega"] = spec.omega;
  gt["seed"] = spec.seed;
  io::write_json(gt, dir / "ground_truth.json");
}

void run_curate(const RunConfig& cfg) {
  const auto manifest = cfg.out_dir() / "cohort" / "manifest.csv";
  require_artifact(manifest, "cohort", "generate");
  const Cohort cohort = io::load_cohort(manifest);
  const SplitSpec split = cfg.split_spec();
  Rng root(cfg.seed());

  const DatasetPair baseline = make_baseline(
      cohort, cfg.baseline_budgets(), split, root.derive("baseline").next_u64());

  BiasSpec bias = cfg.bias_spec();
  // pin the biased design to the realized baseline totals so the pairs stay
  // directly comparable
  for (int y = 0; y < 2; ++y) {
    std::set<std::string> train_subj;
    for (const auto& e : baseline.train) {
      if (e.label == y) train_subj.insert(e.subject_id);
    }
    for (const auto& e : baseline.val) {
      if (e.label == y) train_subj.insert(e.subject_id);
    }
    std::set<std::string> test_subj;
    for (const auto& e : baseline.test) {
      if (e.label == y) test_subj.insert(e.subject_id);
    }
    bias.train_per_class[static_cast<std::size_t>(y)] =
        static_cast<int>(train_subj.size());
    bias.test_per_class[static_cast<std::size_t>(y)] =
        static_cast<int>(test_subj.size());
  }

  const DatasetPair biased =
      make_biased(cohort, bias, split, root.derive("biased").next_u64());
  const DatasetPair attr_split = make_split_pair(
      cohort, split, cfg.attribute(), root.derive("expt1").next_u64());

  const AuditReport audit = audit_pair(baseline, biased);

  const auto dir = cfg.out_dir() / "curation";
  save_pair(baseline, dir / "baseline.json");
  save_pair(biased, dir / "biased.json");
  save_pair(attr_split, dir / "attribute_split.json");
  const json audit_json = io::audit_to_json(audit);
  io::validate_audit_json(audit_json);
  io::write_json(audit_json, dir / "audit.json");
}

void run_train(const RunConfig& cfg) {
  const auto curation = cfg.out_dir() / "curation";
  require_artifact(curation / "baseline.json", "curated datasets", "curate");
  const Cohort cohort = load_prepared_cohort(cfg);

  const ModelSpec mspec = cfg.model_spec();
  Rng root(cfg.seed());

  EvalReport eval_baseline, eval_biased;
  for (const auto& slot : kModels) {
    const DatasetPair pair = load_pair(curation / slot.pair_file);
    TrainConfig tc = cfg.train_config();
    tc.seed = root.derive(slot.name).next_u64();
    TrainedModel model = train_classifier(mspec, cohort, pair, slot.target, tc);
    model.model_id = slot.name;
    io::save_checkpoint(model, cfg.out_dir() / "models" /
                                   (std::string(slot.name) + ".ckpt"));

    const EvalReport eval = evaluate(model, cohort, pair.test, slot.target,
                                     pair.attribute, tc.threads);
    const json ej = io::eval_to_json(eval);
    io::validate_eval_json(ej);
    io::write_json(ej, cfg.out_dir() / "models" /
                           ("eval_" + std::string(slot.name) + ".json"));
    if (slot.target == Target::diagnosis) {
      if (std::string(slot.name) == "baseline") {
        eval_baseline = eval;
      } else {
        eval_biased = eval;
      }
    }
  }

  const DeltaReport delta = delta_report(eval_baseline, eval_biased);
  const json dj = io::delta_to_json(delta);
  io::validate_delta_json(dj);
  io::write_json(dj, cfg.out_dir() / "models" / "delta.json");
}

void run_attribute(const RunConfig& cfg) {
  const auto models_dir = cfg.out_dir() / "models";
  require_artifact(models_dir / "baseline.ckpt", "model checkpoints", "train");
  const Cohort cohort = load_prepared_cohort(cfg);
  const Atlas atlas = load_run_atlas(cfg);

  SpatialTransform transform = SpatialTransform::identity_transform();
  if (const std::string tf = cfg.transform_file(); !tf.empty()) {
    transform = load_transform_file(tf);
  }

  const auto curation = cfg.out_dir() / "curation";
  const bool target_predicted = cfg.cam_target() == RunConfig::CamTarget::predicted;
  const int max_samples = cfg.attribution_max_samples();

  json manifest;
  manifest["feature_layer"] = cfg.model_spec().feature_layer;
  json per_model = json::object();

  for (const auto& slot : kModels) {
    const TrainedModel model = io::load_checkpoint(
        models_dir / (std::string(slot.name) + ".ckpt"));
    const DatasetPair pair = load_pair(curation / slot.pair_file);
    const auto samples = one_per_subject(pair.test, max_samples);

    json items = json::array();
    std::vector<AttributionVolume> cams(samples.size());
    parallel_for(samples.size(), cfg.train_config().threads, [&](std::size_t i) {
      const auto& entry = samples[i];
      const Volume& x = cohort.samples.at(entry.sample_id);
      const int target = target_predicted
                             ? model.predict(x)
                             : entry_label(entry, slot.target);
      cams[i] = gradcam3d(model, x, target, entry.sample_id);
    });
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& entry = samples[i];
      Volume atlas_cam =
          apply_transform(cams[i].vol, transform, Interp::trilinear,
                          atlas.shape, atlas.spacing);
      const std::string rel =
          std::string(slot.name) + "/" + entry.sample_id + ".nii";
      io::write_volume(atlas_cam, cfg.out_dir() / "attributions" / rel);
      items.push_back(json{{"sample_id", entry.sample_id},
                           {"subject_id", entry.subject_id},
                           {"file", rel},
                           {"target_class", cams[i].target_class},
                           {"zero_gradient", cams[i].zero_gradient},
                           {"group", entry.group},
                           {"label", entry.label}});
    }
    per_model[slot.name] = items;
  }
  manifest["models"] = per_model;
  io::write_json(manifest, cfg.out_dir() / "attributions" / "manifest.json");
}

void run_analyze(const RunConfig& cfg) {
  const auto attr_dir = cfg.out_dir() / "attributions";
  require_artifact(attr_dir / "manifest.json", "attribution volumes",
                   "attribute");
  const Atlas atlas = load_run_atlas(cfg);
  const json manifest = io::read_json(attr_dir / "manifest.json");

  std::map<std::string, std::vector<double>> mean_ranks;
  std::map<std::string, std::vector<std::string>> sample_files;
  for (const auto& slot : kModels) {
    const auto& items = manifest.at("models").at(slot.name);
    if (items.empty()) {
      throw ValidationError("no attribution volumes recorded for model '" +
                            std::string(slot.name) + "'");
    }
    std::vector<std::vector<double>> per_sample;
    for (const auto& item : items) {
      const Volume cam = io::read_volume(attr_dir / item.at("file").get<std::string>());
      per_sample.push_back(regional_means(cam, atlas));
      sample_files[slot.name].push_back(item.at("file").get<std::string>());
    }
    mean_ranks[slot.name] = mean_rank_vector_from_means(per_sample);
  }

  Rng root(cfg.seed());
  const RankReport report = build_rank_report(
      mean_ranks["baseline"], mean_ranks["biased"], mean_ranks["attribute"],
      cfg.analysis_top_k(), cfg.analysis_permutations(), root.derive("perm"));
  const json rj = io::rank_report_to_json(report, atlas.region_names);
  io::validate_rank_report_json(rj);
  io::write_json(rj, cfg.out_dir() / "analysis" / "rank_report.json");

  // stability curves on the configured diagnosis models
  const Cohort cohort = load_prepared_cohort(cfg);
  StabilitySpec sspec = cfg.stability_spec();
  if (cfg.get_string("attribution.mask") == "brain") {
    Volume mask(atlas.shape, atlas.spacing);
    for (std::size_t i = 0; i < atlas.labels.size(); ++i) {
      mask.data[i] = atlas.labels[i] > 0 ? 1.0f : 0.0f;
    }
    sspec.brain_mask = std::move(mask);
  }
  const int n_samples = cfg.stability_samples();

  std::map<std::string, std::vector<std::pair<int, double>>> curves;
  for (const std::string& name : cfg.stability_models()) {
    const TrainedModel model = io::load_checkpoint(
        cfg.out_dir() / "models" / (name + ".ckpt"));
    const auto& items = manifest.at("models").at(name);
    std::vector<Volume> vols;
    std::vector<AttributionVolume> cams;
    for (const auto& item : items) {
      if (static_cast<int>(vols.size()) >= n_samples) break;
      const std::string sid = item.at("sample_id").get<std::string>();
      vols.push_back(cohort.samples.at(sid));
      AttributionVolume av;
      av.vol = io::read_volume(attr_dir / item.at("file").get<std::string>());
      av.sample_id = sid;
      cams.push_back(std::move(av));
    }
    std::vector<const Volume*> xs;
    std::vector<const AttributionVolume*> attrs;
    for (std::size_t i = 0; i < vols.size(); ++i) {
      xs.push_back(&vols[i]);
      attrs.push_back(&cams[i]);
    }
    Rng stream = root.derive(name);
    curves[name] = stability_curve_mean(predictor_of(model), xs, attrs, sspec,
                                        stream);
  }
  const json sj = io::stability_to_json(curves);
  io::validate_stability_json(sj);
  io::write_json(sj, cfg.out_dir() / "analysis" / "stability.json");
}

void run_report(const RunConfig& cfg) {
  const auto analysis = cfg.out_dir() / "analysis";
  require_artifact(analysis / "rank_report.json", "analysis reports", "analyze");
  const auto models_dir = cfg.out_dir() / "models";
  require_artifact(models_dir / "eval_baseline.json", "evaluation reports",
                   "train");

  auto eval_from_json = [](const json& j) {
    EvalReport r;
    r.attribute = attribute_from_string(j.at("attribute").get<std::string>());
    r.n = j.at("n").get<std::int64_t>();
    for (int y = 0; y < 2; ++y) {
      for (int c = 0; c < 2; ++c) {
        r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(c)] =
            j.at("confusion").at(y).at(c).get<std::int64_t>();
      }
    }
    for (int c = 0; c < 2; ++c) {
      const auto& f = j.at("f1").at(c);
      if (!f.is_null()) r.f1[static_cast<std::size_t>(c)] = f.get<double>();
      const auto& g = j.at("group_accuracy").at(c);
      if (!g.is_null()) {
        r.group_accuracy[static_cast<std::size_t>(c)] = g.get<double>();
      }
      r.group_n[static_cast<std::size_t>(c)] =
          j.at("group_n").at(c).get<std::int64_t>();
    }
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.overall_accuracy = j.at("overall_accuracy").get<double>();
    for (int y = 0; y < 2; ++y) {
      for (int a = 0; a < 2; ++a) {
        const auto& c = j.at("cell_accuracy").at(y).at(a);
        if (!c.is_null()) {
          r.cell_accuracy[static_cast<std::size_t>(y)]
                         [static_cast<std::size_t>(a)] = c.get<double>();
        }
        r.cell_n[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)] =
            j.at("cell_n").at(y).at(a).get<std::int64_t>();
      }
    }
    return r;
  };

  const EvalReport eval_baseline =
      eval_from_json(io::read_json(models_dir / "eval_baseline.json"));
  const EvalReport eval_biased =
      eval_from_json(io::read_json(models_dir / "eval_biased.json"));

  const json rj = io::read_json(analysis / "rank_report.json");
  RankReport report;
  report.r_ba = rj.at("r_ba").get<std::vector<double>>();
  report.r_bi = rj.at("r_bi").get<std::vector<double>>();
  report.r_pa = rj.at("r_pa").get<std::vector<double>>();
  report.b = rj.at("b").get<std::vector<double>>();
  report.p = rj.at("p").get<std::vector<double>>();
  report.correlation.defined = rj.at("rho_defined").get<bool>();
  if (report.correlation.defined) {
    report.correlation.rho = rj.at("rho").get<double>();
    report.correlation.p_value = rj.at("p_param").get<double>();
  }
  report.permutation.p_value = rj.at("p_perm").get<double>();
  report.permutation.degenerate = rj.at("perm_degenerate").get<bool>();
  report.top_regions = rj.at("top_regions").get<std::vector<int>>();
  report.top_k = rj.at("top_k").get<int>();
  report.permutations = rj.at("permutations").get<int>();

  const Atlas atlas = load_run_atlas(cfg);

  // smooth background for the overlay: mean of a few cohort volumes
  const auto manifest = cfg.out_dir() / "cohort" / "manifest.csv";
  require_artifact(manifest, "cohort", "generate");
  const Cohort cohort = io::load_cohort(manifest);
  Volume background(atlas.shape, atlas.spacing);
  int used = 0;
  for (const auto& [sid, vol] : cohort.samples) {
    if (used >= 8) break;
    if (vol.shape != atlas.shape) continue;
    for (std::size_t i = 0; i < background.data.size(); ++i) {
      background.data[i] += vol.data[i];
    }
    ++used;
  }
  if (used > 0) {
    for (auto& v : background.data) v /= static_cast<float>(used);
  }

  const auto dir = cfg.out_dir() / "report";
  plot::write_delta_figure(dir / "fig_deltas.png", eval_baseline, eval_biased);
  plot::write_rank_scatter(dir / "fig_rank_scatter.png", report,
                           atlas.region_names);
  plot::write_region_overlay(dir / "fig_top_regions.png", atlas, background,
                             report);
}

void run_pipeline(const std::string& command, const RunConfig& cfg) {
  if (command == "generate") {
    run_generate(cfg);
  } else if (command == "curate") {
    run_curate(cfg);
  } else if (command == "train") {
    run_train(cfg);
  } else if (command == "attribute") {
    run_attribute(cfg);
  } else if (command == "analyze") {
    run_analyze(cfg);
  } else if (command == "report") {
    run_report(cfg);
  } else {
    throw ValidationError("unknown command '" + command + "'");
  }
}

}  // namespace shortmr
