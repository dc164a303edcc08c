#include "shortmr/io/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "shortmr/errors.hpp"

namespace shortmr::io {

namespace {

struct KeyInfo {
  const char* key;
  bool required;
  const char* fallback;  // nullptr = no default (must be set if required)
};

// The full key registry; anything else in a config file is rejected.
const KeyInfo kKeys[] = {
    {"seed", false, "1"},
    {"out_dir", true, nullptr},

    {"phantom.shape", false, "32 32 32"},
    {"phantom.omega", false, "16"},
    {"phantom.scheme", false, "grid"},
    {"phantom.attr_regions", false, "6 11"},
    {"phantom.disease_regions", false, "1 16"},
    {"phantom.signal_attribute", false, "sex"},
    {"phantom.attr_effect", false, "0.5"},
    {"phantom.disease_effect", false, "0.8"},
    {"phantom.noise_sigma", false, "0.05"},
    {"phantom.anatomy_jitter", false, "0.0"},
    {"phantom.samples_per_subject", false, "1"},
    {"phantom.demographics", false,
     "F White CN 65 25; M White CN 65 25; F White AD 75 25; M White AD 75 25"},

    {"split.train_fraction", false, "0.8"},
    {"split.val_fraction", false, "0.1"},
    {"split.strata", false, "diagnosis sex race age_bin"},
    {"split.merge_small_strata", false, "true"},
    {"split.min_stratum_subjects", false, "2"},

    {"bias.attribute", false, "sex"},
    {"bias.majority", false, "1 0"},
    {"bias.p_train", false, "0.9"},
    {"bias.p_test", false, "0.1"},

    {"baseline.budgets", false, "25 25 25 25"},

    {"model.stages", false, "4"},
    {"model.base_channels", false, "8"},
    {"model.feature_layer", false, ""},

    {"train.max_epochs", false, "20"},
    {"train.batch_size", false, "4"},
    {"train.grad_accum", false, "1"},
    {"train.learning_rate", false, "1e-3"},
    {"train.weight_decay", false, "1e-2"},
    {"train.cosine_horizon", false, "0"},
    {"train.patience", false, "5"},
    {"train.selection", false, "val_f1"},
    {"train.threads", false, "0"},
    {"train.normalization", false, "per_volume"},

    {"attribution.patch_size", false, "4 4 4"},
    {"attribution.top_fraction", false, "0.125"},
    {"attribution.radii", false, "0 1 2 4 8 16"},
    {"attribution.trials", false, "200"},
    {"attribution.fill", false, "0"},
    {"attribution.target", false, "predicted"},
    {"attribution.mask", false, "brain"},
    {"attribution.transform", false, "identity"},
    {"attribution.max_samples", false, "0"},

    {"analysis.permutations", false, "999"},
    {"analysis.top_k", false, "5"},
    {"analysis.stability_samples", false, "4"},
    {"analysis.stability_models", false, "baseline biased"},
};

const KeyInfo* find_key(const std::string& key) {
  for (const auto& k : kKeys) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw ValidationError("config key '" + key + "': " + why);
}

}  // namespace

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected 'key = value', got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!find_key(key)) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": unknown key '" + key + "'");
    }
    if (cfg.values_.count(key)) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_string(ss.str());
}

void RunConfig::validate() const {
  for (const auto& k : kKeys) {
    if (k.required && !values_.count(k.key)) {
      throw ValidationError("config key '" + std::string(k.key) +
                            "' is required");
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) {
    throw ValidationError("config key '" + key + "' is unknown");
  }
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string RunConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const KeyInfo* k = find_key(key);
  if (!k) bad_key(key, "not in the key registry");
  if (!k->fallback) bad_key(key, "missing and has no default");
  return k->fallback;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    bad_key(key, "expected a number, got '" + v + "'");
  }
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return i;
  } catch (const std::exception&) {
    bad_key(key, "expected an integer, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_key(key, "expected true/false, got '" + v + "'");
}

std::vector<std::int64_t> RunConfig::get_ints(const std::string& key) const {
  std::istringstream in(get_string(key));
  std::vector<std::int64_t> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoll(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      bad_key(key, "expected integers, got '" + tok + "'");
    }
  }
  return out;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::istringstream in(get_string(key));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      bad_key(key, "expected numbers, got '" + tok + "'");
    }
  }
  return out;
}

std::uint64_t RunConfig::seed() const {
  return static_cast<std::uint64_t>(get_int("seed"));
}

std::filesystem::path RunConfig::out_dir() const {
  return get_string("out_dir");
}

AtlasScheme RunConfig::atlas_scheme() const {
  const std::string s = get_string("phantom.scheme");
  if (s == "grid") return AtlasScheme::grid;
  if (s == "voronoi") return AtlasScheme::voronoi;
  bad_key("phantom.scheme", "expected grid or voronoi, got '" + s + "'");
}

PhantomSpec RunConfig::phantom_spec() const {
  PhantomSpec spec;
  const auto shape = get_ints("phantom.shape");
  if (shape.size() != 3) bad_key("phantom.shape", "expected three integers");
  spec.shape = {shape[0], shape[1], shape[2]};
  spec.omega = static_cast<int>(get_int("phantom.omega"));
  spec.scheme = atlas_scheme();
  for (auto r : get_ints("phantom.attr_regions")) {
    spec.attr_regions.insert(static_cast<int>(r));
  }
  for (auto r : get_ints("phantom.disease_regions")) {
    spec.disease_regions.insert(static_cast<int>(r));
  }
  spec.signal_attribute =
      attribute_from_string(get_string("phantom.signal_attribute"));
  spec.attr_effect = get_double("phantom.attr_effect");
  spec.disease_effect = get_double("phantom.disease_effect");
  spec.noise_sigma = get_double("phantom.noise_sigma");
  spec.anatomy_jitter = get_double("phantom.anatomy_jitter");
  spec.samples_per_subject =
      static_cast<int>(get_int("phantom.samples_per_subject"));
  spec.seed = seed();
  try {
    validate_phantom_spec(spec);
  } catch (const ValidationError& e) {
    throw ValidationError("config key 'phantom.*': " + std::string(e.what()));
  }
  return spec;
}

std::vector<DemographicGroup> RunConfig::demographics() const {
  const std::string text = get_string("phantom.demographics");
  std::vector<DemographicGroup> groups;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ';')) {
    const std::string t = trim(part);
    if (t.empty()) continue;
    std::istringstream gs(t);
    std::string sex, race, dx, age, n;
    if (!(gs >> sex >> race >> dx >> age >> n)) {
      bad_key("phantom.demographics",
              "each group needs 'sex race dx age n', got '" + t + "'");
    }
    std::string extra;
    if (gs >> extra) {
      bad_key("phantom.demographics", "trailing token '" + extra + "'");
    }
    DemographicGroup g;
    try {
      g.sex = sex_from_string(sex);
      g.race = race_from_string(race);
      g.diagnosis = diagnosis_from_string(dx);
      g.age = std::stod(age);
      g.n_subjects = std::stoi(n);
    } catch (const std::exception& e) {
      bad_key("phantom.demographics", std::string(e.what()) + " in '" + t + "'");
    }
    groups.push_back(g);
  }
  if (groups.empty()) bad_key("phantom.demographics", "no groups given");
  return groups;
}

SplitSpec RunConfig::split_spec() const {
  SplitSpec spec;
  spec.train_fraction = get_double("split.train_fraction");
  spec.val_fraction_of_train = get_double("split.val_fraction");
  spec.merge_small_strata = get_bool("split.merge_small_strata");
  spec.min_stratum_subjects =
      static_cast<int>(get_int("split.min_stratum_subjects"));
  spec.strata.clear();
  std::istringstream in(get_string("split.strata"));
  std::string tok;
  while (in >> tok) {
    if (tok == "diagnosis") {
      spec.strata.insert(StratumField::diagnosis);
    } else if (tok == "sex") {
      spec.strata.insert(StratumField::sex);
    } else if (tok == "race") {
      spec.strata.insert(StratumField::race);
    } else if (tok == "age_bin") {
      spec.strata.insert(StratumField::age_bin);
    } else {
      bad_key("split.strata", "unknown stratum field '" + tok + "'");
    }
  }
  try {
    validate_split_spec(spec);
  } catch (const ValidationError& e) {
    throw ValidationError("config key 'split.*': " + std::string(e.what()));
  }
  return spec;
}

Attribute RunConfig::attribute() const {
  return attribute_from_string(get_string("bias.attribute"));
}

CellBudgets RunConfig::baseline_budgets() const {
  CellBudgets b;
  b.attribute = attribute();
  const auto v = get_ints("baseline.budgets");
  if (v.size() != 4) {
    bad_key("baseline.budgets",
            "expected four counts (y0a0 y0a1 y1a0 y1a1)");
  }
  b.count[0][0] = static_cast<int>(v[0]);
  b.count[0][1] = static_cast<int>(v[1]);
  b.count[1][0] = static_cast<int>(v[2]);
  b.count[1][1] = static_cast<int>(v[3]);
  return b;
}

BiasSpec RunConfig::bias_spec() const {
  BiasSpec spec;
  spec.attribute = attribute();
  const auto maj = get_ints("bias.majority");
  if (maj.size() != 2) bad_key("bias.majority", "expected two group indices");
  spec.majority_group = {static_cast<int>(maj[0]), static_cast<int>(maj[1])};
  spec.p_train = get_double("bias.p_train");
  spec.p_test = get_double("bias.p_test");
  try {
    validate_bias_spec(spec);
  } catch (const ValidationError& e) {
    throw ValidationError("config key 'bias.*': " + std::string(e.what()));
  }
  return spec;
}

ModelSpec RunConfig::model_spec() const {
  ModelSpec spec;
  spec.stages = static_cast<int>(get_int("model.stages"));
  spec.base_channels = static_cast<int>(get_int("model.base_channels"));
  const auto shape = get_ints("phantom.shape");
  spec.input_shape = {shape[0], shape[1], shape[2]};
  const std::string layer = get_string("model.feature_layer");
  spec.feature_layer =
      layer.empty() ? "stage" + std::to_string(spec.stages) : layer;
  try {
    validate_model_spec(spec);
  } catch (const ValidationError& e) {
    throw ValidationError("config key 'model.*': " + std::string(e.what()));
  }
  return spec;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.max_epochs = static_cast<int>(get_int("train.max_epochs"));
  cfg.batch_size = static_cast<int>(get_int("train.batch_size"));
  cfg.grad_accum = static_cast<int>(get_int("train.grad_accum"));
  cfg.learning_rate = get_double("train.learning_rate");
  cfg.weight_decay = get_double("train.weight_decay");
  cfg.cosine_horizon = static_cast<int>(get_int("train.cosine_horizon"));
  cfg.patience = static_cast<int>(get_int("train.patience"));
  const std::string sel = get_string("train.selection");
  if (sel == "val_f1") {
    cfg.selection = SelectionMetric::val_f1;
  } else if (sel == "val_loss") {
    cfg.selection = SelectionMetric::val_loss;
  } else {
    bad_key("train.selection", "expected val_f1 or val_loss, got '" + sel + "'");
  }
  cfg.threads = static_cast<unsigned>(get_int("train.threads"));
  cfg.seed = seed();
  try {
    validate_train_config(cfg);
  } catch (const ValidationError& e) {
    throw ValidationError("config key 'train.*': " + std::string(e.what()));
  }
  return cfg;
}

StabilitySpec RunConfig::stability_spec() const {
  StabilitySpec spec;
  const auto patch = get_ints("attribution.patch_size");
  if (patch.size() != 3) {
    bad_key("attribution.patch_size", "expected three integers");
  }
  spec.patch_size = {patch[0], patch[1], patch[2]};
  spec.top_fraction = get_double("attribution.top_fraction");
  for (auto r : get_ints("attribution.radii")) {
    spec.radii.push_back(static_cast<int>(r));
  }
  spec.trials = static_cast<int>(get_int("attribution.trials"));
  spec.fill_value = static_cast<float>(get_double("attribution.fill"));
  try {
    validate_stability_spec(spec);
  } catch (const ValidationError& e) {
    throw ValidationError("config key 'attribution.*': " + std::string(e.what()));
  }
  return spec;
}

RunConfig::Normalization RunConfig::normalization() const {
  const std::string s = get_string("train.normalization");
  if (s == "per_volume") return Normalization::per_volume;
  if (s == "per_dataset") return Normalization::per_dataset;
  if (s == "none") return Normalization::none;
  bad_key("train.normalization", "expected per_volume, per_dataset or none");
}

RunConfig::CamTarget RunConfig::cam_target() const {
  const std::string s = get_string("attribution.target");
  if (s == "predicted") return CamTarget::predicted;
  if (s == "true" || s == "label") return CamTarget::label;
  bad_key("attribution.target", "expected predicted or true");
}

int RunConfig::analysis_permutations() const {
  return static_cast<int>(get_int("analysis.permutations"));
}

int RunConfig::analysis_top_k() const {
  return static_cast<int>(get_int("analysis.top_k"));
}

int RunConfig::attribution_max_samples() const {
  return static_cast<int>(get_int("attribution.max_samples"));
}

int RunConfig::stability_samples() const {
  return static_cast<int>(get_int("analysis.stability_samples"));
}

std::vector<std::string> RunConfig::stability_models() const {
  std::vector<std::string> out;
  std::istringstream in(get_string("analysis.stability_models"));
  std::string tok;
  while (in >> tok) {
    if (tok != "baseline" && tok != "biased" && tok != "attribute") {
      bad_key("analysis.stability_models",
              "expected names among {baseline, biased, attribute}");
    }
    out.push_back(tok);
  }
  return out;
}

std::string RunConfig::transform_file() const {
  const std::string s = get_string("attribution.transform");
  return s == "identity" ? "" : s;
}

}  // namespace shortmr::io
