#include "shortmr/io/reports.hpp"

#include <fstream>

#include "shortmr/errors.hpp"

namespace shortmr::io {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError("report schema violation: " + what);
}

void require_keys(const json& j, std::initializer_list<const char*> keys,
                  const std::string& ctx) {
  require(j.is_object(), ctx + " must be an object");
  for (const char* k : keys) {
    require(j.contains(k), ctx + " missing key '" + k + "'");
  }
}

bool number_or_null(const json& j) { return j.is_number() || j.is_null(); }

}  // namespace

json eval_to_json(const EvalReport& rep) {
  json j;
  j["attribute"] = to_string(rep.attribute);
  j["n"] = rep.n;
  j["confusion"] = {{rep.confusion[0][0], rep.confusion[0][1]},
                    {rep.confusion[1][0], rep.confusion[1][1]}};
  j["f1"] = {opt(rep.f1[0]), opt(rep.f1[1])};
  j["macro_f1"] = rep.macro_f1;
  j["overall_accuracy"] = rep.overall_accuracy;
  j["group_accuracy"] = {opt(rep.group_accuracy[0]), opt(rep.group_accuracy[1])};
  j["group_n"] = {rep.group_n[0], rep.group_n[1]};
  j["cell_accuracy"] = {
      {opt(rep.cell_accuracy[0][0]), opt(rep.cell_accuracy[0][1])},
      {opt(rep.cell_accuracy[1][0]), opt(rep.cell_accuracy[1][1])}};
  j["cell_n"] = {{rep.cell_n[0][0], rep.cell_n[0][1]},
                 {rep.cell_n[1][0], rep.cell_n[1][1]}};
  return j;
}

json delta_to_json(const DeltaReport& rep) {
  json j;
  j["d_f1"] = {opt(rep.d_f1[0]), opt(rep.d_f1[1])};
  j["d_macro_f1"] = opt(rep.d_macro_f1);
  j["d_overall_accuracy"] = opt(rep.d_overall_accuracy);
  j["d_group_accuracy"] = {opt(rep.d_group_accuracy[0]),
                           opt(rep.d_group_accuracy[1])};
  j["d_cell_accuracy"] = {
      {opt(rep.d_cell_accuracy[0][0]), opt(rep.d_cell_accuracy[0][1])},
      {opt(rep.d_cell_accuracy[1][0]), opt(rep.d_cell_accuracy[1][1])}};
  return j;
}

json audit_to_json(const AuditReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return json{{"all_pass", rep.all_pass}, {"checks", checks}};
}

json composition_to_json(const CompositionTable& table) {
  static const char* kSplits[3] = {"train", "val", "test"};
  json j;
  for (int s = 0; s < 3; ++s) {
    json sj;
    for (int y = 0; y < 2; ++y) {
      const auto& gc = table[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)];
      sj[to_string(static_cast<Diagnosis>(y))] = {
          {"S", {gc.subjects[0], gc.subjects[1]}},
          {"N", {gc.samples[0], gc.samples[1]}}};
    }
    j[kSplits[s]] = sj;
  }
  return j;
}

json rank_report_to_json(const RankReport& rep,
                         const std::vector<std::string>& region_names) {
  json j;
  j["omega"] = rep.r_ba.size();
  j["region_names"] = region_names;
  j["r_ba"] = rep.r_ba;
  j["r_bi"] = rep.r_bi;
  j["r_pa"] = rep.r_pa;
  j["b"] = rep.b;
  j["p"] = rep.p;
  j["rho"] = rep.correlation.defined ? json(rep.correlation.rho) : json(nullptr);
  j["rho_defined"] = rep.correlation.defined;
  j["p_param"] =
      rep.correlation.defined ? json(rep.correlation.p_value) : json(nullptr);
  j["p_perm"] = rep.permutation.p_value;
  j["perm_degenerate"] = rep.permutation.degenerate;
  j["permutations"] = rep.permutations;
  j["top_k"] = rep.top_k;
  j["top_regions"] = rep.top_regions;
  return j;
}

json stability_to_json(
    const std::map<std::string, std::vector<std::pair<int, double>>>& curves) {
  json j;
  for (const auto& [name, curve] : curves) {
    json arr = json::array();
    for (const auto& [radius, prob] : curve) {
      arr.push_back(json{{"radius", radius}, {"stability", prob}});
    }
    j[name] = arr;
  }
  return json{{"curves", j}};
}

void validate_eval_json(const json& j) {
  require_keys(j,
               {"attribute", "n", "confusion", "f1", "macro_f1",
                "overall_accuracy", "group_accuracy", "group_n", "cell_accuracy",
                "cell_n"},
               "eval report");
  require(j["n"].is_number_integer(), "n must be an integer");
  require(j["confusion"].is_array() && j["confusion"].size() == 2,
          "confusion must be 2x2");
  std::int64_t total = 0;
  for (const auto& row : j["confusion"]) {
    require(row.is_array() && row.size() == 2, "confusion must be 2x2");
    for (const auto& c : row) total += c.get<std::int64_t>();
  }
  require(total == j["n"].get<std::int64_t>(),
          "confusion total must equal sample count");
  for (const auto& v : j["f1"]) require(number_or_null(v), "f1 entries");
  for (const auto& v : j["group_accuracy"]) {
    require(number_or_null(v), "group_accuracy entries");
    if (v.is_number()) {
      require(v.get<double>() >= 0.0 && v.get<double>() <= 1.0,
              "accuracies must be in [0,1]");
    }
  }
}

void validate_delta_json(const json& j) {
  require_keys(j,
               {"d_f1", "d_macro_f1", "d_overall_accuracy", "d_group_accuracy",
                "d_cell_accuracy"},
               "delta report");
  for (const auto& v : j["d_f1"]) require(number_or_null(v), "d_f1 entries");
}

void validate_audit_json(const json& j) {
  require_keys(j, {"all_pass", "checks"}, "audit report");
  require(j["checks"].is_array(), "checks must be an array");
  for (const auto& c : j["checks"]) {
    require_keys(c, {"name", "pass", "detail"}, "audit check");
    require(c["pass"].is_boolean(), "check pass must be boolean");
  }
}

void validate_rank_report_json(const json& j) {
  require_keys(j,
               {"omega", "region_names", "r_ba", "r_bi", "r_pa", "b", "p", "rho",
                "rho_defined", "p_param", "p_perm", "perm_degenerate",
                "permutations", "top_k", "top_regions"},
               "rank report");
  const auto omega = j["omega"].get<std::size_t>();
  for (const char* k : {"r_ba", "r_bi", "r_pa", "b", "p"}) {
    require(j[k].is_array() && j[k].size() == omega,
            std::string(k) + " must have omega entries");
  }
  require(number_or_null(j["rho"]), "rho must be number or null");
  if (j["rho"].is_number()) {
    const double rho = j["rho"].get<double>();
    require(rho >= -1.0 && rho <= 1.0, "rho must be in [-1,1]");
  }
  const double p_perm = j["p_perm"].get<double>();
  require(p_perm > 0.0 && p_perm <= 1.0, "p_perm must be in (0,1]");
  require(j["top_regions"].is_array(), "top_regions must be an array");
  for (const auto& r : j["top_regions"]) {
    const auto id = r.get<std::int64_t>();
    require(id >= 1 && id <= static_cast<std::int64_t>(omega),
            "top region ids must be in 1..omega");
  }
}

void validate_stability_json(const json& j) {
  require_keys(j, {"curves"}, "stability report");
  for (const auto& [name, curve] : j["curves"].items()) {
    require(curve.is_array(), "curve '" + name + "' must be an array");
    for (const auto& pt : curve) {
      require_keys(pt, {"radius", "stability"}, "stability point");
      const double s = pt["stability"].get<double>();
      require(s >= 0.0 && s <= 1.0, "stability must be in [0,1]");
    }
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write '" + path.string() + "'");
  f << j.dump(2) << "\n";
  if (!f) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw RuntimeFailure("cannot open '" + path.string() + "'");
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return j;
}

}  // namespace shortmr::io
