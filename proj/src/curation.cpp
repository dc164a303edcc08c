#include "shortmr/curation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "shortmr/errors.hpp"
#include "shortmr/rng.hpp"

namespace shortmr {

void validate_split_spec(const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ValidationError("split: train_fraction must be in (0,1)");
  }
  if (!(spec.val_fraction_of_train >= 0.0 && spec.val_fraction_of_train < 1.0)) {
    throw ValidationError("split: val_fraction_of_train must be in [0,1)");
  }
  if (spec.min_stratum_subjects < 1) {
    throw ValidationError("split: min_stratum_subjects must be >= 1");
  }
}

void validate_bias_spec(const BiasSpec& spec) {
  if (!(spec.p_train >= 0.5 && spec.p_train <= 1.0)) {
    throw ValidationError("bias: p_train must be in [0.5,1]");
  }
  if (!(spec.p_test >= 0.0 && spec.p_test <= 0.5)) {
    throw ValidationError("bias: p_test must be in [0,0.5]");
  }
  for (int y = 0; y < 2; ++y) {
    if (spec.majority_group[y] != 0 && spec.majority_group[y] != 1) {
      throw ValidationError("bias: majority_group entries must be 0 or 1");
    }
    if (spec.train_per_class[y] < 0 || spec.test_per_class[y] < 0) {
      throw ValidationError("bias: negative subject budget");
    }
  }
}

double age_threshold(const std::vector<SubjectRecord>& subjects) {
  if (subjects.empty()) throw ValidationError("age_threshold: no subjects");
  double lo = subjects.front().age, hi = subjects.front().age;
  for (const auto& s : subjects) {
    lo = std::min(lo, s.age);
    hi = std::max(hi, s.age);
  }
  return (lo + hi) / 2.0;
}

namespace {

// Stratum key; -1 marks a field not stratified on, -2 an age-merged stratum.
struct Key {
  int dx = -1, sex = -1, race = -1, agebin = -1;
  auto tied() const { return std::tie(dx, sex, race, agebin); }
  bool operator<(const Key& o) const { return tied() < o.tied(); }
  std::string str() const {
    auto part = [](const char* n, int v) {
      return v == -1 ? std::string()
                     : std::string(n) + "=" + std::to_string(v) + " ";
    };
    std::string s = part("dx", dx) + part("sex", sex) + part("race", race) +
                    part("age_bin", agebin);
    return s.empty() ? "(all)" : s;
  }
};

Key key_of(const SubjectRecord& rec, const std::set<StratumField>& fields,
           double threshold) {
  Key k;
  if (fields.count(StratumField::diagnosis)) k.dx = static_cast<int>(rec.diagnosis);
  if (fields.count(StratumField::sex)) k.sex = static_cast<int>(rec.sex);
  if (fields.count(StratumField::race)) k.race = static_cast<int>(rec.race);
  if (fields.count(StratumField::age_bin)) k.agebin = rec.age >= threshold;
  return k;
}

using Strata = std::map<Key, std::vector<std::size_t>>;

Strata build_strata(const std::vector<SubjectRecord>& recs,
                    const std::set<StratumField>& fields, double threshold) {
  Strata strata;
  std::vector<std::size_t> order(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return recs[a].subject_id < recs[b].subject_id;
  });
  for (std::size_t i : order) {
    strata[key_of(recs[i], fields, threshold)].push_back(i);
  }
  return strata;
}

// Merges undersized strata into the stratum differing only in age_bin.
// Throws when a stratum stays undersized with nowhere to merge.
void merge_small(Strata& strata, const SplitSpec& spec, bool age_in_strata) {
  const auto min_n = static_cast<std::size_t>(spec.min_stratum_subjects);
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = strata.begin(); it != strata.end(); ++it) {
      if (it->second.size() >= min_n) continue;
      if (!spec.merge_small_strata || !age_in_strata || it->first.agebin == -1) {
        throw ValidationError("split: stratum " + it->first.str() + "has only " +
                              std::to_string(it->second.size()) +
                              " subject(s) and cannot be merged");
      }
      // candidate: same (dx, sex, race), any other age bin
      auto target = strata.end();
      for (auto jt = strata.begin(); jt != strata.end(); ++jt) {
        if (jt == it) continue;
        if (jt->first.dx == it->first.dx && jt->first.sex == it->first.sex &&
            jt->first.race == it->first.race) {
          target = jt;
          break;
        }
      }
      if (target == strata.end()) {
        throw ValidationError("split: stratum " + it->first.str() +
                              "has only " + std::to_string(it->second.size()) +
                              " subject(s) and no age-bin counterpart to merge");
      }
      Key merged = it->first;
      merged.agebin = -2;
      std::vector<std::size_t> members = it->second;
      members.insert(members.end(), target->second.begin(), target->second.end());
      std::sort(members.begin(), members.end());
      strata.erase(target);
      strata.erase(it);
      strata[merged] = std::move(members);
      changed = true;
      break;
    }
  }
}

// Largest-remainder apportionment of round(total * fraction) across strata;
// remainder ties broken by a seeded shuffle.
std::vector<std::size_t> allocate(const std::vector<std::size_t>& sizes,
                                  double fraction, Rng rng) {
  const std::size_t n = sizes.size();
  double total = 0;
  for (auto s : sizes) total += static_cast<double>(s);
  auto take_total = static_cast<std::int64_t>(std::llround(total * fraction));
  std::vector<std::size_t> base(n);
  std::vector<double> frac(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = static_cast<double>(sizes[i]) * fraction;
    base[i] = static_cast<std::size_t>(std::floor(quota));
    frac[i] = quota - std::floor(quota);
    assigned += static_cast<std::int64_t>(base[i]);
  }
  std::int64_t rem = take_total - assigned;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; i < n && rem > 0; ++i) {
    const std::size_t s = order[i];
    if (base[s] < sizes[s]) {
      ++base[s];
      --rem;
    }
  }
  return base;
}

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Core subject-level split over records; strict min-stratum policy applies to
// the train/test strata, the val carve never errors.
SplitIndices split_records(const std::vector<SubjectRecord>& recs,
                           const SplitSpec& spec,
                           const std::set<StratumField>& fields,
                           std::uint64_t seed) {
  validate_split_spec(spec);
  if (recs.empty()) throw ValidationError("split: no subjects");
  const double threshold = age_threshold(recs);
  Strata strata = build_strata(recs, fields, threshold);
  merge_small(strata, spec, fields.count(StratumField::age_bin) > 0);

  Rng root(seed);
  std::vector<std::size_t> sizes;
  sizes.reserve(strata.size());
  for (const auto& [k, members] : strata) sizes.push_back(members.size());

  const auto train_take = allocate(sizes, spec.train_fraction,
                                   root.derive("train-alloc"));

  SplitIndices out;
  std::vector<std::vector<std::size_t>> train_by_stratum;
  std::size_t si = 0;
  for (const auto& [k, members] : strata) {
    std::vector<std::size_t> shuffled = members;
    Rng r = root.derive("stratum", si);
    r.shuffle(shuffled);
    const std::size_t t = train_take[si];
    train_by_stratum.emplace_back(shuffled.begin(), shuffled.begin() + t);
    out.test.insert(out.test.end(), shuffled.begin() + t, shuffled.end());
    ++si;
  }

  if (spec.val_fraction_of_train > 0.0) {
    std::vector<std::size_t> train_sizes;
    for (const auto& t : train_by_stratum) train_sizes.push_back(t.size());
    const auto val_take = allocate(train_sizes, spec.val_fraction_of_train,
                                   root.derive("val-alloc"));
    for (std::size_t i = 0; i < train_by_stratum.size(); ++i) {
      const auto& t = train_by_stratum[i];
      out.val.insert(out.val.end(), t.begin(), t.begin() + val_take[i]);
      out.train.insert(out.train.end(), t.begin() + val_take[i], t.end());
    }
  } else {
    for (const auto& t : train_by_stratum) {
      out.train.insert(out.train.end(), t.begin(), t.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// Permissive val carve used by the curated designs: 1-subject strata are fine.
std::vector<std::size_t> carve_val(const std::vector<SubjectRecord>& recs,
                                   const std::vector<std::size_t>& train_pool,
                                   const SplitSpec& spec, Rng rng) {
  if (train_pool.empty() || spec.val_fraction_of_train <= 0.0) return {};
  std::vector<SubjectRecord> sub;
  sub.reserve(train_pool.size());
  for (auto i : train_pool) sub.push_back(recs[i]);
  const double threshold = age_threshold(sub);
  const std::set<StratumField> fields = {StratumField::diagnosis,
                                         StratumField::sex, StratumField::race,
                                         StratumField::age_bin};
  Strata strata;
  for (std::size_t j = 0; j < train_pool.size(); ++j) {
    strata[key_of(sub[j], fields, threshold)].push_back(train_pool[j]);
  }
  std::vector<std::size_t> sizes;
  for (const auto& [k, m] : strata) sizes.push_back(m.size());
  const auto take = allocate(sizes, spec.val_fraction_of_train,
                             rng.derive("val-alloc"));
  std::vector<std::size_t> val;
  std::size_t si = 0;
  for (const auto& [k, m] : strata) {
    std::vector<std::size_t> shuffled = m;
    Rng r = rng.derive("val-stratum", si);
    r.shuffle(shuffled);
    val.insert(val.end(), shuffled.begin(), shuffled.begin() + take[si]);
    ++si;
  }
  std::sort(val.begin(), val.end());
  return val;
}

void append_entries(const Cohort& cohort, const std::vector<std::size_t>& idxs,
                    Attribute attr, std::vector<PairEntry>& out) {
  for (auto i : idxs) {
    const auto& rec = cohort.subjects[i];
    for (const auto& sid : rec.sample_ids) {
      out.push_back(PairEntry{rec.subject_id, sid, group_of(rec, attr),
                              static_cast<int>(rec.diagnosis)});
    }
  }
}

std::string cell_name(Attribute attr, int group, int label) {
  const std::string g = attr == Attribute::sex
                            ? to_string(static_cast<Sex>(group))
                            : to_string(static_cast<Race>(group));
  return "(" + g + ", " + to_string(static_cast<Diagnosis>(label)) + ")";
}

}  // namespace

CompositionTable realized_composition(const DatasetPair& pair) {
  CompositionTable table{};
  const std::vector<PairEntry>* splits[3] = {&pair.train, &pair.val, &pair.test};
  for (int s = 0; s < 3; ++s) {
    std::array<std::array<std::set<std::string>, 2>, 2> subj;
    for (const auto& e : *splits[s]) {
      auto& gc = table[static_cast<std::size_t>(s)][static_cast<std::size_t>(e.label)];
      gc.samples[static_cast<std::size_t>(e.group)]++;
      subj[static_cast<std::size_t>(e.label)][static_cast<std::size_t>(e.group)]
          .insert(e.subject_id);
    }
    for (int y = 0; y < 2; ++y) {
      for (int a = 0; a < 2; ++a) {
        table[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)]
            .subjects[static_cast<std::size_t>(a)] =
            static_cast<std::int64_t>(
                subj[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)]
                    .size());
      }
    }
  }
  return table;
}

SplitIds stratified_split(const Cohort& cohort, const SplitSpec& spec,
                          std::uint64_t seed) {
  validate_cohort(cohort);
  const auto idx = split_records(cohort.subjects, spec, spec.strata, seed);
  SplitIds out;
  for (auto i : idx.train) out.train.push_back(cohort.subjects[i].subject_id);
  for (auto i : idx.val) out.val.push_back(cohort.subjects[i].subject_id);
  for (auto i : idx.test) out.test.push_back(cohort.subjects[i].subject_id);
  return out;
}

DatasetPair make_split_pair(const Cohort& cohort, const SplitSpec& spec,
                            Attribute attribute, std::uint64_t seed) {
  validate_cohort(cohort);
  const auto idx = split_records(cohort.subjects, spec, spec.strata, seed);
  DatasetPair pair;
  pair.attribute = attribute;
  pair.design = "split";
  append_entries(cohort, idx.train, attribute, pair.train);
  append_entries(cohort, idx.val, attribute, pair.val);
  append_entries(cohort, idx.test, attribute, pair.test);
  pair.declared = realized_composition(pair);
  return pair;
}

DatasetPair make_baseline(const Cohort& cohort, const CellBudgets& budgets,
                          const SplitSpec& spec, std::uint64_t seed) {
  validate_cohort(cohort);
  validate_split_spec(spec);
  Rng root(seed);

  // cell membership under the chosen attribute
  std::array<std::array<std::vector<std::size_t>, 2>, 2> cells;
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& rec = cohort.subjects[i];
    cells[static_cast<std::size_t>(rec.diagnosis)]
         [static_cast<std::size_t>(group_of(rec, budgets.attribute))]
             .push_back(i);
  }

  std::vector<std::size_t> selected;
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      const int want = budgets.count[static_cast<std::size_t>(y)]
                                    [static_cast<std::size_t>(a)];
      auto& cell = cells[static_cast<std::size_t>(y)][static_cast<std::size_t>(a)];
      if (static_cast<std::size_t>(want) > cell.size()) {
        throw ValidationError(
            "baseline budget unsatisfiable for cell " +
            cell_name(budgets.attribute, a, y) + ": requested " +
            std::to_string(want) + ", cohort has " + std::to_string(cell.size()));
      }
      std::sort(cell.begin(), cell.end(), [&](std::size_t l, std::size_t r) {
        return cohort.subjects[l].subject_id < cohort.subjects[r].subject_id;
      });
      Rng r = root.derive("cell", y, a);
      r.shuffle(cell);
      selected.insert(selected.end(), cell.begin(), cell.begin() + want);
    }
  }
  if (selected.empty()) throw ValidationError("baseline: empty budget");

  std::vector<SubjectRecord> sub;
  sub.reserve(selected.size());
  for (auto i : selected) sub.push_back(cohort.subjects[i]);

  // train/test allocation stratified by (diagnosis x attribute) so the group
  // ratio within each class carries over within one subject; the val carve
  // additionally stratifies by the remaining demographics.
  std::set<StratumField> fields = {StratumField::diagnosis,
                                   budgets.attribute == Attribute::sex
                                       ? StratumField::sex
                                       : StratumField::race};
  SplitSpec alloc = spec;
  alloc.min_stratum_subjects = 1;
  alloc.val_fraction_of_train = 0.0;
  const auto idx = split_records(sub, alloc, fields, seed);

  std::vector<std::size_t> train_pool;
  for (auto j : idx.train) train_pool.push_back(selected[j]);
  std::vector<std::size_t> test_pool;
  for (auto j : idx.test) test_pool.push_back(selected[j]);

  const auto val_ids =
      carve_val(cohort.subjects, train_pool, spec, root.derive("val"));
  std::vector<std::size_t> train_final;
  for (auto i : train_pool) {
    if (!std::binary_search(val_ids.begin(), val_ids.end(), i)) {
      train_final.push_back(i);
    }
  }

  DatasetPair pair;
  pair.attribute = budgets.attribute;
  pair.design = "baseline";
  append_entries(cohort, train_final, budgets.attribute, pair.train);
  append_entries(cohort, val_ids, budgets.attribute, pair.val);
  append_entries(cohort, test_pool, budgets.attribute, pair.test);
  pair.declared = realized_composition(pair);
  return pair;
}

DatasetPair make_biased(const Cohort& cohort, const BiasSpec& bias,
                        const SplitSpec& spec, std::uint64_t seed) {
  validate_cohort(cohort);
  validate_bias_spec(bias);
  validate_split_spec(spec);
  Rng root(seed);

  std::array<std::array<std::vector<std::size_t>, 2>, 2> cells;
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& rec = cohort.subjects[i];
    cells[static_cast<std::size_t>(rec.diagnosis)]
         [static_cast<std::size_t>(group_of(rec, bias.attribute))]
             .push_back(i);
  }

  std::vector<std::size_t> train_pool, test_pool;
  for (int y = 0; y < 2; ++y) {
    const int maj = bias.majority_group[static_cast<std::size_t>(y)];
    const int min_g = 1 - maj;
    const auto t_total = bias.train_per_class[static_cast<std::size_t>(y)];
    const auto e_total = bias.test_per_class[static_cast<std::size_t>(y)];
    const auto t_maj = static_cast<int>(std::llround(bias.p_train * t_total));
    const auto t_min = t_total - t_maj;
    const auto e_maj = static_cast<int>(std::llround(bias.p_test * e_total));
    const auto e_min = e_total - e_maj;

    struct Need {
      int group;
      int train_n;
      int test_n;
    };
    for (const Need& need : {Need{maj, t_maj, e_maj}, Need{min_g, t_min, e_min}}) {
      auto& cell = cells[static_cast<std::size_t>(y)]
                        [static_cast<std::size_t>(need.group)];
      const auto want = static_cast<std::size_t>(need.train_n + need.test_n);
      if (want > cell.size()) {
        throw ValidationError("bias unsatisfiable for cell " +
                              cell_name(bias.attribute, need.group, y) +
                              ": requested " + std::to_string(want) +
                              ", cohort has " + std::to_string(cell.size()));
      }
      std::sort(cell.begin(), cell.end(), [&](std::size_t l, std::size_t r) {
        return cohort.subjects[l].subject_id < cohort.subjects[r].subject_id;
      });
      Rng r = root.derive("cell", y, need.group);
      r.shuffle(cell);
      train_pool.insert(train_pool.end(), cell.begin(), cell.begin() + need.train_n);
      test_pool.insert(test_pool.end(), cell.begin() + need.train_n,
                       cell.begin() + need.train_n + need.test_n);
    }
  }
  if (train_pool.empty()) throw ValidationError("bias: empty train budget");
  std::sort(train_pool.begin(), train_pool.end());
  std::sort(test_pool.begin(), test_pool.end());

  const auto val_ids =
      carve_val(cohort.subjects, train_pool, spec, root.derive("val"));
  std::vector<std::size_t> train_final;
  for (auto i : train_pool) {
    if (!std::binary_search(val_ids.begin(), val_ids.end(), i)) {
      train_final.push_back(i);
    }
  }

  DatasetPair pair;
  pair.attribute = bias.attribute;
  pair.design = "biased";
  append_entries(cohort, train_final, bias.attribute, pair.train);
  append_entries(cohort, val_ids, bias.attribute, pair.val);
  append_entries(cohort, test_pool, bias.attribute, pair.test);
  pair.declared = realized_composition(pair);
  return pair;
}

namespace {

std::set<std::string> subject_set(const std::vector<PairEntry>& entries) {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.subject_id);
  return s;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b,
              std::string& witness) {
  for (const auto& x : a) {
    if (b.count(x)) {
      witness = x;
      return false;
    }
  }
  return true;
}

std::int64_t class_subjects(const DatasetPair& p, int split_lo, int split_hi,
                            int y) {
  const std::vector<PairEntry>* splits[3] = {&p.train, &p.val, &p.test};
  std::set<std::string> s;
  for (int i = split_lo; i <= split_hi; ++i) {
    for (const auto& e : *splits[i]) {
      if (e.label == y) s.insert(e.subject_id);
    }
  }
  return static_cast<std::int64_t>(s.size());
}

}  // namespace

AuditReport audit_pair(const DatasetPair& baseline, const DatasetPair& biased) {
  AuditReport report;

  for (const auto* pair : {&baseline, &biased}) {
    const auto tr = subject_set(pair->train);
    const auto va = subject_set(pair->val);
    const auto te = subject_set(pair->test);
    std::string w;
    const bool ok = disjoint(tr, va, w) && disjoint(tr, te, w) && disjoint(va, te, w);
    report.checks.push_back(
        {pair->design + "_subject_disjoint", ok,
         ok ? "train/val/test subject sets are pairwise disjoint"
            : "subject '" + w + "' appears in more than one split"});
  }

  for (int y = 0; y < 2; ++y) {
    const auto cls = to_string(static_cast<Diagnosis>(y));
    const auto btr = class_subjects(baseline, 0, 1, y);
    const auto itr = class_subjects(biased, 0, 1, y);
    const auto bte = class_subjects(baseline, 2, 2, y);
    const auto ite = class_subjects(biased, 2, 2, y);
    const bool ok = btr == itr && bte == ite;
    report.checks.push_back(
        {"per_class_totals_" + cls, ok,
         "train+val " + std::to_string(btr) + " vs " + std::to_string(itr) +
             ", test " + std::to_string(bte) + " vs " + std::to_string(ite) +
             " (delta " + std::to_string(std::llabs(btr - itr)) + "/" +
             std::to_string(std::llabs(bte - ite)) + ")"});
  }

  for (const auto* pair : {&baseline, &biased}) {
    const auto realized = realized_composition(*pair);
    bool ok = true;
    std::string detail = "declared composition matches realized";
    for (int s = 0; s < 3 && ok; ++s) {
      for (int y = 0; y < 2 && ok; ++y) {
        const auto& d = pair->declared[static_cast<std::size_t>(s)]
                                      [static_cast<std::size_t>(y)];
        const auto& r = realized[static_cast<std::size_t>(s)]
                                [static_cast<std::size_t>(y)];
        if (d.subjects != r.subjects || d.samples != r.samples) {
          ok = false;
          detail = "mismatch at split " + std::to_string(s) + ", class " +
                   to_string(static_cast<Diagnosis>(y));
        }
      }
    }
    report.checks.push_back({pair->design + "_declared_vs_realized", ok, detail});
  }

  report.all_pass = true;
  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;
  return report;
}

}  // namespace shortmr
