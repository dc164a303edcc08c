#include "shortmr/cohort.hpp"

#include <set>

#include "shortmr/errors.hpp"

namespace shortmr {

std::string to_string(Sex s) { return s == Sex::female ? "F" : "M"; }
std::string to_string(Race r) { return r == Race::black ? "Black" : "White"; }
std::string to_string(Diagnosis d) { return d == Diagnosis::cn ? "CN" : "AD"; }
std::string to_string(Attribute a) { return a == Attribute::sex ? "sex" : "race"; }

Sex sex_from_string(const std::string& s) {
  if (s == "F" || s == "female") return Sex::female;
  if (s == "M" || s == "male") return Sex::male;
  throw ValidationError("unknown enum value for sex: '" + s + "'");
}

Race race_from_string(const std::string& s) {
  if (s == "Black" || s == "black") return Race::black;
  if (s == "White" || s == "white") return Race::white;
  throw ValidationError("unknown enum value for race: '" + s + "'");
}

Diagnosis diagnosis_from_string(const std::string& s) {
  if (s == "CN") return Diagnosis::cn;
  if (s == "AD") return Diagnosis::ad;
  throw ValidationError("unknown enum value for diagnosis: '" + s + "'");
}

Attribute attribute_from_string(const std::string& s) {
  if (s == "sex") return Attribute::sex;
  if (s == "race") return Attribute::race;
  throw ValidationError("unknown attribute: '" + s + "' (expected sex or race)");
}

int group_of(const SubjectRecord& rec, Attribute a) {
  if (a == Attribute::sex) return rec.sex == Sex::male ? 1 : 0;
  return rec.race == Race::white ? 1 : 0;
}

void validate_cohort(const Cohort& c) {
  std::set<std::string> subject_ids;
  std::set<std::string> sample_ids;
  for (const auto& rec : c.subjects) {
    if (!subject_ids.insert(rec.subject_id).second) {
      throw ValidationError("cohort: duplicate subject id '" + rec.subject_id +
                            "'");
    }
    if (rec.sample_ids.empty()) {
      throw ValidationError("cohort: subject '" + rec.subject_id +
                            "' has no samples");
    }
    for (const auto& sid : rec.sample_ids) {
      if (!sample_ids.insert(sid).second) {
        throw ValidationError("cohort: sample '" + sid +
                              "' referenced by more than one subject");
      }
      if (c.samples.find(sid) == c.samples.end()) {
        throw ValidationError("cohort: sample '" + sid + "' has no volume");
      }
    }
  }
  for (const auto& [sid, vol] : c.samples) {
    if (sample_ids.find(sid) == sample_ids.end()) {
      throw ValidationError("cohort: volume '" + sid +
                            "' not referenced by any subject");
    }
  }
}

}  // namespace shortmr
