#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shortmr/phantom_spec.hpp"
#include "shortmr/types.hpp"
#include "shortmr/volume.hpp"

namespace shortmr {

struct SubjectRecord {
  std::string subject_id;
  Sex sex = Sex::female;
  Race race = Race::white;
  double age = 0.0;
  Diagnosis diagnosis = Diagnosis::cn;
  std::vector<std::string> sample_ids;
};

// 0/1 group index of the subject under the chosen attribute.
int group_of(const SubjectRecord& rec, Attribute a);

using SampleMap = std::map<std::string, Volume>;

struct Cohort {
  std::vector<SubjectRecord> subjects;
  SampleMap samples;
  std::optional<PhantomSpec> ground_truth;
};

// Structural checks: unique subject ids, >= 1 sample per subject, every
// sample id referenced by exactly one subject and present in the map.
void validate_cohort(const Cohort& c);

}  // namespace shortmr
