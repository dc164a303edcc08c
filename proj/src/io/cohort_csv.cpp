#include "shortmr/io/cohort_csv.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "shortmr/errors.hpp"
#include "shortmr/io/nifti.hpp"

namespace shortmr::io {

namespace {

const char* kHeader = "subject_id,sample_id,sex,race,age,diagnosis,volume_path";

std::string format_age(double age) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", age);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void check_field(const std::string& v, const char* name) {
  if (v.find(',') != std::string::npos || v.find('\n') != std::string::npos) {
    throw ValidationError(std::string("save_cohort: ") + name +
                          " may not contain commas or newlines: '" + v + "'");
  }
}

}  // namespace

std::filesystem::path save_cohort(const Cohort& cohort,
                                  const std::filesystem::path& dir) {
  validate_cohort(cohort);
  std::filesystem::create_directories(dir / "volumes");
  const auto manifest = dir / "manifest.csv";
  std::ofstream f(manifest, std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write '" + manifest.string() + "'");
  f << kHeader << "\n";
  for (const auto& rec : cohort.subjects) {
    check_field(rec.subject_id, "subject_id");
    for (const auto& sid : rec.sample_ids) {
      check_field(sid, "sample_id");
      const std::string rel = "volumes/" + sid + ".nii";
      write_volume(cohort.samples.at(sid), dir / rel);
      f << rec.subject_id << ',' << sid << ',' << to_string(rec.sex) << ','
        << to_string(rec.race) << ',' << format_age(rec.age) << ','
        << to_string(rec.diagnosis) << ',' << rel << "\n";
    }
  }
  if (!f) throw RuntimeFailure("write failed for '" + manifest.string() + "'");
  return manifest;
}

Cohort load_cohort(const std::filesystem::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) {
    throw RuntimeFailure("cannot open '" + manifest_path.string() + "'");
  }
  const auto base = manifest_path.parent_path();

  std::string line;
  if (!std::getline(f, line)) {
    throw ValidationError("manifest is empty");
  }
  {
    auto hdr = line;
    if (!hdr.empty() && hdr.back() == '\r') hdr.pop_back();
    if (hdr != kHeader) {
      throw ValidationError("manifest header must be exactly '" +
                            std::string(kHeader) + "'");
    }
  }

  Cohort cohort;
  std::map<std::string, std::size_t> subject_index;
  std::map<std::string, int> sample_rows;  // sample_id -> first row seen
  std::vector<std::string> errors;
  int row = 1;  // header was row 1
  while (std::getline(f, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 7) {
      errors.push_back("row " + std::to_string(row) + ": expected 7 columns, got " +
                       std::to_string(fields.size()));
      continue;
    }
    const auto& subject_id = fields[0];
    const auto& sample_id = fields[1];

    auto it = sample_rows.find(sample_id);
    if (it != sample_rows.end()) {
      errors.push_back("row " + std::to_string(row) + ": duplicate sample_id '" +
                       sample_id + "' (first seen on row " +
                       std::to_string(it->second) + ")");
      continue;
    }
    sample_rows.emplace(sample_id, row);

    Sex sex{};
    Race race{};
    Diagnosis dx{};
    double age = 0.0;
    bool ok = true;
    try {
      sex = sex_from_string(fields[2]);
      race = race_from_string(fields[3]);
      dx = diagnosis_from_string(fields[5]);
    } catch (const ValidationError& e) {
      errors.push_back("row " + std::to_string(row) + ": " + e.what());
      ok = false;
    }
    try {
      std::size_t pos = 0;
      age = std::stod(fields[4], &pos);
      if (pos != fields[4].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      errors.push_back("row " + std::to_string(row) + ": bad age '" + fields[4] +
                       "'");
      ok = false;
    }
    if (!ok) continue;

    Volume vol;
    try {
      vol = read_volume(base / fields[6]);
    } catch (const std::exception& e) {
      errors.push_back("row " + std::to_string(row) + ": volume '" + fields[6] +
                       "': " + e.what());
      continue;
    }

    auto si = subject_index.find(subject_id);
    if (si == subject_index.end()) {
      SubjectRecord rec;
      rec.subject_id = subject_id;
      rec.sex = sex;
      rec.race = race;
      rec.age = age;
      rec.diagnosis = dx;
      cohort.subjects.push_back(rec);
      si = subject_index.emplace(subject_id, cohort.subjects.size() - 1).first;
    } else {
      const auto& rec = cohort.subjects[si->second];
      if (rec.sex != sex || rec.race != race || rec.diagnosis != dx ||
          rec.age != age) {
        errors.push_back("row " + std::to_string(row) +
                         ": attributes disagree with an earlier row for subject '" +
                         subject_id + "'");
        continue;
      }
    }
    cohort.subjects[si->second].sample_ids.push_back(sample_id);
    cohort.samples.emplace(sample_id, std::move(vol));
  }

  if (!errors.empty()) {
    std::string msg = "manifest '" + manifest_path.string() + "' has " +
                      std::to_string(errors.size()) + " error(s):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  validate_cohort(cohort);
  return cohort;
}

}  // namespace shortmr::io
