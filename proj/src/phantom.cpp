#include "shortmr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "shortmr/errors.hpp"

namespace shortmr {

void validate_phantom_spec(const PhantomSpec& spec) {
  if (spec.shape[0] < 8 || spec.shape[1] < 8 || spec.shape[2] < 8) {
    throw ValidationError("phantom: shape must be at least 8x8x8");
  }
  if (spec.omega < 2) throw ValidationError("phantom: omega must be >= 2");
  if (spec.noise_sigma < 0) throw ValidationError("phantom: noise_sigma < 0");
  if (spec.anatomy_jitter < 0) {
    throw ValidationError("phantom: anatomy_jitter < 0");
  }
  if (!(spec.disease_effect > 0.0 && spec.disease_effect <= 1.0)) {
    throw ValidationError("phantom: disease_effect must be in (0,1]");
  }
  if (spec.samples_per_subject < 1) {
    throw ValidationError("phantom: samples_per_subject must be >= 1");
  }
  for (int r : spec.attr_regions) {
    if (r < 1 || r > spec.omega) {
      throw ValidationError("phantom: attr_region outside {1..omega}");
    }
  }
  for (int r : spec.disease_regions) {
    if (r < 1 || r > spec.omega) {
      throw ValidationError("phantom: disease_region outside {1..omega}");
    }
  }
}

std::vector<std::uint8_t> ellipsoid_mask(Shape3 shape) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(shape[0] * shape[1] * shape[2]), 0);
  const double cz = (shape[0] - 1) / 2.0, cy = (shape[1] - 1) / 2.0,
               cx = (shape[2] - 1) / 2.0;
  const double rz = shape[0] / 2.0, ry = shape[1] / 2.0, rx = shape[2] / 2.0;
  std::size_t i = 0;
  for (std::int64_t z = 0; z < shape[0]; ++z) {
    for (std::int64_t y = 0; y < shape[1]; ++y) {
      for (std::int64_t x = 0; x < shape[2]; ++x, ++i) {
        const double dz = (z - cz) / rz, dy = (y - cy) / ry, dx = (x - cx) / rx;
        if (dz * dz + dy * dy + dx * dx <= 1.0) mask[i] = 1;
      }
    }
  }
  return mask;
}

namespace {

// Factor omega into three near-equal factors, largest factor on the largest
// axis.
std::array<int, 3> factor3(int omega, Shape3 shape) {
  std::array<int, 3> best{omega, 1, 1};
  double best_score = 1e300;
  for (int a = 1; a <= omega; ++a) {
    if (omega % a) continue;
    const int rest = omega / a;
    for (int b = 1; b <= rest; ++b) {
      if (rest % b) continue;
      const int c = rest / b;
      const int mx = std::max({a, b, c});
      const int mn = std::min({a, b, c});
      const double score = static_cast<double>(mx) / mn * 1000 + (a + b + c);
      if (score < best_score) {
        best_score = score;
        best = {a, b, c};
      }
    }
  }
  // sort factors descending, axes by size descending, pair them up
  std::array<int, 3> axes{0, 1, 2};
  std::sort(axes.begin(), axes.end(),
            [&](int i, int j) { return shape[i] > shape[j]; });
  std::sort(best.begin(), best.end(), std::greater<>());
  std::array<int, 3> out{};
  for (int i = 0; i < 3; ++i) out[axes[i]] = best[i];
  return out;
}

}  // namespace

Atlas synthetic_atlas(Shape3 shape, int omega, AtlasScheme scheme,
                      std::uint64_t seed) {
  if (omega < 2) throw ValidationError("synthetic_atlas: omega must be >= 2");
  if (shape[0] < 1 || shape[1] < 1 || shape[2] < 1) {
    throw ValidationError("synthetic_atlas: bad shape");
  }
  const auto mask = ellipsoid_mask(shape);
  std::vector<std::size_t> in_mask;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) in_mask.push_back(i);
  }
  if (static_cast<std::size_t>(omega) > in_mask.size()) {
    throw ValidationError("synthetic_atlas: omega exceeds in-mask voxel count (" +
                          std::to_string(in_mask.size()) + ")");
  }

  Atlas atlas;
  atlas.shape = shape;
  atlas.omega = omega;
  atlas.labels.assign(mask.size(), 0);

  if (scheme == AtlasScheme::grid) {
    const auto f = factor3(omega, shape);
    std::size_t i = 0;
    for (std::int64_t z = 0; z < shape[0]; ++z) {
      const int bz = std::min<int>(static_cast<int>(z * f[0] / shape[0]), f[0] - 1);
      for (std::int64_t y = 0; y < shape[1]; ++y) {
        const int by = std::min<int>(static_cast<int>(y * f[1] / shape[1]), f[1] - 1);
        for (std::int64_t x = 0; x < shape[2]; ++x, ++i) {
          if (!mask[i]) continue;
          const int bx = std::min<int>(static_cast<int>(x * f[2] / shape[2]), f[2] - 1);
          atlas.labels[i] = 1 + (bz * f[1] + by) * f[2] + bx;
        }
      }
    }
    // A block can miss the ellipsoid entirely; hand empty ids the scan-order
    // tail of the currently largest region.
    while (true) {
      std::vector<std::vector<std::size_t>> members(
          static_cast<std::size_t>(omega) + 1);
      for (std::size_t vi : in_mask) {
        members[static_cast<std::size_t>(atlas.labels[vi])].push_back(vi);
      }
      int empty_id = 0;
      for (int r = 1; r <= omega; ++r) {
        if (members[static_cast<std::size_t>(r)].empty()) {
          empty_id = r;
          break;
        }
      }
      if (empty_id == 0) break;
      int largest = 1;
      for (int r = 2; r <= omega; ++r) {
        if (members[static_cast<std::size_t>(r)].size() >
            members[static_cast<std::size_t>(largest)].size()) {
          largest = r;
        }
      }
      auto& src = members[static_cast<std::size_t>(largest)];
      for (std::size_t k = src.size() / 2; k < src.size(); ++k) {
        atlas.labels[src[k]] = empty_id;
      }
    }
  } else {
    Rng rng(seed);
    std::vector<std::size_t> pool = in_mask;
    std::vector<std::size_t> sites;
    for (int r = 0; r < omega; ++r) {
      const std::size_t j =
          r + static_cast<std::size_t>(rng.uniform_int(pool.size() - r));
      std::swap(pool[r], pool[j]);
      sites.push_back(pool[r]);
    }
    const std::int64_t hw = shape[1] * shape[2];
    auto coords = [&](std::size_t idx) {
      const auto i = static_cast<std::int64_t>(idx);
      return std::array<std::int64_t, 3>{i / hw, (i % hw) / shape[2],
                                         i % shape[2]};
    };
    for (std::size_t vi : in_mask) {
      const auto p = coords(vi);
      std::int64_t best_d = -1;
      int best_r = 0;
      for (int r = 0; r < omega; ++r) {
        const auto s = coords(sites[static_cast<std::size_t>(r)]);
        const std::int64_t dz = p[0] - s[0], dy = p[1] - s[1], dx = p[2] - s[2];
        const std::int64_t d2 = dz * dz + dy * dy + dx * dx;
        if (best_d < 0 || d2 < best_d) {
          best_d = d2;
          best_r = r + 1;
        }
      }
      atlas.labels[vi] = best_r;
    }
  }

  atlas.region_names.reserve(static_cast<std::size_t>(omega));
  for (int r = 1; r <= omega; ++r) {
    atlas.region_names.push_back("region_" + std::to_string(r));
  }
  validate_atlas(atlas);
  return atlas;
}

Volume generate_subject(const PhantomSpec& spec, const SubjectRecord& rec,
                        const Atlas& atlas, Rng& rng) {
  validate_phantom_spec(spec);
  if (atlas.shape != spec.shape) {
    throw ValidationError("generate_subject: atlas shape != spec shape");
  }

  const Shape3 shape = spec.shape;
  Volume out(shape);
  const auto mask = ellipsoid_mask(shape);
  const double cz = (shape[0] - 1) / 2.0, cy = (shape[1] - 1) / 2.0,
               cx = (shape[2] - 1) / 2.0;
  const double rz = shape[0] / 2.0, ry = shape[1] / 2.0, rx = shape[2] / 2.0;

  const bool carries_attr = group_of(rec, spec.signal_attribute) == 1;
  const bool has_disease = rec.diagnosis == Diagnosis::ad;

  std::vector<bool> is_attr(static_cast<std::size_t>(spec.omega) + 1, false);
  std::vector<bool> is_disease(static_cast<std::size_t>(spec.omega) + 1, false);
  for (int r : spec.attr_regions) is_attr[static_cast<std::size_t>(r)] = true;
  for (int r : spec.disease_regions)
    is_disease[static_cast<std::size_t>(r)] = true;

  std::size_t i = 0;
  for (std::int64_t z = 0; z < shape[0]; ++z) {
    for (std::int64_t y = 0; y < shape[1]; ++y) {
      for (std::int64_t x = 0; x < shape[2]; ++x, ++i) {
        if (!mask[i]) continue;
        const double dz = (z - cz) / rz, dy = (y - cy) / ry, dx = (x - cx) / rx;
        const double rho2 = dz * dz + dy * dy + dx * dx;
        double val = 1.0 - 0.5 * rho2;  // smooth radial profile
        const auto label = static_cast<std::size_t>(atlas.labels[i]);
        if (carries_attr && is_attr[label]) val += spec.attr_effect;
        if (has_disease && is_disease[label]) val *= spec.disease_effect;
        out.data[i] = static_cast<float>(val);
      }
    }
  }

  // Smooth per-subject field: coarse normal grid upsampled trilinearly.
  // Drawn before the white noise so the stream layout is fixed.
  if (spec.anatomy_jitter > 0.0) {
    Shape3 coarse{std::max<std::int64_t>(2, shape[0] / 4),
                  std::max<std::int64_t>(2, shape[1] / 4),
                  std::max<std::int64_t>(2, shape[2] / 4)};
    Volume field(coarse);
    for (auto& g : field.data) {
      g = static_cast<float>(rng.normal() * spec.anatomy_jitter);
    }
    Volume up = resample(field, shape, Interp::trilinear);
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += up.data[j];
  }

  if (spec.noise_sigma > 0.0) {
    for (auto& v : out.data) {
      v += static_cast<float>(rng.normal() * spec.noise_sigma);
    }
  }
  return out;
}

Cohort generate_cohort(const PhantomSpec& spec,
                       const std::vector<DemographicGroup>& demographics,
                       const Atlas& atlas) {
  validate_phantom_spec(spec);
  if (demographics.empty()) {
    throw ValidationError("generate_cohort: empty demographics");
  }
  std::int64_t total = 0;
  for (const auto& g : demographics) {
    if (g.n_subjects < 0) {
      throw ValidationError("generate_cohort: negative group count");
    }
    total += g.n_subjects;
  }
  if (total == 0) {
    throw ValidationError("generate_cohort: no subjects requested");
  }

  Rng root(spec.seed);
  Cohort cohort;
  cohort.ground_truth = spec;
  int subject_index = 0;
  for (const auto& g : demographics) {
    for (int s = 0; s < g.n_subjects; ++s, ++subject_index) {
      SubjectRecord rec;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "S%04d", subject_index + 1);
      rec.subject_id = buf;
      rec.sex = g.sex;
      rec.race = g.race;
      rec.diagnosis = g.diagnosis;
      rec.age = g.age;
      for (int k = 0; k < spec.samples_per_subject; ++k) {
        char sbuf[24];
        std::snprintf(sbuf, sizeof(sbuf), "%s_V%02d", rec.subject_id.c_str(),
                      k + 1);
        Rng stream = root.derive("subject", subject_index, k);
        cohort.samples.emplace(sbuf, generate_subject(spec, rec, atlas, stream));
        rec.sample_ids.push_back(sbuf);
      }
      cohort.subjects.push_back(std::move(rec));
    }
  }
  return cohort;
}

}  // namespace shortmr
