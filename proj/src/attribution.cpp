#include "shortmr/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "shortmr/errors.hpp"
#include "shortmr/parallel.hpp"

namespace shortmr {

AttributionVolume gradcam3d(const TrainedModel& model, const Volume& x,
                            int target_class, const std::string& sample_id) {
  validate_volume(x, "gradcam input");
  if (x.shape != model.spec.input_shape) {
    throw ValidationError("gradcam3d: input shape does not match model");
  }
  if (target_class < 0 || target_class >= model.spec.classes) {
    throw ValidationError("gradcam3d: target class out of range");
  }

  auto ws = model.net.make_workspace();
  model.net.forward(x.data.data(), ws);
  std::vector<float> dact;
  model.net.feature_gradient(target_class, ws, dact);
  const auto acts = model.net.feature_activations(ws);

  const int channels = model.net.feature_channels();
  const Shape3 fshape = model.net.feature_shape();
  const std::size_t voxels =
      static_cast<std::size_t>(fshape[0] * fshape[1] * fshape[2]);

  bool all_zero = true;
  for (float g : dact) {
    if (g != 0.0f) {
      all_zero = false;
      break;
    }
  }

  Volume raw(fshape);
  for (int a = 0; a < 3; ++a) {
    raw.spacing[a] = x.spacing[a] * static_cast<double>(x.shape[a]) /
                     static_cast<double>(fshape[a]);
  }
  for (int k = 0; k < channels; ++k) {
    const float* gk = dact.data() + static_cast<std::size_t>(k) * voxels;
    double wsum = 0.0;
    for (std::size_t i = 0; i < voxels; ++i) wsum += gk[i];
    const auto wk = static_cast<float>(wsum / static_cast<double>(voxels));
    const float* ak = acts.data() + static_cast<std::size_t>(k) * voxels;
    for (std::size_t i = 0; i < voxels; ++i) raw.data[i] += wk * ak[i];
  }
  for (auto& v : raw.data) v = v > 0.0f ? v : 0.0f;

  AttributionVolume out;
  out.vol = fshape == x.shape ? raw : resample(raw, x.shape, Interp::trilinear);
  out.model_id = model.model_id;
  out.sample_id = sample_id;
  out.target_class = target_class;
  out.feature_layer = model.spec.feature_layer;
  out.zero_gradient = all_zero;
  return out;
}

Predictor predictor_of(const TrainedModel& model) {
  return [&model](const Volume& v) { return model.predict(v); };
}

std::array<std::int64_t, 6> PatchGrid::box(std::int64_t p) const {
  const std::int64_t tz = p / (tiles[1] * tiles[2]);
  const std::int64_t ty = (p / tiles[2]) % tiles[1];
  const std::int64_t tx = p % tiles[2];
  const std::int64_t z0 = tz * patch[0];
  const std::int64_t y0 = ty * patch[1];
  const std::int64_t x0 = tx * patch[2];
  return {z0, std::min(z0 + patch[0], volume_shape[0]),
          y0, std::min(y0 + patch[1], volume_shape[1]),
          x0, std::min(x0 + patch[2], volume_shape[2])};
}

PatchGrid make_patch_grid(Shape3 volume_shape, Shape3 patch_size) {
  for (int a = 0; a < 3; ++a) {
    if (patch_size[a] < 1 || volume_shape[a] < 1) {
      throw ValidationError("patch grid: shape and patch size must be >= 1");
    }
  }
  PatchGrid g;
  g.volume_shape = volume_shape;
  g.patch = patch_size;
  for (int a = 0; a < 3; ++a) {
    g.tiles[a] = (volume_shape[a] + patch_size[a] - 1) / patch_size[a];
  }
  return g;
}

void validate_stability_spec(const StabilitySpec& spec) {
  if (!(spec.top_fraction > 0.0 && spec.top_fraction <= 1.0)) {
    throw ValidationError("stability: top_fraction must be in (0,1]");
  }
  if (spec.trials < 1) throw ValidationError("stability: trials must be >= 1");
  for (int r : spec.radii) {
    if (r < 0) throw ValidationError("stability: radius must be >= 0");
  }
}

std::vector<std::int64_t> rank_patches(const Volume& attr, const PatchGrid& grid) {
  if (attr.shape != grid.volume_shape) {
    throw ValidationError("rank_patches: attribution shape mismatch");
  }
  const std::int64_t n = grid.count();
  std::vector<double> score(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t p = 0; p < n; ++p) {
    const auto b = grid.box(p);
    double acc = 0.0;
    std::int64_t cnt = 0;
    for (std::int64_t z = b[0]; z < b[1]; ++z) {
      for (std::int64_t y = b[2]; y < b[3]; ++y) {
        for (std::int64_t x = b[4]; x < b[5]; ++x) {
          acc += attr.at(z, y, x);
          ++cnt;
        }
      }
    }
    score[static_cast<std::size_t>(p)] = cnt > 0 ? acc / static_cast<double>(cnt) : 0.0;
  }
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t p = 0; p < n; ++p) order[static_cast<std::size_t>(p)] = p;
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
  });
  return order;
}

namespace {

struct StabilitySetup {
  Volume base;
  std::vector<std::int64_t> maskable;
  PatchGrid grid;
};

void paste_patch(Volume& dst, const Volume& src, const PatchGrid& grid,
                 std::int64_t p) {
  const auto b = grid.box(p);
  for (std::int64_t z = b[0]; z < b[1]; ++z) {
    for (std::int64_t y = b[2]; y < b[3]; ++y) {
      for (std::int64_t x = b[4]; x < b[5]; ++x) {
        dst.at(z, y, x) = src.at(z, y, x);
      }
    }
  }
}

StabilitySetup build_setup(const Volume& x, const AttributionVolume& attr,
                           const StabilitySpec& spec) {
  validate_stability_spec(spec);
  if (attr.vol.shape != x.shape) {
    throw ValidationError("stability: attribution shape does not match input");
  }
  if (spec.brain_mask && spec.brain_mask->shape != x.shape) {
    throw ValidationError("stability: mask shape does not match input");
  }
  StabilitySetup s;
  s.grid = make_patch_grid(x.shape, spec.patch_size);
  const auto order = rank_patches(attr.vol, s.grid);
  const auto n = static_cast<std::int64_t>(order.size());
  const auto top_k = static_cast<std::int64_t>(
      std::ceil(spec.top_fraction * static_cast<double>(n)));

  std::vector<bool> is_top(static_cast<std::size_t>(n), false);
  for (std::int64_t i = 0; i < top_k; ++i) {
    is_top[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  }

  s.base = Volume(x.shape, x.spacing);
  std::fill(s.base.data.begin(), s.base.data.end(), spec.fill_value);
  for (std::int64_t p = 0; p < n; ++p) {
    if (is_top[static_cast<std::size_t>(p)]) paste_patch(s.base, x, s.grid, p);
  }

  for (std::int64_t p = 0; p < n; ++p) {
    if (is_top[static_cast<std::size_t>(p)]) continue;
    if (spec.brain_mask) {
      const auto b = s.grid.box(p);
      bool brain = false;
      for (std::int64_t z = b[0]; z < b[1] && !brain; ++z) {
        for (std::int64_t y = b[2]; y < b[3] && !brain; ++y) {
          for (std::int64_t x2 = b[4]; x2 < b[5] && !brain; ++x2) {
            brain = spec.brain_mask->at(z, y, x2) > 0.5f;
          }
        }
      }
      if (!brain) continue;
    }
    s.maskable.push_back(p);
  }
  return s;
}

}  // namespace

double soft_stability(const Predictor& predict, const Volume& x,
                      const AttributionVolume& attr, const StabilitySpec& spec,
                      int radius, const Rng& rng) {
  if (radius < 0) throw ValidationError("soft_stability: radius must be >= 0");
  if (radius == 0) return 1.0;
  const auto setup = build_setup(x, attr, spec);
  if (static_cast<std::size_t>(radius) > setup.maskable.size()) {
    throw ValidationError("soft_stability: radius " + std::to_string(radius) +
                          " exceeds maskable patch count " +
                          std::to_string(setup.maskable.size()));
  }
  const int ref = predict(setup.base);

  std::vector<char> ok(static_cast<std::size_t>(spec.trials), 0);
  parallel_for(static_cast<std::size_t>(spec.trials), spec.threads,
               [&](std::size_t t) {
                 Rng trial = rng.derive("trial", t);
                 const auto s = static_cast<std::size_t>(
                     trial.uniform_int(static_cast<std::uint64_t>(radius) + 1));
                 std::vector<std::int64_t> pool = setup.maskable;
                 for (std::size_t i = 0; i < s; ++i) {
                   const std::size_t j =
                       i + static_cast<std::size_t>(
                               trial.uniform_int(pool.size() - i));
                   std::swap(pool[i], pool[j]);
                 }
                 Volume perturbed = setup.base;
                 for (std::size_t i = 0; i < s; ++i) {
                   paste_patch(perturbed, x, setup.grid, pool[i]);
                 }
                 ok[t] = predict(perturbed) == ref ? 1 : 0;
               });
  std::int64_t succ = 0;
  for (char c : ok) succ += c;
  return static_cast<double>(succ) / static_cast<double>(spec.trials);
}

std::vector<std::pair<int, double>> stability_curve(
    const Predictor& predict, const Volume& x, const AttributionVolume& attr,
    const StabilitySpec& spec, const Rng& rng) {
  if (spec.radii.empty()) {
    throw ValidationError("stability_curve: radii must be nonempty");
  }
  if (!std::is_sorted(spec.radii.begin(), spec.radii.end())) {
    throw ValidationError("stability_curve: radii must be sorted");
  }
  std::vector<std::pair<int, double>> out;
  for (int r : spec.radii) {
    Rng stream = rng.derive("radius", r);
    out.emplace_back(r, soft_stability(predict, x, attr, spec, r, stream));
  }
  return out;
}

std::vector<std::pair<int, double>> stability_curve_mean(
    const Predictor& predict, const std::vector<const Volume*>& xs,
    const std::vector<const AttributionVolume*>& attrs,
    const StabilitySpec& spec, const Rng& rng) {
  if (xs.empty() || xs.size() != attrs.size()) {
    throw ValidationError("stability_curve_mean: bad sample list");
  }
  if (spec.radii.empty()) {
    throw ValidationError("stability_curve_mean: radii must be nonempty");
  }
  std::vector<std::pair<int, double>> out;
  for (int r : spec.radii) out.emplace_back(r, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t ri = 0; ri < spec.radii.size(); ++ri) {
      Rng stream = rng.derive("stability", i, spec.radii[ri]);
      out[ri].second +=
          soft_stability(predict, *xs[i], *attrs[i], spec, spec.radii[ri], stream);
    }
  }
  for (auto& [r, p] : out) p /= static_cast<double>(xs.size());
  return out;
}

}  // namespace shortmr
