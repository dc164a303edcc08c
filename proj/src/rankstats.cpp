#include "shortmr/rankstats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "shortmr/errors.hpp"

namespace shortmr {

std::vector<double> regional_means(const Volume& attr_atlas_space,
                                   const Atlas& atlas) {
  if (attr_atlas_space.shape != atlas.shape) {
    throw ValidationError("regional_means: attribution and atlas shapes differ");
  }
  const auto omega = static_cast<std::size_t>(atlas.omega);
  std::vector<double> sums(omega, 0.0);
  std::vector<std::int64_t> counts(omega, 0);
  for (std::size_t i = 0; i < atlas.labels.size(); ++i) {
    const std::int32_t label = atlas.labels[i];
    if (label <= 0) continue;  // background excluded
    sums[static_cast<std::size_t>(label - 1)] += attr_atlas_space.data[i];
    counts[static_cast<std::size_t>(label - 1)]++;
  }
  std::vector<double> means(omega, 0.0);
  for (std::size_t j = 0; j < omega; ++j) {
    if (counts[j] == 0) {
      throw ValidationError("regional_means: region " + std::to_string(j + 1) +
                            " is empty");
    }
    means[j] = sums[j] / static_cast<double>(counts[j]);
  }
  return means;
}

std::vector<double> rank_vector(std::span<const double> values) {
  const std::size_t n = values.size();
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError("rank_vector: non-finite value");
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j share the average rank
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> mean_rank_vector_from_means(
    const std::vector<std::vector<double>>& per_sample_means) {
  if (per_sample_means.empty()) {
    throw ValidationError("mean_rank_vector: empty sample list");
  }
  const std::size_t omega = per_sample_means.front().size();
  std::vector<double> acc(omega, 0.0);
  for (const auto& m : per_sample_means) {
    if (m.size() != omega) {
      throw ValidationError("mean_rank_vector: inconsistent region counts");
    }
    const auto r = rank_vector(m);
    for (std::size_t j = 0; j < omega; ++j) acc[j] += r[j];
  }
  for (auto& v : acc) v /= static_cast<double>(per_sample_means.size());
  return acc;
}

std::vector<double> mean_rank_vector(
    const std::vector<const AttributionVolume*>& attrs, const Atlas& atlas) {
  if (attrs.empty()) throw ValidationError("mean_rank_vector: empty sample list");
  std::vector<std::vector<double>> means;
  means.reserve(attrs.size());
  for (const auto* a : attrs) {
    means.push_back(regional_means(a->vol, atlas));
  }
  return mean_rank_vector_from_means(means);
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("spearman: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("spearman: need at least 3 elements");
  const auto rx = rank_vector(x);
  const auto ry = rank_vector(y);

  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  SpearmanResult res;
  if (sxx <= 0.0 || syy <= 0.0) {
    res.defined = false;
    res.rho = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.defined = true;
  res.rho = sxy / std::sqrt(sxx * syy);
  res.rho = std::clamp(res.rho, -1.0, 1.0);

  const double dof = static_cast<double>(n) - 2.0;
  if (std::abs(res.rho) >= 1.0) {
    res.p_value = 0.0;
  } else {
    const double t =
        res.rho * std::sqrt(dof / ((1.0 - res.rho) * (1.0 + res.rho)));
    boost::math::students_t_distribution<double> dist(dof);
    res.p_value =
        2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  }
  return res;
}

PermutationResult permutation_test(std::span<const double> r_ba,
                                   std::span<const double> r_bi,
                                   std::span<const double> r_pa, int m,
                                   const Rng& rng) {
  if (m < 99) throw ValidationError("permutation_test: M must be >= 99");
  const std::size_t omega = r_ba.size();
  if (r_bi.size() != omega || r_pa.size() != omega) {
    throw ValidationError("permutation_test: rank vector lengths differ");
  }

  std::vector<double> b(omega), p(omega);
  for (std::size_t j = 0; j < omega; ++j) {
    b[j] = r_bi[j] - r_ba[j];
    p[j] = r_pa[j] - r_ba[j];
  }
  const SpearmanResult obs = spearman(b, p);

  PermutationResult res;
  res.rho_observed = obs.rho;
  if (!obs.defined) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }

  std::vector<double> perm(omega), bi_s(omega), pa_s(omega), b_s(omega),
      p_s(omega);
  int exceed = 0;
  for (int rep = 0; rep < m; ++rep) {
    Rng stream = rng.derive("perm", rep);
    for (std::size_t j = 0; j < omega; ++j) perm[j] = static_cast<double>(j + 1);
    stream.shuffle(perm);
    for (std::size_t j = 0; j < omega; ++j) bi_s[j] = perm[j];
    for (std::size_t j = 0; j < omega; ++j) perm[j] = static_cast<double>(j + 1);
    stream.shuffle(perm);
    for (std::size_t j = 0; j < omega; ++j) pa_s[j] = perm[j];
    for (std::size_t j = 0; j < omega; ++j) {
      b_s[j] = bi_s[j] - r_ba[j];
      p_s[j] = pa_s[j] - r_ba[j];
    }
    const SpearmanResult rs = spearman(b_s, p_s);
    if (rs.defined && std::abs(rs.rho) >= std::abs(obs.rho) - 1e-15) ++exceed;
  }
  res.p_value = (1.0 + exceed) / (static_cast<double>(m) + 1.0);
  return res;
}

std::vector<int> top_shared_regions(std::span<const double> b,
                                    std::span<const double> p, int k) {
  if (b.size() != p.size()) {
    throw ValidationError("top_shared_regions: length mismatch");
  }
  if (k < 0 || static_cast<std::size_t>(k) > b.size()) {
    throw ValidationError("top_shared_regions: k out of range");
  }
  std::vector<int> ids(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) ids[j] = static_cast<int>(j + 1);
  std::sort(ids.begin(), ids.end(), [&](int l, int r) {
    const double vl = b[static_cast<std::size_t>(l - 1)] +
                      p[static_cast<std::size_t>(l - 1)];
    const double vr = b[static_cast<std::size_t>(r - 1)] +
                      p[static_cast<std::size_t>(r - 1)];
    if (vl != vr) return vl < vr;
    return l < r;
  });
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

RankReport build_rank_report(const std::vector<double>& r_ba,
                             const std::vector<double>& r_bi,
                             const std::vector<double>& r_pa, int top_k, int m,
                             const Rng& rng) {
  RankReport rep;
  rep.r_ba = r_ba;
  rep.r_bi = r_bi;
  rep.r_pa = r_pa;
  const std::size_t omega = r_ba.size();
  rep.b.resize(omega);
  rep.p.resize(omega);
  for (std::size_t j = 0; j < omega; ++j) {
    rep.b[j] = r_bi[j] - r_ba[j];
    rep.p[j] = r_pa[j] - r_ba[j];
  }
  rep.correlation = spearman(rep.b, rep.p);
  rep.permutation = permutation_test(r_ba, r_bi, r_pa, m, rng);
  rep.top_k = top_k;
  rep.permutations = m;
  rep.top_regions = top_shared_regions(rep.b, rep.p, top_k);
  return rep;
}

}  // namespace shortmr
