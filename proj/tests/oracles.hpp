#pragma once

// Independent brute-force reimplementations used as oracles. These must stay
// naive and separate from the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "shortmr/atlas.hpp"
#include "shortmr/volume.hpp"

namespace oracle {

// Fractional ranks by counting: rank = 1 + #greater + (ties-1)/2.
inline std::vector<double> rank_desc(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t greater = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] > v[i]) ++greater;
      if (v[j] == v[i]) ++equal;
    }
    out[i] = static_cast<double>(greater) + 1.0 +
             static_cast<double>(equal - 1) * 0.5;
  }
  return out;
}

// Spearman rho via the raw Pearson formula on counted ranks.
inline double spearman_rho(const std::vector<double>& x,
                           const std::vector<double>& y) {
  const auto rx = rank_desc(x);
  const auto ry = rank_desc(y);
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxy += rx[i] * ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
  }
  const double num = n * sxy - sx * sy;
  const double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return num / den;
}

// Mean attribution per region by triple-nested voxel walk.
inline std::vector<double> regional_means(const shortmr::Volume& vol,
                                          const shortmr::Atlas& atlas) {
  std::vector<double> sum(static_cast<std::size_t>(atlas.omega), 0.0);
  std::vector<std::int64_t> cnt(static_cast<std::size_t>(atlas.omega), 0);
  for (std::int64_t z = 0; z < atlas.shape[0]; ++z) {
    for (std::int64_t y = 0; y < atlas.shape[1]; ++y) {
      for (std::int64_t x = 0; x < atlas.shape[2]; ++x) {
        const auto label = atlas.at(z, y, x);
        if (label < 1) continue;
        sum[static_cast<std::size_t>(label - 1)] += vol.at(z, y, x);
        cnt[static_cast<std::size_t>(label - 1)]++;
      }
    }
  }
  std::vector<double> out(sum.size());
  for (std::size_t j = 0; j < sum.size(); ++j) {
    out[j] = sum[j] / static_cast<double>(cnt[j]);
  }
  return out;
}

inline std::vector<double> mean_rank(const std::vector<std::vector<double>>& vs) {
  std::vector<double> acc(vs.front().size(), 0.0);
  for (const auto& v : vs) {
    const auto r = rank_desc(v);
    for (std::size_t j = 0; j < r.size(); ++j) acc[j] += r[j];
  }
  for (auto& a : acc) a /= static_cast<double>(vs.size());
  return acc;
}

// k smallest of b+p by exhaustive selection, ties by id.
inline std::vector<int> top_shared(const std::vector<double>& b,
                                   const std::vector<double>& p, int k) {
  std::vector<std::pair<double, int>> items;
  for (std::size_t j = 0; j < b.size(); ++j) {
    items.emplace_back(b[j] + p[j], static_cast<int>(j + 1));
  }
  std::sort(items.begin(), items.end());
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(items[static_cast<std::size_t>(i)].second);
  return out;
}

// Direct 3x3x3 zero-padded convolution written against the unpadded input.
inline void conv3d_direct(const std::vector<float>& in, int cin, int d, int h,
                          int w, const std::vector<float>& wk,
                          const std::vector<float>& bias,
                          std::vector<float>& out, int cout) {
  out.assign(static_cast<std::size_t>(cout) * d * h * w, 0.0f);
  for (int co = 0; co < cout; ++co) {
    for (int z = 0; z < d; ++z) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double acc = bias[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < cin; ++ci) {
            for (int kd = -1; kd <= 1; ++kd) {
              for (int kh = -1; kh <= 1; ++kh) {
                for (int kw = -1; kw <= 1; ++kw) {
                  const int zz = z + kd, yy = y + kh, xx = x + kw;
                  if (zz < 0 || zz >= d || yy < 0 || yy >= h || xx < 0 ||
                      xx >= w) {
                    continue;
                  }
                  const double v =
                      in[((static_cast<std::size_t>(ci) * d + zz) * h + yy) * w +
                         xx];
                  const double wv =
                      wk[(((static_cast<std::size_t>(co) * cin + ci) * 3 +
                           (kd + 1)) *
                              3 +
                          (kh + 1)) *
                             3 +
                         (kw + 1)];
                  acc += v * wv;
                }
              }
            }
          }
          out[((static_cast<std::size_t>(co) * d + z) * h + y) * w + x] =
              static_cast<float>(acc);
        }
      }
    }
  }
}

// Exhaustive soft-stability for small maskable sets: subset size uniform on
// {0..radius}, subset uniform given its size. predictor_ok(subset) must say
// whether the prediction survives restoring exactly that subset.
inline double stability_exact(
    int maskable, int radius,
    const std::function<bool(const std::vector<int>&)>& predictor_ok) {
  double total = 0.0;
  for (int s = 0; s <= radius; ++s) {
    // iterate all C(maskable, s) subsets
    std::vector<int> idx(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = i;
    double good = 0.0, count = 0.0;
    if (s == 0) {
      good = predictor_ok({}) ? 1.0 : 0.0;
      count = 1.0;
    } else {
      while (true) {
        if (predictor_ok(idx)) good += 1.0;
        count += 1.0;
        int i = s - 1;
        while (i >= 0 &&
               idx[static_cast<std::size_t>(i)] == maskable - s + i) {
          --i;
        }
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < s; ++k) {
          idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
        }
      }
    }
    total += good / count;
  }
  return total / static_cast<double>(radius + 1);
}

}  // namespace oracle
