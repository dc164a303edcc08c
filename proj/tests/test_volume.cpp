#include <cmath>

#include <doctest.h>

#include "shortmr/errors.hpp"
#include "shortmr/rng.hpp"
#include "shortmr/transform.hpp"
#include "shortmr/volume.hpp"

using namespace shortmr;

namespace {

Volume make_volume(Shape3 shape, const std::vector<float>& data) {
  Volume v(shape);
  REQUIRE(v.data.size() == data.size());
  v.data = data;
  return v;
}

Volume random_volume(Shape3 shape, Rng& rng) {
  Volume v(shape);
  for (auto& x : v.data) x = static_cast<float>(rng.normal());
  return v;
}

}  // namespace

TEST_SUITE("volume") {

TEST_CASE("z-score of a two-point volume") {
  const Volume v = make_volume({1, 1, 2}, {0.0f, 2.0f});
  const Volume out = normalize_zscore(v);
  CHECK(out.data[0] == doctest::Approx(-1.0));
  CHECK(out.data[1] == doctest::Approx(1.0));
  CHECK(out.shape == v.shape);
  CHECK(out.spacing == v.spacing);
}

TEST_CASE("z-score rejects constant volumes") {
  Volume v({2, 2, 2});
  std::fill(v.data.begin(), v.data.end(), 5.0f);
  CHECK_THROWS_WITH_AS(normalize_zscore(v),
                       doctest::Contains("zero variance"), ValidationError);
}

TEST_CASE("z-score of 1..4 matches the direct computation") {
  const Volume v = make_volume({1, 1, 4}, {1, 2, 3, 4});
  const Volume out = normalize_zscore(v);
  const double expect[4] = {-1.3416407865, -0.4472135955, 0.4472135955,
                            1.3416407865};
  for (int i = 0; i < 4; ++i) {
    CHECK(out.data[static_cast<std::size_t>(i)] ==
          doctest::Approx(expect[i]).epsilon(1e-6));
  }
}

TEST_CASE("z-score output has zero mean and unit std, and is idempotent") {
  Rng rng(99);
  for (int rep = 0; rep < 5; ++rep) {
    Volume v = random_volume({6, 5, 7}, rng);
    const Volume n1 = normalize_zscore(v);
    double mean = 0;
    for (float x : n1.data) mean += x;
    mean /= static_cast<double>(n1.data.size());
    double var = 0;
    for (float x : n1.data) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n1.data.size());
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);

    const Volume n2 = normalize_zscore(n1);
    for (std::size_t i = 0; i < n1.data.size(); ++i) {
      CHECK(std::abs(n1.data[i] - n2.data[i]) < 1e-6);
    }
  }
}

TEST_CASE("resample at the identity shape is voxelwise equal") {
  Rng rng(3);
  const Volume v = random_volume({4, 3, 5}, rng);
  const Volume t = resample(v, v.shape, Interp::trilinear);
  const Volume n = resample(v, v.shape, Interp::nearest);
  CHECK(t.data == v.data);
  CHECK(n.data == v.data);
}

TEST_CASE("trilinear upsample of a 2-voxel line") {
  const Volume v = make_volume({1, 1, 2}, {0.0f, 1.0f});
  const Volume out = resample(v, {1, 1, 4}, Interp::trilinear);
  const double expect[4] = {0.0, 0.25, 0.75, 1.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(out.data[static_cast<std::size_t>(i)] ==
          doctest::Approx(expect[i]).epsilon(1e-7));
  }
}

TEST_CASE("nearest upsample of a 2-label line") {
  const Volume v = make_volume({1, 1, 2}, {3.0f, 7.0f});
  const Volume out = resample(v, {1, 1, 4}, Interp::nearest);
  CHECK(out.data == std::vector<float>{3, 3, 7, 7});
}

TEST_CASE("round-trip resample to the source shape is the identity") {
  Rng rng(17);
  const Volume v = random_volume({5, 4, 6}, rng);
  const Volume up_n = resample(resample(v, {10, 8, 12}, Interp::nearest),
                               v.shape, Interp::nearest);
  CHECK(up_n.data == v.data);  // exact for nearest
  const Volume same = resample(v, v.shape, Interp::trilinear);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    CHECK(std::abs(same.data[i] - v.data[i]) < 1e-6);
  }
}

TEST_CASE("nearest mode emits only values present in the source") {
  Rng rng(23);
  Volume v({3, 4, 5});
  for (auto& x : v.data) x = static_cast<float>(rng.uniform_int(9));
  const Volume out = resample(v, {7, 3, 11}, Interp::nearest);
  for (float x : out.data) {
    CHECK(std::find(v.data.begin(), v.data.end(), x) != v.data.end());
  }
}

TEST_CASE("identity transform returns an equal copy and preserves the sum") {
  Rng rng(31);
  const Volume v = random_volume({4, 4, 4}, rng);
  const Volume out =
      apply_transform(v, SpatialTransform::identity_transform(), Interp::trilinear);
  CHECK(out.data == v.data);
  double s1 = 0, s2 = 0;
  for (float x : v.data) s1 += x;
  for (float x : out.data) s2 += x;
  CHECK(s1 == s2);
}

TEST_CASE("one-voxel translation shifts an impulse and zero-fills the border") {
  Volume v({1, 1, 4});
  v.data = {0, 5, 0, 0};
  // translation by +1 voxel along x (spacing 1mm): source p = p' - 1
  std::array<double, 16> m = {1, 0, 0, 0,  //
                              0, 1, 0, 0,  //
                              0, 0, 1, 1,  //
                              0, 0, 0, 1};
  const Volume out = apply_transform(v, SpatialTransform::from_affine(m),
                                     Interp::nearest);
  CHECK(out.data == std::vector<float>{0, 0, 5, 0});
}

TEST_CASE("zero displacement field is the identity") {
  Rng rng(41);
  const Volume v = random_volume({3, 3, 3}, rng);
  Volume zero(v.shape);
  const auto t = SpatialTransform::from_displacement(zero, zero, zero);
  const Volume out = apply_transform(v, t, Interp::trilinear);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    CHECK(out.data[i] == doctest::Approx(v.data[i]).epsilon(1e-7));
  }
}

TEST_CASE("singular affine transforms are rejected") {
  std::array<double, 16> m{};  // all zeros
  CHECK_THROWS_AS(SpatialTransform::from_affine(m), ValidationError);
}

}  // TEST_SUITE
