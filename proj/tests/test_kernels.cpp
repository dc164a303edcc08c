#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "shortmr/kernels.hpp"
#include "shortmr/net/ops.hpp"
#include "shortmr/rng.hpp"

using namespace shortmr;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng, float scale = 1.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
  return v;
}

void check_close(const std::vector<float>& a, const std::vector<float>& b,
                 double rel = 1e-5, double abs = 1e-6) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(static_cast<double>(a[i]) - b[i]);
    const double bound = abs + rel * std::max(std::abs(static_cast<double>(a[i])),
                                              std::abs(static_cast<double>(b[i])));
    CHECK(diff <= bound);
  }
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar and avx2 vector kernels agree") {
  if (!kernels::cpu_has_avx2()) {
    MESSAGE("AVX2 unavailable; equivalence tests skipped");
    return;
  }
  const auto& s = kernels::table(kernels::Backend::scalar);
  const auto& v = kernels::table(kernels::Backend::avx2);
  REQUIRE(std::string(v.name) == "avx2");

  Rng rng(7);
  for (std::size_t n : {1u, 3u, 7u, 8u, 9u, 16u, 31u, 64u, 70u, 257u}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);

    auto ys = y, yv = y;
    s.axpy(n, 0.37f, x.data(), ys.data());
    v.axpy(n, 0.37f, x.data(), yv.data());
    check_close(ys, yv);

    CHECK(std::abs(s.dot(n, x.data(), y.data()) - v.dot(n, x.data(), y.data())) <=
          1e-4 * (1.0 + std::abs(s.dot(n, x.data(), y.data()))));
    CHECK(s.sum(n, x.data()) == doctest::Approx(v.sum(n, x.data())).epsilon(1e-12));
    CHECK(s.sumsq_diff(n, x.data(), 0.25f) ==
          doctest::Approx(v.sumsq_diff(n, x.data(), 0.25f)).epsilon(1e-12));

    auto xs = x, xv = x;
    s.scale(n, -1.7f, xs.data());
    v.scale(n, -1.7f, xv.data());
    check_close(xs, xv, 0.0, 0.0);

    xs = x;
    xv = x;
    s.shift_scale(n, 0.2f, 1.3f, xs.data());
    v.shift_scale(n, 0.2f, 1.3f, xv.data());
    check_close(xs, xv, 0.0, 0.0);

    std::vector<float> rs(n), rv(n);
    s.relu(n, x.data(), rs.data());
    v.relu(n, x.data(), rv.data());
    check_close(rs, rv, 0.0, 0.0);

    std::vector<float> ds(n), dv(n);
    s.relu_bwd(n, y.data(), rs.data(), ds.data());
    v.relu_bwd(n, y.data(), rv.data(), dv.data());
    check_close(ds, dv, 0.0, 0.0);
  }
}

TEST_CASE("scalar and avx2 adamw agree") {
  if (!kernels::cpu_has_avx2()) return;
  const auto& s = kernels::table(kernels::Backend::scalar);
  const auto& v = kernels::table(kernels::Backend::avx2);
  Rng rng(11);
  const std::size_t n = 37;
  auto w = random_vec(n, rng), g = random_vec(n, rng);
  auto m = random_vec(n, rng, 0.1f);
  auto vv = random_vec(n, rng, 0.01f);
  for (auto& x : vv) x = std::abs(x);

  auto ws = w, wv = w, ms = m, mv = m, vs = vv, vvv = vv;
  s.adamw(n, ws.data(), g.data(), ms.data(), vs.data(), 1e-3f, 0.9f, 0.999f,
          1e-8f, 1e-2f, 2.0f, 1.5f);
  v.adamw(n, wv.data(), g.data(), mv.data(), vvv.data(), 1e-3f, 0.9f, 0.999f,
          1e-8f, 1e-2f, 2.0f, 1.5f);
  check_close(ws, wv, 1e-6, 1e-7);
  check_close(ms, mv, 1e-6, 1e-7);
  check_close(vs, vvv, 1e-6, 1e-7);
}

TEST_CASE("adamw single step matches the hand formula") {
  const auto& k = kernels::table(kernels::Backend::scalar);
  float w = 1.0f, g = 0.5f, m = 0.0f, v = 0.0f;
  const float lr = 0.01f, b1 = 0.9f, b2 = 0.999f, eps = 1e-8f, wd = 0.1f;
  // first step: bias corrections 1/(1-b1), 1/(1-b2)
  k.adamw(1, &w, &g, &m, &v, lr, b1, b2, eps, wd,
          1.0f / (1.0f - b1), 1.0f / (1.0f - b2));
  const double mhat = 0.1 * 0.5 / 0.1;           // = g
  const double vhat = 0.001 * 0.25 / 0.001;      // = g^2
  const double expect = 1.0 - 0.01 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.1 * 1.0);
  CHECK(w == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("conv3d forward matches a direct convolution oracle") {
  Rng rng(3);
  for (const auto& dims : std::vector<std::array<int, 5>>{
           {1, 2, 3, 3, 5}, {2, 3, 4, 5, 6}, {3, 2, 5, 4, 8}, {1, 1, 1, 1, 1}}) {
    const int cin = dims[0], cout = dims[1], d = dims[2], h = dims[3],
              w = dims[4];
    auto in = random_vec(static_cast<std::size_t>(cin) * d * h * w, rng);
    auto wk = random_vec(static_cast<std::size_t>(cout) * cin * 27, rng);
    auto bias = random_vec(static_cast<std::size_t>(cout), rng);

    std::vector<float> in_pad(static_cast<std::size_t>(cin) * (d + 2) * (h + 2) *
                              (w + 2));
    net::pad3d(in.data(), cin, d, h, w, in_pad.data());
    std::vector<float> out(static_cast<std::size_t>(cout) * d * h * w);
    kernels::table(kernels::Backend::scalar)
        .conv3d_fwd(in_pad.data(), cin, d, h, w, wk.data(), bias.data(),
                    out.data(), cout);

    std::vector<float> expect;
    oracle::conv3d_direct(in, cin, d, h, w, wk, bias, expect, cout);
    check_close(out, expect, 1e-5, 1e-6);
  }
}

TEST_CASE("scalar and avx2 convolution kernels agree") {
  if (!kernels::cpu_has_avx2()) return;
  const auto& s = kernels::table(kernels::Backend::scalar);
  const auto& v = kernels::table(kernels::Backend::avx2);
  Rng rng(5);
  for (const auto& dims : std::vector<std::array<int, 5>>{
           {1, 2, 4, 4, 4}, {2, 4, 4, 6, 8}, {3, 3, 2, 3, 16}, {4, 2, 3, 5, 7},
           {2, 5, 2, 2, 32}, {1, 1, 6, 5, 9}}) {
    const int cin = dims[0], cout = dims[1], d = dims[2], h = dims[3],
              w = dims[4];
    const std::size_t in_n = static_cast<std::size_t>(cin) * d * h * w;
    const std::size_t out_n = static_cast<std::size_t>(cout) * d * h * w;
    const std::size_t pad_n =
        static_cast<std::size_t>(cin) * (d + 2) * (h + 2) * (w + 2);

    auto in = random_vec(in_n, rng);
    auto wk = random_vec(static_cast<std::size_t>(cout) * cin * 27, rng);
    auto bias = random_vec(static_cast<std::size_t>(cout), rng);
    std::vector<float> in_pad(pad_n);
    net::pad3d(in.data(), cin, d, h, w, in_pad.data());

    // accumulation order differs between backends; bound the error against
    // the tensor scale rather than each (possibly near-zero) element
    std::vector<float> out_s(out_n), out_v(out_n);
    s.conv3d_fwd(in_pad.data(), cin, d, h, w, wk.data(), bias.data(),
                 out_s.data(), cout);
    v.conv3d_fwd(in_pad.data(), cin, d, h, w, wk.data(), bias.data(),
                 out_v.data(), cout);
    check_close(out_s, out_v, 1e-5, 5e-5);

    auto dout = random_vec(out_n, rng);
    std::vector<float> din_s(pad_n, 0.0f), din_v(pad_n, 0.0f);
    s.conv3d_bwd_data(dout.data(), cout, d, h, w, wk.data(), din_s.data(), cin);
    v.conv3d_bwd_data(dout.data(), cout, d, h, w, wk.data(), din_v.data(), cin);
    check_close(din_s, din_v, 1e-5, 5e-5);

    std::vector<float> dw_s(wk.size(), 0.0f), dw_v(wk.size(), 0.0f);
    std::vector<float> db_s(bias.size(), 0.0f), db_v(bias.size(), 0.0f);
    s.conv3d_bwd_weights(in_pad.data(), cin, dout.data(), cout, d, h, w,
                         dw_s.data(), db_s.data());
    v.conv3d_bwd_weights(in_pad.data(), cin, dout.data(), cout, d, h, w,
                         dw_v.data(), db_v.data());
    check_close(dw_s, dw_v, 1e-4, 1e-4);
    check_close(db_s, db_v, 1e-4, 1e-4);
  }
}

TEST_CASE("active table dispatches to a supported backend") {
  const auto& t = kernels::active();
  CHECK((std::string(t.name) == "avx2" || std::string(t.name) == "scalar"));
  if (kernels::cpu_has_avx2()) {
    CHECK(std::string(kernels::active().name) == "avx2");
  }
  kernels::set_active(kernels::Backend::scalar);
  CHECK(std::string(kernels::active().name) == "scalar");
  kernels::set_active(kernels::Backend::avx2);  // restore best
}

}  // TEST_SUITE
