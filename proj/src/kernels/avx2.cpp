#include "shortmr/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SHORTMR_X86 1
#else
#define SHORTMR_X86 0
#endif

#if SHORTMR_X86
#include <immintrin.h>

#include <cmath>

namespace shortmr::kernels {
namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehl_ps(lo, lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_shuffle_ps(lo, lo, 0x1);
  lo = _mm_add_ss(lo, sh);
  return _mm_cvtss_f32(lo);
}

inline double hsum256d(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void axpy_avx2(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot_avx2(std::size_t n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  }
  float s = hsum256(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_avx2(std::size_t n, const float* x) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double s = hsum256d(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

double sumsq_diff_avx2(std::size_t n, const float* x, float mean) {
  // widen before subtracting so each term matches the scalar reference
  const __m256d vm = _mm256_set1_pd(static_cast<double>(mean));
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    __m256d lo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(v)), vm);
    __m256d hi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)), vm);
    acc0 = _mm256_fmadd_pd(lo, lo, acc0);
    acc1 = _mm256_fmadd_pd(hi, hi, acc1);
  }
  double s = hsum256d(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    double d = static_cast<double>(x[i]) - static_cast<double>(mean);
    s += d * d;
  }
  return s;
}

void scale_avx2(std::size_t n, float a, float* x) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), va));
  }
  for (; i < n; ++i) x[i] *= a;
}

void shift_scale_avx2(std::size_t n, float shift, float factor, float* x) {
  const __m256 vs = _mm256_set1_ps(shift);
  const __m256 vf = _mm256_set1_ps(factor);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_add_ps(_mm256_loadu_ps(x + i), vs);
    _mm256_storeu_ps(x + i, _mm256_mul_ps(v, vf));
  }
  for (; i < n; ++i) x[i] = (x[i] + shift) * factor;
}

void relu_avx2(std::size_t n, const float* x, float* y) {
  const __m256 z = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), z));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_avx2(std::size_t n, const float* dy, const float* y, float* dx) {
  const __m256 z = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(y + i), z, _CMP_GT_OQ);
    _mm256_storeu_ps(dx + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), mask));
  }
  for (; i < n; ++i) dx[i] = y[i] > 0.0f ? dy[i] : 0.0f;
}

void adamw_avx2(std::size_t n, float* w, const float* g, float* m, float* v,
                float lr, float beta1, float beta2, float eps, float wd,
                float inv_bc1, float inv_bc2) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vc1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 vc2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vwd = _mm256_set1_ps(wd);
  const __m256 vi1 = _mm256_set1_ps(inv_bc1);
  const __m256 vi2 = _mm256_set1_ps(inv_bc2);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vg = _mm256_loadu_ps(g + i);
    __m256 vm = _mm256_fmadd_ps(vb1, _mm256_loadu_ps(m + i),
                                _mm256_mul_ps(vc1, vg));
    __m256 vv = _mm256_fmadd_ps(vb2, _mm256_loadu_ps(v + i),
                                _mm256_mul_ps(vc2, _mm256_mul_ps(vg, vg)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    __m256 mhat = _mm256_mul_ps(vm, vi1);
    __m256 vhat = _mm256_mul_ps(vv, vi2);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    __m256 vw = _mm256_loadu_ps(w + i);
    __m256 upd = _mm256_fmadd_ps(vwd, vw, _mm256_div_ps(mhat, denom));
    _mm256_storeu_ps(w + i, _mm256_fnmadd_ps(vlr, upd, vw));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    float mhat = m[i] * inv_bc1;
    float vhat = v[i] * inv_bc2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * w[i]);
  }
}

// Forward pass processes output channels in pairs so every input row load
// feeds two FMA chains.
void conv3d_fwd_avx2(const float* in_pad, int cin, int d, int h, int w,
                     const float* weights, const float* bias, float* out,
                     int cout) {
  const int hp = h + 2, wp = w + 2;
  const std::size_t in_ch = static_cast<std::size_t>(d + 2) * hp * wp;
  const std::size_t out_ch = static_cast<std::size_t>(d) * h * w;

  for (int co = 0; co < cout; co += 2) {
    const bool pair = co + 1 < cout;
    float* oc0 = out + static_cast<std::size_t>(co) * out_ch;
    float* oc1 = pair ? oc0 + out_ch : nullptr;
    const float* wk0 = weights + static_cast<std::size_t>(co) * cin * 27;
    const float* wk1 = pair ? wk0 + static_cast<std::size_t>(cin) * 27 : nullptr;

    for (int z = 0; z < d; ++z) {
      for (int y = 0; y < h; ++y) {
        float* orow0 = oc0 + (static_cast<std::size_t>(z) * h + y) * w;
        float* orow1 = pair ? oc1 + (static_cast<std::size_t>(z) * h + y) * w
                            : nullptr;
        int x = 0;
        for (; x + 8 <= w; x += 8) {
          __m256 acc0 = _mm256_set1_ps(bias[co]);
          __m256 acc1 = pair ? _mm256_set1_ps(bias[co + 1]) : acc0;
          for (int ci = 0; ci < cin; ++ci) {
            const float* icp = in_pad + ci * in_ch;
            const float* w0 = wk0 + ci * 27;
            const float* w1 = pair ? wk1 + ci * 27 : nullptr;
            for (int kd = 0; kd < 3; ++kd) {
              for (int kh = 0; kh < 3; ++kh) {
                const float* irow =
                    icp +
                    (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp + x;
                const int t = (kd * 3 + kh) * 3;
                for (int kw = 0; kw < 3; ++kw) {
                  __m256 vi = _mm256_loadu_ps(irow + kw);
                  acc0 = _mm256_fmadd_ps(_mm256_set1_ps(w0[t + kw]), vi, acc0);
                  if (pair)
                    acc1 =
                        _mm256_fmadd_ps(_mm256_set1_ps(w1[t + kw]), vi, acc1);
                }
              }
            }
          }
          _mm256_storeu_ps(orow0 + x, acc0);
          if (pair) _mm256_storeu_ps(orow1 + x, acc1);
        }
        // 4-wide then scalar tail.
        for (; x + 4 <= w; x += 4) {
          __m128 acc0 = _mm_set1_ps(bias[co]);
          __m128 acc1 = pair ? _mm_set1_ps(bias[co + 1]) : acc0;
          for (int ci = 0; ci < cin; ++ci) {
            const float* icp = in_pad + ci * in_ch;
            const float* w0 = wk0 + ci * 27;
            const float* w1 = pair ? wk1 + ci * 27 : nullptr;
            for (int kd = 0; kd < 3; ++kd) {
              for (int kh = 0; kh < 3; ++kh) {
                const float* irow =
                    icp +
                    (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp + x;
                const int t = (kd * 3 + kh) * 3;
                for (int kw = 0; kw < 3; ++kw) {
                  __m128 vi = _mm_loadu_ps(irow + kw);
                  acc0 = _mm_fmadd_ps(_mm_set1_ps(w0[t + kw]), vi, acc0);
                  if (pair) acc1 = _mm_fmadd_ps(_mm_set1_ps(w1[t + kw]), vi, acc1);
                }
              }
            }
          }
          _mm_storeu_ps(orow0 + x, acc0);
          if (pair) _mm_storeu_ps(orow1 + x, acc1);
        }
        for (; x < w; ++x) {
          float acc0 = bias[co];
          float acc1 = pair ? bias[co + 1] : 0.0f;
          for (int ci = 0; ci < cin; ++ci) {
            const float* icp = in_pad + ci * in_ch;
            const float* w0 = wk0 + ci * 27;
            const float* w1 = pair ? wk1 + ci * 27 : nullptr;
            for (int kd = 0; kd < 3; ++kd) {
              for (int kh = 0; kh < 3; ++kh) {
                const float* irow =
                    icp +
                    (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp + x;
                const int t = (kd * 3 + kh) * 3;
                for (int kw = 0; kw < 3; ++kw) {
                  acc0 += w0[t + kw] * irow[kw];
                  if (pair) acc1 += w1[t + kw] * irow[kw];
                }
              }
            }
          }
          orow0[x] = acc0;
          if (pair) orow1[x] = acc1;
        }
      }
    }
  }
}

void conv3d_bwd_data_avx2(const float* dout, int cout, int d, int h, int w,
                          const float* weights, float* din_pad, int cin) {
  const int hp = h + 2, wp = w + 2;
  const std::size_t in_ch = static_cast<std::size_t>(d + 2) * hp * wp;
  const std::size_t out_ch = static_cast<std::size_t>(d) * h * w;
  for (int ci = 0; ci < cin; ++ci) {
    float* icp = din_pad + ci * in_ch;
    for (int co = 0; co < cout; ++co) {
      const float* oc = dout + co * out_ch;
      const float* wk = weights + ((co * cin) + ci) * 27;
      for (int z = 0; z < d; ++z) {
        for (int y = 0; y < h; ++y) {
          const float* orow = oc + (static_cast<std::size_t>(z) * h + y) * w;
          for (int kd = 0; kd < 3; ++kd) {
            for (int kh = 0; kh < 3; ++kh) {
              float* irow =
                  icp + (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp;
              const float* wrow = wk + (kd * 3 + kh) * 3;
              for (int kw = 0; kw < 3; ++kw) {
                const __m256 vw = _mm256_set1_ps(wrow[kw]);
                int x = 0;
                for (; x + 8 <= w; x += 8) {
                  __m256 t = _mm256_loadu_ps(irow + x + kw);
                  t = _mm256_fmadd_ps(vw, _mm256_loadu_ps(orow + x), t);
                  _mm256_storeu_ps(irow + x + kw, t);
                }
                for (; x < w; ++x) irow[x + kw] += wrow[kw] * orow[x];
              }
            }
          }
        }
      }
    }
  }
}

void conv3d_bwd_weights_avx2(const float* in_pad, int cin, const float* dout,
                             int cout, int d, int h, int w, float* dweights,
                             float* dbias) {
  const int hp = h + 2, wp = w + 2;
  const std::size_t in_ch = static_cast<std::size_t>(d + 2) * hp * wp;
  const std::size_t out_ch = static_cast<std::size_t>(d) * h * w;
  for (int co = 0; co < cout; ++co) {
    const float* oc = dout + co * out_ch;
    dbias[co] += static_cast<float>(sum_avx2(out_ch, oc));
    for (int ci = 0; ci < cin; ++ci) {
      const float* icp = in_pad + ci * in_ch;
      float* wk = dweights + ((co * cin) + ci) * 27;
      for (int kd = 0; kd < 3; ++kd) {
        for (int kh = 0; kh < 3; ++kh) {
          __m256 acc0 = _mm256_setzero_ps();
          __m256 acc1 = _mm256_setzero_ps();
          __m256 acc2 = _mm256_setzero_ps();
          float t0 = 0, t1 = 0, t2 = 0;
          for (int z = 0; z < d; ++z) {
            for (int y = 0; y < h; ++y) {
              const float* orow =
                  oc + (static_cast<std::size_t>(z) * h + y) * w;
              const float* irow =
                  icp + (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp;
              int x = 0;
              for (; x + 8 <= w; x += 8) {
                __m256 vo = _mm256_loadu_ps(orow + x);
                acc0 = _mm256_fmadd_ps(vo, _mm256_loadu_ps(irow + x), acc0);
                acc1 = _mm256_fmadd_ps(vo, _mm256_loadu_ps(irow + x + 1), acc1);
                acc2 = _mm256_fmadd_ps(vo, _mm256_loadu_ps(irow + x + 2), acc2);
              }
              for (; x < w; ++x) {
                t0 += orow[x] * irow[x];
                t1 += orow[x] * irow[x + 1];
                t2 += orow[x] * irow[x + 2];
              }
            }
          }
          float* wrow = wk + (kd * 3 + kh) * 3;
          wrow[0] += hsum256(acc0) + t0;
          wrow[1] += hsum256(acc1) + t1;
          wrow[2] += hsum256(acc2) + t2;
        }
      }
    }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t = {
      "avx2",
      &axpy_avx2,
      &dot_avx2,
      &sum_avx2,
      &sumsq_diff_avx2,
      &scale_avx2,
      &shift_scale_avx2,
      &relu_avx2,
      &relu_bwd_avx2,
      &adamw_avx2,
      &conv3d_fwd_avx2,
      &conv3d_bwd_data_avx2,
      &conv3d_bwd_weights_avx2,
  };
  return t;
}

}  // namespace shortmr::kernels

#else  // !SHORTMR_X86

namespace shortmr::kernels {
const KernelTable& scalar_table();
const KernelTable& avx2_table() { return scalar_table(); }
}  // namespace shortmr::kernels

#endif
