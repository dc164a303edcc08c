#pragma once

#include <cmath>
#include <cstddef>

// Reference kernels, templated on the scalar type. These define the semantics
// for every entry in the kernel table: the scalar float table is built from
// them directly, and the double instantiations back the double-precision
// model used by the gradient checks. Keep them dependency-free and simple.

namespace shortmr::kernels::ref {

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
double sum(std::size_t n, const T* x) {
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
  return acc;
}

template <typename T>
double sumsq_diff(std::size_t n, const T* x, T mean) {
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = static_cast<double>(x[i]) - static_cast<double>(mean);
    acc += d * d;
  }
  return acc;
}

template <typename T>
void scale(std::size_t n, T a, T* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

template <typename T>
void shift_scale(std::size_t n, T shift, T factor, T* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] + shift) * factor;
}

template <typename T>
void relu(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

// dx = dy where the forward output was positive, else 0.
template <typename T>
void relu_bwd(std::size_t n, const T* dy, const T* y, T* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

// Decoupled weight decay; inv_bc1/inv_bc2 are the 1/(1-beta^t) bias
// corrections for the current step.
template <typename T>
void adamw(std::size_t n, T* w, const T* g, T* m, T* v, T lr, T beta1, T beta2,
           T eps, T wd, T inv_bc1, T inv_bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    T mhat = m[i] * inv_bc1;
    T vhat = v[i] * inv_bc2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * w[i]);
  }
}

template <typename T>
void conv3d_fwd(const T* in_pad, int cin, int d, int h, int w, const T* weights,
                const T* bias, T* out, int cout) {
  const int hp = h + 2, wp = w + 2;
  const std::size_t in_ch = static_cast<std::size_t>(d + 2) * hp * wp;
  const std::size_t out_ch = static_cast<std::size_t>(d) * h * w;
  for (int co = 0; co < cout; ++co) {
    T* oc = out + co * out_ch;
    for (std::size_t i = 0; i < out_ch; ++i) oc[i] = bias[co];
    for (int ci = 0; ci < cin; ++ci) {
      const T* icp = in_pad + ci * in_ch;
      const T* wk = weights + ((co * cin) + ci) * 27;
      for (int z = 0; z < d; ++z) {
        for (int y = 0; y < h; ++y) {
          T* orow = oc + (static_cast<std::size_t>(z) * h + y) * w;
          for (int kd = 0; kd < 3; ++kd) {
            for (int kh = 0; kh < 3; ++kh) {
              const T* irow =
                  icp + (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp;
              const T* wrow = wk + (kd * 3 + kh) * 3;
              for (int x = 0; x < w; ++x) {
                orow[x] += wrow[0] * irow[x] + wrow[1] * irow[x + 1] +
                           wrow[2] * irow[x + 2];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv3d_bwd_data(const T* dout, int cout, int d, int h, int w,
                     const T* weights, T* din_pad, int cin) {
  const int hp = h + 2, wp = w + 2;
  const std::size_t in_ch = static_cast<std::size_t>(d + 2) * hp * wp;
  const std::size_t out_ch = static_cast<std::size_t>(d) * h * w;
  for (int ci = 0; ci < cin; ++ci) {
    T* icp = din_pad + ci * in_ch;
    for (int co = 0; co < cout; ++co) {
      const T* oc = dout + co * out_ch;
      const T* wk = weights + ((co * cin) + ci) * 27;
      for (int z = 0; z < d; ++z) {
        for (int y = 0; y < h; ++y) {
          const T* orow = oc + (static_cast<std::size_t>(z) * h + y) * w;
          for (int kd = 0; kd < 3; ++kd) {
            for (int kh = 0; kh < 3; ++kh) {
              T* irow =
                  icp + (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp;
              const T* wrow = wk + (kd * 3 + kh) * 3;
              for (int x = 0; x < w; ++x) {
                irow[x] += wrow[0] * orow[x];
                irow[x + 1] += wrow[1] * orow[x];
                irow[x + 2] += wrow[2] * orow[x];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv3d_bwd_weights(const T* in_pad, int cin, const T* dout, int cout,
                        int d, int h, int w, T* dweights, T* dbias) {
  const int hp = h + 2, wp = w + 2;
  const std::size_t in_ch = static_cast<std::size_t>(d + 2) * hp * wp;
  const std::size_t out_ch = static_cast<std::size_t>(d) * h * w;
  for (int co = 0; co < cout; ++co) {
    const T* oc = dout + co * out_ch;
    T bacc = 0;
    for (std::size_t i = 0; i < out_ch; ++i) bacc += oc[i];
    dbias[co] += bacc;
    for (int ci = 0; ci < cin; ++ci) {
      const T* icp = in_pad + ci * in_ch;
      T* wk = dweights + ((co * cin) + ci) * 27;
      for (int kd = 0; kd < 3; ++kd) {
        for (int kh = 0; kh < 3; ++kh) {
          T acc0 = 0, acc1 = 0, acc2 = 0;
          for (int z = 0; z < d; ++z) {
            for (int y = 0; y < h; ++y) {
              const T* orow = oc + (static_cast<std::size_t>(z) * h + y) * w;
              const T* irow =
                  icp + (static_cast<std::size_t>(z + kd) * hp + (y + kh)) * wp;
              for (int x = 0; x < w; ++x) {
                acc0 += orow[x] * irow[x];
                acc1 += orow[x] * irow[x + 1];
                acc2 += orow[x] * irow[x + 2];
              }
            }
          }
          T* wrow = wk + (kd * 3 + kh) * 3;
          wrow[0] += acc0;
          wrow[1] += acc1;
          wrow[2] += acc2;
        }
      }
    }
  }
}

}  // namespace shortmr::kernels::ref
