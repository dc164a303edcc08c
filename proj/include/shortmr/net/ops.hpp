#pragma once

#include <cstdint>
#include <cstring>
#include <type_traits>

#include "shortmr/kernels.hpp"
#include "shortmr/kernels_ref.hpp"

// Layer primitives shared by the float (SIMD-dispatched) and double
// (reference) model instantiations. The double path exists for the finite
// difference oracles; production inference and training run at float.

namespace shortmr::net {

template <typename T>
void conv3d_fwd(const T* in_pad, int cin, int d, int h, int w, const T* wk,
                const T* bias, T* out, int cout) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().conv3d_fwd(in_pad, cin, d, h, w, wk, bias, out, cout);
  } else {
    kernels::ref::conv3d_fwd(in_pad, cin, d, h, w, wk, bias, out, cout);
  }
}

template <typename T>
void conv3d_bwd_data(const T* dout, int cout, int d, int h, int w, const T* wk,
                     T* din_pad, int cin) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().conv3d_bwd_data(dout, cout, d, h, w, wk, din_pad, cin);
  } else {
    kernels::ref::conv3d_bwd_data(dout, cout, d, h, w, wk, din_pad, cin);
  }
}

template <typename T>
void conv3d_bwd_weights(const T* in_pad, int cin, const T* dout, int cout,
                        int d, int h, int w, T* dwk, T* dbias) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().conv3d_bwd_weights(in_pad, cin, dout, cout, d, h, w, dwk,
                                         dbias);
  } else {
    kernels::ref::conv3d_bwd_weights(in_pad, cin, dout, cout, d, h, w, dwk,
                                     dbias);
  }
}

template <typename T>
void relu(std::size_t n, const T* x, T* y) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().relu(n, x, y);
  } else {
    kernels::ref::relu(n, x, y);
  }
}

template <typename T>
void relu_bwd(std::size_t n, const T* dy, const T* y, T* dx) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().relu_bwd(n, dy, y, dx);
  } else {
    kernels::ref::relu_bwd(n, dy, y, dx);
  }
}

// Zero-pads each channel by one voxel on all sides.
template <typename T>
void pad3d(const T* src, int c, int d, int h, int w, T* dst) {
  const int hp = h + 2, wp = w + 2, dp = d + 2;
  const std::size_t ch_pad = static_cast<std::size_t>(dp) * hp * wp;
  std::memset(dst, 0, sizeof(T) * ch_pad * static_cast<std::size_t>(c));
  for (int ci = 0; ci < c; ++ci) {
    const T* s = src + static_cast<std::size_t>(ci) * d * h * w;
    T* t = dst + static_cast<std::size_t>(ci) * ch_pad;
    for (int z = 0; z < d; ++z) {
      for (int y = 0; y < h; ++y) {
        std::memcpy(t + (static_cast<std::size_t>(z + 1) * hp + (y + 1)) * wp + 1,
                    s + (static_cast<std::size_t>(z) * h + y) * w,
                    sizeof(T) * static_cast<std::size_t>(w));
      }
    }
  }
}

// Crops the one-voxel border back off (inverse of pad3d's layout).
template <typename T>
void crop3d(const T* src_pad, int c, int d, int h, int w, T* dst) {
  const int hp = h + 2, wp = w + 2, dp = d + 2;
  const std::size_t ch_pad = static_cast<std::size_t>(dp) * hp * wp;
  for (int ci = 0; ci < c; ++ci) {
    const T* s = src_pad + static_cast<std::size_t>(ci) * ch_pad;
    T* t = dst + static_cast<std::size_t>(ci) * d * h * w;
    for (int z = 0; z < d; ++z) {
      for (int y = 0; y < h; ++y) {
        std::memcpy(t + (static_cast<std::size_t>(z) * h + y) * w,
                    s + (static_cast<std::size_t>(z + 1) * hp + (y + 1)) * wp + 1,
                    sizeof(T) * static_cast<std::size_t>(w));
      }
    }
  }
}

// 2x2x2 max pooling, stride 2. Dims must be even. argmax stores the winning
// linear offset within the channel for the backward scatter.
template <typename T>
void maxpool2_fwd(const T* in, int c, int d, int h, int w, T* out,
                  std::int32_t* argmax) {
  const int od = d / 2, oh = h / 2, ow = w / 2;
  for (int ci = 0; ci < c; ++ci) {
    const T* ic = in + static_cast<std::size_t>(ci) * d * h * w;
    T* oc = out + static_cast<std::size_t>(ci) * od * oh * ow;
    std::int32_t* ac = argmax + static_cast<std::size_t>(ci) * od * oh * ow;
    for (int z = 0; z < od; ++z) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          T best{};
          std::int32_t best_i = -1;
          for (int dz = 0; dz < 2; ++dz) {
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                const std::int32_t i = static_cast<std::int32_t>(
                    (static_cast<std::size_t>(2 * z + dz) * h + (2 * y + dy)) * w +
                    (2 * x + dx));
                if (best_i < 0 || ic[i] > best) {
                  best = ic[i];
                  best_i = i;
                }
              }
            }
          }
          const std::size_t o = (static_cast<std::size_t>(z) * oh + y) * ow + x;
          oc[o] = best;
          ac[o] = best_i;
        }
      }
    }
  }
}

template <typename T>
void maxpool2_bwd(const T* dout, int c, int d, int h, int w,
                  const std::int32_t* argmax, T* din) {
  const int od = d / 2, oh = h / 2, ow = w / 2;
  const std::size_t out_ch = static_cast<std::size_t>(od) * oh * ow;
  std::memset(din, 0, sizeof(T) * static_cast<std::size_t>(c) * d * h * w);
  for (int ci = 0; ci < c; ++ci) {
    const T* oc = dout + static_cast<std::size_t>(ci) * out_ch;
    const std::int32_t* ac = argmax + static_cast<std::size_t>(ci) * out_ch;
    T* ic = din + static_cast<std::size_t>(ci) * d * h * w;
    for (std::size_t o = 0; o < out_ch; ++o) {
      ic[static_cast<std::size_t>(ac[o])] += oc[o];
    }
  }
}

template <typename T>
void gap_fwd(const T* in, int c, std::size_t voxels, T* out) {
  for (int ci = 0; ci < c; ++ci) {
    const T* ic = in + static_cast<std::size_t>(ci) * voxels;
    T acc = 0;
    for (std::size_t i = 0; i < voxels; ++i) acc += ic[i];
    out[ci] = acc / static_cast<T>(voxels);
  }
}

template <typename T>
void gap_bwd(const T* dvec, int c, std::size_t voxels, T* din) {
  for (int ci = 0; ci < c; ++ci) {
    const T g = dvec[ci] / static_cast<T>(voxels);
    T* ic = din + static_cast<std::size_t>(ci) * voxels;
    for (std::size_t i = 0; i < voxels; ++i) ic[i] = g;
  }
}

template <typename T>
void linear_fwd(const T* in, int c, const T* wk, const T* bias, T* out,
                int classes) {
  for (int k = 0; k < classes; ++k) {
    T acc = bias[k];
    const T* row = wk + static_cast<std::size_t>(k) * c;
    for (int ci = 0; ci < c; ++ci) acc += row[ci] * in[ci];
    out[k] = acc;
  }
}

template <typename T>
void linear_bwd(const T* in, int c, const T* wk, const T* dlogits, int classes,
                T* dwk, T* dbias, T* din) {
  for (int ci = 0; ci < c; ++ci) din[ci] = 0;
  for (int k = 0; k < classes; ++k) {
    const T g = dlogits[k];
    dbias[k] += g;
    const T* row = wk + static_cast<std::size_t>(k) * c;
    T* drow = dwk + static_cast<std::size_t>(k) * c;
    for (int ci = 0; ci < c; ++ci) {
      drow[ci] += g * in[ci];
      din[ci] += row[ci] * g;
    }
  }
}

}  // namespace shortmr::net
