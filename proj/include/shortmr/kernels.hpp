#pragma once

#include <cstddef>

namespace shortmr::kernels {

enum class Backend { scalar, avx2 };

// Dense float32 kernels over contiguous spans. The scalar table is the
// reference; the avx2 table must agree with it up to float rounding
// (equivalence-tested in tests/test_kernels.cpp). A table is selected once at
// startup from CPUID and can be forced via set_active() for testing.
//
// Convolution layout conventions (stride 1, 3x3x3 taps, zero padding of one
// voxel baked into the input buffer):
//   in_pad:   [cin][d+2][h+2][w+2]
//   out/dout: [cout][d][h][w]
//   weights:  [cout][cin][3][3][3]
// conv3d_bwd_data accumulates into din_pad (caller zeroes it); the weight and
// bias gradients are accumulated as well.
struct KernelTable {
  const char* name;

  void (*axpy)(std::size_t n, float a, const float* x, float* y);
  float (*dot)(std::size_t n, const float* x, const float* y);
  double (*sum)(std::size_t n, const float* x);
  double (*sumsq_diff)(std::size_t n, const float* x, float mean);
  void (*scale)(std::size_t n, float a, float* x);
  void (*shift_scale)(std::size_t n, float shift, float scale, float* x);
  void (*relu)(std::size_t n, const float* x, float* y);
  void (*relu_bwd)(std::size_t n, const float* dy, const float* y, float* dx);
  void (*adamw)(std::size_t n, float* w, const float* g, float* m, float* v,
                float lr, float beta1, float beta2, float eps, float wd,
                float inv_bc1, float inv_bc2);

  void (*conv3d_fwd)(const float* in_pad, int cin, int d, int h, int w,
                     const float* weights, const float* bias, float* out,
                     int cout);
  void (*conv3d_bwd_data)(const float* dout, int cout, int d, int h, int w,
                          const float* weights, float* din_pad, int cin);
  void (*conv3d_bwd_weights)(const float* in_pad, int cin, const float* dout,
                             int cout, int d, int h, int w, float* dweights,
                             float* dbias);
};

bool cpu_has_avx2();
const KernelTable& table(Backend b);
const KernelTable& active();
void set_active(Backend b);

}  // namespace shortmr::kernels
