#include "shortmr/kernels.hpp"
#include "shortmr/kernels_ref.hpp"

namespace shortmr::kernels {

const KernelTable& scalar_table() {
  static const KernelTable t = {
      "scalar",
      &ref::axpy<float>,
      &ref::dot<float>,
      &ref::sum<float>,
      &ref::sumsq_diff<float>,
      &ref::scale<float>,
      &ref::shift_scale<float>,
      &ref::relu<float>,
      &ref::relu_bwd<float>,
      &ref::adamw<float>,
      &ref::conv3d_fwd<float>,
      &ref::conv3d_bwd_data<float>,
      &ref::conv3d_bwd_weights<float>,
  };
  return t;
}

}  // namespace shortmr::kernels
