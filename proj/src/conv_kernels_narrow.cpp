// Narrow-width convolution kernels (8/16 output channels, plus the runtime
// fallback). Built with GCC's loop vectorizer disabled: on the small fixed
// widths it interleaves across output columns with permute chains an order
// of magnitude slower than the straight SLP code; see CMakeLists.

#include "conv_kernels_impl.hpp"

namespace kin::nn::detail {

#define KINBENCH_INSTANTIATE_CONV_KERNELS(CO, T)                               \
  template void conv_forward_kernel<CO, T>(const T*, T*, const T*, const T*,   \
                                           const ConvDims&);                   \
  template void conv_backward_kernel<CO, T>(const T*, const T*, T*, const T*,  \
                                            T*, T*, const ConvDims&);

KINBENCH_INSTANTIATE_CONV_KERNELS(0, float)
KINBENCH_INSTANTIATE_CONV_KERNELS(8, float)
KINBENCH_INSTANTIATE_CONV_KERNELS(16, float)
KINBENCH_INSTANTIATE_CONV_KERNELS(0, double)
KINBENCH_INSTANTIATE_CONV_KERNELS(8, double)
KINBENCH_INSTANTIATE_CONV_KERNELS(16, double)

} // namespace kin::nn::detail
