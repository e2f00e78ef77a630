// Wide-width convolution kernels (32 output channels). Built with the
// default optimizer settings; the loop vectorizer handles multi-register
// accumulators well at this width.

#include "conv_kernels_impl.hpp"

namespace kin::nn::detail {

template void conv_forward_kernel<32, float>(const float*, float*, const float*,
                                             const float*, const ConvDims&);
template void conv_backward_kernel<32, float>(const float*, const float*, float*,
                                              const float*, float*, float*,
                                              const ConvDims&);
template void conv_forward_kernel<32, double>(const double*, double*, const double*,
                                              const double*, const ConvDims&);
template void conv_backward_kernel<32, double>(const double*, const double*, double*,
                                               const double*, double*, double*,
                                               const ConvDims&);

template void conv_backward_input_kernel<float>(const float*, float*,
                                                const float*, const ConvDims&);
template void conv_backward_input_kernel<double>(const double*, double*,
                                                 const double*, const ConvDims&);

} // namespace kin::nn::detail
