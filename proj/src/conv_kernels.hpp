#pragma once

#include <cstddef>

namespace kin::nn::detail {

struct ConvDims {
  int kd, kh, kw, sd, sh, sw;
  int OD, OH, OW, Co, Ci;
  int PH, PW;
};

// Inner convolution kernels over zero-padded input, instantiated per output
// channel width so the trip counts are compile-time constants. The
// instantiations live in two translation units built with different
// vectorizer settings: GCC's loop vectorizer emits pathological permute
// code for the narrow widths but is the fastest option for the wide ones.
template <int CO, class T>
void conv_forward_kernel(const T* padded, T* y, const T* params, const T* bias,
                         const ConvDims& dim);

template <int CO, class T>
void conv_backward_kernel(const T* padded, const T* dy, T* dx_pad,
                          const T* params, T* dparams, T* dbias,
                          const ConvDims& dim);

// Input-gradient pass, always built in the wide TU: its inner loops run
// over the runtime-length tap axis and need the loop vectorizer.
template <class T>
void conv_backward_input_kernel(const T* dy, T* dx_pad, const T* params,
                                const ConvDims& dim);

#define KINBENCH_DECLARE_CONV_KERNELS(CO, T)                                   \
  extern template void conv_forward_kernel<CO, T>(const T*, T*, const T*,      \
                                                  const T*, const ConvDims&);  \
  extern template void conv_backward_kernel<CO, T>(const T*, const T*, T*,     \
                                                   const T*, T*, T*,           \
                                                   const ConvDims&);

KINBENCH_DECLARE_CONV_KERNELS(0, float)
KINBENCH_DECLARE_CONV_KERNELS(8, float)
KINBENCH_DECLARE_CONV_KERNELS(16, float)
KINBENCH_DECLARE_CONV_KERNELS(32, float)
KINBENCH_DECLARE_CONV_KERNELS(0, double)
KINBENCH_DECLARE_CONV_KERNELS(8, double)
KINBENCH_DECLARE_CONV_KERNELS(16, double)
KINBENCH_DECLARE_CONV_KERNELS(32, double)

#undef KINBENCH_DECLARE_CONV_KERNELS

extern template void conv_backward_input_kernel<float>(const float*, float*,
                                                       const float*,
                                                       const ConvDims&);
extern template void conv_backward_input_kernel<double>(const double*, double*,
                                                        const double*,
                                                        const ConvDims&);

} // namespace kin::nn::detail
