#pragma once

// Template bodies for the per-width convolution kernels; included by the
// two instantiating translation units. Loop order (od, oh, kd, kh, ow, taps)
// amortizes pointer setup over output rows, and the kw*Ci taps of one
// padded row are contiguous, so the inner loops are branch-free
// multiply-accumulate runs.

#include <cstring>
#include <vector>

#include "conv_kernels.hpp"

namespace kin::nn::detail {

template <class T>
void conv_backward_input_kernel(const T* dy, T* dx_pad, const T* params,
                                const ConvDims& dim);

template <int CO, class T>
void conv_forward_kernel(const T* padded, T* y, const T* params, const T* bias,
                         const ConvDims& dim) {
  const int span = dim.kw * dim.Ci;
  const int co_count = CO > 0 ? CO : dim.Co;
  const std::size_t in_step = static_cast<std::size_t>(dim.sw) * dim.Ci;

  for (int od = 0; od < dim.OD; ++od) {
    for (int oh = 0; oh < dim.OH; ++oh) {
      T* __restrict__ orow =
          y + (static_cast<std::size_t>(od) * dim.OH + oh) * dim.OW * co_count;
      for (int ow = 0; ow < dim.OW; ++ow) {
        std::memcpy(orow + static_cast<std::size_t>(ow) * co_count, bias,
                    sizeof(T) * co_count);
      }
      for (int kd = 0; kd < dim.kd; ++kd) {
        const int id = od * dim.sd + kd;
        for (int kh = 0; kh < dim.kh; ++kh) {
          const int ih = oh * dim.sh + kh;
          const T* __restrict__ brow =
              padded + (static_cast<std::size_t>(id) * dim.PH + ih) * dim.PW * dim.Ci;
          const T* __restrict__ wrow =
              params +
              (static_cast<std::size_t>(kd) * dim.kh + kh) * dim.kw * dim.Ci * co_count;
          for (int ow = 0; ow < dim.OW; ++ow) {
            const T* __restrict__ x = brow + static_cast<std::size_t>(ow) * in_step;
            T* __restrict__ out = orow + static_cast<std::size_t>(ow) * co_count;
            for (int j = 0; j < span; ++j) {
              const T xv = x[j];
              const T* __restrict__ wp =
                  wrow + static_cast<std::size_t>(j) * co_count;
              const int n = CO > 0 ? CO : co_count;
              for (int co = 0; co < n; ++co) {
                out[co] += xv * wp[co];
              }
            }
          }
        }
      }
    }
  }
}

template <int CO, class T>
void conv_backward_kernel(const T* padded, const T* dy, T* dx_pad,
                          const T* params, T* dparams, T* dbias,
                          const ConvDims& dim) {
  const int span = dim.kw * dim.Ci;
  const int co_count = CO > 0 ? CO : dim.Co;
  const std::size_t in_step = static_cast<std::size_t>(dim.sw) * dim.Ci;
  const std::size_t positions =
      static_cast<std::size_t>(dim.OD) * dim.OH * dim.OW;

  for (std::size_t p = 0; p < positions; ++p) {
    const T* __restrict__ dyp = dy + p * co_count;
    for (int co = 0; co < co_count; ++co) {
      dbias[co] += dyp[co];
    }
  }

  for (int od = 0; od < dim.OD; ++od) {
    for (int oh = 0; oh < dim.OH; ++oh) {
      const T* __restrict__ dyrow =
          dy + (static_cast<std::size_t>(od) * dim.OH + oh) * dim.OW * co_count;
      for (int kd = 0; kd < dim.kd; ++kd) {
        const int id = od * dim.sd + kd;
        for (int kh = 0; kh < dim.kh; ++kh) {
          const int ih = oh * dim.sh + kh;
          const std::size_t row_off =
              (static_cast<std::size_t>(id) * dim.PH + ih) * dim.PW * dim.Ci;
          const std::size_t block =
              (static_cast<std::size_t>(kd) * dim.kh + kh) * dim.kw * dim.Ci;
          const T* __restrict__ brow = padded + row_off;
          T* __restrict__ dwrow = dparams + block * co_count;
          for (int ow = 0; ow < dim.OW; ++ow) {
            const T* __restrict__ x = brow + static_cast<std::size_t>(ow) * in_step;
            const T* __restrict__ g =
                dyrow + static_cast<std::size_t>(ow) * co_count;
            for (int j = 0; j < span; ++j) {
              const T xv = x[j];
              T* __restrict__ dwp = dwrow + static_cast<std::size_t>(j) * co_count;
              const int n = CO > 0 ? CO : co_count;
              for (int co = 0; co < n; ++co) {
                dwp[co] += xv * g[co];
              }
            }
          }
        }
      }
    }
  }
  if (dx_pad) {
    conv_backward_input_kernel<T>(dy, dx_pad, params, dim);
  }
}

// Runs off a transposed weight copy [kd][kh][co][kw*Ci] so the inner loop
// is a contiguous multiply-accumulate run along the tap axis.
template <class T>
void conv_backward_input_kernel(const T* dy, T* dx_pad, const T* params,
                                const ConvDims& dim) {
  const int span = dim.kw * dim.Ci;
  const int co_count = dim.Co;
  const std::size_t in_step = static_cast<std::size_t>(dim.sw) * dim.Ci;

  thread_local std::vector<T> wt;
  wt.resize(static_cast<std::size_t>(dim.kd) * dim.kh * co_count * span);
  for (int kd = 0; kd < dim.kd; ++kd) {
    for (int kh = 0; kh < dim.kh; ++kh) {
      const std::size_t block =
          (static_cast<std::size_t>(kd) * dim.kh + kh) * dim.kw * dim.Ci;
      const T* __restrict__ src = params + block * co_count;
      T* __restrict__ dst = wt.data() + block * co_count;
      for (int j = 0; j < span; ++j) {
        for (int co = 0; co < co_count; ++co) {
          dst[static_cast<std::size_t>(co) * span + j] =
              src[static_cast<std::size_t>(j) * co_count + co];
        }
      }
    }
  }

  for (int od = 0; od < dim.OD; ++od) {
    for (int oh = 0; oh < dim.OH; ++oh) {
      const T* __restrict__ dyrow =
          dy + (static_cast<std::size_t>(od) * dim.OH + oh) * dim.OW * co_count;
      for (int kd = 0; kd < dim.kd; ++kd) {
        const int id = od * dim.sd + kd;
        for (int kh = 0; kh < dim.kh; ++kh) {
          const int ih = oh * dim.sh + kh;
          const std::size_t row_off =
              (static_cast<std::size_t>(id) * dim.PH + ih) * dim.PW * dim.Ci;
          const std::size_t block =
              (static_cast<std::size_t>(kd) * dim.kh + kh) * dim.kw * dim.Ci;
          const T* __restrict__ wtr = wt.data() + block * co_count;
          T* __restrict__ dxrow = dx_pad + row_off;
          for (int ow = 0; ow < dim.OW; ++ow) {
            T* __restrict__ dxp = dxrow + static_cast<std::size_t>(ow) * in_step;
            const T* __restrict__ g =
                dyrow + static_cast<std::size_t>(ow) * co_count;
            for (int co = 0; co < co_count; ++co) {
              const T gv = g[co];
              const T* __restrict__ wp = wtr + static_cast<std::size_t>(co) * span;
              for (int j = 0; j < span; ++j) {
                dxp[j] += gv * wp[j];
              }
            }
          }
        }
      }
    }
  }
}

} // namespace kin::nn::detail
