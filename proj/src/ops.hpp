#pragma once

#include <array>

#include "layers.hpp"
#include "tensor.hpp"

namespace kin::nn {

// Batched 3-D convolution with the exchange kernel layout
// [Cout][kd][kh][kw][Cin]. Input is [B][D][H][W][Cin]; bias may be empty.
// Thin wrapper over the Conv3d layer (which stores kernels channel-last
// internally), so there is exactly one convolution implementation.
template <class T>
Tensor<T> conv3d_forward(const Tensor<T>& input, const Tensor<T>& kernels,
                         const Tensor<T>& bias, std::array<int, 3> stride,
                         std::array<int, 3> padding) {
  if (input.shape.size() != 5) {
    throw std::invalid_argument("conv3d: input must be B x D x H x W x Cin");
  }
  if (kernels.shape.size() != 5) {
    throw std::invalid_argument("conv3d: kernels must be Cout x kd x kh x kw x Cin");
  }
  if (kernels.shape[4] != input.shape[4]) {
    throw std::invalid_argument("conv3d: channel mismatch");
  }
  const int co = kernels.shape[0];
  const int kd = kernels.shape[1], kh = kernels.shape[2], kw = kernels.shape[3];
  const int ci = kernels.shape[4];
  if (!bias.values.empty() && bias.shape != std::vector<int>{co}) {
    throw std::invalid_argument("conv3d: bias must have Cout entries");
  }

  Conv3d<T> layer({input.shape[1], input.shape[2], input.shape[3], ci}, co,
                  kd, kh, kw, stride[0], stride[1], stride[2], padding[0],
                  padding[1], padding[2]);

  // Repack [co][kd][kh][kw][ci] -> [kd][kh][kw][ci][co], bias appended.
  std::vector<T> params(layer.param_count(), T(0));
  for (int o = 0; o < co; ++o) {
    for (int d = 0; d < kd; ++d) {
      for (int h = 0; h < kh; ++h) {
        for (int w = 0; w < kw; ++w) {
          for (int i = 0; i < ci; ++i) {
            const std::size_t src =
                (((static_cast<std::size_t>(o) * kd + d) * kh + h) * kw + w) * ci + i;
            const std::size_t dst =
                (((static_cast<std::size_t>(d) * kh + h) * kw + w) * ci + i) * co + o;
            params[dst] = kernels.values[src];
          }
        }
      }
    }
  }
  if (!bias.values.empty()) {
    std::copy(bias.values.begin(), bias.values.end(),
              params.end() - static_cast<std::ptrdiff_t>(co));
  }

  const auto& out_shape = layer.out_shape();
  const int batch = input.shape[0];
  Tensor<T> out({batch, out_shape[0], out_shape[1], out_shape[2], out_shape[3]});
  const std::size_t in_stride = shape_numel(layer.in_shape());
  const std::size_t out_stride = shape_numel(out_shape);
  for (int b = 0; b < batch; ++b) {
    layer.forward(input.values.data() + static_cast<std::size_t>(b) * in_stride,
                  out.values.data() + static_cast<std::size_t>(b) * out_stride,
                  params.data());
  }
  return out;
}

// Single LSTM step over the cell's flat parameter block (Wx, Wh, b with
// gate order i, f, g, o).
template <class T>
void lstm_step(const LstmCell<T>& cell, const T* x, const T* h, const T* c,
               const T* params, T* h_out, T* c_out) {
  std::vector<T> gates(static_cast<std::size_t>(4) * cell.hidden_size());
  cell.step_forward(x, h, c, h_out, c_out, gates.data(), params);
}

} // namespace kin::nn
