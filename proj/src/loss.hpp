#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "tensor.hpp"

namespace kin::nn {

enum class LossKind { cross_entropy, sse };

// Mean over the batch of -sum(label * log(prob)), probabilities clamped at
// 1e-9 inside the log. Per-sample form: pass grad_scale = 1/batch and
// average the returned values yourself.
template <class T>
T cross_entropy_sample(std::span<const T> probs, std::span<const T> onehot,
                       std::span<T> dprobs, T grad_scale) {
  const T clamp = T(1e-9);
  T loss{};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const T p = probs[i] > clamp ? probs[i] : clamp;
    loss -= onehot[i] * std::log(p);
    dprobs[i] = -grad_scale * onehot[i] / p;
  }
  return loss;
}

// Mean over the batch of sum((pred - target)^2); gradient 2(pred-target)/B.
template <class T>
T sse_sample(std::span<const T> pred, std::span<const T> target,
             std::span<T> dpred, T grad_scale) {
  T loss{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T diff = pred[i] - target[i];
    loss += diff * diff;
    dpred[i] = grad_scale * T(2) * diff;
  }
  return loss;
}

template <class T>
T loss_sample(LossKind kind, std::span<const T> out, std::span<const T> target,
              std::span<T> dout, T grad_scale) {
  return kind == LossKind::cross_entropy
             ? cross_entropy_sample(out, target, dout, grad_scale)
             : sse_sample(out, target, dout, grad_scale);
}

// Batched contract forms over B x K tensors. The returned gradient is with
// respect to the inputs (probabilities / predictions).
template <class T>
std::pair<T, Tensor<T>> cross_entropy_loss(const Tensor<T>& probs,
                                           const Tensor<T>& onehot) {
  if (probs.shape != onehot.shape || probs.shape.size() != 2) {
    throw std::invalid_argument("cross_entropy_loss: need matching B x K inputs");
  }
  const int batch = probs.shape[0];
  const int k = probs.shape[1];
  for (int b = 0; b < batch; ++b) {
    T row{};
    for (int i = 0; i < k; ++i) row += probs.values[static_cast<std::size_t>(b) * k + i];
    if (std::abs(row - T(1)) > T(1e-6)) {
      throw std::invalid_argument("cross_entropy_loss: rows must sum to 1");
    }
  }
  Tensor<T> grad(probs.shape);
  T total{};
  const T scale = T(1) / static_cast<T>(batch);
  for (int b = 0; b < batch; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * k;
    total += cross_entropy_sample<T>({probs.values.data() + off, static_cast<std::size_t>(k)},
                                     {onehot.values.data() + off, static_cast<std::size_t>(k)},
                                     {grad.values.data() + off, static_cast<std::size_t>(k)},
                                     scale);
  }
  return {total * scale, std::move(grad)};
}

template <class T>
std::pair<T, Tensor<T>> sse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape != target.shape || pred.shape.size() != 2) {
    throw std::invalid_argument("sse_loss: need matching B x K inputs");
  }
  const int batch = pred.shape[0];
  const int k = pred.shape[1];
  Tensor<T> grad(pred.shape);
  T total{};
  const T scale = T(1) / static_cast<T>(batch);
  for (int b = 0; b < batch; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * k;
    total += sse_sample<T>({pred.values.data() + off, static_cast<std::size_t>(k)},
                           {target.values.data() + off, static_cast<std::size_t>(k)},
                           {grad.values.data() + off, static_cast<std::size_t>(k)},
                           scale);
  }
  return {total * scale, std::move(grad)};
}

} // namespace kin::nn
