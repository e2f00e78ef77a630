#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rng.hpp"

namespace kin::nn {

// Per-sample layer. Batch handling, activation storage, and parameter
// storage live in the network; a layer only knows how to map one input
// buffer to one output buffer and how to push gradients back.
//
// backward() contracts: dx may be null when the caller does not need input
// gradients (first layer); dparams accumulates (+=) so shared-weight layers
// can be replayed over time steps.
template <class T>
class Layer {
public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual const std::vector<int>& in_shape() const = 0;
  virtual const std::vector<int>& out_shape() const = 0;
  virtual std::size_t param_count() const { return 0; }
  virtual void init_params(std::span<T> params, Rng& rng) const;
  virtual nlohmann::json describe() const;

  virtual void forward(const T* x, T* y, const T* params) const = 0;
  virtual void backward(const T* x, const T* y, const T* dy, T* dx,
                        const T* params, T* dparams) const = 0;
};

inline std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

// 3-D cross-correlation over D x H x W x C layouts (channels fastest).
// Weights are stored [kd][kh][kw][Cin][Cout] with bias [Cout] appended, so
// the innermost loops run over contiguous output channels.
template <class T>
class Conv3d final : public Layer<T> {
public:
  Conv3d(std::vector<int> in_shape, int out_channels, int kd, int kh, int kw,
         int sd, int sh, int sw, int pd, int ph, int pw);

  std::string kind() const override { return "conv3d"; }
  const std::vector<int>& in_shape() const override { return in_shape_; }
  const std::vector<int>& out_shape() const override { return out_shape_; }
  std::size_t param_count() const override;
  void init_params(std::span<T> params, Rng& rng) const override;
  nlohmann::json describe() const override;

  void forward(const T* x, T* y, const T* params) const override;
  void backward(const T* x, const T* y, const T* dy, T* dx, const T* params,
                T* dparams) const override;

private:
  std::vector<int> in_shape_, out_shape_;
  int kd_, kh_, kw_, sd_, sh_, sw_, pd_, ph_, pw_;
};

// Non-overlapping max pooling (stride = kernel). Ties break toward the
// first element in scan order, which keeps backward deterministic.
template <class T>
class MaxPool3d final : public Layer<T> {
public:
  MaxPool3d(std::vector<int> in_shape, int kd, int kh, int kw);

  std::string kind() const override { return "maxpool3d"; }
  const std::vector<int>& in_shape() const override { return in_shape_; }
  const std::vector<int>& out_shape() const override { return out_shape_; }
  nlohmann::json describe() const override;

  void forward(const T* x, T* y, const T* params) const override;
  void backward(const T* x, const T* y, const T* dy, T* dx, const T* params,
                T* dparams) const override;

private:
  std::vector<int> in_shape_, out_shape_;
  int kd_, kh_, kw_;
};

template <class T>
class Dense final : public Layer<T> {
public:
  Dense(int in_count, int out_count);

  std::string kind() const override { return "dense"; }
  const std::vector<int>& in_shape() const override { return in_shape_; }
  const std::vector<int>& out_shape() const override { return out_shape_; }
  std::size_t param_count() const override;
  void init_params(std::span<T> params, Rng& rng) const override;
  nlohmann::json describe() const override;

  void forward(const T* x, T* y, const T* params) const override;
  void backward(const T* x, const T* y, const T* dy, T* dx, const T* params,
                T* dparams) const override;

private:
  std::vector<int> in_shape_, out_shape_;
};

template <class T>
class Relu final : public Layer<T> {
public:
  explicit Relu(std::vector<int> shape) : shape_(std::move(shape)) {}

  std::string kind() const override { return "relu"; }
  const std::vector<int>& in_shape() const override { return shape_; }
  const std::vector<int>& out_shape() const override { return shape_; }
  nlohmann::json describe() const override;

  void forward(const T* x, T* y, const T* params) const override;
  void backward(const T* x, const T* y, const T* dy, T* dx, const T* params,
                T* dparams) const override;

private:
  std::vector<int> shape_;
};

template <class T>
class Softmax final : public Layer<T> {
public:
  explicit Softmax(int count) : shape_{count} {}

  std::string kind() const override { return "softmax"; }
  const std::vector<int>& in_shape() const override { return shape_; }
  const std::vector<int>& out_shape() const override { return shape_; }
  nlohmann::json describe() const override;

  void forward(const T* x, T* y, const T* params) const override;
  void backward(const T* x, const T* y, const T* dy, T* dx, const T* params,
                T* dparams) const override;

private:
  std::vector<int> shape_;
};

template <class T>
class Flatten final : public Layer<T> {
public:
  explicit Flatten(std::vector<int> in_shape)
      : in_shape_(std::move(in_shape)),
        out_shape_{static_cast<int>(shape_numel(in_shape_))} {}

  std::string kind() const override { return "flatten"; }
  const std::vector<int>& in_shape() const override { return in_shape_; }
  const std::vector<int>& out_shape() const override { return out_shape_; }
  nlohmann::json describe() const override;

  void forward(const T* x, T* y, const T* params) const override;
  void backward(const T* x, const T* y, const T* dy, T* dx, const T* params,
                T* dparams) const override;

private:
  std::vector<int> in_shape_, out_shape_;
};

// LSTM cell (input/forget/output gates plus tanh candidate). Parameters:
// Wx [input][4H], Wh [H][4H], b [4H], gate order (i, f, g, o). Not a Layer:
// the recurrent loop lives in the network, which replays this cell per step.
template <class T>
class LstmCell {
public:
  LstmCell(int input_size, int hidden_size);

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_; }
  std::size_t param_count() const;
  void init_params(std::span<T> params, Rng& rng) const;

  // gates must hold 4H values; activated gate values are stored there for
  // the backward pass.
  void step_forward(const T* x, const T* h_prev, const T* c_prev, T* h_out,
                    T* c_out, T* gates, const T* params) const;

  // dh/dc are gradients flowing into (h_out, c_out); outputs accumulate
  // nothing, they are written. dparams accumulates.
  void step_backward(const T* x, const T* h_prev, const T* c_prev,
                     const T* c_out, const T* gates, const T* dh, const T* dc,
                     T* dx, T* dh_prev, T* dc_prev, const T* params,
                     T* dparams) const;

private:
  int input_size_, hidden_;
};

} // namespace kin::nn
