#pragma once

#include <memory>
#include <span>
#include <vector>

#include "layers.hpp"

namespace kin::nn {

// A trainable network over per-sample buffers. Parameters live in one flat
// block so optimizers, checkpoints, and gradient checks can treat the model
// as a single vector. forward() writes activations into caller scratch;
// backward() replays them, so scratch must come from the matching forward.
template <class T>
class Network {
public:
  virtual ~Network() = default;

  virtual const std::vector<int>& input_shape() const = 0;
  virtual int output_count() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual std::span<T> params() = 0;
  virtual std::span<const T> params() const = 0;
  virtual void init_params(Rng& rng) = 0;
  virtual std::size_t scratch_count() const = 0;
  virtual nlohmann::json describe() const = 0;

  virtual const T* forward(const T* x, T* scratch) const = 0;
  // dy has output_count() entries. dparams accumulates. dx_input, when
  // non-null, receives the gradient w.r.t. the network input.
  virtual void backward(const T* x, const T* dy, T* scratch, T* dparams,
                        T* dx_input = nullptr) const = 0;

  std::size_t input_count() const { return shape_numel(input_shape()); }
};

template <class T>
class SequentialNet final : public Network<T> {
public:
  explicit SequentialNet(std::vector<std::unique_ptr<Layer<T>>> layers);

  const std::vector<int>& input_shape() const override;
  int output_count() const override;
  std::size_t param_count() const override { return param_total_; }
  std::span<T> params() override { return params_; }
  std::span<const T> params() const override { return params_; }
  void init_params(Rng& rng) override { init_into(params_, rng); }
  std::size_t scratch_count() const override;
  nlohmann::json describe() const override;

  const T* forward(const T* x, T* scratch) const override {
    return forward_with(x, scratch, params_.data());
  }
  void backward(const T* x, const T* dy, T* scratch, T* dparams,
                T* dx_input = nullptr) const override {
    backward_with(x, dy, scratch, params_.data(), dparams, dx_input);
  }

  // Variants running off an external parameter block, used when this net is
  // embedded in a composite model that owns the flat parameters.
  void init_into(std::span<T> params, Rng& rng) const;
  const T* forward_with(const T* x, T* scratch, const T* params) const;
  void backward_with(const T* x, const T* dy, T* scratch, const T* params,
                     T* dparams, T* dx_input) const;

  // Offset of the final activation inside scratch (where forward's return
  // value points).
  std::size_t output_offset() const { return act_offsets_.back(); }

  const std::vector<std::unique_ptr<Layer<T>>>& layers() const { return layers_; }

private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<std::size_t> act_offsets_;
  std::vector<std::size_t> param_offsets_;
  std::size_t act_total_ = 0;
  std::size_t param_total_ = 0;
  std::size_t max_buf_ = 0;  // largest in/out size, for backward ping-pong
  std::vector<T> params_;
};

// Shared per-frame encoder, LSTM over the frame axis, head on the final
// hidden state. The encoder parameter block is replayed by every step, which
// is what keeps the parameter count independent of the sequence length.
template <class T>
class CnnLstmNet final : public Network<T> {
public:
  CnnLstmNet(int steps, std::unique_ptr<SequentialNet<T>> encoder,
             int hidden_size, std::unique_ptr<SequentialNet<T>> head);

  const std::vector<int>& input_shape() const override { return input_shape_; }
  int output_count() const override { return head_->output_count(); }
  std::size_t param_count() const override { return params_.size(); }
  std::span<T> params() override { return params_; }
  std::span<const T> params() const override { return params_; }
  void init_params(Rng& rng) override;
  std::size_t scratch_count() const override;
  nlohmann::json describe() const override;

  const T* forward(const T* x, T* scratch) const override;
  void backward(const T* x, const T* dy, T* scratch, T* dparams,
                T* dx_input = nullptr) const override;

  const SequentialNet<T>& encoder() const { return *encoder_; }
  std::size_t encoder_param_count() const { return cell_off_; }

private:
  int steps_;
  std::unique_ptr<SequentialNet<T>> encoder_;
  LstmCell<T> cell_;
  std::unique_ptr<SequentialNet<T>> head_;
  std::vector<int> input_shape_;  // {D, H, W, C} with D == steps
  std::size_t frame_count_ = 0;   // H*W*C
  int feat_ = 0;                  // encoder output width
  int hidden_ = 0;
  std::size_t cell_off_ = 0, head_off_ = 0;
  std::vector<T> params_;

  // Scratch region offsets; see net.cpp.
  std::size_t s_enc_ = 0, s_h_ = 0, s_c_ = 0, s_gates_ = 0, s_head_ = 0,
              s_work_ = 0;
};

} // namespace kin::nn
