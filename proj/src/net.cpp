#include "net.hpp"

#include <cstring>
#include <stdexcept>

namespace kin::nn {

// ---------------------------------------------------------- SequentialNet

template <class T>
SequentialNet<T>::SequentialNet(std::vector<std::unique_ptr<Layer<T>>> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw std::invalid_argument("sequential: needs at least one layer");
  }
  max_buf_ = shape_numel(layers_.front()->in_shape());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i > 0 && layers_[i]->in_shape() != layers_[i - 1]->out_shape()) {
      throw std::invalid_argument("sequential: layer shapes do not chain");
    }
    act_offsets_.push_back(act_total_);
    param_offsets_.push_back(param_total_);
    const std::size_t out = shape_numel(layers_[i]->out_shape());
    act_total_ += out;
    max_buf_ = std::max(max_buf_, out);
    param_total_ += layers_[i]->param_count();
  }
  params_.assign(param_total_, T(0));
}

template <class T>
const std::vector<int>& SequentialNet<T>::input_shape() const {
  return layers_.front()->in_shape();
}

template <class T>
int SequentialNet<T>::output_count() const {
  return static_cast<int>(shape_numel(layers_.back()->out_shape()));
}

template <class T>
void SequentialNet<T>::init_into(std::span<T> params, Rng& rng) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::size_t count = layers_[i]->param_count();
    if (count > 0) {
      layers_[i]->init_params(params.subspan(param_offsets_[i], count), rng);
    }
  }
}

template <class T>
std::size_t SequentialNet<T>::scratch_count() const {
  return act_total_ + 2 * max_buf_;
}

template <class T>
nlohmann::json SequentialNet<T>::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) {
    layers.push_back(l->describe());
  }
  return {{"graph", "sequential"}, {"layers", layers}};
}

template <class T>
const T* SequentialNet<T>::forward_with(const T* x, T* scratch,
                                        const T* params) const {
  const T* in = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    T* out = scratch + act_offsets_[i];
    layers_[i]->forward(in, out, params + param_offsets_[i]);
    in = out;
  }
  return in;
}

template <class T>
void SequentialNet<T>::backward_with(const T* x, const T* dy, T* scratch,
                                     const T* params, T* dparams,
                                     T* dx_input) const {
  T* buf_a = scratch + act_total_;
  T* buf_b = buf_a + max_buf_;
  const T* cur_dy = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const T* in = i == 0 ? x : scratch + act_offsets_[i - 1];
    const T* out = scratch + act_offsets_[i];
    T* dx;
    if (i == 0) {
      dx = dx_input;  // may be null: input gradients not requested
    } else {
      dx = cur_dy == buf_a ? buf_b : buf_a;
    }
    layers_[i]->backward(in, out, cur_dy, dx, params + param_offsets_[i],
                         dparams + param_offsets_[i]);
    cur_dy = dx;
    if (i > 0 && cur_dy == nullptr) {
      throw std::logic_error("sequential: lost gradient buffer");
    }
  }
}

// ------------------------------------------------------------- CnnLstmNet

template <class T>
CnnLstmNet<T>::CnnLstmNet(int steps, std::unique_ptr<SequentialNet<T>> encoder,
                          int hidden_size, std::unique_ptr<SequentialNet<T>> head)
    : steps_(steps),
      encoder_(std::move(encoder)),
      cell_(encoder_->output_count(), hidden_size),
      head_(std::move(head)),
      hidden_(hidden_size) {
  if (steps < 1) {
    throw std::invalid_argument("cnn-lstm: steps must be >= 1");
  }
  const auto& enc_in = encoder_->input_shape();
  if (enc_in.size() != 4 || enc_in[0] != 1) {
    throw std::invalid_argument("cnn-lstm: encoder must take 1 x H x W x C frames");
  }
  if (head_->input_shape() != std::vector<int>{hidden_size}) {
    throw std::invalid_argument("cnn-lstm: head must take the hidden state");
  }
  feat_ = encoder_->output_count();
  frame_count_ = encoder_->input_count();
  input_shape_ = {steps_, enc_in[1], enc_in[2], enc_in[3]};

  cell_off_ = encoder_->param_count();
  head_off_ = cell_off_ + cell_.param_count();
  params_.assign(head_off_ + head_->param_count(), T(0));

  s_enc_ = 0;
  s_h_ = s_enc_ + static_cast<std::size_t>(steps_) * encoder_->scratch_count();
  s_c_ = s_h_ + static_cast<std::size_t>(steps_ + 1) * hidden_;
  s_gates_ = s_c_ + static_cast<std::size_t>(steps_ + 1) * hidden_;
  s_head_ = s_gates_ + static_cast<std::size_t>(steps_) * 4 * hidden_;
  s_work_ = s_head_ + head_->scratch_count();
}

template <class T>
void CnnLstmNet<T>::init_params(Rng& rng) {
  encoder_->init_into(std::span<T>(params_.data(), cell_off_), rng);
  cell_.init_params(
      std::span<T>(params_.data() + cell_off_, cell_.param_count()), rng);
  head_->init_into(
      std::span<T>(params_.data() + head_off_, head_->param_count()), rng);
}

template <class T>
std::size_t CnnLstmNet<T>::scratch_count() const {
  // Work area: de, dh x2, dc x2.
  return s_work_ + static_cast<std::size_t>(feat_) + 4 * hidden_;
}

template <class T>
nlohmann::json CnnLstmNet<T>::describe() const {
  return {{"graph", "cnn-lstm"},
          {"steps", steps_},
          {"hidden", hidden_},
          {"encoder", encoder_->describe()},
          {"head", head_->describe()}};
}

template <class T>
const T* CnnLstmNet<T>::forward(const T* x, T* scratch) const {
  const std::size_t enc_scratch = encoder_->scratch_count();
  T* h = scratch + s_h_;
  T* c = scratch + s_c_;
  std::memset(h, 0, sizeof(T) * hidden_);
  std::memset(c, 0, sizeof(T) * hidden_);

  for (int t = 0; t < steps_; ++t) {
    T* enc_scr = scratch + s_enc_ + static_cast<std::size_t>(t) * enc_scratch;
    const T* e = encoder_->forward_with(
        x + static_cast<std::size_t>(t) * frame_count_, enc_scr, params_.data());
    cell_.step_forward(e, h + static_cast<std::size_t>(t) * hidden_,
                       c + static_cast<std::size_t>(t) * hidden_,
                       h + static_cast<std::size_t>(t + 1) * hidden_,
                       c + static_cast<std::size_t>(t + 1) * hidden_,
                       scratch + s_gates_ + static_cast<std::size_t>(t) * 4 * hidden_,
                       params_.data() + cell_off_);
  }
  return head_->forward_with(h + static_cast<std::size_t>(steps_) * hidden_,
                             scratch + s_head_, params_.data() + head_off_);
}

template <class T>
void CnnLstmNet<T>::backward(const T* x, const T* dy, T* scratch, T* dparams,
                             T* dx_input) const {
  const std::size_t enc_scratch = encoder_->scratch_count();
  const T* h = scratch + s_h_;
  const T* c = scratch + s_c_;
  T* de = scratch + s_work_;
  T* dh = de + feat_;
  T* dh_prev = dh + hidden_;
  T* dc = dh_prev + hidden_;
  T* dc_prev = dc + hidden_;

  head_->backward_with(h + static_cast<std::size_t>(steps_) * hidden_, dy,
                       scratch + s_head_, params_.data() + head_off_,
                       dparams + head_off_, dh);
  std::memset(dc, 0, sizeof(T) * hidden_);

  for (int t = steps_; t-- > 0;) {
    T* enc_scr = scratch + s_enc_ + static_cast<std::size_t>(t) * enc_scratch;
    const T* e = enc_scr + encoder_->output_offset();
    cell_.step_backward(e, h + static_cast<std::size_t>(t) * hidden_,
                        c + static_cast<std::size_t>(t) * hidden_,
                        c + static_cast<std::size_t>(t + 1) * hidden_,
                        scratch + s_gates_ + static_cast<std::size_t>(t) * 4 * hidden_,
                        dh, dc, de, dh_prev, dc_prev,
                        params_.data() + cell_off_, dparams + cell_off_);
    encoder_->backward_with(
        x + static_cast<std::size_t>(t) * frame_count_, de, enc_scr,
        params_.data(), dparams,
        dx_input ? dx_input + static_cast<std::size_t>(t) * frame_count_ : nullptr);
    std::swap(dh, dh_prev);
    std::swap(dc, dc_prev);
  }
}

template class SequentialNet<float>;
template class SequentialNet<double>;
template class CnnLstmNet<float>;
template class CnnLstmNet<double>;

} // namespace kin::nn
