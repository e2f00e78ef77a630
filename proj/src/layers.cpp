#include "layers.hpp"

#include "conv_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace kin::nn {

namespace {

template <class T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <class T>
void fan_in_uniform(std::span<T> w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w) {
    v = static_cast<T>(rng.uniform(-bound, bound));
  }
}

int conv_out_dim(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

} // namespace

template <class T>
void Layer<T>::init_params(std::span<T>, Rng&) const {}

template <class T>
nlohmann::json Layer<T>::describe() const {
  return {{"kind", kind()}, {"in", in_shape()}, {"out", out_shape()}};
}

// ---------------------------------------------------------------- Conv3d

template <class T>
Conv3d<T>::Conv3d(std::vector<int> in_shape, int out_channels, int kd, int kh,
                  int kw, int sd, int sh, int sw, int pd, int ph, int pw)
    : in_shape_(std::move(in_shape)),
      kd_(kd), kh_(kh), kw_(kw), sd_(sd), sh_(sh), sw_(sw),
      pd_(pd), ph_(ph), pw_(pw) {
  if (in_shape_.size() != 4) {
    throw std::invalid_argument("conv3d: input must be D x H x W x C");
  }
  if (out_channels < 1 || kd < 1 || kh < 1 || kw < 1 || sd < 1 || sh < 1 ||
      sw < 1 || pd < 0 || ph < 0 || pw < 0) {
    throw std::invalid_argument("conv3d: bad hyperparameters");
  }
  const int od = conv_out_dim(in_shape_[0], kd, sd, pd);
  const int oh = conv_out_dim(in_shape_[1], kh, sh, ph);
  const int ow = conv_out_dim(in_shape_[2], kw, sw, pw);
  if (od < 1 || oh < 1 || ow < 1 || kd > in_shape_[0] + 2 * pd ||
      kh > in_shape_[1] + 2 * ph || kw > in_shape_[2] + 2 * pw) {
    throw std::invalid_argument("conv3d: kernel does not fit padded input");
  }
  out_shape_ = {od, oh, ow, out_channels};
}

template <class T>
std::size_t Conv3d<T>::param_count() const {
  const std::size_t ci = static_cast<std::size_t>(in_shape_[3]);
  const std::size_t co = static_cast<std::size_t>(out_shape_[3]);
  return static_cast<std::size_t>(kd_) * kh_ * kw_ * ci * co + co;
}

template <class T>
void Conv3d<T>::init_params(std::span<T> params, Rng& rng) const {
  const std::size_t fan_in =
      static_cast<std::size_t>(kd_) * kh_ * kw_ * in_shape_[3];
  const std::size_t wcount = param_count() - out_shape_[3];
  fan_in_uniform(params.subspan(0, wcount), fan_in, rng);
  std::fill(params.begin() + wcount, params.end(), T(0));
}

template <class T>
nlohmann::json Conv3d<T>::describe() const {
  nlohmann::json j = Layer<T>::describe();
  j["kernel"] = {kd_, kh_, kw_};
  j["stride"] = {sd_, sh_, sw_};
  j["padding"] = {pd_, ph_, pw_};
  return j;
}

namespace {

// Zero-padded per-thread staging buffers remove every bounds branch from
// the convolution loops; the remaining inner loops are branch-free
// multiply-accumulate runs the compiler vectorizes.
template <class T>
std::vector<T>& conv_pad_buffer() {
  thread_local std::vector<T> buf;
  return buf;
}

template <class T>
std::vector<T>& conv_dx_buffer() {
  thread_local std::vector<T> buf;
  return buf;
}

} // namespace

template <class T>
void Conv3d<T>::forward(const T* x, T* y, const T* params) const {
  const int D = in_shape_[0], H = in_shape_[1], W = in_shape_[2], Ci = in_shape_[3];
  const int Co = out_shape_[3];
  const int PD = D + 2 * pd_, PH = H + 2 * ph_, PW = W + 2 * pw_;
  const T* bias = params + static_cast<std::size_t>(kd_) * kh_ * kw_ * Ci * Co;

  auto& padded = conv_pad_buffer<T>();
  padded.assign(static_cast<std::size_t>(PD) * PH * PW * Ci, T(0));
  for (int d = 0; d < D; ++d) {
    for (int h = 0; h < H; ++h) {
      std::memcpy(padded.data() +
                      ((static_cast<std::size_t>(d + pd_) * PH + (h + ph_)) * PW + pw_) * Ci,
                  x + (static_cast<std::size_t>(d) * H + h) * W * Ci,
                  sizeof(T) * static_cast<std::size_t>(W) * Ci);
    }
  }

  const detail::ConvDims dim{kd_, kh_, kw_, sd_, sh_, sw_,
                             out_shape_[0], out_shape_[1], out_shape_[2], Co, Ci,
                             PH, PW};
  switch (Co) {
    case 8: detail::conv_forward_kernel<8>(padded.data(), y, params, bias, dim); break;
    case 16: detail::conv_forward_kernel<16>(padded.data(), y, params, bias, dim); break;
    case 32: detail::conv_forward_kernel<32>(padded.data(), y, params, bias, dim); break;
    default: detail::conv_forward_kernel<0>(padded.data(), y, params, bias, dim); break;
  }
}

template <class T>
void Conv3d<T>::backward(const T* x, const T* /*y*/, const T* dy, T* dx,
                         const T* params, T* dparams) const {
  const int D = in_shape_[0], H = in_shape_[1], W = in_shape_[2], Ci = in_shape_[3];
  const int Co = out_shape_[3];
  const int PD = D + 2 * pd_, PH = H + 2 * ph_, PW = W + 2 * pw_;
  const std::size_t wcount = static_cast<std::size_t>(kd_) * kh_ * kw_ * Ci * Co;
  T* dbias = dparams + wcount;

  auto& padded = conv_pad_buffer<T>();
  padded.assign(static_cast<std::size_t>(PD) * PH * PW * Ci, T(0));
  for (int d = 0; d < D; ++d) {
    for (int h = 0; h < H; ++h) {
      std::memcpy(padded.data() +
                      ((static_cast<std::size_t>(d + pd_) * PH + (h + ph_)) * PW + pw_) * Ci,
                  x + (static_cast<std::size_t>(d) * H + h) * W * Ci,
                  sizeof(T) * static_cast<std::size_t>(W) * Ci);
    }
  }
  auto& dx_pad = conv_dx_buffer<T>();
  if (dx) {
    dx_pad.assign(padded.size(), T(0));
  }

  const detail::ConvDims dim{kd_, kh_, kw_, sd_, sh_, sw_,
                             out_shape_[0], out_shape_[1], out_shape_[2], Co, Ci,
                             PH, PW};
  T* dx_pad_ptr = dx ? dx_pad.data() : nullptr;
  switch (Co) {
    case 8:
      detail::conv_backward_kernel<8>(padded.data(), dy, dx_pad_ptr, params, dparams, dbias, dim);
      break;
    case 16:
      detail::conv_backward_kernel<16>(padded.data(), dy, dx_pad_ptr, params, dparams, dbias, dim);
      break;
    case 32:
      detail::conv_backward_kernel<32>(padded.data(), dy, dx_pad_ptr, params, dparams, dbias, dim);
      break;
    default:
      detail::conv_backward_kernel<0>(padded.data(), dy, dx_pad_ptr, params, dparams, dbias, dim);
      break;
  }

  if (dx) {
    for (int d = 0; d < D; ++d) {
      for (int h = 0; h < H; ++h) {
        std::memcpy(dx + (static_cast<std::size_t>(d) * H + h) * W * Ci,
                    dx_pad.data() +
                        ((static_cast<std::size_t>(d + pd_) * PH + (h + ph_)) * PW + pw_) * Ci,
                    sizeof(T) * static_cast<std::size_t>(W) * Ci);
      }
    }
  }
}

// -------------------------------------------------------------- MaxPool3d

template <class T>
MaxPool3d<T>::MaxPool3d(std::vector<int> in_shape, int kd, int kh, int kw)
    : in_shape_(std::move(in_shape)), kd_(kd), kh_(kh), kw_(kw) {
  if (in_shape_.size() != 4) {
    throw std::invalid_argument("maxpool3d: input must be D x H x W x C");
  }
  if (kd < 1 || kh < 1 || kw < 1 || in_shape_[0] < kd || in_shape_[1] < kh ||
      in_shape_[2] < kw) {
    throw std::invalid_argument("maxpool3d: window does not fit input");
  }
  out_shape_ = {in_shape_[0] / kd, in_shape_[1] / kh, in_shape_[2] / kw,
                in_shape_[3]};
}

template <class T>
nlohmann::json MaxPool3d<T>::describe() const {
  nlohmann::json j = Layer<T>::describe();
  j["kernel"] = {kd_, kh_, kw_};
  return j;
}

template <class T>
void MaxPool3d<T>::forward(const T* x, T* y, const T*) const {
  const int H = in_shape_[1], W = in_shape_[2], C = in_shape_[3];
  const int OD = out_shape_[0], OH = out_shape_[1], OW = out_shape_[2];
  for (int od = 0; od < OD; ++od) {
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        T* yp = y + ((static_cast<std::size_t>(od) * OH + oh) * OW + ow) * C;
        bool first = true;
        for (int kd = 0; kd < kd_; ++kd) {
          const int id = od * kd_ + kd;
          for (int kh = 0; kh < kh_; ++kh) {
            const int ih = oh * kh_ + kh;
            for (int kw = 0; kw < kw_; ++kw) {
              const int iw = ow * kw_ + kw;
              const T* xp =
                  x + (static_cast<std::size_t>(id) * H * W + static_cast<std::size_t>(ih) * W + iw) * C;
              if (first) {
                std::memcpy(yp, xp, sizeof(T) * C);
                first = false;
              } else {
                for (int c = 0; c < C; ++c) {
                  yp[c] = std::max(yp[c], xp[c]);
                }
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void MaxPool3d<T>::backward(const T* x, const T* y, const T* dy, T* dx,
                            const T*, T*) const {
  if (!dx) return;
  const int H = in_shape_[1], W = in_shape_[2], C = in_shape_[3];
  const int OD = out_shape_[0], OH = out_shape_[1], OW = out_shape_[2];
  std::memset(dx, 0, sizeof(T) * shape_numel(in_shape_));
  for (int od = 0; od < OD; ++od) {
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        const std::size_t ooff =
            ((static_cast<std::size_t>(od) * OH + oh) * OW + ow) * C;
        for (int c = 0; c < C; ++c) {
          const T target = y[ooff + c];
          // Route the gradient to the first window element equal to the max.
          bool routed = false;
          for (int kd = 0; kd < kd_ && !routed; ++kd) {
            const int id = od * kd_ + kd;
            for (int kh = 0; kh < kh_ && !routed; ++kh) {
              const int ih = oh * kh_ + kh;
              for (int kw = 0; kw < kw_ && !routed; ++kw) {
                const int iw = ow * kw_ + kw;
                const std::size_t ioff =
                    (static_cast<std::size_t>(id) * H * W +
                     static_cast<std::size_t>(ih) * W + iw) * C + c;
                if (x[ioff] == target) {
                  dx[ioff] += dy[ooff + c];
                  routed = true;
                }
              }
            }
          }
        }
      }
    }
  }
}

// ------------------------------------------------------------------ Dense

template <class T>
Dense<T>::Dense(int in_count, int out_count)
    : in_shape_{in_count}, out_shape_{out_count} {
  if (in_count < 1 || out_count < 1) {
    throw std::invalid_argument("dense: node counts must be positive");
  }
}

template <class T>
std::size_t Dense<T>::param_count() const {
  return static_cast<std::size_t>(in_shape_[0]) * out_shape_[0] + out_shape_[0];
}

template <class T>
void Dense<T>::init_params(std::span<T> params, Rng& rng) const {
  const std::size_t wcount =
      static_cast<std::size_t>(in_shape_[0]) * out_shape_[0];
  fan_in_uniform(params.subspan(0, wcount),
                 static_cast<std::size_t>(in_shape_[0]), rng);
  std::fill(params.begin() + wcount, params.end(), T(0));
}

template <class T>
nlohmann::json Dense<T>::describe() const {
  return Layer<T>::describe();
}

template <class T>
void Dense<T>::forward(const T* x, T* y, const T* params) const {
  const int I = in_shape_[0], O = out_shape_[0];
  const T* bias = params + static_cast<std::size_t>(I) * O;
  std::memcpy(y, bias, sizeof(T) * O);
  for (int i = 0; i < I; ++i) {
    const T xv = x[i];
    const T* wp = params + static_cast<std::size_t>(i) * O;
    for (int o = 0; o < O; ++o) {
      y[o] += xv * wp[o];
    }
  }
}

template <class T>
void Dense<T>::backward(const T* x, const T*, const T* dy, T* dx,
                        const T* params, T* dparams) const {
  const int I = in_shape_[0], O = out_shape_[0];
  T* dbias = dparams + static_cast<std::size_t>(I) * O;
  for (int o = 0; o < O; ++o) {
    dbias[o] += dy[o];
  }
  for (int i = 0; i < I; ++i) {
    const T xv = x[i];
    const T* wp = params + static_cast<std::size_t>(i) * O;
    T* dwp = dparams + static_cast<std::size_t>(i) * O;
    T s{};
    for (int o = 0; o < O; ++o) {
      dwp[o] += xv * dy[o];
      s += wp[o] * dy[o];
    }
    if (dx) dx[i] = s;
  }
}

// ------------------------------------------------------------------- Relu

template <class T>
nlohmann::json Relu<T>::describe() const {
  return Layer<T>::describe();
}

template <class T>
void Relu<T>::forward(const T* x, T* y, const T*) const {
  const std::size_t n = shape_numel(shape_);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = x[i] > T(0) ? x[i] : T(0);
  }
}

template <class T>
void Relu<T>::backward(const T* x, const T*, const T* dy, T* dx, const T*,
                       T*) const {
  if (!dx) return;
  const std::size_t n = shape_numel(shape_);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = x[i] > T(0) ? dy[i] : T(0);
  }
}

// ---------------------------------------------------------------- Softmax

template <class T>
nlohmann::json Softmax<T>::describe() const {
  return Layer<T>::describe();
}

template <class T>
void Softmax<T>::forward(const T* x, T* y, const T*) const {
  const int n = shape_[0];
  T mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  T sum{};
  for (int i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  const T inv = T(1) / sum;
  for (int i = 0; i < n; ++i) y[i] *= inv;
}

template <class T>
void Softmax<T>::backward(const T*, const T* y, const T* dy, T* dx, const T*,
                          T*) const {
  if (!dx) return;
  const int n = shape_[0];
  T inner{};
  for (int i = 0; i < n; ++i) inner += dy[i] * y[i];
  for (int i = 0; i < n; ++i) {
    dx[i] = y[i] * (dy[i] - inner);
  }
}

// ---------------------------------------------------------------- Flatten

template <class T>
nlohmann::json Flatten<T>::describe() const {
  return Layer<T>::describe();
}

template <class T>
void Flatten<T>::forward(const T* x, T* y, const T*) const {
  std::memcpy(y, x, sizeof(T) * shape_numel(in_shape_));
}

template <class T>
void Flatten<T>::backward(const T*, const T*, const T* dy, T* dx, const T*,
                          T*) const {
  if (!dx) return;
  std::memcpy(dx, dy, sizeof(T) * shape_numel(in_shape_));
}

// --------------------------------------------------------------- LstmCell

template <class T>
LstmCell<T>::LstmCell(int input_size, int hidden_size)
    : input_size_(input_size), hidden_(hidden_size) {
  if (input_size < 1 || hidden_size < 1) {
    throw std::invalid_argument("lstm: sizes must be positive");
  }
}

template <class T>
std::size_t LstmCell<T>::param_count() const {
  const std::size_t gh = static_cast<std::size_t>(4) * hidden_;
  return (static_cast<std::size_t>(input_size_) + hidden_) * gh + gh;
}

template <class T>
void LstmCell<T>::init_params(std::span<T> params, Rng& rng) const {
  const std::size_t gh = static_cast<std::size_t>(4) * hidden_;
  const std::size_t wx = static_cast<std::size_t>(input_size_) * gh;
  const std::size_t wh = static_cast<std::size_t>(hidden_) * gh;
  fan_in_uniform(params.subspan(0, wx), static_cast<std::size_t>(input_size_), rng);
  fan_in_uniform(params.subspan(wx, wh), static_cast<std::size_t>(hidden_), rng);
  std::fill(params.begin() + wx + wh, params.end(), T(0));
  // Forget-gate bias starts at 1 so early cells keep their memory.
  for (int h = 0; h < hidden_; ++h) {
    params[wx + wh + hidden_ + h] = T(1);
  }
}

template <class T>
void LstmCell<T>::step_forward(const T* x, const T* h_prev, const T* c_prev,
                               T* h_out, T* c_out, T* gates,
                               const T* params) const {
  const int H = hidden_;
  const int G = 4 * H;
  const T* wx = params;
  const T* wh = params + static_cast<std::size_t>(input_size_) * G;
  const T* bias = wh + static_cast<std::size_t>(H) * G;

  std::vector<T> pre(static_cast<std::size_t>(G));
  std::memcpy(pre.data(), bias, sizeof(T) * G);
  for (int i = 0; i < input_size_; ++i) {
    const T xv = x[i];
    const T* wp = wx + static_cast<std::size_t>(i) * G;
    for (int k = 0; k < G; ++k) pre[k] += xv * wp[k];
  }
  for (int h = 0; h < H; ++h) {
    const T hv = h_prev[h];
    const T* wp = wh + static_cast<std::size_t>(h) * G;
    for (int k = 0; k < G; ++k) pre[k] += hv * wp[k];
  }

  T* gi = gates;
  T* gf = gates + H;
  T* gg = gates + 2 * H;
  T* go = gates + 3 * H;
  for (int h = 0; h < H; ++h) {
    gi[h] = sigmoid(pre[h]);
    gf[h] = sigmoid(pre[H + h]);
    gg[h] = std::tanh(pre[2 * H + h]);
    go[h] = sigmoid(pre[3 * H + h]);
    c_out[h] = gf[h] * c_prev[h] + gi[h] * gg[h];
    h_out[h] = go[h] * std::tanh(c_out[h]);
  }
}

template <class T>
void LstmCell<T>::step_backward(const T* x, const T* h_prev, const T* c_prev,
                                const T* c_out, const T* gates, const T* dh,
                                const T* dc, T* dx, T* dh_prev, T* dc_prev,
                                const T* params, T* dparams) const {
  const int H = hidden_;
  const int G = 4 * H;
  const T* wx = params;
  const T* wh = params + static_cast<std::size_t>(input_size_) * G;
  const std::size_t wx_count = static_cast<std::size_t>(input_size_) * G;
  const std::size_t wh_count = static_cast<std::size_t>(H) * G;
  T* dwx = dparams;
  T* dwh = dparams + wx_count;
  T* dbias = dparams + wx_count + wh_count;

  const T* gi = gates;
  const T* gf = gates + H;
  const T* gg = gates + 2 * H;
  const T* go = gates + 3 * H;

  std::vector<T> dpre(static_cast<std::size_t>(G));
  for (int h = 0; h < H; ++h) {
    const T tc = std::tanh(c_out[h]);
    const T dct = dc[h] + dh[h] * go[h] * (T(1) - tc * tc);
    const T di = dct * gg[h];
    const T df = dct * c_prev[h];
    const T dg = dct * gi[h];
    const T do_ = dh[h] * tc;
    dpre[h] = di * gi[h] * (T(1) - gi[h]);
    dpre[H + h] = df * gf[h] * (T(1) - gf[h]);
    dpre[2 * H + h] = dg * (T(1) - gg[h] * gg[h]);
    dpre[3 * H + h] = do_ * go[h] * (T(1) - go[h]);
    dc_prev[h] = dct * gf[h];
  }

  for (int k = 0; k < G; ++k) {
    dbias[k] += dpre[k];
  }
  for (int i = 0; i < input_size_; ++i) {
    const T xv = x[i];
    const T* wp = wx + static_cast<std::size_t>(i) * G;
    T* dwp = dwx + static_cast<std::size_t>(i) * G;
    T s{};
    for (int k = 0; k < G; ++k) {
      dwp[k] += xv * dpre[k];
      s += wp[k] * dpre[k];
    }
    if (dx) dx[i] = s;
  }
  for (int h = 0; h < H; ++h) {
    const T hv = h_prev[h];
    const T* wp = wh + static_cast<std::size_t>(h) * G;
    T* dwp = dwh + static_cast<std::size_t>(h) * G;
    T s{};
    for (int k = 0; k < G; ++k) {
      dwp[k] += hv * dpre[k];
      s += wp[k] * dpre[k];
    }
    dh_prev[h] = s;
  }
}

template class Layer<float>;
template class Layer<double>;
template class Conv3d<float>;
template class Conv3d<double>;
template class MaxPool3d<float>;
template class MaxPool3d<double>;
template class Dense<float>;
template class Dense<double>;
template class Relu<float>;
template class Relu<double>;
template class Softmax<float>;
template class Softmax<double>;
template class Flatten<float>;
template class Flatten<double>;
template class LstmCell<float>;
template class LstmCell<double>;

} // namespace kin::nn
