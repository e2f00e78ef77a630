#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "crc32.hpp"
#include "metrics.hpp"

namespace kin::models {

namespace {

using nn::Conv3d;
using nn::Dense;
using nn::Flatten;
using nn::Layer;
using nn::MaxPool3d;
using nn::Relu;
using nn::SequentialNet;
using nn::Softmax;

constexpr int kTrunkChannels[4] = {8, 16, 32, 32};

template <class T>
void append_trunk(std::vector<std::unique_ptr<Layer<T>>>& layers,
                  std::vector<int>& shape) {
  for (int stage = 0; stage < 4; ++stage) {
    layers.push_back(std::make_unique<Conv3d<T>>(shape, kTrunkChannels[stage],
                                                 3, 3, 3, 1, 1, 1, 1, 1, 1));
    shape = layers.back()->out_shape();
    layers.push_back(std::make_unique<Relu<T>>(shape));
    const int kd = shape[0] >= 2 ? 2 : 1;
    const int kh = shape[1] >= 2 ? 2 : 1;
    const int kw = shape[2] >= 2 ? 2 : 1;
    layers.push_back(std::make_unique<MaxPool3d<T>>(shape, kd, kh, kw));
    shape = layers.back()->out_shape();
  }
}

void check_stack_dims(int d, int h, int w) {
  if (d < 1 || h < 8 || w < 8) {
    throw std::invalid_argument("model builder: input too small for the conv stack");
  }
}

template <class T, class NetT>
Model<T> finish(ModelKind kind, std::unique_ptr<NetT> net,
                data::Modality modality, data::ViewMode mode, int n,
                std::uint64_t seed) {
  Model<T> model;
  model.meta.kind = kind;
  model.meta.modality = modality;
  model.meta.mode = mode;
  model.meta.n = n;
  model.meta.input_dims = net->input_shape();
  model.meta.init_seed = seed;
  model.net = std::move(net);
  Rng rng(mix_seed(seed));
  model.net->init_params(rng);
  return model;
}

} // namespace

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::counter_conv3d: return "counter_conv3d";
    case ModelKind::counter_cnn_lstm: return "counter_cnn_lstm";
    case ModelKind::regressor: return "regressor";
    case ModelKind::end_to_end: return "end_to_end";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "counter_conv3d") return ModelKind::counter_conv3d;
  if (s == "counter_cnn_lstm") return ModelKind::counter_cnn_lstm;
  if (s == "regressor") return ModelKind::regressor;
  if (s == "end_to_end") return ModelKind::end_to_end;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

template <class T>
Model<T> build_counter_conv3d(int d, int h, int w, data::Modality modality,
                              data::ViewMode mode, std::uint64_t seed) {
  check_stack_dims(d, h, w);
  std::vector<std::unique_ptr<Layer<T>>> layers;
  std::vector<int> shape{d, h, w, 1};
  append_trunk(layers, shape);
  layers.push_back(std::make_unique<Flatten<T>>(shape));
  const int flat = layers.back()->out_shape()[0];
  layers.push_back(std::make_unique<Dense<T>>(flat, 128));
  layers.push_back(std::make_unique<Relu<T>>(std::vector<int>{128}));
  layers.push_back(std::make_unique<Dense<T>>(128, 6));
  layers.push_back(std::make_unique<Softmax<T>>(6));
  auto net = std::make_unique<SequentialNet<T>>(std::move(layers));
  return finish<T>(ModelKind::counter_conv3d, std::move(net), modality, mode, 0, seed);
}

template <class T>
Model<T> build_counter_cnn_lstm(int h, int w, int steps, data::Modality modality,
                                data::ViewMode mode, std::uint64_t seed) {
  check_stack_dims(steps, h, w);
  std::vector<std::unique_ptr<Layer<T>>> enc_layers;
  std::vector<int> shape{1, h, w, 1};
  const int enc_channels[3] = {8, 16, 32};
  for (int stage = 0; stage < 3; ++stage) {
    enc_layers.push_back(std::make_unique<Conv3d<T>>(shape, enc_channels[stage],
                                                     1, 3, 3, 1, 1, 1, 0, 1, 1));
    shape = enc_layers.back()->out_shape();
    enc_layers.push_back(std::make_unique<Relu<T>>(shape));
    enc_layers.push_back(std::make_unique<MaxPool3d<T>>(shape, 1, 2, 2));
    shape = enc_layers.back()->out_shape();
  }
  enc_layers.push_back(std::make_unique<Flatten<T>>(shape));
  const int flat = enc_layers.back()->out_shape()[0];
  enc_layers.push_back(std::make_unique<Dense<T>>(flat, 64));
  enc_layers.push_back(std::make_unique<Relu<T>>(std::vector<int>{64}));
  auto encoder = std::make_unique<SequentialNet<T>>(std::move(enc_layers));

  std::vector<std::unique_ptr<Layer<T>>> head_layers;
  head_layers.push_back(std::make_unique<Dense<T>>(64, 6));
  head_layers.push_back(std::make_unique<Softmax<T>>(6));
  auto head = std::make_unique<SequentialNet<T>>(std::move(head_layers));

  auto net = std::make_unique<nn::CnnLstmNet<T>>(steps, std::move(encoder), 64,
                                                 std::move(head));
  return finish<T>(ModelKind::counter_cnn_lstm, std::move(net), modality, mode, 0, seed);
}

template <class T>
Model<T> build_length_regressor(int n, int d, int h, int w, data::Modality modality,
                                data::ViewMode mode, std::uint64_t seed) {
  if (n < chain::kMinMovingLinks || n > chain::kMaxMovingLinks) {
    throw std::invalid_argument("build_length_regressor: n out of range [1,6]");
  }
  check_stack_dims(d, h, w);
  std::vector<std::unique_ptr<Layer<T>>> layers;
  std::vector<int> shape{d, h, w, 1};
  append_trunk(layers, shape);
  layers.push_back(std::make_unique<Flatten<T>>(shape));
  const int flat = layers.back()->out_shape()[0];
  layers.push_back(std::make_unique<Dense<T>>(flat, 512));
  layers.push_back(std::make_unique<Relu<T>>(std::vector<int>{512}));
  layers.push_back(std::make_unique<Dense<T>>(512, 512));
  layers.push_back(std::make_unique<Dense<T>>(512, n + 1));
  auto net = std::make_unique<SequentialNet<T>>(std::move(layers));
  return finish<T>(ModelKind::regressor, std::move(net), modality, mode, n, seed);
}

template <class T>
Model<T> build_end_to_end(int d, int h, int w, data::Modality modality,
                          data::ViewMode mode, std::uint64_t seed) {
  check_stack_dims(d, h, w);
  std::vector<std::unique_ptr<Layer<T>>> layers;
  std::vector<int> shape{d, h, w, 1};
  append_trunk(layers, shape);
  layers.push_back(std::make_unique<Flatten<T>>(shape));
  const int flat = layers.back()->out_shape()[0];
  layers.push_back(std::make_unique<Dense<T>>(flat, 512));
  layers.push_back(std::make_unique<Relu<T>>(std::vector<int>{512}));
  layers.push_back(std::make_unique<Dense<T>>(512, 512));
  layers.push_back(std::make_unique<Dense<T>>(512, 7));
  auto net = std::make_unique<SequentialNet<T>>(std::move(layers));
  return finish<T>(ModelKind::end_to_end, std::move(net), modality, mode, 0, seed);
}

template Model<float> build_counter_conv3d<float>(int, int, int, data::Modality,
                                                  data::ViewMode, std::uint64_t);
template Model<double> build_counter_conv3d<double>(int, int, int, data::Modality,
                                                    data::ViewMode, std::uint64_t);
template Model<float> build_counter_cnn_lstm<float>(int, int, int, data::Modality,
                                                    data::ViewMode, std::uint64_t);
template Model<double> build_counter_cnn_lstm<double>(int, int, int, data::Modality,
                                                      data::ViewMode, std::uint64_t);
template Model<float> build_length_regressor<float>(int, int, int, int, data::Modality,
                                                    data::ViewMode, std::uint64_t);
template Model<double> build_length_regressor<double>(int, int, int, int, data::Modality,
                                                      data::ViewMode, std::uint64_t);
template Model<float> build_end_to_end<float>(int, int, int, data::Modality,
                                              data::ViewMode, std::uint64_t);
template Model<double> build_end_to_end<double>(int, int, int, data::Modality,
                                                data::ViewMode, std::uint64_t);

namespace {

// Per-model target view into a stack item.
void fill_target(const Modelf& model, const data::StackSet::Item& item,
                 std::vector<float>& target) {
  const int out = model.net->output_count();
  target.assign(static_cast<std::size_t>(out), 0.0f);
  switch (model.meta.kind) {
    case ModelKind::counter_conv3d:
    case ModelKind::counter_cnn_lstm:
      target[static_cast<std::size_t>(item.n - 1)] = 1.0f;
      break;
    case ModelKind::regressor:
      for (int i = 0; i <= model.meta.n; ++i) {
        target[static_cast<std::size_t>(i)] = item.target7[static_cast<std::size_t>(i)];
      }
      break;
    case ModelKind::end_to_end:
      for (int i = 0; i < 7; ++i) {
        target[static_cast<std::size_t>(i)] = item.target7[static_cast<std::size_t>(i)];
      }
      break;
  }
}

double eval_metric(const Modelf& model, const data::StackSet& set, ThreadPool& pool);

} // namespace

TrainResult train(Modelf& model, const data::StackSet& train_set,
                  const data::StackSet* val_set, const TrainConfig& cfg,
                  ThreadPool& pool) {
  if (train_set.items.empty()) {
    throw std::invalid_argument("train: empty training set");
  }
  if (cfg.epochs < 0 || cfg.batch < 1 || cfg.lr < 0.0) {
    throw std::invalid_argument("train: bad config");
  }
  const std::size_t input_count = model.net->input_count();
  if (train_set.stack_size() != input_count) {
    throw std::invalid_argument("train: stack size does not match model input");
  }
  const bool counter = model.loss_kind() == nn::LossKind::cross_entropy;

  const std::size_t pcount = model.net->param_count();
  const int slots = pool.size();
  const int batch = cfg.batch;

  std::vector<std::vector<float>> scratch(static_cast<std::size_t>(slots));
  for (auto& s : scratch) s.resize(model.net->scratch_count());
  std::vector<std::vector<float>> sample_grads(static_cast<std::size_t>(batch));
  for (auto& g : sample_grads) g.assign(pcount, 0.0f);
  std::vector<std::vector<float>> sample_targets(static_cast<std::size_t>(batch));
  std::vector<std::vector<float>> sample_dout(static_cast<std::size_t>(batch));
  const int out_count = model.net->output_count();
  for (auto& d : sample_dout) d.resize(static_cast<std::size_t>(out_count));
  std::vector<double> sample_loss(static_cast<std::size_t>(batch));

  std::vector<float> grads(pcount);
  double lr = cfg.lr;
  auto optimizer = nn::make_optimizer<float>(cfg.optimizer, lr, cfg.momentum);

  Rng shuffle_rng(mix_seed(cfg.seed ^ 0x5eedf00dULL));
  std::vector<std::size_t> order(train_set.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const bool rotate_views =
      cfg.augment_views && train_set.mode == data::ViewMode::multiview &&
      train_set.d > 1;
  const std::size_t view_count = static_cast<std::size_t>(train_set.d);
  const std::size_t view_size =
      static_cast<std::size_t>(train_set.h) * train_set.w;
  std::vector<std::vector<float>> rotated(static_cast<std::size_t>(batch));
  if (rotate_views) {
    for (auto& r : rotated) r.resize(input_count);
  }
  std::vector<std::size_t> rotations(static_cast<std::size_t>(batch), 0);

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t bsz = std::min<std::size_t>(batch, order.size() - start);
      const float inv_batch = 1.0f / static_cast<float>(bsz);
      if (rotate_views) {
        // Drawn outside the parallel region so the stream is independent of
        // the pool size.
        for (std::size_t b = 0; b < bsz; ++b) {
          rotations[b] = shuffle_rng.uniform_index(view_count);
        }
      }

      pool.parallel_for(bsz, [&](std::size_t b, int slot) {
        const auto& item = train_set.items[order[start + b]];
        const float* input = item.data.data();
        if (rotate_views && rotations[b] != 0) {
          float* dst = rotated[b].data();
          for (std::size_t v = 0; v < view_count; ++v) {
            const std::size_t src = (v + rotations[b]) % view_count;
            std::memcpy(dst + v * view_size, input + src * view_size,
                        view_size * sizeof(float));
          }
          input = dst;
        }
        auto& gbuf = sample_grads[b];
        std::memset(gbuf.data(), 0, gbuf.size() * sizeof(float));
        const float* out =
            model.net->forward(input, scratch[static_cast<std::size_t>(slot)].data());
        fill_target(model, item, sample_targets[b]);
        sample_loss[b] = nn::loss_sample<float>(
            model.loss_kind(), {out, static_cast<std::size_t>(out_count)},
            {sample_targets[b].data(), static_cast<std::size_t>(out_count)},
            {sample_dout[b].data(), static_cast<std::size_t>(out_count)}, inv_batch);
        model.net->backward(input, sample_dout[b].data(),
                            scratch[static_cast<std::size_t>(slot)].data(), gbuf.data());
      });

      // Fixed-order reduction keeps training reproducible across pool sizes.
      std::memcpy(grads.data(), sample_grads[0].data(), pcount * sizeof(float));
      for (std::size_t b = 1; b < bsz; ++b) {
        const float* src = sample_grads[b].data();
        float* dst = grads.data();
        for (std::size_t p = 0; p < pcount; ++p) dst[p] += src[p];
      }
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < bsz; ++b) batch_loss += sample_loss[b];
      batch_loss /= static_cast<double>(bsz);
      if (!std::isfinite(batch_loss)) {
        throw nn::NonFiniteError("train: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      epoch_loss += batch_loss * static_cast<double>(bsz);
      seen += bsz;

      if (cfg.lr > 0.0) {
        optimizer->step(model.net->params(), grads);
      }
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = epoch_loss / static_cast<double>(seen);
    row.val_metric = val_set ? eval_metric(model, *val_set, pool) : 0.0;
    result.history.push_back(row);
    model.meta.trained_epochs = epoch;
    if (cfg.on_epoch) cfg.on_epoch(row);

    if (val_set && cfg.val_target >= 0.0) {
      const bool reached = counter ? row.val_metric >= cfg.val_target
                                   : row.val_metric <= cfg.val_target;
      if (reached) break;
    }
    if (cfg.lr_decay_every > 0 && epoch % cfg.lr_decay_every == 0) {
      lr *= cfg.lr_decay;
      optimizer->set_lr(lr);
    }
  }
  return result;
}

namespace {

double eval_metric(const Modelf& model, const data::StackSet& set, ThreadPool& pool) {
  if (set.items.empty()) return 0.0;
  const bool counter = model.loss_kind() == nn::LossKind::cross_entropy;
  const int slots = pool.size();
  std::vector<std::vector<float>> scratch(static_cast<std::size_t>(slots));
  for (auto& s : scratch) s.resize(model.net->scratch_count());
  std::vector<double> per_item(set.items.size());

  pool.parallel_for(set.items.size(), [&](std::size_t i, int slot) {
    const auto& item = set.items[i];
    const float* out =
        model.net->forward(item.data.data(), scratch[static_cast<std::size_t>(slot)].data());
    if (counter) {
      const int pred =
          argmax_class({out, static_cast<std::size_t>(model.net->output_count())});
      per_item[i] = pred == item.n ? 1.0 : 0.0;
    } else {
      std::array<double, 7> pred{};
      const int outs = model.net->output_count();
      for (int k = 0; k < outs && k < 7; ++k) pred[static_cast<std::size_t>(k)] = out[k];
      std::array<double, 7> truth{};
      for (int k = 0; k < 7; ++k) truth[static_cast<std::size_t>(k)] = item.target7[static_cast<std::size_t>(k)];
      per_item[i] = eval::length_error(truth, pred);
    }
  });

  double sum = 0.0;
  for (const double v : per_item) sum += v;
  return sum / static_cast<double>(set.items.size());
}

} // namespace

void write_history_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_history_csv: cannot open " + path);
  }
  out << "epoch,train_loss,val_metric\n";
  for (const auto& row : result.history) {
    out << row.epoch << "," << row.train_loss << "," << row.val_metric << "\n";
  }
}

void save_checkpoint(const Modelf& model, const std::string& path) {
  nlohmann::json header = {{"format_version", 1},
                           {"kind", to_string(model.meta.kind)},
                           {"modality", data::to_string(model.meta.modality)},
                           {"mode", data::to_string(model.meta.mode)},
                           {"n", model.meta.n},
                           {"input_dims", model.meta.input_dims},
                           {"init_seed", model.meta.init_seed},
                           {"epochs", model.meta.trained_epochs},
                           {"param_count", model.net->param_count()},
                           {"graph", model.net->describe()}};
  const std::string header_text = header.dump();

  std::vector<unsigned char> blob;
  blob.reserve(12 + header_text.size() + model.net->param_count() * 4);
  const char magic[4] = {'K', 'N', 'N', '1'};
  blob.insert(blob.end(), magic, magic + 4);
  const std::uint32_t hlen = static_cast<std::uint32_t>(header_text.size());
  for (int i = 0; i < 4; ++i) {
    blob.push_back(static_cast<unsigned char>((hlen >> (8 * i)) & 0xff));
  }
  blob.insert(blob.end(), header_text.begin(), header_text.end());
  const auto params = model.net->params();
  const std::size_t off = blob.size();
  blob.resize(off + params.size() * 4);
  std::memcpy(blob.data() + off, params.data(), params.size() * 4);
  const std::uint32_t crc = crc32(blob.data(), blob.size());
  for (int i = 0; i < 4; ++i) {
    blob.push_back(static_cast<unsigned char>((crc >> (8 * i)) & 0xff));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("save_checkpoint: cannot open " + path);
  }
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
  if (!out) {
    throw std::runtime_error("save_checkpoint: write failed for " + path);
  }
}

Modelf load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_checkpoint: cannot open " + path);
  }
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (blob.size() < 12 || std::memcmp(blob.data(), "KNN1", 4) != 0) {
    throw std::runtime_error("load_checkpoint: not a KNN1 file: " + path);
  }
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, blob.data() + blob.size() - 4, 4);
  if (crc32(blob.data(), blob.size() - 4) != stored_crc) {
    throw std::runtime_error("load_checkpoint: checksum mismatch in " + path);
  }
  std::uint32_t hlen = 0;
  std::memcpy(&hlen, blob.data() + 4, 4);
  if (8 + static_cast<std::size_t>(hlen) + 4 > blob.size()) {
    throw std::runtime_error("load_checkpoint: corrupt header in " + path);
  }
  const nlohmann::json header =
      nlohmann::json::parse(blob.begin() + 8, blob.begin() + 8 + hlen);

  const ModelKind kind = model_kind_from_string(header.at("kind").get<std::string>());
  const auto modality = data::modality_from_string(header.at("modality").get<std::string>());
  const auto mode = data::view_mode_from_string(header.at("mode").get<std::string>());
  const int n = header.at("n").get<int>();
  const auto dims = header.at("input_dims").get<std::vector<int>>();
  const std::uint64_t seed = header.at("init_seed").get<std::uint64_t>();
  if (dims.size() != 4) {
    throw std::runtime_error("load_checkpoint: bad input dims in " + path);
  }

  Modelf model;
  switch (kind) {
    case ModelKind::counter_conv3d:
      model = build_counter_conv3d<float>(dims[0], dims[1], dims[2], modality, mode, seed);
      break;
    case ModelKind::counter_cnn_lstm:
      model = build_counter_cnn_lstm<float>(dims[1], dims[2], dims[0], modality, mode, seed);
      break;
    case ModelKind::regressor:
      model = build_length_regressor<float>(n, dims[0], dims[1], dims[2], modality, mode, seed);
      break;
    case ModelKind::end_to_end:
      model = build_end_to_end<float>(dims[0], dims[1], dims[2], modality, mode, seed);
      break;
  }
  model.meta.trained_epochs = header.at("epochs").get<int>();

  const std::size_t pcount = header.at("param_count").get<std::size_t>();
  if (pcount != model.net->param_count() ||
      8 + hlen + pcount * 4 + 4 != blob.size()) {
    throw std::runtime_error("load_checkpoint: parameter payload mismatch in " + path);
  }
  std::memcpy(model.net->params().data(), blob.data() + 8 + hlen, pcount * 4);
  return model;
}

int argmax_class(std::span<const float> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<int>(best) + 1;
}

std::span<const float> Predictor::forward(const float* stack) {
  if (scratch_.size() < model_->net->scratch_count()) {
    scratch_.resize(model_->net->scratch_count());
  }
  const float* out = model_->net->forward(stack, scratch_.data());
  return {out, static_cast<std::size_t>(model_->net->output_count())};
}

NaivePrediction predict_naive_combination(const Modelf& counter,
                                          const std::array<const Modelf*, 6>& regressors,
                                          const float* stack) {
  Predictor counter_pred(counter);
  const auto probs = counter_pred.forward(stack);
  NaivePrediction result;
  result.n_hat = argmax_class(probs);
  const Modelf* regressor = regressors[static_cast<std::size_t>(result.n_hat - 1)];
  if (!regressor) {
    throw std::logic_error("predict_naive_combination: missing regressor for n=" +
                           std::to_string(result.n_hat));
  }
  Predictor reg_pred(*regressor);
  const auto lengths = reg_pred.forward(stack);
  std::vector<double> raw(lengths.begin(), lengths.end());
  result.padded = eval::pad_prediction(result.n_hat, raw);
  return result;
}

} // namespace kin::models
