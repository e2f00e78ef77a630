#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "dataset.hpp"
#include "loss.hpp"
#include "net.hpp"
#include "optim.hpp"
#include "threadpool.hpp"

namespace kin::models {

enum class ModelKind { counter_conv3d, counter_cnn_lstm, regressor, end_to_end };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelMeta {
  ModelKind kind = ModelKind::counter_conv3d;
  data::Modality modality = data::Modality::depth;
  data::ViewMode mode = data::ViewMode::multiview;
  int n = 0;                    // regressors only: the link count they serve
  std::vector<int> input_dims;  // {D, H, W, 1}
  std::uint64_t init_seed = 0;
  int trained_epochs = 0;
};

template <class T>
struct Model {
  ModelMeta meta;
  std::unique_ptr<nn::Network<T>> net;

  nn::LossKind loss_kind() const {
    return meta.kind == ModelKind::counter_conv3d ||
                   meta.kind == ModelKind::counter_cnn_lstm
               ? nn::LossKind::cross_entropy
               : nn::LossKind::sse;
  }
};

using Modelf = Model<float>;
using Modeld = Model<double>;

// Four-stage conv trunk (3x3x3 kernels, channels 8/16/32/32, stride 1, same
// padding, 2x2x2 max pools that drop to 1 along exhausted axes), shared by
// the conv3d counter, the per-n regressors, and the end-to-end model.
template <class T>
Model<T> build_counter_conv3d(int d, int h, int w, data::Modality modality,
                              data::ViewMode mode, std::uint64_t seed);

// Shared conv2d frame encoder (channels 8/16/32, dense 64) feeding a 64-unit
// LSTM unrolled over the stack axis; classification head on the final state.
template <class T>
Model<T> build_counter_cnn_lstm(int h, int w, int steps, data::Modality modality,
                                data::ViewMode mode, std::uint64_t seed);

// Conv trunk + FC1 512 relu, FC2 512 linear, FC3 (n+1) linear.
template <class T>
Model<T> build_length_regressor(int n, int d, int h, int w, data::Modality modality,
                                data::ViewMode mode, std::uint64_t seed);

// Conv trunk + FC head with 7 linear outputs, trained against the padded
// length label.
template <class T>
Model<T> build_end_to_end(int d, int h, int w, data::Modality modality,
                          data::ViewMode mode, std::uint64_t seed);

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;  // accuracy (counters) or mean error (regression)
};

struct TrainConfig {
  int epochs = 30;
  int batch = 16;
  double lr = 1e-3;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  // Stop once the validation metric clears this bar (accuracy >= for
  // counters, mean error <= for regression); negative disables.
  double val_target = -1.0;
  // Step schedule: lr multiplies by lr_decay every lr_decay_every epochs
  // (0 disables).
  double lr_decay = 0.3;
  int lr_decay_every = 0;
  // Multiview stacks only: present each sample with a random cyclic shift
  // of the view axis. The rig is an even ring, so the shifted stack is the
  // same chain seen from a rotated start camera; the label is unchanged.
  bool augment_views = false;
  std::function<void(const EpochRow&)> on_epoch;  // optional progress hook
};

struct TrainResult {
  std::vector<EpochRow> history;
};

// Mini-batch training. Deterministic in (seed, data order, config) for any
// pool size: per-sample gradients are reduced in sample order.
TrainResult train(Modelf& model, const data::StackSet& train_set,
                  const data::StackSet* val_set, const TrainConfig& cfg,
                  ThreadPool& pool);

void write_history_csv(const TrainResult& result, const std::string& path);

// Checkpoint blob: "KNN1" | u32 header bytes | JSON header | float32
// parameters | u32 CRC-32 of all preceding bytes.
void save_checkpoint(const Modelf& model, const std::string& path);
Modelf load_checkpoint(const std::string& path);

// argmax class (1..6) with ties broken toward the smallest index.
int argmax_class(std::span<const float> probs);

// Batched prediction helpers; scratch grows as needed.
class Predictor {
public:
  explicit Predictor(const Modelf& model) : model_(&model) {}
  std::span<const float> forward(const float* stack);

private:
  const Modelf* model_;
  std::vector<float> scratch_;
};

struct NaivePrediction {
  int n_hat = 0;
  std::array<double, 7> padded{};
};

// Two-stage pipeline: counter picks n_hat, the matching regressor runs, and
// its outputs are zero-padded to 7 entries above index n_hat.
NaivePrediction predict_naive_combination(const Modelf& counter,
                                          const std::array<const Modelf*, 6>& regressors,
                                          const float* stack);

} // namespace kin::models
