#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "models.hpp"

using namespace kin;
using namespace kin::models;

TEST_SUITE_BEGIN("models");

namespace {

// Small synthetic stack set: the "image" content is a deterministic pattern
// keyed by the instance label, so counters can memorize it quickly.
data::StackSet toy_stack_set(int d, int h, int w, int per_n, std::uint64_t seed) {
  data::StackSet set;
  set.mode = data::ViewMode::multiview;
  set.modality = data::Modality::depth;
  set.d = d;
  set.h = h;
  set.w = w;
  Rng rng(mix_seed(seed));
  for (int n = 1; n <= 6; ++n) {
    for (int k = 0; k < per_n; ++k) {
      data::StackSet::Item item;
      item.n = n;
      item.target7.fill(0.0f);
      double total = 0.0;
      for (int i = 0; i <= n; ++i) {
        item.target7[static_cast<std::size_t>(i)] =
            static_cast<float>(0.3 + 0.1 * n + 0.02 * i);
        total += item.target7[static_cast<std::size_t>(i)];
      }
      (void)total;
      item.data.resize(static_cast<std::size_t>(d) * h * w);
      for (std::size_t i = 0; i < item.data.size(); ++i) {
        const double base = 0.1 * n + 0.01 * static_cast<double>(i % 7);
        item.data[i] = static_cast<float>(base + 0.02 * rng.uniform01());
      }
      set.items.push_back(std::move(item));
    }
  }
  return set;
}

} // namespace

TEST_CASE("conv3d counter emits softmax rows over six classes") {
  auto model = build_counter_conv3d<float>(8, 48, 64, data::Modality::depth,
                                           data::ViewMode::multiview, 1);
  CHECK(model.net->output_count() == 6);
  CHECK(model.net->input_shape() == std::vector<int>{8, 48, 64, 1});

  std::vector<float> scratch(model.net->scratch_count());
  Rng rng(4);
  for (int b = 0; b < 4; ++b) {
    std::vector<float> input(model.net->input_count());
    for (auto& v : input) v = static_cast<float>(rng.uniform01());
    const float* out = model.net->forward(input.data(), scratch.data());
    double sum = 0.0;
    for (int i = 0; i < 6; ++i) {
      CHECK(out[i] >= 0.0f);
      sum += out[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("conv3d counter parameter count stays under two million") {
  auto mv = build_counter_conv3d<float>(8, 96, 128, data::Modality::depth,
                                        data::ViewMode::multiview, 1);
  INFO("multiview parameters: ", mv.net->param_count());
  CHECK(mv.net->param_count() < 2'000'000);

  // The depth axis drives the flattened dense width, so a deeper stack has
  // strictly more parameters at equal channel widths.
  auto tmp = build_counter_conv3d<float>(100, 96, 128, data::Modality::depth,
                                         data::ViewMode::temporal, 1);
  CHECK(tmp.net->param_count() < 2'000'000);
  CHECK(mv.net->param_count() < tmp.net->param_count());
}

TEST_CASE("builders reject undersized inputs") {
  CHECK_THROWS_AS(build_counter_conv3d<float>(8, 4, 4, data::Modality::depth,
                                              data::ViewMode::multiview, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_length_regressor<float>(0, 8, 48, 64, data::Modality::depth,
                                                data::ViewMode::multiview, 1),
                  std::invalid_argument);
}

TEST_CASE("cnn-lstm counter parameter count is independent of sequence length") {
  auto short_seq = build_counter_cnn_lstm<float>(48, 64, 8, data::Modality::depth,
                                                 data::ViewMode::multiview, 1);
  auto long_seq = build_counter_cnn_lstm<float>(48, 64, 100, data::Modality::depth,
                                                data::ViewMode::temporal, 1);
  CHECK(short_seq.net->param_count() == long_seq.net->param_count());

  std::vector<float> scratch(short_seq.net->scratch_count());
  std::vector<float> input(short_seq.net->input_count(), 0.25f);
  const float* out = short_seq.net->forward(input.data(), scratch.data());
  double sum = 0.0;
  for (int i = 0; i < 6; ++i) sum += out[i];
  CHECK(std::abs(sum - 1.0) <= 1e-6);
}

TEST_CASE("builder shapes do not depend on the seed or class labels") {
  auto a = build_counter_conv3d<float>(8, 48, 64, data::Modality::depth,
                                       data::ViewMode::multiview, 1);
  auto b = build_counter_conv3d<float>(8, 48, 64, data::Modality::gray,
                                       data::ViewMode::multiview, 999);
  CHECK(a.net->param_count() == b.net->param_count());
  CHECK(a.net->describe() == b.net->describe());
}

TEST_CASE("regressor heads are 512/512/(n+1)") {
  for (int n = 1; n <= 6; ++n) {
    auto model = build_length_regressor<float>(n, 8, 48, 64, data::Modality::depth,
                                               data::ViewMode::multiview, 1);
    CHECK(model.net->output_count() == n + 1);
    CHECK(model.meta.n == n);
    const auto graph = model.net->describe();
    const auto& layers = graph.at("layers");
    const std::size_t count = layers.size();
    // ... flatten, dense 512, relu, dense 512, dense n+1
    CHECK(layers.at(count - 3).at("out") == std::vector<int>{512});
    CHECK(layers.at(count - 2).at("out") == std::vector<int>{512});
    CHECK(layers.at(count - 1).at("out") == std::vector<int>{n + 1});
  }
}

TEST_CASE("end-to-end model always outputs seven lengths") {
  auto model = build_end_to_end<float>(8, 48, 64, data::Modality::depth,
                                       data::ViewMode::multiview, 1);
  CHECK(model.net->output_count() == 7);
  auto tmp = build_end_to_end<float>(100, 48, 64, data::Modality::depth,
                                     data::ViewMode::temporal, 1);
  CHECK(tmp.net->output_count() == 7);
}

TEST_CASE("all four builders pass a reduced-size gradient check") {
  // 64-bit instantiations on small inputs; the acceptance suite runs the
  // full-size version of this check.
  struct Case {
    const char* name;
    Modeld model;
  };
  std::vector<Case> cases;
  cases.push_back({"conv3d", build_counter_conv3d<double>(4, 12, 16, data::Modality::depth,
                                                          data::ViewMode::multiview, 3)});
  cases.push_back({"cnn-lstm", build_counter_cnn_lstm<double>(12, 16, 8, data::Modality::depth,
                                                              data::ViewMode::multiview, 3)});
  cases.push_back({"regressor", build_length_regressor<double>(3, 4, 12, 16,
                                                               data::Modality::depth,
                                                               data::ViewMode::multiview, 3)});
  cases.push_back({"e2e", build_end_to_end<double>(4, 12, 16, data::Modality::depth,
                                                   data::ViewMode::multiview, 3)});
  Rng rng(2718);
  for (auto& c : cases) {
    CAPTURE(c.name);
    std::vector<double> input(c.model.net->input_count());
    for (auto& v : input) v = rng.uniform(0.0, 1.0);
    std::vector<double> target(static_cast<std::size_t>(c.model.net->output_count()), 0.0);
    if (c.model.loss_kind() == nn::LossKind::cross_entropy) {
      target[4] = 1.0;
    } else {
      for (auto& v : target) v = rng.uniform(0.2, 1.0);
    }
    const auto result = nn::grad_check(*c.model.net, input.data(), c.model.loss_kind(),
                                       target.data(), 1e-3, 80, 99);
    INFO("max relative error: ", result.max_rel_err);
    CHECK(result.max_rel_err <= 1e-4);
  }
}

TEST_CASE("training with lr=0 leaves parameters bit-identical") {
  auto model = build_counter_conv3d<float>(4, 12, 16, data::Modality::depth,
                                           data::ViewMode::multiview, 7);
  const std::vector<float> before(model.net->params().begin(),
                                  model.net->params().end());
  const auto set = toy_stack_set(4, 12, 16, 2, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch = 4;
  cfg.lr = 0.0;
  ThreadPool pool(2);
  const auto result = train(model, set, &set, cfg, pool);
  const auto after = model.net->params();
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    CHECK(after[i] == before[i]);
  }
  REQUIRE(result.history.size() == 2);
  CHECK(result.history[0].train_loss == doctest::Approx(result.history[1].train_loss));
}

TEST_CASE("training is deterministic for a fixed seed and any pool size") {
  const auto set = toy_stack_set(4, 12, 16, 3, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch = 5;
  cfg.lr = 1e-3;
  cfg.seed = 42;

  auto run = [&](int threads) {
    auto model = build_counter_conv3d<float>(4, 12, 16, data::Modality::depth,
                                             data::ViewMode::multiview, 7);
    ThreadPool pool(threads);
    const auto result = train(model, set, nullptr, cfg, pool);
    return std::make_pair(result,
                          std::vector<float>(model.net->params().begin(),
                                             model.net->params().end()));
  };
  const auto [h1, p1] = run(1);
  const auto [h2, p2] = run(2);
  REQUIRE(h1.history.size() == h2.history.size());
  for (std::size_t i = 0; i < h1.history.size(); ++i) {
    CHECK(h1.history[i].train_loss == h2.history[i].train_loss);
  }
  CHECK(p1 == p2);
}

TEST_CASE("view-rotation augmentation keeps training deterministic") {
  const auto set = toy_stack_set(4, 12, 16, 3, 9);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch = 5;
  cfg.lr = 1e-3;
  cfg.seed = 11;
  cfg.augment_views = true;

  auto run = [&](int threads) {
    auto model = build_counter_conv3d<float>(4, 12, 16, data::Modality::depth,
                                             data::ViewMode::multiview, 7);
    ThreadPool pool(threads);
    const auto result = train(model, set, &set, cfg, pool);
    return std::make_pair(result.history.back().train_loss,
                          std::vector<float>(model.net->params().begin(),
                                             model.net->params().end()));
  };
  const auto [l1, p1] = run(1);
  const auto [l2, p2] = run(2);
  CHECK(l1 == l2);
  CHECK(p1 == p2);

  // Rotation changes the sample stream: same seed, different params than
  // the unaugmented run.
  cfg.augment_views = false;
  auto model = build_counter_conv3d<float>(4, 12, 16, data::Modality::depth,
                                           data::ViewMode::multiview, 7);
  ThreadPool pool(2);
  train(model, set, &set, cfg, pool);
  const std::vector<float> plain(model.net->params().begin(),
                                 model.net->params().end());
  CHECK(plain != p1);
}

TEST_CASE("a small counter memorizes a toy training set") {
  auto model = build_counter_conv3d<float>(4, 12, 16, data::Modality::depth,
                                           data::ViewMode::multiview, 11);
  const auto set = toy_stack_set(4, 12, 16, 3, 5);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch = 6;
  cfg.lr = 2e-3;
  cfg.seed = 1;
  cfg.val_target = 1.0;  // stop once the set is memorized
  ThreadPool pool(2);
  const auto result = train(model, set, &set, cfg, pool);
  REQUIRE(!result.history.empty());
  CHECK(result.history.back().val_metric == doctest::Approx(1.0));
}

TEST_CASE("checkpoints round-trip through save and load") {
  namespace fs = std::filesystem;
  auto model = build_length_regressor<float>(4, 4, 12, 16, data::Modality::gray,
                                             data::ViewMode::multiview, 21);
  model.meta.trained_epochs = 17;
  const auto dir = fs::temp_directory_path() / "kinbench_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.knn").string();
  save_checkpoint(model, path);

  const auto loaded = load_checkpoint(path);
  CHECK(loaded.meta.kind == model.meta.kind);
  CHECK(loaded.meta.n == 4);
  CHECK(loaded.meta.modality == data::Modality::gray);
  CHECK(loaded.meta.trained_epochs == 17);
  REQUIRE(loaded.net->param_count() == model.net->param_count());
  const auto a = model.net->params();
  const auto b = loaded.net->params();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // Flipping one payload byte must fail the checksum.
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(64);
  char byte;
  f.seekg(64);
  f.read(&byte, 1);
  byte = static_cast<char>(byte ^ 0x40);
  f.seekp(64);
  f.write(&byte, 1);
  f.close();
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("naive combination routes through the predicted regressor") {
  // Counter rigged to always pick class 3: zero weights, biased final layer.
  auto counter = build_counter_conv3d<float>(4, 12, 16, data::Modality::depth,
                                             data::ViewMode::multiview, 1);
  {
    auto params = counter.net->params();
    std::fill(params.begin(), params.end(), 0.0f);
    // Final dense (128 -> 6) bias sits just before the softmax; its bias is
    // the last 6 entries of the parameter block.
    params[params.size() - 6 + 2] = 10.0f;
  }

  std::array<Modelf, 6> regressors;
  std::array<const Modelf*, 6> regressor_ptrs{};
  for (int n = 1; n <= 6; ++n) {
    regressors[static_cast<std::size_t>(n - 1)] =
        build_length_regressor<float>(n, 4, 12, 16, data::Modality::depth,
                                      data::ViewMode::multiview, 50 + n);
    auto params = regressors[static_cast<std::size_t>(n - 1)].net->params();
    std::fill(params.begin(), params.end(), 0.0f);
    // Zeroed weights leave only the FC3 bias: outputs = bias = 0.1*(n+1-i).
    for (int i = 0; i <= n; ++i) {
      params[params.size() - static_cast<std::size_t>(n + 1) + i] =
          0.1f * static_cast<float>(n + 1 - i);
    }
    regressor_ptrs[static_cast<std::size_t>(n - 1)] =
        &regressors[static_cast<std::size_t>(n - 1)];
  }

  std::vector<float> stack(static_cast<std::size_t>(4) * 12 * 16, 0.5f);
  const auto pred = predict_naive_combination(counter, regressor_ptrs, stack.data());
  CHECK(pred.n_hat == 3);
  // First n_hat+1 entries come from regressor 3's bias, the rest are zero.
  for (int i = 0; i <= 3; ++i) {
    CHECK(pred.padded[static_cast<std::size_t>(i)] ==
          doctest::Approx(0.1 * (4 - i)).epsilon(1e-6));
  }
  for (int i = 4; i < 7; ++i) {
    CHECK(pred.padded[static_cast<std::size_t>(i)] == 0.0);
  }
}

TEST_CASE("argmax tie-break picks the smallest class index") {
  CHECK(argmax_class(std::array<float, 6>{0.5f, 0.5f, 0, 0, 0, 0}) == 1);
  CHECK(argmax_class(std::array<float, 6>{0, 0.2f, 0.5f, 0.5f, 0, 0}) == 3);
  CHECK(argmax_class(std::array<float, 6>{0, 0, 1, 0, 0, 0}) == 3);
}

TEST_SUITE_END();
