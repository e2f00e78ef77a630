#include "kinbench.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "benchmark.hpp"
#include "chain.hpp"
#include "dataset.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "threadpool.hpp"

namespace {

thread_local std::string g_last_error;

kb_status fail(kb_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class Fn>
kb_status guarded(const Fn& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    return fail(KB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(KB_ERR_OUT_OF_RANGE, e.what());
  } catch (const kin::nn::NonFiniteError& e) {
    return fail(KB_ERR_NONFINITE, e.what());
  } catch (const std::logic_error& e) {
    return fail(KB_ERR_STATE, e.what());
  } catch (const std::runtime_error& e) {
    return fail(KB_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(KB_ERR_UNKNOWN, e.what());
  }
}

kin::data::GenParams params_from_opts(const kb_generate_opts& o) {
  kin::data::GenParams p;
  p.frames = o.frames;
  p.fps = o.fps;
  p.rig.count = o.cameras;
  p.rig.radius = o.rig_radius;
  p.rig.height = o.rig_height;
  p.rig.fov_y = o.fov_y_deg * 3.14159265358979323846 / 180.0;
  p.rig.width = o.width;
  p.rig.height_px = o.height;
  p.rig.near = o.near_plane;
  p.rig.far = o.far_plane;
  p.link_radius = o.link_radius;
  p.ground_plane = o.ground_plane != 0;
  return p;
}

void fill_info(const kin::data::ManifestEntry& e, kb_instance_info* info) {
  std::memset(info, 0, sizeof(*info));
  std::snprintf(info->id, sizeof(info->id), "%s", e.id.c_str());
  info->n = e.n;
  info->seed = e.seed;
  for (std::size_t i = 0; i < e.lengths.size() && i < 7; ++i) {
    info->lengths[i] = e.lengths[i];
  }
  std::snprintf(info->split, sizeof(info->split), "%s", e.split.c_str());
}

struct ArchRequest {
  kin::models::ModelKind kind;
  kin::data::Modality modality;
  kin::data::ViewMode mode;
  int n = 0;           // regressor target count
  bool lstm = false;
};

ArchRequest parse_train_arch(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (const char c : text) lowered.push_back(static_cast<char>(std::tolower(c)));

  ArchRequest req{kin::models::ModelKind::counter_conv3d,
                  kin::data::Modality::depth, kin::data::ViewMode::multiview};
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : lowered) {
    if (c == '-') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) {
    throw std::invalid_argument("arch: expected FAMILY-Modality-Mode, got '" +
                                text + "'");
  }
  const std::string& fam = parts[0];
  if (fam == "conv3d") {
    req.kind = kin::models::ModelKind::counter_conv3d;
  } else if (fam == "lstm") {
    req.kind = kin::models::ModelKind::counter_cnn_lstm;
    req.lstm = true;
  } else if (fam == "e2e") {
    req.kind = kin::models::ModelKind::end_to_end;
  } else if (fam.size() == 4 && fam.rfind("reg", 0) == 0 && fam[3] >= '1' &&
             fam[3] <= '6') {
    req.kind = kin::models::ModelKind::regressor;
    req.n = fam[3] - '0';
  } else {
    throw std::invalid_argument("arch: unknown family '" + fam + "'");
  }
  req.modality = kin::data::modality_from_string(parts[1] == "grey" ? "gray" : parts[1]);
  req.mode = kin::data::view_mode_from_string(parts[2]);
  return req;
}

} // namespace

struct kb_dataset {
  std::string dir;
  kin::data::Manifest manifest;
};

struct kb_model {
  kin::models::Modelf model;
};

extern "C" {

const char* kb_status_name(kb_status status) {
  switch (status) {
    case KB_OK: return "ok";
    case KB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KB_ERR_OUT_OF_RANGE: return "out of range";
    case KB_ERR_IO: return "io error";
    case KB_ERR_FORMAT: return "format error";
    case KB_ERR_STATE: return "invalid state";
    case KB_ERR_NONFINITE: return "non-finite value";
    case KB_ERR_UNKNOWN: return "unknown error";
  }
  return "?";
}

const char* kb_last_error(void) { return g_last_error.c_str(); }

void kb_generate_opts_init(kb_generate_opts* opts) {
  std::memset(opts, 0, sizeof(*opts));
  opts->seed = 0;
  opts->per_n = 100;
  opts->frames = 100;
  opts->cameras = 8;
  opts->width = 128;
  opts->height = 96;
  opts->fps = 10.0;
  opts->link_radius = 0.05;
  opts->fov_y_deg = 75.0;
  opts->rig_radius = 4.0;
  opts->rig_height = 1.5;
  opts->near_plane = 0.1;
  opts->far_plane = 10.0;
  opts->ground_plane = 0;
  opts->train_fraction = 0.6;
  opts->val_fraction = 0.1;
  opts->test_fraction = 0.3;
  opts->jobs = 1;
}

kb_status kb_generate(const char* out_dir, const kb_generate_opts* opts,
                      kb_generate_summary* summary) {
  if (!out_dir || !opts) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_generate: null argument");
  }
  return guarded([&] {
    kin::data::DatasetSpec spec;
    spec.params = params_from_opts(*opts);
    spec.per_n = opts->per_n;
    spec.seed = opts->seed;
    spec.fractions = {opts->train_fraction, opts->val_fraction,
                      opts->test_fraction};
    kin::ThreadPool pool(opts->jobs > 0 ? opts->jobs : 1);
    const auto result = kin::data::generate_dataset(spec, out_dir, pool);
    if (summary) {
      summary->instances = result.instances;
      summary->bytes = result.bytes;
      summary->seconds = result.seconds;
    }
    return KB_OK;
  });
}

kb_status kb_dataset_open(const char* dir, kb_dataset** out) {
  if (!dir || !out) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_dataset_open: null argument");
  }
  return guarded([&] {
    auto handle = std::make_unique<kb_dataset>();
    handle->dir = dir;
    handle->manifest = kin::data::load_manifest(dir);
    *out = handle.release();
    return KB_OK;
  });
}

void kb_dataset_close(kb_dataset* dataset) { delete dataset; }

int kb_dataset_instance_count(const kb_dataset* dataset) {
  return dataset ? static_cast<int>(dataset->manifest.instances.size()) : 0;
}

kb_status kb_dataset_instance_info(const kb_dataset* dataset, int index,
                                   kb_instance_info* info) {
  if (!dataset || !info) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_dataset_instance_info: null argument");
  }
  if (index < 0 ||
      index >= static_cast<int>(dataset->manifest.instances.size())) {
    return fail(KB_ERR_OUT_OF_RANGE, "kb_dataset_instance_info: bad index");
  }
  fill_info(dataset->manifest.instances[static_cast<std::size_t>(index)], info);
  return KB_OK;
}

kb_status kb_dataset_regenerate(kb_dataset* dataset, const char* id) {
  if (!dataset || !id) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_dataset_regenerate: null argument");
  }
  return guarded([&]() -> kb_status {
    if (!kin::data::regenerate_instance(dataset->dir, dataset->manifest, id)) {
      return fail(KB_ERR_STATE,
                  "kb_dataset_regenerate: regenerated bytes differ from manifest");
    }
    return KB_OK;
  });
}

kb_status kb_dataset_export_pgm(const kb_dataset* dataset, const char* id, int t,
                                const char* out_dir, kb_instance_info* info) {
  if (!dataset || !id || !out_dir) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_dataset_export_pgm: null argument");
  }
  return guarded([&] {
    const auto& entry = dataset->manifest.find(id);
    if (t < 0 || t >= dataset->manifest.params.frames) {
      throw std::out_of_range("kb_dataset_export_pgm: time step out of range");
    }
    std::filesystem::create_directories(out_dir);
    kin::data::PlaneReader reader(dataset->dir, dataset->manifest);
    const auto& p = dataset->manifest.params;
    for (int c = 0; c < p.rig.count; ++c) {
      const auto depth = reader.read_plane(entry, c, t, kin::data::Modality::depth);
      const auto gray = reader.read_plane(entry, c, t, kin::data::Modality::gray);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_t%03d_cam%d_depth.pgm", id, t, c);
      kin::render::write_pgm_depth(depth, p.rig.near, p.rig.far,
                                   (std::filesystem::path(out_dir) / name).string());
      std::snprintf(name, sizeof(name), "%s_t%03d_cam%d_gray.pgm", id, t, c);
      kin::render::write_pgm_gray(gray,
                                  (std::filesystem::path(out_dir) / name).string());
    }
    if (info) fill_info(entry, info);
    return KB_OK;
  });
}

void kb_train_opts_init(kb_train_opts* opts) {
  std::memset(opts, 0, sizeof(*opts));
  opts->epochs = 30;
  opts->batch = 16;
  opts->lr = 1e-3;
  opts->use_sgd = 0;
  opts->momentum = 0.9;
  opts->seed = 1;
  opts->val_target = -1.0;
  opts->mv_train_stride = 5;
  opts->tmp_train_cameras = 0;
  opts->eval_mv_stride = 1;
  opts->threads = 1;
  opts->augment_views = 0;
  opts->lr_decay = 0.3;
  opts->lr_decay_every = 0;
}

namespace {

kin::models::TrainConfig train_config(const kb_train_opts& o) {
  kin::models::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch = o.batch;
  cfg.lr = o.lr;
  cfg.optimizer = o.use_sgd ? kin::nn::OptimizerKind::sgd_momentum
                            : kin::nn::OptimizerKind::adam;
  cfg.momentum = o.momentum;
  cfg.seed = o.seed;
  cfg.val_target = o.val_target;
  cfg.augment_views = o.augment_views != 0;
  cfg.lr_decay = o.lr_decay;
  cfg.lr_decay_every = o.lr_decay_every;
  if (o.on_epoch) {
    const kb_epoch_callback hook = o.on_epoch;
    void* user = o.on_epoch_user;
    cfg.on_epoch = [hook, user](const kin::models::EpochRow& row) {
      hook(row.epoch, row.train_loss, row.val_metric, user);
    };
  }
  return cfg;
}

std::vector<int> first_cameras(int k, int rig) {
  std::vector<int> cams;
  if (k <= 0 || k >= rig) return cams;
  for (int c = 0; c < k; ++c) cams.push_back(c);
  return cams;
}

} // namespace

kb_status kb_train(kb_dataset* dataset, const char* arch,
                   const kb_train_opts* opts, const char* checkpoint_path,
                   const char* history_csv_path, kb_train_summary* summary) {
  if (!dataset || !arch || !opts) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_train: null argument");
  }
  return guarded([&] {
    const ArchRequest req = parse_train_arch(arch);
    const auto& p = dataset->manifest.params;
    if (req.mode == kin::data::ViewMode::multiview && p.rig.count < 2) {
      throw std::invalid_argument(
          "kb_train: multiview mode needs a rig of at least 2 cameras");
    }
    const int d = req.mode == kin::data::ViewMode::multiview ? p.rig.count
                                                             : p.frames;
    kin::models::Modelf model;
    switch (req.kind) {
      case kin::models::ModelKind::counter_conv3d:
        model = kin::models::build_counter_conv3d<float>(
            d, p.rig.height_px, p.rig.width, req.modality, req.mode, opts->seed);
        break;
      case kin::models::ModelKind::counter_cnn_lstm:
        model = kin::models::build_counter_cnn_lstm<float>(
            p.rig.height_px, p.rig.width, d, req.modality, req.mode, opts->seed);
        break;
      case kin::models::ModelKind::regressor:
        model = kin::models::build_length_regressor<float>(
            req.n, d, p.rig.height_px, p.rig.width, req.modality, req.mode,
            opts->seed);
        break;
      case kin::models::ModelKind::end_to_end:
        model = kin::models::build_end_to_end<float>(
            d, p.rig.height_px, p.rig.width, req.modality, req.mode, opts->seed);
        break;
    }

    kin::data::StackSelection train_sel;
    kin::data::StackSelection val_sel;
    if (req.mode == kin::data::ViewMode::multiview) {
      train_sel.mv_stride = std::max(1, opts->mv_train_stride);
      val_sel.mv_stride = std::max(1, opts->mv_train_stride * 2);
    } else {
      train_sel.cameras = first_cameras(opts->tmp_train_cameras, p.rig.count);
    }
    if (req.kind == kin::models::ModelKind::regressor) {
      train_sel.only_n = req.n;
      val_sel.only_n = req.n;
    }

    const auto train_stacks = kin::data::load_stack_set(
        dataset->dir, dataset->manifest, "train", req.mode, req.modality, train_sel);
    const auto val_stacks = kin::data::load_stack_set(
        dataset->dir, dataset->manifest, "val", req.mode, req.modality, val_sel);

    kin::ThreadPool pool(opts->threads > 0 ? opts->threads : 1);
    const auto result = kin::models::train(model, train_stacks,
                                           val_stacks.items.empty() ? nullptr : &val_stacks,
                                           train_config(*opts), pool);
    if (checkpoint_path) kin::models::save_checkpoint(model, checkpoint_path);
    if (history_csv_path) kin::models::write_history_csv(result, history_csv_path);
    if (summary) {
      summary->epochs_run = static_cast<int>(result.history.size());
      summary->final_train_loss =
          result.history.empty() ? 0.0 : result.history.back().train_loss;
      summary->final_val_metric =
          result.history.empty() ? 0.0 : result.history.back().val_metric;
    }
    return KB_OK;
  });
}

kb_status kb_model_load(const char* checkpoint_path, kb_model** out) {
  if (!checkpoint_path || !out) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_model_load: null argument");
  }
  return guarded([&] {
    auto handle = std::make_unique<kb_model>();
    handle->model = kin::models::load_checkpoint(checkpoint_path);
    *out = handle.release();
    return KB_OK;
  });
}

void kb_model_free(kb_model* model) { delete model; }

kb_status kb_eval_counter(kb_dataset* dataset, const kb_model* model,
                          int eval_mv_stride, int threads,
                          kb_counter_eval* out) {
  if (!dataset || !model || !out) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_eval_counter: null argument");
  }
  if (model->model.loss_kind() != kin::nn::LossKind::cross_entropy) {
    return fail(KB_ERR_STATE, "kb_eval_counter: model is not a counter");
  }
  return guarded([&] {
    kin::eval::BenchmarkConfig cfg;
    cfg.eval_mv_stride = std::max(1, eval_mv_stride);
    kin::ThreadPool pool(threads > 0 ? threads : 1);
    kin::eval::BenchmarkRunner runner(dataset->dir, dataset->manifest, cfg, pool);
    const auto eval = runner.evaluate_counter(model->model);
    out->accuracy = eval.accuracy;
    out->stacks = eval.stacks;
    for (int t = 0; t < 6; ++t) {
      for (int p = 0; p < 6; ++p) {
        out->confusion[t][p] =
            eval.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
      }
    }
    return KB_OK;
  });
}

kb_status kb_benchmark(kb_dataset* dataset, const char* specs_csv,
                       const kb_train_opts* opts, const char* out_dir,
                       const char* timestamp) {
  if (!dataset || !specs_csv || !opts || !out_dir) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_benchmark: null argument");
  }
  return guarded([&] {
    std::vector<kin::eval::ArchSpec> specs;
    std::string cur;
    for (const char* p = specs_csv;; ++p) {
      if (*p == ',' || *p == '\0') {
        if (!cur.empty()) specs.push_back(kin::eval::parse_arch_spec(cur));
        cur.clear();
        if (*p == '\0') break;
      } else {
        cur.push_back(*p);
      }
    }
    if (specs.empty()) {
      throw std::invalid_argument("kb_benchmark: no architecture specs given");
    }

    kin::eval::BenchmarkConfig cfg;
    cfg.train = train_config(*opts);
    cfg.mv_train_stride = std::max(1, opts->mv_train_stride);
    cfg.tmp_train_cameras =
        first_cameras(opts->tmp_train_cameras, dataset->manifest.params.rig.count);
    cfg.eval_mv_stride = std::max(1, opts->eval_mv_stride);
    cfg.out_dir = out_dir;
    cfg.timestamp = timestamp ? timestamp : "latest";

    kin::ThreadPool pool(opts->threads > 0 ? opts->threads : 1);
    kin::eval::run_benchmark(dataset->dir, dataset->manifest, specs, cfg, pool);
    return KB_OK;
  });
}

kb_status kb_normalize_lengths(double* lengths, int count) {
  if (!lengths || count < 1) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_normalize_lengths: bad input");
  }
  return guarded([&] {
    std::vector<double> raw(lengths, lengths + count);
    const auto normalized = kin::chain::normalize_lengths(raw);
    std::memcpy(lengths, normalized.data(), sizeof(double) * normalized.size());
    return KB_OK;
  });
}

kb_status kb_count_label(int n, double out[6]) {
  if (!out) return fail(KB_ERR_INVALID_ARGUMENT, "kb_count_label: null output");
  return guarded([&] {
    const auto label = kin::chain::count_label(n);
    std::memcpy(out, label.onehot.data(), sizeof(double) * 6);
    return KB_OK;
  });
}

kb_status kb_padded_length_label(int n, const double* lengths, double out[7]) {
  if (!lengths || !out) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_padded_length_label: null argument");
  }
  return guarded([&] {
    kin::chain::ChainConfig config;
    config.n = n;
    config.lengths.assign(lengths, lengths + n + 1);
    config.colors.assign(static_cast<std::size_t>(n) + 1, "black");
    kin::chain::validate(config);
    const auto label = kin::chain::padded_length_label(config);
    std::memcpy(out, label.padded.data(), sizeof(double) * 7);
    return KB_OK;
  });
}

kb_status kb_length_error(const double truth[7], const double pred[7],
                          double* out) {
  if (!truth || !pred || !out) {
    return fail(KB_ERR_INVALID_ARGUMENT, "kb_length_error: null argument");
  }
  std::array<double, 7> t, p;
  std::memcpy(t.data(), truth, sizeof(t));
  std::memcpy(p.data(), pred, sizeof(p));
  *out = kin::eval::length_error(t, p);
  return KB_OK;
}

} // extern "C"
