#include "benchmark.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace kin::eval {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

const char* eval_label(EvalKind kind) {
  switch (kind) {
    case EvalKind::count: return "# moving links";
    case EvalKind::length: return "link lengths";
    case EvalKind::naive: return "naive";
    case EvalKind::e2e: return "end-to-end";
  }
  return "?";
}

std::string model_key(const std::string& role, data::Modality modality,
                      data::ViewMode mode) {
  return role + ":" + data::to_string(modality) + ":" + data::to_string(mode);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("benchmark: cannot write " + path);
  }
  out << text;
}

} // namespace

ArchSpec parse_arch_spec(const std::string& text) {
  std::string body = text;
  ArchSpec spec;
  if (const auto colon = body.find(':'); colon != std::string::npos) {
    const std::string kind = lower(body.substr(colon + 1));
    body = body.substr(0, colon);
    if (kind == "count") spec.eval = EvalKind::count;
    else if (kind == "length") spec.eval = EvalKind::length;
    else if (kind == "naive") spec.eval = EvalKind::naive;
    else if (kind == "e2e" || kind == "end-to-end") spec.eval = EvalKind::e2e;
    else throw std::invalid_argument("arch spec: unknown evaluation '" + kind + "'");
  }

  std::vector<std::string> parts;
  std::stringstream ss(lower(body));
  std::string part;
  while (std::getline(ss, part, '-')) parts.push_back(part);
  if (parts.size() != 3) {
    throw std::invalid_argument("arch spec: expected FAMILY-Modality-Mode in '" +
                                text + "'");
  }
  if (parts[0] == "conv3d") spec.family = Family::conv3d;
  else if (parts[0] == "lstm") spec.family = Family::lstm;
  else throw std::invalid_argument("arch spec: unknown family '" + parts[0] + "'");
  spec.modality = data::modality_from_string(parts[1] == "grey" ? "gray" : parts[1]);
  spec.mode = data::view_mode_from_string(parts[2]);

  if (spec.eval != EvalKind::count && spec.family != Family::conv3d) {
    throw std::invalid_argument(
        "arch spec: length/naive/end-to-end evaluations use the conv3d family");
  }
  return spec;
}

std::string arch_name(const ArchSpec& spec) {
  std::string name = spec.family == Family::conv3d ? "CONV3D" : "LSTM";
  name += spec.modality == data::Modality::depth ? "-Depth" : "-Grey";
  name += spec.mode == data::ViewMode::multiview ? "-MV" : "-TMP";
  return name;
}

std::string report_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "architecture,evaluation,greyscale,depth,temporal,views,total,"
         "train_stacks,test_stacks,train_instances,test_instances,accuracy,"
         "error,rmse\n";
  for (const auto& r : report.rows) {
    out << r.architecture << "," << r.evaluation << "," << r.greyscale << ","
        << r.depth << "," << r.temporal << "," << r.views << "," << r.total << ","
        << r.train_stacks << "," << r.test_stacks << "," << r.train_instances
        << "," << r.test_instances << ",";
    if (r.accuracy >= 0.0) out << std::setprecision(6) << r.accuracy;
    out << ",";
    if (r.error >= 0.0) out << std::setprecision(6) << r.error;
    out << ",";
    if (r.rmse >= 0.0) out << std::setprecision(6) << r.rmse;
    out << "\n";
  }
  return out.str();
}

std::string report_text(const BenchmarkReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "Architecture" << std::setw(16)
      << "Evaluation" << std::right << std::setw(6) << "Grey" << std::setw(6)
      << "Depth" << std::setw(6) << "Tmp" << std::setw(6) << "Views"
      << std::setw(13) << "TrainStacks" << std::setw(12) << "TestStacks"
      << std::setw(10) << "Accuracy" << std::setw(10) << "Error"
      << std::setw(10) << "RMSE" << "\n";
  out << std::string(113, '-') << "\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(18) << r.architecture << std::setw(16)
        << r.evaluation << std::right << std::setw(6) << r.greyscale
        << std::setw(6) << r.depth << std::setw(6) << r.temporal << std::setw(6)
        << r.views << std::setw(13) << r.train_stacks << std::setw(12)
        << r.test_stacks;
    auto cell = [&](double v) {
      if (v < 0.0) {
        out << std::setw(10) << "";
      } else {
        out << std::setw(10) << std::fixed << std::setprecision(4) << v;
      }
      out << std::defaultfloat;
    };
    cell(r.accuracy);
    cell(r.error);
    cell(r.rmse);
    out << "\n";
  }
  return out.str();
}

BenchmarkRunner::BenchmarkRunner(std::string dataset_dir,
                                 const data::Manifest& manifest,
                                 BenchmarkConfig config, ThreadPool& pool)
    : dir_(std::move(dataset_dir)),
      manifest_(&manifest),
      cfg_(std::move(config)),
      pool_(&pool) {}

const data::StackSet& BenchmarkRunner::train_set(data::ViewMode mode,
                                                 data::Modality modality,
                                                 int only_n) {
  const std::string key = std::string("train:") + data::to_string(mode) + ":" +
                          data::to_string(modality) + ":" + std::to_string(only_n);
  auto it = sets_.find(key);
  if (it == sets_.end()) {
    data::StackSelection sel;
    sel.only_n = only_n;
    if (mode == data::ViewMode::multiview) {
      sel.mv_stride = cfg_.mv_train_stride;
    } else {
      sel.cameras = cfg_.tmp_train_cameras;
    }
    it = sets_.emplace(key, data::load_stack_set(dir_, *manifest_, "train", mode,
                                                 modality, sel))
             .first;
  }
  return it->second;
}

const data::StackSet& BenchmarkRunner::val_set(data::ViewMode mode,
                                               data::Modality modality) {
  const std::string key = std::string("val:") + data::to_string(mode) + ":" +
                          data::to_string(modality);
  auto it = sets_.find(key);
  if (it == sets_.end()) {
    data::StackSelection sel;
    if (mode == data::ViewMode::multiview) {
      sel.mv_stride = cfg_.val_mv_stride;
    } else {
      sel.cameras = cfg_.eval_tmp_cameras;
    }
    it = sets_.emplace(key, data::load_stack_set(dir_, *manifest_, "val", mode,
                                                 modality, sel))
             .first;
  }
  return it->second;
}

models::Modelf& BenchmarkRunner::trained(
    const std::string& key, const std::function<models::Modelf()>& builder,
    data::ViewMode mode, data::Modality modality, int only_n) {
  auto it = models_.find(key);
  if (it != models_.end()) return it->second;

  models::Modelf model = builder();
  const auto& train = train_set(mode, modality, only_n);
  const auto& val = val_set(mode, modality);
  models::TrainConfig train_cfg = cfg_.train;
  if (cfg_.log && !train_cfg.on_epoch) {
    const auto log = cfg_.log;
    train_cfg.on_epoch = [log, key](const models::EpochRow& row) {
      log(key + " epoch " + std::to_string(row.epoch) + ": loss " +
          std::to_string(row.train_loss) + ", val " +
          std::to_string(row.val_metric));
    };
  }
  models::TrainResult history = models::train(model, train, &val, train_cfg, *pool_);
  if (!cfg_.out_dir.empty()) {
    fs::create_directories(cfg_.out_dir);
    std::string file_key = key;
    std::replace(file_key.begin(), file_key.end(), ':', '_');
    models::write_history_csv(history,
                              (fs::path(cfg_.out_dir) / ("history_" + file_key + ".csv")).string());
    models::save_checkpoint(model,
                            (fs::path(cfg_.out_dir) / (file_key + ".knn")).string());
  }
  histories_.emplace(key, std::move(history));
  return models_.emplace(key, std::move(model)).first->second;
}

models::Modelf& BenchmarkRunner::counter(Family family, data::Modality modality,
                                         data::ViewMode mode) {
  const auto& p = manifest_->params;
  const int d = mode == data::ViewMode::multiview ? p.rig.count : p.frames;
  const std::string role = family == Family::conv3d ? "conv3d" : "lstm";
  return trained(model_key(role, modality, mode), [&] {
    if (family == Family::conv3d) {
      return models::build_counter_conv3d<float>(d, p.rig.height_px, p.rig.width,
                                                 modality, mode, cfg_.train.seed);
    }
    return models::build_counter_cnn_lstm<float>(p.rig.height_px, p.rig.width, d,
                                                 modality, mode, cfg_.train.seed);
  }, mode, modality, 0);
}

models::Modelf& BenchmarkRunner::regressor(int n, data::Modality modality,
                                           data::ViewMode mode) {
  const auto& p = manifest_->params;
  const int d = mode == data::ViewMode::multiview ? p.rig.count : p.frames;
  return trained(model_key("reg" + std::to_string(n), modality, mode), [&] {
    return models::build_length_regressor<float>(n, d, p.rig.height_px, p.rig.width,
                                                 modality, mode, cfg_.train.seed);
  }, mode, modality, n);
}

models::Modelf& BenchmarkRunner::end_to_end(data::Modality modality,
                                            data::ViewMode mode) {
  const auto& p = manifest_->params;
  const int d = mode == data::ViewMode::multiview ? p.rig.count : p.frames;
  return trained(model_key("e2e", modality, mode), [&] {
    return models::build_end_to_end<float>(d, p.rig.height_px, p.rig.width,
                                           modality, mode, cfg_.train.seed);
  }, mode, modality, 0);
}

const models::TrainResult& BenchmarkRunner::last_history(const std::string& key) const {
  return histories_.at(key);
}

BenchmarkRunner::CounterEval BenchmarkRunner::evaluate_counter(
    const models::Modelf& model) {
  data::StackSelection sel;
  if (model.meta.mode == data::ViewMode::multiview) {
    sel.mv_stride = cfg_.eval_mv_stride;
  } else {
    sel.cameras = cfg_.eval_tmp_cameras;
  }

  const int slots = pool_->size();
  std::vector<std::vector<float>> scratch(static_cast<std::size_t>(slots));
  for (auto& s : scratch) s.resize(model.net->scratch_count());

  std::vector<int> preds;
  std::vector<int> truths;
  data::PlaneReader reader(dir_, *manifest_);
  std::vector<data::StackSet::Item> items;
  CounterEval result;
  for (const auto* entry : data::split_entries(*manifest_, "test")) {
    items.clear();
    reader.append_stacks(*entry, model.meta.mode, model.meta.modality, sel, items);
    std::vector<int> local(items.size());
    pool_->parallel_for(items.size(), [&](std::size_t i, int slot) {
      const float* out = model.net->forward(items[i].data.data(),
                                            scratch[static_cast<std::size_t>(slot)].data());
      local[i] = models::argmax_class(
          {out, static_cast<std::size_t>(model.net->output_count())});
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
      preds.push_back(local[i]);
      truths.push_back(items[i].n);
    }
  }
  if (preds.empty()) {
    throw std::logic_error("evaluate_counter: the test split is empty");
  }
  result.confusion = confusion(preds, truths);
  result.accuracy = result.confusion.accuracy();
  result.stacks = static_cast<long>(preds.size());
  return result;
}

double BenchmarkRunner::evaluate_length_known_n(data::Modality modality,
                                                data::ViewMode mode) {
  std::array<const models::Modelf*, 6> regs{};
  for (int n = 1; n <= 6; ++n) {
    regs[static_cast<std::size_t>(n - 1)] = &regressor(n, modality, mode);
  }
  data::StackSelection sel;
  if (mode == data::ViewMode::multiview) sel.mv_stride = cfg_.eval_mv_stride;
  else sel.cameras = cfg_.eval_tmp_cameras;

  const int slots = pool_->size();
  std::vector<std::vector<float>> scratch(static_cast<std::size_t>(slots));
  std::size_t max_scratch = 0;
  for (const auto* m : regs) max_scratch = std::max(max_scratch, m->net->scratch_count());
  for (auto& s : scratch) s.resize(max_scratch);

  data::PlaneReader reader(dir_, *manifest_);
  std::vector<data::StackSet::Item> items;
  double total_err = 0.0;
  long count = 0;
  for (const auto* entry : data::split_entries(*manifest_, "test")) {
    items.clear();
    reader.append_stacks(*entry, mode, modality, sel, items);
    std::vector<double> local(items.size());
    pool_->parallel_for(items.size(), [&](std::size_t i, int slot) {
      const auto& item = items[i];
      const auto* model = regs[static_cast<std::size_t>(item.n - 1)];
      const float* out = model->net->forward(item.data.data(),
                                             scratch[static_cast<std::size_t>(slot)].data());
      std::vector<double> raw(out, out + model->net->output_count());
      const auto padded = pad_prediction(item.n, raw);
      std::array<double, 7> truth{};
      for (int k = 0; k < 7; ++k) truth[static_cast<std::size_t>(k)] = item.target7[static_cast<std::size_t>(k)];
      local[i] = length_error(truth, padded);
    });
    for (const double v : local) total_err += v;
    count += static_cast<long>(items.size());
  }
  if (count == 0) {
    throw std::logic_error("benchmark: the test split is empty");
  }
  return total_err / static_cast<double>(count);
}

double BenchmarkRunner::evaluate_naive(data::Modality modality, data::ViewMode mode) {
  const models::Modelf& ctr = counter(Family::conv3d, modality, mode);
  std::array<const models::Modelf*, 6> regs{};
  for (int n = 1; n <= 6; ++n) {
    regs[static_cast<std::size_t>(n - 1)] = &regressor(n, modality, mode);
  }
  data::StackSelection sel;
  if (mode == data::ViewMode::multiview) sel.mv_stride = cfg_.eval_mv_stride;
  else sel.cameras = cfg_.eval_tmp_cameras;

  const int slots = pool_->size();
  std::size_t max_scratch = ctr.net->scratch_count();
  for (const auto* m : regs) max_scratch = std::max(max_scratch, m->net->scratch_count());
  std::vector<std::vector<float>> scratch(static_cast<std::size_t>(slots));
  for (auto& s : scratch) s.resize(max_scratch);

  data::PlaneReader reader(dir_, *manifest_);
  std::vector<data::StackSet::Item> items;
  double total_err = 0.0;
  long count = 0;
  for (const auto* entry : data::split_entries(*manifest_, "test")) {
    items.clear();
    reader.append_stacks(*entry, mode, modality, sel, items);
    std::vector<double> local(items.size());
    pool_->parallel_for(items.size(), [&](std::size_t i, int slot) {
      const auto& item = items[i];
      float* scr = scratch[static_cast<std::size_t>(slot)].data();
      const float* probs = ctr.net->forward(item.data.data(), scr);
      const int n_hat = models::argmax_class(
          {probs, static_cast<std::size_t>(ctr.net->output_count())});
      const auto* reg = regs[static_cast<std::size_t>(n_hat - 1)];
      const float* out = reg->net->forward(item.data.data(), scr);
      std::vector<double> raw(out, out + reg->net->output_count());
      const auto padded = pad_prediction(n_hat, raw);
      std::array<double, 7> truth{};
      for (int k = 0; k < 7; ++k) truth[static_cast<std::size_t>(k)] = item.target7[static_cast<std::size_t>(k)];
      local[i] = length_error(truth, padded);
    });
    for (const double v : local) total_err += v;
    count += static_cast<long>(items.size());
  }
  if (count == 0) {
    throw std::logic_error("benchmark: the test split is empty");
  }
  return total_err / static_cast<double>(count);
}

double BenchmarkRunner::evaluate_e2e(const models::Modelf& model) {
  data::StackSelection sel;
  if (model.meta.mode == data::ViewMode::multiview) sel.mv_stride = cfg_.eval_mv_stride;
  else sel.cameras = cfg_.eval_tmp_cameras;

  const int slots = pool_->size();
  std::vector<std::vector<float>> scratch(static_cast<std::size_t>(slots));
  for (auto& s : scratch) s.resize(model.net->scratch_count());

  data::PlaneReader reader(dir_, *manifest_);
  std::vector<data::StackSet::Item> items;
  double total_err = 0.0;
  long count = 0;
  for (const auto* entry : data::split_entries(*manifest_, "test")) {
    items.clear();
    reader.append_stacks(*entry, model.meta.mode, model.meta.modality, sel, items);
    std::vector<double> local(items.size());
    pool_->parallel_for(items.size(), [&](std::size_t i, int slot) {
      const auto& item = items[i];
      const float* out = model.net->forward(item.data.data(),
                                            scratch[static_cast<std::size_t>(slot)].data());
      std::array<double, 7> pred{};
      for (int k = 0; k < 7; ++k) pred[static_cast<std::size_t>(k)] = out[k];
      std::array<double, 7> truth{};
      for (int k = 0; k < 7; ++k) truth[static_cast<std::size_t>(k)] = item.target7[static_cast<std::size_t>(k)];
      local[i] = length_error(truth, pred);
    });
    for (const double v : local) total_err += v;
    count += static_cast<long>(items.size());
  }
  if (count == 0) {
    throw std::logic_error("benchmark: the test split is empty");
  }
  return total_err / static_cast<double>(count);
}

BenchmarkReport BenchmarkRunner::run(const std::vector<ArchSpec>& specs) {
  BenchmarkReport report;
  const auto& p = manifest_->params;
  const int train_instances =
      static_cast<int>(data::split_entries(*manifest_, "train").size());
  const int test_instances =
      static_cast<int>(data::split_entries(*manifest_, "test").size());

  for (const auto& spec : specs) {
    ReportRow row;
    row.architecture = arch_name(spec);
    row.evaluation = eval_label(spec.eval);
    row.greyscale = spec.modality == data::Modality::gray ? 1 : 0;
    row.depth = spec.modality == data::Modality::depth ? 1 : 0;
    row.temporal = spec.mode == data::ViewMode::temporal ? p.frames : 0;
    row.views = spec.mode == data::ViewMode::multiview ? p.rig.count : 0;
    row.total = row.temporal + row.views;
    row.train_instances = train_instances;
    row.test_instances = test_instances;
    row.train_stacks =
        static_cast<long>(train_set(spec.mode, spec.modality,
                                    0).items.size());

    switch (spec.eval) {
      case EvalKind::count: {
        const auto& model = counter(spec.family, spec.modality, spec.mode);
        const auto eval = evaluate_counter(model);
        row.accuracy = eval.accuracy;
        row.test_stacks = eval.stacks;
        if (!cfg_.out_dir.empty()) {
          const std::string stem = "confusion_" + row.architecture;
          write_file((fs::path(cfg_.out_dir) / (stem + ".csv")).string(),
                     eval.confusion.to_csv());
          eval.confusion.write_pgm((fs::path(cfg_.out_dir) / (stem + ".pgm")).string());
        }
        break;
      }
      case EvalKind::length: {
        row.error = evaluate_length_known_n(spec.modality, spec.mode);
        row.rmse = std::sqrt(row.error);
        break;
      }
      case EvalKind::naive: {
        row.error = evaluate_naive(spec.modality, spec.mode);
        row.rmse = std::sqrt(row.error);
        break;
      }
      case EvalKind::e2e: {
        const auto& model = end_to_end(spec.modality, spec.mode);
        row.error = evaluate_e2e(model);
        row.rmse = std::sqrt(row.error);
        break;
      }
    }
    report.rows.push_back(row);
  }

  if (!cfg_.out_dir.empty()) {
    fs::create_directories(cfg_.out_dir);
    const std::string stamp = cfg_.timestamp.empty() ? "latest" : cfg_.timestamp;
    write_file((fs::path(cfg_.out_dir) / ("report_" + stamp + ".csv")).string(),
               report_csv(report));
    write_file((fs::path(cfg_.out_dir) / ("report_" + stamp + ".txt")).string(),
               report_text(report));
  }
  return report;
}

BenchmarkReport run_benchmark(const std::string& dataset_dir,
                              const data::Manifest& manifest,
                              const std::vector<ArchSpec>& specs,
                              const BenchmarkConfig& config, ThreadPool& pool) {
  BenchmarkRunner runner(dataset_dir, manifest, config, pool);
  return runner.run(specs);
}

} // namespace kin::eval
