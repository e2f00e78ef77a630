#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "threadpool.hpp"

namespace kin::eval {

enum class Family { conv3d, lstm };
enum class EvalKind { count, length, naive, e2e };

struct ArchSpec {
  Family family = Family::conv3d;
  data::Modality modality = data::Modality::depth;
  data::ViewMode mode = data::ViewMode::multiview;
  EvalKind eval = EvalKind::count;
};

// "CONV3D-Depth-MV", "LSTM-Grey-TMP", optionally ":count|:length|:naive|:e2e".
// Length/naive/e2e evaluations run on the conv3d family only.
ArchSpec parse_arch_spec(const std::string& text);
std::string arch_name(const ArchSpec& spec);

struct BenchmarkConfig {
  models::TrainConfig train;
  int mv_train_stride = 5;             // every k-th time step becomes a train stack
  std::vector<int> tmp_train_cameras;  // empty = all rig cameras
  int val_mv_stride = 10;
  int eval_mv_stride = 1;
  std::vector<int> eval_tmp_cameras;   // empty = all
  std::string out_dir;     // empty: no files, report returned only
  std::string timestamp;   // used in report file names
  std::function<void(const std::string&)> log;  // optional progress sink
};

struct ReportRow {
  std::string architecture;
  std::string evaluation;  // "# moving links" | "link lengths" | "naive" | "end-to-end"
  int greyscale = 0;
  int depth = 0;
  int temporal = 0;
  int views = 0;
  int total = 0;
  long train_stacks = 0;
  long test_stacks = 0;
  int train_instances = 0;
  int test_instances = 0;
  double accuracy = -1.0;  // counters only
  double error = -1.0;     // mean E_L, squared meters
  double rmse = -1.0;      // sqrt of mean E_L, meters
};

struct BenchmarkReport {
  std::vector<ReportRow> rows;
};

std::string report_csv(const BenchmarkReport& report);
std::string report_text(const BenchmarkReport& report);

// Trains every requested architecture on the train split and evaluates on
// the test split. Models shared between rows (e.g. the counter reused by
// the naive combination) are trained once per run.
class BenchmarkRunner {
public:
  BenchmarkRunner(std::string dataset_dir, const data::Manifest& manifest,
                  BenchmarkConfig config, ThreadPool& pool);

  BenchmarkReport run(const std::vector<ArchSpec>& specs);

  // Individual pieces, reused by the acceptance suite.
  models::Modelf& counter(Family family, data::Modality modality, data::ViewMode mode);
  models::Modelf& regressor(int n, data::Modality modality, data::ViewMode mode);
  models::Modelf& end_to_end(data::Modality modality, data::ViewMode mode);

  struct CounterEval {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    long stacks = 0;
  };
  CounterEval evaluate_counter(const models::Modelf& model);
  double evaluate_length_known_n(data::Modality modality, data::ViewMode mode);
  double evaluate_naive(data::Modality modality, data::ViewMode mode);
  double evaluate_e2e(const models::Modelf& model);

  const models::TrainResult& last_history(const std::string& key) const;

  // Frees materialized stack sets (trained models stay). Long multi-phase
  // runs call this between phases to cap resident memory.
  void drop_cached_sets() { sets_.clear(); }

private:
  const data::StackSet& train_set(data::ViewMode mode, data::Modality modality,
                                  int only_n);
  const data::StackSet& val_set(data::ViewMode mode, data::Modality modality);
  models::Modelf& trained(const std::string& key,
                          const std::function<models::Modelf()>& builder,
                          data::ViewMode mode, data::Modality modality, int only_n);

  std::string dir_;
  const data::Manifest* manifest_;
  BenchmarkConfig cfg_;
  ThreadPool* pool_;
  std::map<std::string, data::StackSet> sets_;
  std::map<std::string, models::Modelf> models_;
  std::map<std::string, models::TrainResult> histories_;
};

BenchmarkReport run_benchmark(const std::string& dataset_dir,
                              const data::Manifest& manifest,
                              const std::vector<ArchSpec>& specs,
                              const BenchmarkConfig& config, ThreadPool& pool);

} // namespace kin::eval
