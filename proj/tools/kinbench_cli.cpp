// kinbench command-line driver. Talks to the core exclusively through the
// C API in kinbench.h, the same surface other language bindings would use.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "kinbench.h"

namespace {

int fail_with(kb_status status, const char* what) {
  std::fprintf(stderr, "error: %s: %s (%s)\n", what, kb_last_error(),
               kb_status_name(status));
  return 1;
}

std::string default_data_dir() {
  const char* env = std::getenv("KINBENCH_DATA");
  return env ? env : "dataset";
}

bool parse_resolution(const std::string& text, int& w, int& h) {
  return std::sscanf(text.c_str(), "%dx%d", &w, &h) == 2 && w >= 1 && h >= 1;
}

void print_generate_config(const char* out_dir, const kb_generate_opts& o) {
  std::printf(
      "config: generate --out %s --per-n %d --seed %" PRIu64
      " --frames %d --rig %d --res %dx%d --fps %g --link-radius %g --fov %g"
      " --rig-radius %g --rig-height %g --near %g --far %g --ground %d"
      " --fractions %g,%g,%g --jobs %d\n",
      out_dir, o.per_n, o.seed, o.frames, o.cameras, o.width, o.height, o.fps,
      o.link_radius, o.fov_y_deg, o.rig_radius, o.rig_height, o.near_plane,
      o.far_plane, o.ground_plane, o.train_fraction, o.val_fraction,
      o.test_fraction, o.jobs);
}

void print_train_config(const char* cmd, const std::string& data,
                        const std::string& arch, const kb_train_opts& o) {
  std::printf(
      "config: %s --data %s --arch %s --epochs %d --batch %d --lr %g --optimizer %s"
      " --momentum %g --seed %" PRIu64 " --val-target %g --mv-stride %d"
      " --tmp-cameras %d --eval-stride %d --threads %d%s\n",
      cmd, data.c_str(), arch.c_str(), o.epochs, o.batch, o.lr,
      o.use_sgd ? "sgd" : "adam", o.momentum, o.seed, o.val_target,
      o.mv_train_stride, o.tmp_train_cameras, o.eval_mv_stride, o.threads,
      o.augment_views ? " --augment-views" : "");
}

void add_train_options(CLI::App* cmd, kb_train_opts& opts, std::string& optimizer) {
  cmd->add_option("--epochs", opts.epochs, "Max training epochs");
  cmd->add_option("--batch", opts.batch, "Mini-batch size");
  cmd->add_option("--lr", opts.lr, "Learning rate");
  cmd->add_option("--optimizer", optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--momentum", opts.momentum, "SGD momentum");
  cmd->add_option("--seed", opts.seed, "Training seed");
  cmd->add_option("--val-target", opts.val_target,
                  "Early-stop bar on the validation metric (<0 disables)");
  cmd->add_option("--mv-stride", opts.mv_train_stride,
                  "Use every k-th time step as a multiview training stack");
  cmd->add_option("--tmp-cameras", opts.tmp_train_cameras,
                  "Temporal stacks per instance (first k cameras; 0 = all)");
  cmd->add_option("--eval-stride", opts.eval_mv_stride,
                  "Evaluate every k-th multiview time step");
  cmd->add_option("--threads", opts.threads, "Worker threads");
  cmd->add_flag("--augment-views", opts.augment_views,
                "Random cyclic view-start shifts for multiview training");
  cmd->add_option("--lr-decay", opts.lr_decay, "LR multiplier for the step schedule");
  cmd->add_option("--lr-decay-every", opts.lr_decay_every,
                  "Apply the LR multiplier every k epochs (0 = constant LR)");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic kinematic-chain benchmark: generate annotated "
               "multi-view depth/gray datasets, train link counters and "
               "length regressors, and report benchmark metrics."};
  app.set_config("--config", "", "Read defaults from a TOML/INI config file");
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "Generate a dataset");
  kb_generate_opts gopts;
  kb_generate_opts_init(&gopts);
  std::string gen_out = default_data_dir();
  std::string resolution = "128x96";
  std::string fractions = "0.6,0.1,0.3";
  gen->add_option("--out", gen_out, "Output dataset directory");
  gen->add_option("--per-n", gopts.per_n, "Instances per moving-link count");
  gen->add_option("--seed", gopts.seed, "Dataset seed");
  gen->add_option("--frames", gopts.frames, "Frames per instance");
  gen->add_option("--rig", gopts.cameras, "Number of rig cameras");
  gen->add_option("--res", resolution, "Image resolution WxH");
  gen->add_option("--fps", gopts.fps, "Capture rate");
  gen->add_option("--link-radius", gopts.link_radius, "Link capsule radius (m)");
  gen->add_option("--fov", gopts.fov_y_deg, "Vertical field of view (deg)");
  gen->add_option("--rig-radius", gopts.rig_radius, "Camera circle radius (m)");
  gen->add_option("--rig-height", gopts.rig_height, "Camera height (m)");
  gen->add_option("--near", gopts.near_plane, "Near plane (m)");
  gen->add_option("--far", gopts.far_plane, "Far plane / depth miss value (m)");
  gen->add_flag("--ground", gopts.ground_plane, "Render a ground plane");
  gen->add_option("--fractions", fractions, "train,val,test split fractions");
  gen->add_option("--jobs", gopts.jobs, "Parallel generation workers");

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train one architecture");
  kb_train_opts topts;
  kb_train_opts_init(&topts);
  std::string train_data = default_data_dir();
  std::string train_arch = "CONV3D-Depth-MV";
  std::string train_out = "runs";
  std::string optimizer = "adam";
  train->add_option("--data", train_data, "Dataset directory");
  train->add_option("--arch", train_arch,
                    "CONV3D|LSTM-Depth|Grey-MV|TMP, REG<n>-..., E2E-...");
  train->add_option("--out", train_out, "Output directory");
  add_train_options(train, topts, optimizer);

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "Train + evaluate a benchmark report");
  kb_train_opts eopts;
  kb_train_opts_init(&eopts);
  std::string eval_data = default_data_dir();
  std::string eval_out = "runs";
  std::string eval_optimizer = "adam";
  std::string archs =
      "CONV3D-Depth-MV,LSTM-Depth-MV,CONV3D-Depth-TMP,CONV3D-Grey-MV";
  eval->add_option("--data", eval_data, "Dataset directory");
  eval->add_option("--archs", archs,
                   "Comma-separated specs, e.g. CONV3D-Depth-MV:e2e");
  eval->add_option("--out", eval_out, "Report output directory");
  add_train_options(eval, eopts, eval_optimizer);

  // ---- inspect ----
  auto* inspect = app.add_subcommand("inspect", "Dump one instance as PGM images");
  std::string ins_data = default_data_dir();
  std::string ins_id;
  std::string ins_out = "inspect";
  int ins_t = 0;
  inspect->add_option("--data", ins_data, "Dataset directory");
  inspect->add_option("--id", ins_id, "Instance id (e.g. n3-0007)")->required();
  inspect->add_option("--t", ins_t, "Time step");
  inspect->add_option("--out", ins_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    if (!parse_resolution(resolution, gopts.width, gopts.height)) {
      std::fprintf(stderr, "error: --res expects WxH, got '%s'\n",
                   resolution.c_str());
      return 1;
    }
    if (std::sscanf(fractions.c_str(), "%lf,%lf,%lf", &gopts.train_fraction,
                    &gopts.val_fraction, &gopts.test_fraction) != 3) {
      std::fprintf(stderr, "error: --fractions expects a,b,c\n");
      return 1;
    }
    print_generate_config(gen_out.c_str(), gopts);
    kb_generate_summary summary;
    const kb_status status = kb_generate(gen_out.c_str(), &gopts, &summary);
    if (status != KB_OK) return fail_with(status, "generate");
    std::printf("generated %d instances, %.1f MiB in %.1f s -> %s\n",
                summary.instances,
                static_cast<double>(summary.bytes) / (1024.0 * 1024.0),
                summary.seconds, gen_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    topts.use_sgd = optimizer == "sgd" ? 1 : 0;
    topts.on_epoch = [](int epoch, double loss, double val, void*) {
      std::printf("epoch %d: train loss %.6f, val metric %.4f\n", epoch, loss, val);
      std::fflush(stdout);
    };
    print_train_config("train", train_data, train_arch, topts);
    kb_dataset* dataset = nullptr;
    kb_status status = kb_dataset_open(train_data.c_str(), &dataset);
    if (status != KB_OK) return fail_with(status, "open dataset");
    const std::string ckpt = train_out + "/" + train_arch + ".knn";
    const std::string hist = train_out + "/" + train_arch + "_history.csv";
    std::filesystem::create_directories(train_out);
    kb_train_summary summary;
    status = kb_train(dataset, train_arch.c_str(), &topts, ckpt.c_str(),
                      hist.c_str(), &summary);
    kb_dataset_close(dataset);
    if (status != KB_OK) return fail_with(status, "train");
    std::printf("trained %s: %d epochs, final loss %.6f, val metric %.4f\n",
                train_arch.c_str(), summary.epochs_run, summary.final_train_loss,
                summary.final_val_metric);
    std::printf("checkpoint: %s\nhistory: %s\n", ckpt.c_str(), hist.c_str());
    return 0;
  }

  if (eval->parsed()) {
    eopts.use_sgd = eval_optimizer == "sgd" ? 1 : 0;
    print_train_config("eval", eval_data, archs, eopts);
    kb_dataset* dataset = nullptr;
    kb_status status = kb_dataset_open(eval_data.c_str(), &dataset);
    if (status != KB_OK) return fail_with(status, "open dataset");
    char stamp[32];
    std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&now));
    status = kb_benchmark(dataset, archs.c_str(), &eopts, eval_out.c_str(), stamp);
    kb_dataset_close(dataset);
    if (status != KB_OK) return fail_with(status, "eval");
    std::printf("report written to %s/report_%s.csv\n", eval_out.c_str(), stamp);
    return 0;
  }

  if (inspect->parsed()) {
    kb_dataset* dataset = nullptr;
    kb_status status = kb_dataset_open(ins_data.c_str(), &dataset);
    if (status != KB_OK) return fail_with(status, "open dataset");
    kb_instance_info info;
    status = kb_dataset_export_pgm(dataset, ins_id.c_str(), ins_t,
                                   ins_out.c_str(), &info);
    kb_dataset_close(dataset);
    if (status != KB_OK) return fail_with(status, "inspect");
    std::printf("instance %s: n=%d seed=%" PRIu64 " split=%s lengths=[", info.id,
                info.n, info.seed, info.split);
    for (int i = 0; i <= info.n; ++i) {
      std::printf("%s%.6f", i ? ", " : "", info.lengths[i]);
    }
    std::printf("]\nPGM images in %s/\n", ins_out.c_str());
    return 0;
  }

  return 0;
}
