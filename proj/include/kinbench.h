/* kinbench C API: synthetic kinematic-chain benchmark (dataset generation,
 * estimator training, evaluation). All functions return kb_status unless
 * they allocate a handle; failures leave a thread-local message readable
 * via kb_last_error(). Handles are opaque and must be released with their
 * matching free/close call. */

#ifndef KINBENCH_H_
#define KINBENCH_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kb_status {
  KB_OK = 0,
  KB_ERR_INVALID_ARGUMENT = 1,
  KB_ERR_OUT_OF_RANGE = 2,
  KB_ERR_IO = 3,
  KB_ERR_FORMAT = 4,
  KB_ERR_STATE = 5,
  KB_ERR_NONFINITE = 6,
  KB_ERR_UNKNOWN = 7
} kb_status;

const char* kb_status_name(kb_status status);

/* Message for the most recent failure on this thread ("" if none). */
const char* kb_last_error(void);

/* ------------------------------------------------------------------ */
/* Dataset generation                                                  */

typedef struct kb_generate_opts {
  uint64_t seed;
  int per_n;          /* instances per moving-link count (1..6 each) */
  int frames;         /* time steps per instance */
  int cameras;        /* rig size */
  int width, height;  /* image resolution */
  double fps;
  double link_radius;     /* capsule radius, meters */
  double fov_y_deg;       /* vertical field of view */
  double rig_radius;      /* camera circle radius, meters */
  double rig_height;      /* camera height, meters */
  double near_plane, far_plane;
  int ground_plane;       /* 0/1 */
  double train_fraction, val_fraction, test_fraction;
  int jobs;               /* worker threads; output independent of this */
} kb_generate_opts;

/* Fills every field with the library defaults. */
void kb_generate_opts_init(kb_generate_opts* opts);

typedef struct kb_generate_summary {
  int instances;
  uint64_t bytes;
  double seconds;
} kb_generate_summary;

kb_status kb_generate(const char* out_dir, const kb_generate_opts* opts,
                      kb_generate_summary* summary /* may be NULL */);

/* ------------------------------------------------------------------ */
/* Dataset access                                                      */

typedef struct kb_dataset kb_dataset;

kb_status kb_dataset_open(const char* dir, kb_dataset** out);
void kb_dataset_close(kb_dataset* dataset);

int kb_dataset_instance_count(const kb_dataset* dataset);

typedef struct kb_instance_info {
  char id[64];
  int n;
  uint64_t seed;
  double lengths[7];  /* n+1 meaningful entries, rest zero */
  char split[8];      /* "train", "val", "test" */
} kb_instance_info;

kb_status kb_dataset_instance_info(const kb_dataset* dataset, int index,
                                   kb_instance_info* info);

/* Regenerates one instance from its stored seed and rewrites the blob;
 * fails with KB_ERR_STATE if the rewritten bytes differ from the manifest. */
kb_status kb_dataset_regenerate(kb_dataset* dataset, const char* id);

/* Writes depth_camN.pgm / gray_camN.pgm for one time step of one instance
 * and returns the ground truth in `info` (may be NULL). */
kb_status kb_dataset_export_pgm(const kb_dataset* dataset, const char* id, int t,
                                const char* out_dir, kb_instance_info* info);

/* ------------------------------------------------------------------ */
/* Training and evaluation                                             */

typedef void (*kb_epoch_callback)(int epoch, double train_loss,
                                  double val_metric, void* user);

typedef struct kb_train_opts {
  int epochs;
  int batch;
  double lr;
  int use_sgd;        /* 0 = adam, 1 = sgd with momentum */
  double momentum;
  uint64_t seed;
  double val_target;  /* early-stop bar on the val metric; < 0 disables */
  int mv_train_stride;
  int tmp_train_cameras; /* use the first k cameras for temporal stacks; 0 = all */
  int eval_mv_stride;
  int threads;
  int augment_views;  /* multiview only: random cyclic view-start shifts */
  double lr_decay;        /* lr multiplier applied every lr_decay_every epochs */
  int lr_decay_every;     /* 0 disables the schedule */
  kb_epoch_callback on_epoch; /* optional progress hook, may be NULL */
  void* on_epoch_user;
} kb_train_opts;

void kb_train_opts_init(kb_train_opts* opts);

typedef struct kb_train_summary {
  int epochs_run;
  double final_train_loss;
  double final_val_metric;
} kb_train_summary;

/* arch: "CONV3D-Depth-MV", "LSTM-Grey-TMP", "REG3-Depth-MV", "E2E-Depth-MV".
 * Writes a checkpoint and a history CSV (either path may be NULL to skip). */
kb_status kb_train(kb_dataset* dataset, const char* arch,
                   const kb_train_opts* opts, const char* checkpoint_path,
                   const char* history_csv_path, kb_train_summary* summary);

typedef struct kb_model kb_model;

kb_status kb_model_load(const char* checkpoint_path, kb_model** out);
void kb_model_free(kb_model* model);

typedef struct kb_counter_eval {
  double accuracy;
  long stacks;
  long confusion[6][6]; /* [truth-1][pred-1] */
} kb_counter_eval;

/* Evaluates a counter checkpoint on the dataset's test split. */
kb_status kb_eval_counter(kb_dataset* dataset, const kb_model* model,
                          int eval_mv_stride, int threads,
                          kb_counter_eval* out);

/* Trains and evaluates a comma-separated list of architecture specs
 * ("CONV3D-Depth-MV,CONV3D-Depth-MV:e2e,...") and writes report files under
 * out_dir. */
kb_status kb_benchmark(kb_dataset* dataset, const char* specs_csv,
                       const kb_train_opts* opts, const char* out_dir,
                       const char* timestamp);

/* ------------------------------------------------------------------ */
/* Pure helpers (chain math and metrics)                               */

/* Scales lengths down to a 3 m total when they exceed it. */
kb_status kb_normalize_lengths(double* lengths, int count);

/* One-hot count label for n in 1..6. */
kb_status kb_count_label(int n, double out[6]);

/* Zero-padded 7-vector length label from n+1 link lengths. */
kb_status kb_padded_length_label(int n, const double* lengths, double out[7]);

/* Sum of squared differences between two padded 7-vectors. */
kb_status kb_length_error(const double truth[7], const double pred[7],
                          double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KINBENCH_H_ */
