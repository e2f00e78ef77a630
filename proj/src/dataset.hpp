#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chain.hpp"
#include "json.hpp"
#include "motion.hpp"
#include "render.hpp"
#include "threadpool.hpp"

namespace kin::data {

enum class Modality { depth, gray };
enum class ViewMode { temporal, multiview };

const char* to_string(Modality m);
const char* to_string(ViewMode m);
Modality modality_from_string(const std::string& s);
ViewMode view_mode_from_string(const std::string& s);

// Everything that determines the pixels of a generated instance. Stored in
// the manifest and in every .kcb header so a dataset can be regenerated
// bit-exactly from seeds alone.
struct GenParams {
  int frames = 100;
  double fps = 10.0;
  render::RigParams rig;
  double link_radius = 0.05;
  bool ground_plane = false;
  Vec3 light_dir{0.4, -0.3, 0.85};
  double ambient = 0.25;
  motion::MotionParams motion;
};

nlohmann::json gen_params_to_json(const GenParams& p);
GenParams gen_params_from_json(const nlohmann::json& j);

struct InstanceRecord {
  std::string id;
  std::uint64_t seed = 0;
  GenParams params;
  chain::ChainConfig config;
  motion::JointTrajectory trajectory;
  int cameras = 0;
  int frames = 0;
  int width = 0;
  int height = 0;
  std::vector<render::Image> depth;  // index camera * frames + t
  std::vector<render::Image> gray;
  chain::CountLabel count;
  chain::LengthLabel lengths;

  const render::Image& depth_at(int camera, int t) const {
    return depth[static_cast<std::size_t>(camera) * frames + t];
  }
  const render::Image& gray_at(int camera, int t) const {
    return gray[static_cast<std::size_t>(camera) * frames + t];
  }
};

// Deterministic in (seed, n, params): chain config, trajectory, and every
// rendered frame come from a single seeded stream.
InstanceRecord generate_instance(std::uint64_t seed, int n, const GenParams& params);

// One network input: D frames stacked along the leading axis. Temporal mode
// fixes the camera and stacks time; multiview fixes the time step and
// stacks cameras. Pixel values are raw (meters / [0,1] luma).
struct SampleStack {
  ViewMode mode = ViewMode::multiview;
  Modality modality = Modality::depth;
  int d = 0, h = 0, w = 0;
  std::vector<float> data;  // d*h*w, channel dimension of 1 implied
  int n = 0;
  chain::CountLabel count;
  chain::LengthLabel lengths;
};

SampleStack stack_temporal(const InstanceRecord& inst, int camera, Modality modality);
SampleStack stack_multiview(const InstanceRecord& inst, int t, Modality modality);

struct ManifestEntry {
  std::string id;
  std::string file;  // relative to the dataset dir
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<double> lengths;
  std::vector<std::string> colors;
  std::uint64_t bytes = 0;
  std::uint64_t payload_offset = 0;
  std::uint32_t crc32 = 0;
  std::string split;  // "", "train", "val", "test"
};

struct Manifest {
  int format_version = 1;
  std::uint64_t dataset_seed = 0;
  int per_n = 0;
  GenParams params;
  std::array<double, 3> split_fractions{0.0, 0.0, 0.0};
  std::uint64_t split_seed = 0;
  std::vector<ManifestEntry> instances;

  const ManifestEntry& find(const std::string& id) const;
};

// Binary instance blob. Layout:
//   "KCB1" | u32 header bytes | UTF-8 JSON header |
//   image payload (camera-major, then time, depth plane then gray plane,
//   each H*W float32 row-major) | trajectory float32 frames*n |
//   u32 CRC-32 of all preceding bytes.
// All integers and floats little-endian.
ManifestEntry write_instance(const InstanceRecord& inst, const std::string& dir);
InstanceRecord load_instance(const std::string& dir, const ManifestEntry& entry);
InstanceRecord read_kcb(const std::string& path);

void save_manifest(const Manifest& manifest, const std::string& dir);
Manifest load_manifest(const std::string& dir);

// Instance-level stratified split assignment: within each n the instances
// are shuffled by `seed` and cut by the fractions (largest-remainder
// rounding), so one object's frames never cross splits.
void make_splits(Manifest& manifest, const std::array<double, 3>& fractions,
                 std::uint64_t seed);

struct DatasetSpec {
  GenParams params;
  int per_n = 100;
  std::uint64_t seed = 0;
  std::array<double, 3> fractions{0.6, 0.1, 0.3};
};

struct GenerateSummary {
  int instances = 0;
  std::uint64_t bytes = 0;
  double seconds = 0.0;
};

// Generates per_n instances for every n in 1..6 with per-instance seeds
// (dataset seed XOR instance index), writes blobs + manifest. Parallel
// across instances; output is identical for any pool size.
GenerateSummary generate_dataset(const DatasetSpec& spec, const std::string& out_dir,
                                 ThreadPool& pool);

// Regenerates one instance from its manifest seed and rewrites the blob.
// Returns false if the rewritten bytes do not match the manifest entry.
bool regenerate_instance(const std::string& dir, const Manifest& manifest,
                         const std::string& id);

// ---------------------------------------------------------------------
// Training-side access: materialized stack sets and streaming readers.

struct StackSelection {
  int mv_stride = 1;          // take every k-th time step (multiview)
  std::vector<int> cameras;   // temporal cameras; empty = all
  int only_n = 0;             // restrict to instances with this n (0 = all)
};

// Flat training set held in memory. Depth values are pre-divided by the far
// plane so the network sees unitless inputs; gray is already in [0, 1].
struct StackSet {
  ViewMode mode = ViewMode::multiview;
  Modality modality = Modality::depth;
  int d = 0, h = 0, w = 0;
  struct Item {
    std::vector<float> data;
    int n = 0;
    std::array<float, 7> target7{};
  };
  std::vector<Item> items;

  std::size_t stack_count() const { return items.size(); }
  std::size_t stack_size() const {
    return static_cast<std::size_t>(d) * h * w;
  }
};

// Reads stored planes directly at their file offsets; used by the training
// data loader and the streaming evaluator so a 10 GB dataset never has to
// be resident.
class PlaneReader {
public:
  PlaneReader(std::string dir, const Manifest& manifest);

  render::Image read_plane(const ManifestEntry& entry, int camera, int t,
                           Modality modality) const;
  // All planes needed for the stacks of one instance, normalized for
  // network input, appended to `out`.
  void append_stacks(const ManifestEntry& entry, ViewMode mode, Modality modality,
                     const StackSelection& sel, std::vector<StackSet::Item>& out) const;

  int frames() const { return manifest_->params.frames; }
  int cameras() const { return manifest_->params.rig.count; }

private:
  std::string dir_;
  const Manifest* manifest_;
  std::size_t plane_values_;  // H*W
};

StackSet load_stack_set(const std::string& dir, const Manifest& manifest,
                        const std::string& split, ViewMode mode, Modality modality,
                        const StackSelection& sel);

std::vector<const ManifestEntry*> split_entries(const Manifest& manifest,
                                                const std::string& split);

} // namespace kin::data
