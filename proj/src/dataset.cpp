#include "dataset.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "crc32.hpp"

namespace kin::data {

static_assert(std::endian::native == std::endian::little,
              "on-disk format assumes a little-endian host");
static_assert(sizeof(float) == 4, "on-disk format assumes 32-bit floats");

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'K', 'C', 'B', '1'};
constexpr int kFormatVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_floats(std::vector<unsigned char>& out, const float* data,
                std::size_t count) {
  const std::size_t bytes = count * sizeof(float);
  const std::size_t off = out.size();
  out.resize(off + bytes);
  std::memcpy(out.data() + off, data, bytes);
}

std::uint32_t read_u32(const unsigned char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

std::string instance_rel_path(const std::string& id) {
  return "instances/" + id + ".kcb";
}

nlohmann::json vec3_to_json(const Vec3& v) {
  return nlohmann::json::array({v.x, v.y, v.z});
}

Vec3 vec3_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

nlohmann::json header_json(const InstanceRecord& inst) {
  return {{"format_version", kFormatVersion},
          {"id", inst.id},
          {"seed", inst.seed},
          {"n", inst.config.n},
          {"lengths", inst.config.lengths},
          {"colors", inst.config.colors},
          {"params", gen_params_to_json(inst.params)}};
}

} // namespace

const char* to_string(Modality m) {
  return m == Modality::depth ? "depth" : "gray";
}

const char* to_string(ViewMode m) {
  return m == ViewMode::temporal ? "temporal" : "multiview";
}

Modality modality_from_string(const std::string& s) {
  if (s == "depth") return Modality::depth;
  if (s == "gray" || s == "grey") return Modality::gray;
  throw std::invalid_argument("unknown modality '" + s + "'");
}

ViewMode view_mode_from_string(const std::string& s) {
  if (s == "temporal" || s == "tmp") return ViewMode::temporal;
  if (s == "multiview" || s == "mv") return ViewMode::multiview;
  throw std::invalid_argument("unknown view mode '" + s + "'");
}

nlohmann::json gen_params_to_json(const GenParams& p) {
  return {{"frames", p.frames},
          {"fps", p.fps},
          {"rig",
           {{"count", p.rig.count},
            {"radius", p.rig.radius},
            {"height", p.rig.height},
            {"target", vec3_to_json(p.rig.target)},
            {"fov_y", p.rig.fov_y},
            {"width", p.rig.width},
            {"height_px", p.rig.height_px},
            {"near", p.rig.near},
            {"far", p.rig.far}}},
          {"link_radius", p.link_radius},
          {"ground_plane", p.ground_plane},
          {"light_dir", vec3_to_json(p.light_dir)},
          {"ambient", p.ambient},
          {"motion",
           {{"theta_lo", p.motion.limits.lo},
            {"theta_hi", p.motion.limits.hi},
            {"max_joint_speed", p.motion.max_joint_speed},
            {"waypoint_spacing", p.motion.waypoint_spacing}}}};
}

GenParams gen_params_from_json(const nlohmann::json& j) {
  GenParams p;
  p.frames = j.at("frames").get<int>();
  p.fps = j.at("fps").get<double>();
  const auto& rig = j.at("rig");
  p.rig.count = rig.at("count").get<int>();
  p.rig.radius = rig.at("radius").get<double>();
  p.rig.height = rig.at("height").get<double>();
  p.rig.target = vec3_from_json(rig.at("target"));
  p.rig.fov_y = rig.at("fov_y").get<double>();
  p.rig.width = rig.at("width").get<int>();
  p.rig.height_px = rig.at("height_px").get<int>();
  p.rig.near = rig.at("near").get<double>();
  p.rig.far = rig.at("far").get<double>();
  p.link_radius = j.at("link_radius").get<double>();
  p.ground_plane = j.at("ground_plane").get<bool>();
  p.light_dir = vec3_from_json(j.at("light_dir"));
  p.ambient = j.at("ambient").get<double>();
  const auto& m = j.at("motion");
  p.motion.limits.lo = m.at("theta_lo").get<double>();
  p.motion.limits.hi = m.at("theta_hi").get<double>();
  p.motion.max_joint_speed = m.at("max_joint_speed").get<double>();
  p.motion.waypoint_spacing = m.at("waypoint_spacing").get<int>();
  p.motion.fps = p.fps;
  return p;
}

InstanceRecord generate_instance(std::uint64_t seed, int n, const GenParams& params) {
  InstanceRecord rec;
  rec.seed = seed;
  rec.params = params;
  rec.cameras = params.rig.count;
  rec.frames = params.frames;
  rec.width = params.rig.width;
  rec.height = params.rig.height_px;

  Rng rng(mix_seed(seed));
  rec.config = chain::sample_config(rng, n);

  motion::MotionParams motion_params = params.motion;
  motion_params.fps = params.fps;
  rec.trajectory = motion::sample_trajectory(rng, n, params.frames, motion_params);

  const auto rig = render::default_rig(params.rig);
  rec.depth.resize(static_cast<std::size_t>(rec.cameras) * rec.frames);
  rec.gray.resize(rec.depth.size());
  for (int t = 0; t < rec.frames; ++t) {
    const auto poses =
        chain::forward_kinematics(rec.config, motion::angles_at(rec.trajectory, t));
    const auto scene = render::scene_from_chain(rec.config, poses,
                                                params.link_radius,
                                                params.ground_plane);
    for (int c = 0; c < rec.cameras; ++c) {
      const std::size_t slot = static_cast<std::size_t>(c) * rec.frames + t;
      rec.depth[slot] = render::render_depth(scene, rig[static_cast<std::size_t>(c)]);
      rec.gray[slot] = render::render_gray(scene, rig[static_cast<std::size_t>(c)],
                                           params.light_dir, params.ambient);
    }
  }

  rec.count = chain::count_label(n);
  rec.lengths = chain::padded_length_label(rec.config);
  return rec;
}

SampleStack stack_temporal(const InstanceRecord& inst, int camera, Modality modality) {
  if (camera < 0 || camera >= inst.cameras) {
    throw std::out_of_range("stack_temporal: camera index out of range");
  }
  SampleStack stack;
  stack.mode = ViewMode::temporal;
  stack.modality = modality;
  stack.d = inst.frames;
  stack.h = inst.height;
  stack.w = inst.width;
  stack.n = inst.config.n;
  stack.count = inst.count;
  stack.lengths = inst.lengths;
  stack.data.reserve(static_cast<std::size_t>(stack.d) * stack.h * stack.w);
  for (int t = 0; t < inst.frames; ++t) {
    const auto& img = modality == Modality::depth ? inst.depth_at(camera, t)
                                                  : inst.gray_at(camera, t);
    stack.data.insert(stack.data.end(), img.pixels.begin(), img.pixels.end());
  }
  return stack;
}

SampleStack stack_multiview(const InstanceRecord& inst, int t, Modality modality) {
  if (t < 0 || t >= inst.frames) {
    throw std::out_of_range("stack_multiview: time step out of range");
  }
  SampleStack stack;
  stack.mode = ViewMode::multiview;
  stack.modality = modality;
  stack.d = inst.cameras;
  stack.h = inst.height;
  stack.w = inst.width;
  stack.n = inst.config.n;
  stack.count = inst.count;
  stack.lengths = inst.lengths;
  stack.data.reserve(static_cast<std::size_t>(stack.d) * stack.h * stack.w);
  for (int c = 0; c < inst.cameras; ++c) {
    const auto& img = modality == Modality::depth ? inst.depth_at(c, t)
                                                  : inst.gray_at(c, t);
    stack.data.insert(stack.data.end(), img.pixels.begin(), img.pixels.end());
  }
  return stack;
}

const ManifestEntry& Manifest::find(const std::string& id) const {
  for (const auto& e : instances) {
    if (e.id == id) return e;
  }
  throw std::invalid_argument("manifest: no instance with id '" + id + "'");
}

ManifestEntry write_instance(const InstanceRecord& inst, const std::string& dir) {
  const std::string header = header_json(inst).dump();
  std::vector<unsigned char> blob;
  const std::size_t plane = static_cast<std::size_t>(inst.width) * inst.height;
  const std::size_t image_bytes =
      static_cast<std::size_t>(inst.cameras) * inst.frames * 2 * plane * 4;
  blob.reserve(8 + header.size() + image_bytes + 64);

  blob.insert(blob.end(), kMagic, kMagic + 4);
  put_u32(blob, static_cast<std::uint32_t>(header.size()));
  blob.insert(blob.end(), header.begin(), header.end());

  const std::uint64_t payload_offset = blob.size();
  for (int c = 0; c < inst.cameras; ++c) {
    for (int t = 0; t < inst.frames; ++t) {
      put_floats(blob, inst.depth_at(c, t).pixels.data(), plane);
      put_floats(blob, inst.gray_at(c, t).pixels.data(), plane);
    }
  }
  std::vector<float> traj(inst.trajectory.angles.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    traj[i] = static_cast<float>(inst.trajectory.angles[i]);
  }
  put_floats(blob, traj.data(), traj.size());
  const std::uint32_t crc = crc32(blob.data(), blob.size());
  put_u32(blob, crc);

  const fs::path path = fs::path(dir) / instance_rel_path(inst.id);
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_instance: cannot open " + path.string());
  }
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
  if (!out) {
    throw std::runtime_error("write_instance: write failed for " + path.string());
  }

  ManifestEntry entry;
  entry.id = inst.id;
  entry.file = instance_rel_path(inst.id);
  entry.n = inst.config.n;
  entry.seed = inst.seed;
  entry.lengths = inst.config.lengths;
  entry.colors = inst.config.colors;
  entry.bytes = blob.size();
  entry.payload_offset = payload_offset;
  entry.crc32 = crc;
  return entry;
}

InstanceRecord read_kcb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_kcb: cannot open " + path);
  }
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (blob.size() < 12 || std::memcmp(blob.data(), kMagic, 4) != 0) {
    throw std::runtime_error("read_kcb: not a KCB1 file: " + path);
  }
  const std::uint32_t stored_crc = read_u32(blob.data() + blob.size() - 4);
  if (crc32(blob.data(), blob.size() - 4) != stored_crc) {
    throw std::runtime_error("read_kcb: checksum mismatch in " + path);
  }
  const std::uint32_t header_len = read_u32(blob.data() + 4);
  if (8 + static_cast<std::size_t>(header_len) + 4 > blob.size()) {
    throw std::runtime_error("read_kcb: corrupt header length in " + path);
  }
  const nlohmann::json header = nlohmann::json::parse(
      blob.begin() + 8, blob.begin() + 8 + header_len);
  if (header.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("read_kcb: unsupported format version in " + path);
  }

  InstanceRecord rec;
  rec.id = header.at("id").get<std::string>();
  rec.seed = header.at("seed").get<std::uint64_t>();
  rec.params = gen_params_from_json(header.at("params"));
  rec.config.n = header.at("n").get<int>();
  rec.config.lengths = header.at("lengths").get<std::vector<double>>();
  rec.config.colors = header.at("colors").get<std::vector<std::string>>();
  chain::validate(rec.config);
  rec.cameras = rec.params.rig.count;
  rec.frames = rec.params.frames;
  rec.width = rec.params.rig.width;
  rec.height = rec.params.rig.height_px;
  rec.count = chain::count_label(rec.config.n);
  rec.lengths = chain::padded_length_label(rec.config);

  const std::size_t plane = static_cast<std::size_t>(rec.width) * rec.height;
  const std::size_t traj_count =
      static_cast<std::size_t>(rec.frames) * rec.config.n;
  const std::size_t payload = 8 + header_len;
  const std::size_t expect = payload +
                             static_cast<std::size_t>(rec.cameras) * rec.frames *
                                 2 * plane * 4 +
                             traj_count * 4 + 4;
  if (blob.size() != expect) {
    throw std::runtime_error("read_kcb: truncated payload in " + path);
  }

  rec.depth.resize(static_cast<std::size_t>(rec.cameras) * rec.frames);
  rec.gray.resize(rec.depth.size());
  const unsigned char* p = blob.data() + payload;
  for (int c = 0; c < rec.cameras; ++c) {
    for (int t = 0; t < rec.frames; ++t) {
      const std::size_t slot = static_cast<std::size_t>(c) * rec.frames + t;
      for (auto* img : {&rec.depth[slot], &rec.gray[slot]}) {
        img->width = rec.width;
        img->height = rec.height;
        img->pixels.resize(plane);
        std::memcpy(img->pixels.data(), p, plane * 4);
        p += plane * 4;
      }
    }
  }
  rec.trajectory.frames = rec.frames;
  rec.trajectory.n = rec.config.n;
  rec.trajectory.fps = rec.params.fps;
  rec.trajectory.angles.resize(traj_count);
  for (std::size_t i = 0; i < traj_count; ++i) {
    float v;
    std::memcpy(&v, p, 4);
    p += 4;
    rec.trajectory.angles[i] = static_cast<double>(v);
  }
  return rec;
}

InstanceRecord load_instance(const std::string& dir, const ManifestEntry& entry) {
  const fs::path path = fs::path(dir) / entry.file;
  InstanceRecord rec = read_kcb(path.string());
  if (rec.id != entry.id || rec.seed != entry.seed || rec.config.n != entry.n) {
    throw std::runtime_error("load_instance: blob does not match manifest entry " +
                             entry.id);
  }
  return rec;
}

void save_manifest(const Manifest& manifest, const std::string& dir) {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& e : manifest.instances) {
    instances.push_back({{"id", e.id},
                         {"file", e.file},
                         {"n", e.n},
                         {"seed", e.seed},
                         {"lengths", e.lengths},
                         {"colors", e.colors},
                         {"bytes", e.bytes},
                         {"payload_offset", e.payload_offset},
                         {"crc32", e.crc32},
                         {"split", e.split}});
  }
  const nlohmann::json j = {{"format_version", manifest.format_version},
                            {"dataset_seed", manifest.dataset_seed},
                            {"per_n", manifest.per_n},
                            {"params", gen_params_to_json(manifest.params)},
                            {"split_fractions", manifest.split_fractions},
                            {"split_seed", manifest.split_seed},
                            {"instances", instances}};
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("save_manifest: cannot open " + path.string());
  }
  out << j.dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("save_manifest: write failed");
  }
}

Manifest load_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_manifest: cannot open " + path.string());
  }
  nlohmann::json j;
  in >> j;
  Manifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kFormatVersion) {
    throw std::runtime_error("load_manifest: unsupported format version");
  }
  m.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
  m.per_n = j.at("per_n").get<int>();
  m.params = gen_params_from_json(j.at("params"));
  m.split_fractions = j.at("split_fractions").get<std::array<double, 3>>();
  m.split_seed = j.at("split_seed").get<std::uint64_t>();
  for (const auto& e : j.at("instances")) {
    ManifestEntry entry;
    entry.id = e.at("id").get<std::string>();
    entry.file = e.at("file").get<std::string>();
    entry.n = e.at("n").get<int>();
    entry.seed = e.at("seed").get<std::uint64_t>();
    entry.lengths = e.at("lengths").get<std::vector<double>>();
    entry.colors = e.at("colors").get<std::vector<std::string>>();
    entry.bytes = e.at("bytes").get<std::uint64_t>();
    entry.payload_offset = e.at("payload_offset").get<std::uint64_t>();
    entry.crc32 = e.at("crc32").get<std::uint32_t>();
    entry.split = e.at("split").get<std::string>();
    m.instances.push_back(std::move(entry));
  }
  return m;
}

void make_splits(Manifest& manifest, const std::array<double, 3>& fractions,
                 std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("make_splits: fractions must sum to 1");
  }
  manifest.split_fractions = fractions;
  manifest.split_seed = seed;

  Rng rng(mix_seed(seed));
  for (int n = 1; n <= chain::kMaxMovingLinks; ++n) {
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < manifest.instances.size(); ++i) {
      if (manifest.instances[i].n == n) group.push_back(i);
    }
    if (group.empty()) continue;

    // Fisher-Yates on the group, then cut by largest-remainder counts.
    for (std::size_t i = group.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_index(i);
      std::swap(group[i - 1], group[j]);
    }
    const std::size_t g = group.size();
    std::array<std::size_t, 3> counts;
    std::array<double, 3> remainders;
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = fractions[static_cast<std::size_t>(k)] * static_cast<double>(g);
      counts[static_cast<std::size_t>(k)] = static_cast<std::size_t>(exact);
      remainders[static_cast<std::size_t>(k)] =
          exact - static_cast<double>(counts[static_cast<std::size_t>(k)]);
      assigned += counts[static_cast<std::size_t>(k)];
    }
    while (assigned < g) {
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        if (remainders[static_cast<std::size_t>(k)] >
            remainders[static_cast<std::size_t>(best)] + 1e-12) {
          best = k;
        }
      }
      ++counts[static_cast<std::size_t>(best)];
      remainders[static_cast<std::size_t>(best)] -= 1.0;
      ++assigned;
    }

    static const char* kSplitNames[3] = {"train", "val", "test"};
    std::size_t cursor = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t c = 0; c < counts[static_cast<std::size_t>(k)]; ++c) {
        manifest.instances[group[cursor++]].split = kSplitNames[k];
      }
    }
  }
}

GenerateSummary generate_dataset(const DatasetSpec& spec, const std::string& out_dir,
                                 ThreadPool& pool) {
  if (spec.per_n < 1) {
    throw std::invalid_argument("generate_dataset: per_n must be >= 1");
  }
  const double frac_sum = spec.fractions[0] + spec.fractions[1] + spec.fractions[2];
  if (std::abs(frac_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("generate_dataset: split fractions must sum to 1");
  }
  render::default_rig(spec.params.rig);  // validates rig before any writes

  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(fs::path(out_dir) / "instances");

  const int total = spec.per_n * chain::kMaxMovingLinks;
  std::vector<ManifestEntry> entries(static_cast<std::size_t>(total));
  pool.parallel_for(static_cast<std::size_t>(total), [&](std::size_t g, int) {
    const int n = static_cast<int>(g) / spec.per_n + 1;
    const int idx = static_cast<int>(g) % spec.per_n;
    char id[32];
    std::snprintf(id, sizeof(id), "n%d-%04d", n, idx);
    InstanceRecord rec =
        generate_instance(spec.seed ^ static_cast<std::uint64_t>(g), n, spec.params);
    rec.id = id;
    entries[g] = write_instance(rec, out_dir);
  });

  Manifest manifest;
  manifest.dataset_seed = spec.seed;
  manifest.per_n = spec.per_n;
  manifest.params = spec.params;
  manifest.instances = std::move(entries);
  make_splits(manifest, spec.fractions, spec.seed);
  save_manifest(manifest, out_dir);

  GenerateSummary summary;
  summary.instances = total;
  for (const auto& e : manifest.instances) summary.bytes += e.bytes;
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

bool regenerate_instance(const std::string& dir, const Manifest& manifest,
                         const std::string& id) {
  const ManifestEntry& entry = manifest.find(id);
  InstanceRecord rec = generate_instance(entry.seed, entry.n, manifest.params);
  rec.id = entry.id;
  const ManifestEntry fresh = write_instance(rec, dir);
  return fresh.crc32 == entry.crc32 && fresh.bytes == entry.bytes;
}

// ------------------------------------------------------------ PlaneReader

PlaneReader::PlaneReader(std::string dir, const Manifest& manifest)
    : dir_(std::move(dir)), manifest_(&manifest) {
  plane_values_ = static_cast<std::size_t>(manifest.params.rig.width) *
                  manifest.params.rig.height_px;
}

render::Image PlaneReader::read_plane(const ManifestEntry& entry, int camera,
                                      int t, Modality modality) const {
  const fs::path path = fs::path(dir_) / entry.file;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_plane: cannot open " + path.string());
  }
  render::Image img;
  img.width = manifest_->params.rig.width;
  img.height = manifest_->params.rig.height_px;
  img.pixels.resize(plane_values_);
  const int plane_index = modality == Modality::depth ? 0 : 1;
  const std::uint64_t offset =
      entry.payload_offset +
      ((static_cast<std::uint64_t>(camera) * manifest_->params.frames + t) * 2 +
       plane_index) *
          plane_values_ * 4;
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(plane_values_ * 4));
  if (!in) {
    throw std::runtime_error("read_plane: short read in " + path.string());
  }
  return img;
}

void PlaneReader::append_stacks(const ManifestEntry& entry, ViewMode mode,
                                Modality modality, const StackSelection& sel,
                                std::vector<StackSet::Item>& out) const {
  const fs::path path = fs::path(dir_) / entry.file;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("append_stacks: cannot open " + path.string());
  }
  const int frames = manifest_->params.frames;
  const int cameras = manifest_->params.rig.count;
  const int plane_index = modality == Modality::depth ? 0 : 1;
  const float scale = modality == Modality::depth
                          ? static_cast<float>(1.0 / manifest_->params.rig.far)
                          : 1.0f;

  std::array<float, 7> target7{};
  for (int i = 0; i <= entry.n; ++i) {
    target7[static_cast<std::size_t>(i)] =
        static_cast<float>(entry.lengths[static_cast<std::size_t>(i)]);
  }

  auto read_plane_into = [&](int camera, int t, float* dst) {
    const std::uint64_t offset =
        entry.payload_offset +
        ((static_cast<std::uint64_t>(camera) * frames + t) * 2 + plane_index) *
            plane_values_ * 4;
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(dst),
            static_cast<std::streamsize>(plane_values_ * 4));
    if (!in) {
      throw std::runtime_error("append_stacks: short read in " + path.string());
    }
    if (scale != 1.0f) {
      for (std::size_t i = 0; i < plane_values_; ++i) dst[i] *= scale;
    }
  };

  if (mode == ViewMode::multiview) {
    const int stride = std::max(1, sel.mv_stride);
    for (int t = 0; t < frames; t += stride) {
      StackSet::Item item;
      item.n = entry.n;
      item.target7 = target7;
      item.data.resize(static_cast<std::size_t>(cameras) * plane_values_);
      for (int c = 0; c < cameras; ++c) {
        read_plane_into(c, t, item.data.data() + static_cast<std::size_t>(c) * plane_values_);
      }
      out.push_back(std::move(item));
    }
  } else {
    std::vector<int> cams = sel.cameras;
    if (cams.empty()) {
      cams.resize(static_cast<std::size_t>(cameras));
      for (int c = 0; c < cameras; ++c) cams[static_cast<std::size_t>(c)] = c;
    }
    for (const int c : cams) {
      if (c < 0 || c >= cameras) {
        throw std::out_of_range("append_stacks: camera index out of range");
      }
      StackSet::Item item;
      item.n = entry.n;
      item.target7 = target7;
      item.data.resize(static_cast<std::size_t>(frames) * plane_values_);
      for (int t = 0; t < frames; ++t) {
        read_plane_into(c, t, item.data.data() + static_cast<std::size_t>(t) * plane_values_);
      }
      out.push_back(std::move(item));
    }
  }
}

std::vector<const ManifestEntry*> split_entries(const Manifest& manifest,
                                                const std::string& split) {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : manifest.instances) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

StackSet load_stack_set(const std::string& dir, const Manifest& manifest,
                        const std::string& split, ViewMode mode, Modality modality,
                        const StackSelection& sel) {
  StackSet set;
  set.mode = mode;
  set.modality = modality;
  set.h = manifest.params.rig.height_px;
  set.w = manifest.params.rig.width;
  set.d = mode == ViewMode::multiview ? manifest.params.rig.count
                                      : manifest.params.frames;

  PlaneReader reader(dir, manifest);
  for (const ManifestEntry* entry : split_entries(manifest, split)) {
    if (sel.only_n != 0 && entry->n != sel.only_n) continue;
    reader.append_stacks(*entry, mode, modality, sel, set.items);
  }
  return set;
}

} // namespace kin::data
