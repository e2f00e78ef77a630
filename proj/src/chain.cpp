#include "chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kin::chain {

bool is_palette_color(const std::string& name) {
  return std::find(kPalette.begin(), kPalette.end(), name) != kPalette.end();
}

void validate(const ChainConfig& config) {
  if (config.n < kMinMovingLinks || config.n > kMaxMovingLinks) {
    throw std::invalid_argument("chain: moving-link count out of range [1,6]");
  }
  const auto expected = static_cast<std::size_t>(config.n) + 1;
  if (config.lengths.size() != expected) {
    throw std::invalid_argument("chain: lengths must have n+1 entries");
  }
  if (config.colors.size() != expected) {
    throw std::invalid_argument("chain: colors must have n+1 entries");
  }
  double sum = 0.0;
  for (double len : config.lengths) {
    if (!(len > 0.0)) {
      throw std::invalid_argument("chain: link lengths must be positive");
    }
    sum += len;
  }
  if (sum > kMaxTotalLength + 1e-9) {
    throw std::invalid_argument("chain: total length exceeds 3 m");
  }
  for (const auto& color : config.colors) {
    if (!is_palette_color(color)) {
      throw std::invalid_argument("chain: unknown color tag '" + color + "'");
    }
  }
}

std::vector<double> normalize_lengths(const std::vector<double>& raw) {
  for (double len : raw) {
    if (!(len > 0.0)) {
      throw std::invalid_argument("normalize_lengths: entries must be positive");
    }
  }
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (sum < kMaxTotalLength) {
    return raw;
  }
  std::vector<double> scaled(raw.size());
  const double scale = kMaxTotalLength / sum;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    scaled[i] = raw[i] * scale;
  }
  return scaled;
}

std::vector<double> sample_raw_lengths(Rng& rng, int n) {
  if (n < kMinMovingLinks || n > kMaxMovingLinks) {
    throw std::invalid_argument("sample_raw_lengths: n out of range [1,6]");
  }
  std::vector<double> raw(static_cast<std::size_t>(n) + 1);
  raw[0] = rng.uniform(kBaseLengthLo, kBaseLengthHi);
  for (int i = 1; i <= n; ++i) {
    raw[static_cast<std::size_t>(i)] = rng.uniform(kMovingLengthLo, kMovingLengthHi);
  }
  return raw;
}

ChainConfig sample_config(Rng& rng, int n) {
  ChainConfig config;
  config.n = n;
  config.lengths = normalize_lengths(sample_raw_lengths(rng, n));
  config.colors.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    config.colors.emplace_back(kPalette[rng.uniform_index(kPalette.size())]);
  }
  return config;
}

LinkPoses forward_kinematics(const ChainConfig& config, const JointState& state) {
  if (state.angles.size() != static_cast<std::size_t>(config.n)) {
    throw std::invalid_argument("forward_kinematics: angle count must equal n");
  }
  // Root at the origin, base link along +x, articulation in the z=0 plane.
  LinkPoses poses;
  poses.endpoints.reserve(static_cast<std::size_t>(config.n) + 2);
  poses.endpoints.push_back({0.0, 0.0, 0.0});
  poses.endpoints.push_back({config.lengths[0], 0.0, 0.0});
  double heading = 0.0;
  for (int i = 1; i <= config.n; ++i) {
    heading += state.angles[static_cast<std::size_t>(i) - 1];
    const Vec3& prev = poses.endpoints.back();
    const double len = config.lengths[static_cast<std::size_t>(i)];
    poses.endpoints.push_back(
        {prev.x + len * std::cos(heading), prev.y + len * std::sin(heading), prev.z});
  }
  return poses;
}

CountLabel count_label(int n) {
  if (n < kMinMovingLinks || n > kMaxMovingLinks) {
    throw std::invalid_argument("count_label: n out of range [1,6]");
  }
  CountLabel label;
  label.onehot[static_cast<std::size_t>(n) - 1] = 1.0;
  return label;
}

LengthLabel padded_length_label(const ChainConfig& config) {
  LengthLabel label;
  for (int i = 0; i <= config.n; ++i) {
    label.padded[static_cast<std::size_t>(i)] = config.lengths[static_cast<std::size_t>(i)];
  }
  return label;
}

} // namespace kin::chain
