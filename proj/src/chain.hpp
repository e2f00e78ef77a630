#pragma once

#include <array>
#include <string>
#include <vector>

#include "geom.hpp"
#include "rng.hpp"

namespace kin::chain {

inline constexpr int kMinMovingLinks = 1;
inline constexpr int kMaxMovingLinks = 6;
inline constexpr double kMaxTotalLength = 3.0;

// Base-link length bounds and moving-link length bounds for sampling,
// before total-length normalization.
inline constexpr double kBaseLengthLo = 1.3;
inline constexpr double kBaseLengthHi = 2.0;
inline constexpr double kMovingLengthLo = 0.3;
inline constexpr double kMovingLengthHi = 1.0;

inline constexpr std::array<const char*, 8> kPalette = {
    "black", "white", "red", "orange", "blue", "green", "yellow", "indigo"};

// A sampled chain: one stationary base link plus n actuated links, each
// joined to its parent by a revolute joint. All joint axes are parallel, so
// the chain articulates in a single plane.
struct ChainConfig {
  int n = 0;                        // moving links; total links = n + 1
  std::vector<double> lengths;      // n + 1 entries, meters, index 0 = base
  std::vector<std::string> colors;  // n + 1 palette names
};

struct JointState {
  std::vector<double> angles;  // n entries, radians
};

// World-space chain skeleton: root, then the distal end of each link.
struct LinkPoses {
  std::vector<Vec3> endpoints;  // n + 2 points
};

struct CountLabel {
  std::array<double, 6> onehot{};
};

struct LengthLabel {
  std::array<double, 7> padded{};
};

struct JointLimits {
  double lo = -2.5;
  double hi = 2.5;
};

// Throws std::invalid_argument when any ChainConfig invariant is violated.
void validate(const ChainConfig& config);

bool is_palette_color(const std::string& name);

// Scales the lengths so they sum to kMaxTotalLength when the raw sum reaches
// it; shorter chains pass through unchanged. Throws on non-positive entries.
std::vector<double> normalize_lengths(const std::vector<double>& raw);

// Raw length draws: base from U[1.3, 2.0], moving links from U[0.3, 1.0].
std::vector<double> sample_raw_lengths(Rng& rng, int n);

ChainConfig sample_config(Rng& rng, int n);

LinkPoses forward_kinematics(const ChainConfig& config, const JointState& state);

CountLabel count_label(int n);

LengthLabel padded_length_label(const ChainConfig& config);

} // namespace kin::chain
