#pragma once

#include "chain.hpp"
#include "rng.hpp"

#include <vector>

namespace kin::motion {

struct MotionParams {
  chain::JointLimits limits;
  double max_joint_speed = 1.0;  // rad/s
  int waypoint_spacing = 20;     // frames between random waypoints
  double fps = 10.0;
};

// Per-frame joint angles for one sequence. Row-major frames x n.
struct JointTrajectory {
  int frames = 0;
  int n = 0;
  double fps = 10.0;
  std::vector<double> angles;

  double at(int t, int joint) const {
    return angles[static_cast<std::size_t>(t) * n + joint];
  }
};

// Random waypoints every `waypoint_spacing` frames, linearly interpolated,
// with the per-frame step clamped to max_joint_speed / fps. The clamp keeps
// each angle between its bracketing waypoints, so the trajectory never
// leaves the joint limits.
JointTrajectory sample_trajectory(Rng& rng, int n, int frames,
                                  const MotionParams& params = {});

chain::JointState angles_at(const JointTrajectory& traj, int t);

} // namespace kin::motion
