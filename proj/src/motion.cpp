#include "motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kin::motion {

JointTrajectory sample_trajectory(Rng& rng, int n, int frames,
                                  const MotionParams& params) {
  if (n < 1) {
    throw std::invalid_argument("sample_trajectory: n must be >= 1");
  }
  if (frames < 1) {
    throw std::invalid_argument("sample_trajectory: frames must be >= 1");
  }
  if (params.waypoint_spacing < 1 || params.fps <= 0.0 ||
      params.max_joint_speed <= 0.0) {
    throw std::invalid_argument("sample_trajectory: bad motion parameters");
  }

  const int spacing = params.waypoint_spacing;
  const int segments = (frames - 1 + spacing - 1) / spacing;
  const int waypoint_count = segments + 1;

  // Waypoints are sampled joint-major per waypoint so the draw order is a
  // stable function of (n, frames, spacing).
  std::vector<double> waypoints(static_cast<std::size_t>(waypoint_count) * n);
  for (int w = 0; w < waypoint_count; ++w) {
    for (int j = 0; j < n; ++j) {
      waypoints[static_cast<std::size_t>(w) * n + j] =
          rng.uniform(params.limits.lo, params.limits.hi);
    }
  }

  JointTrajectory traj;
  traj.frames = frames;
  traj.n = n;
  traj.fps = params.fps;
  traj.angles.resize(static_cast<std::size_t>(frames) * n);

  const double max_step = params.max_joint_speed / params.fps;
  for (int j = 0; j < n; ++j) {
    double a = waypoints[j];
    traj.angles[j] = a;
    for (int t = 1; t < frames; ++t) {
      const int seg = std::min((t - 1) / spacing, segments - 1);
      const int seg_start = seg * spacing;
      const double w0 = waypoints[static_cast<std::size_t>(seg) * n + j];
      const double w1 = waypoints[static_cast<std::size_t>(seg + 1) * n + j];
      const double u =
          static_cast<double>(t - seg_start) / static_cast<double>(spacing);
      const double desired = w0 + (w1 - w0) * std::min(u, 1.0);
      a += std::clamp(desired - a, -max_step, max_step);
      traj.angles[static_cast<std::size_t>(t) * n + j] = a;
    }
  }
  return traj;
}

chain::JointState angles_at(const JointTrajectory& traj, int t) {
  if (t < 0 || t >= traj.frames) {
    throw std::out_of_range("angles_at: frame index out of range");
  }
  chain::JointState state;
  state.angles.assign(traj.angles.begin() + static_cast<std::ptrdiff_t>(t) * traj.n,
                      traj.angles.begin() + static_cast<std::ptrdiff_t>(t + 1) * traj.n);
  return state;
}

} // namespace kin::motion
