#pragma once

#include <cstdint>

#include "loss.hpp"
#include "net.hpp"

namespace kin::nn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t params_checked = 0;
};

// Central-difference verification of the analytic parameter gradients on a
// random subset of at least `samples` parameters. Relative error uses
// |a - n| / max(|a|, |n|, 1e-8). Run this on double networks: float
// round-off drowns the differences long before 1e-4.
GradCheckResult grad_check(Network<double>& net, const double* input,
                           LossKind loss_kind, const double* target,
                           double eps, int samples, std::uint64_t seed);

} // namespace kin::nn
