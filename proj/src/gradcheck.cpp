#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rng.hpp"

namespace kin::nn {

namespace {

double loss_only(Network<double>& net, const double* input, LossKind kind,
                 const double* target, double* scratch, double* dout) {
  const double* out = net.forward(input, scratch);
  const std::size_t k = static_cast<std::size_t>(net.output_count());
  return loss_sample<double>(kind, {out, k}, {target, k}, {dout, k}, 1.0);
}

} // namespace

GradCheckResult grad_check(Network<double>& net, const double* input,
                           LossKind loss_kind, const double* target,
                           double eps, int samples, std::uint64_t seed) {
  const std::size_t pcount = net.param_count();
  std::vector<double> scratch(net.scratch_count());
  std::vector<double> dout(static_cast<std::size_t>(net.output_count()));
  std::vector<double> analytic(pcount, 0.0);

  // Analytic gradient at the current parameters.
  const double* out = net.forward(input, scratch.data());
  const std::size_t k = static_cast<std::size_t>(net.output_count());
  loss_sample<double>(loss_kind, {out, k}, {target, k},
                      {dout.data(), k}, 1.0);
  net.backward(input, dout.data(), scratch.data(), analytic.data());

  // Sample distinct parameter indices (all of them if the model is small).
  Rng rng(mix_seed(seed));
  std::vector<std::size_t> indices;
  if (pcount <= static_cast<std::size_t>(samples)) {
    indices.resize(pcount);
    for (std::size_t i = 0; i < pcount; ++i) indices[i] = i;
  } else {
    indices.reserve(static_cast<std::size_t>(samples));
    std::vector<bool> taken(pcount, false);
    while (indices.size() < static_cast<std::size_t>(samples)) {
      const std::size_t i = rng.uniform_index(pcount);
      if (!taken[i]) {
        taken[i] = true;
        indices.push_back(i);
      }
    }
  }

  GradCheckResult result;
  auto params = net.params();
  for (const std::size_t i : indices) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double lp = loss_only(net, input, loss_kind, target, scratch.data(),
                                dout.data());
    params[i] = saved - eps;
    const double lm = loss_only(net, input, loss_kind, target, scratch.data(),
                                dout.data());
    params[i] = saved;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    result.max_rel_err =
        std::max(result.max_rel_err, std::abs(analytic[i] - numeric) / denom);
    ++result.params_checked;
  }
  return result;
}

} // namespace kin::nn
