#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "rfd/random.hpp"

namespace rfd {
namespace {

// Finite-difference gradient of the margin loss with Gaussian probes fd_step * u.
Tensor estimate(Oracle& oracle, const Tensor& at, std::size_t y, const NesParams& params,
                NormalSource& normal, const InputBox& box) {
  const std::size_t d = at.size();
  const auto margin = [&](const Tensor& p) {
    return loss(oracle.query_scores(clip(p, box.lo, box.hi)), y, LossKind::margin);
  };
  Tensor grad = Tensor::zeros({d});
  Tensor u = Tensor::zeros({d});
  if (params.antithetic) {
    const std::size_t pairs = std::max<std::size_t>(1, params.samples_per_step / 2);
    for (std::size_t j = 0; j < pairs; ++j) {
      for (double& v : u) v = normal();
      const double up = margin(at + params.fd_step * u);
      const double down = margin(at - params.fd_step * u);
      const double w = (up - down) / (2.0 * params.fd_step);
      for (std::size_t k = 0; k < d; ++k) grad[k] += w * u[k];
    }
  } else {
    const double base = margin(at);
    for (std::size_t j = 0; j < params.samples_per_step; ++j) {
      for (double& v : u) v = normal();
      const double w = (margin(at + params.fd_step * u) - base) / params.fd_step;
      for (std::size_t k = 0; k < d; ++k) grad[k] += w * u[k];
    }
  }
  return grad;
}

}  // namespace

Tensor nes_gradient(Oracle& oracle, const Tensor& x, std::size_t y, const NesParams& params,
                    std::uint64_t seed, const InputBox& box) {
  params.validate();
  detail::require_access(oracle, AccessMode::score, "NES");
  detail::require_input(oracle, x);
  NormalSource normal(seed);
  return estimate(oracle, x, y, params, normal, box);
}

AttackResult nes_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                        const AttackBudget& budget, const NesParams& params,
                        const AttackOptions& opts) {
  budget.validate();
  params.validate();
  detail::require_access(oracle, AccessMode::score, "NES");
  detail::require_input(oracle, x);

  detail::QueryMeter meter(oracle, budget.max_queries);
  NormalSource normal(opts.seed);
  const auto margin = [&](const Tensor& p) {
    return loss(oracle.query_scores(p), y, LossKind::margin);
  };

  AttackResult result;
  result.x_adv = x;
  if (!meter.can_afford()) return detail::finish(std::move(result), x, budget, meter);

  Tensor current = x;
  double current_loss = margin(current);
  result.loss_trace.push_back({meter.used(), current_loss, detail::kNoValue});
  if (opts.on_iterate) opts.on_iterate(current);
  if (current_loss <= 0.0 && verify_success(oracle, current, y, opts.verification)) {
    result.success = true;
    return detail::finish(std::move(result), x, budget, meter);
  }

  const std::size_t pairs = std::max<std::size_t>(1, params.samples_per_step / 2);
  // Queries per step: the estimate plus one evaluation of the new iterate.
  const std::size_t step_cost =
      (params.antithetic ? 2 * pairs : params.samples_per_step + 1) + 1;
  const std::size_t d = x.size();

  while (meter.can_afford(step_cost)) {
    const Tensor grad = estimate(oracle, current, y, params, normal, opts.box);

    Tensor next = current;
    if (budget.norm == Norm::linf) {
      for (std::size_t k = 0; k < d; ++k) {
        next[k] -= params.lr * (grad[k] > 0.0 ? 1.0 : grad[k] < 0.0 ? -1.0 : 0.0);
      }
    } else {
      const double n = norm_l2(grad);
      if (n > 0.0) next = next - (params.lr / n) * grad;
    }
    current = project(next, x, budget, opts.box);
    current_loss = margin(current);
    result.loss_trace.push_back({meter.used(), current_loss, detail::kNoValue});
    if (opts.on_iterate) opts.on_iterate(current);
    if (current_loss <= 0.0 && verify_success(oracle, current, y, opts.verification)) {
      result.success = true;
      break;
    }
  }
  result.x_adv = current;
  return detail::finish(std::move(result), x, budget, meter);
}

}  // namespace rfd
