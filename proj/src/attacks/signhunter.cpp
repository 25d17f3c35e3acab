#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace rfd {

AttackResult signhunter_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                               const AttackBudget& budget, const AttackOptions& opts) {
  budget.validate();
  if (budget.norm != Norm::linf) throw std::invalid_argument("SignHunter is implemented for linf only");
  detail::require_access(oracle, AccessMode::score, "SignHunter");
  detail::require_input(oracle, x);

  const std::size_t d = x.size();
  const double eps = budget.epsilon;
  detail::QueryMeter meter(oracle, budget.max_queries);

  std::vector<double> sign(d, 1.0);
  const auto point = [&] {
    Tensor p = x;
    for (std::size_t k = 0; k < d; ++k) p[k] += eps * sign[k];
    return clip(p, opts.box.lo, opts.box.hi);
  };
  const auto margin = [&](const Tensor& p) {
    return loss(oracle.query_scores(p), y, LossKind::margin);
  };

  AttackResult result;
  result.x_adv = x;
  if (!meter.can_afford()) return detail::finish(std::move(result), x, budget, meter);

  double best = margin(point());
  result.loss_trace.push_back({meter.used(), best, detail::kNoValue});
  if (opts.on_iterate) opts.on_iterate(point());
  bool done = best <= 0.0 && verify_success(oracle, point(), y, opts.verification);

  // Binary halving tree over coordinate blocks: level h has 2^h blocks.
  const auto max_level = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(d))));
  std::size_t level = 0;
  std::size_t block = 0;
  while (!done && meter.can_afford()) {
    const std::size_t chunk = (d + (std::size_t{1} << level) - 1) >> level;
    const std::size_t begin = block * chunk;
    const std::size_t end = std::min(d, begin + chunk);
    for (std::size_t k = begin; k < end; ++k) sign[k] = -sign[k];
    const double candidate = margin(point());
    if (random_search_accept(candidate, best)) {
      best = candidate;
      result.loss_trace.push_back({meter.used(), best, detail::kNoValue});
      if (opts.on_iterate) opts.on_iterate(point());
      done = best <= 0.0 && verify_success(oracle, point(), y, opts.verification);
    } else {
      for (std::size_t k = begin; k < end; ++k) sign[k] = -sign[k];
    }
    ++block;
    if (block * chunk >= d) {
      block = 0;
      if (++level > max_level) level = 0;
    }
  }
  result.success = done;
  result.x_adv = point();
  return detail::finish(std::move(result), x, budget, meter);
}

}  // namespace rfd
