#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "rfd/random.hpp"

namespace rfd {

AttackResult square_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                           const AttackBudget& budget, const SquareParams& params,
                           const AttackOptions& opts) {
  budget.validate();
  params.validate();
  if (budget.norm != Norm::linf) throw std::invalid_argument("Square attack is implemented for linf only");
  detail::require_access(oracle, AccessMode::score, "Square");
  detail::require_input(oracle, x);

  const GridShape grid = opts.grid.value_or(GridShape{x.size(), 1});
  const std::size_t c = grid.channels;
  const std::size_t s = grid.side;
  if (c * s * s != x.size()) throw ShapeError("Square grid does not match the input length");
  const double eps = budget.epsilon;

  detail::QueryMeter meter(oracle, budget.max_queries);
  Rng rng(opts.seed);
  std::bernoulli_distribution coin(0.5);
  const auto margin = [&](const Tensor& delta) {
    return loss(oracle.query_scores(clip(x + delta, opts.box.lo, opts.box.hi)), y,
                LossKind::margin);
  };
  const auto at = [&](std::size_t ch, std::size_t r, std::size_t col) {
    return (ch * s + r) * s + col;
  };

  AttackResult result;
  result.x_adv = x;
  if (!meter.can_afford()) return detail::finish(std::move(result), x, budget, meter);

  // Vertical stripes: one random sign per (channel, column).
  Tensor delta = Tensor::zeros(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t col = 0; col < s; ++col) {
      const double v = coin(rng) ? eps : -eps;
      for (std::size_t r = 0; r < s; ++r) delta[at(ch, r, col)] = v;
    }
  }
  double best = margin(delta);
  result.loss_trace.push_back({meter.used(), best, detail::kNoValue});
  const auto current = [&] { return clip(x + delta, opts.box.lo, opts.box.hi); };
  if (opts.on_iterate) opts.on_iterate(current());
  bool done = best <= 0.0 && verify_success(oracle, current(), y, opts.verification);

  for (std::size_t it = 1; !done && meter.can_afford(); ++it) {
    const double p = square_p_selection(params, it, budget.max_queries);
    const auto side = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(std::sqrt(p * static_cast<double>(s * s)))), 1, s);
    std::uniform_int_distribution<std::size_t> pos(0, s - side);
    const std::size_t r0 = pos(rng);
    const std::size_t c0 = pos(rng);

    Tensor proposal = delta;
    // Redraw until the window actually changes.
    for (int attempt = 0; attempt < 64; ++attempt) {
      bool changed = false;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = coin(rng) ? eps : -eps;
        for (std::size_t r = r0; r < r0 + side; ++r) {
          for (std::size_t col = c0; col < c0 + side; ++col) {
            proposal[at(ch, r, col)] = v;
            changed = changed || v != delta[at(ch, r, col)];
          }
        }
      }
      if (changed) break;
    }

    const double candidate = margin(proposal);
    if (random_search_accept(candidate, best)) {
      delta = proposal;
      best = candidate;
      result.loss_trace.push_back({meter.used(), best, detail::kNoValue});
      if (opts.on_iterate) opts.on_iterate(current());
      done = best <= 0.0 && verify_success(oracle, current(), y, opts.verification);
    }
  }
  result.success = done;
  result.x_adv = current();
  return detail::finish(std::move(result), x, budget, meter);
}

}  // namespace rfd
