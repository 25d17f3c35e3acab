#include <algorithm>
#include <cmath>
#include <limits>

#include "internal.hpp"
#include "rfd/random.hpp"

namespace rfd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LineSearch {
  std::optional<double> radius;
  bool exhausted = false;
};

// Query points along x + r * dir (dir unit-l2), clipped to the box.
class Ray {
 public:
  Ray(Oracle& oracle, const Tensor& x, std::size_t y, const Tensor& d,
      std::optional<InputBox> box)
      : oracle_(oracle), x_(x), y_(y), box_(box) {
    const double n = norm_l2(d);
    if (!(n > 0.0)) throw std::invalid_argument("search direction must be nonzero");
    dir_ = (1.0 / n) * d;
  }

  Tensor point(double r) const {
    Tensor p = x_ + r * dir_;
    return box_ ? clip(p, box_->lo, box_->hi) : p;
  }
  bool flipped(double r) { return oracle_.query_label(point(r)) != y_; }

 private:
  Oracle& oracle_;
  const Tensor& x_;
  std::size_t y_;
  std::optional<InputBox> box_;
  Tensor dir_;
};

// Bisection between an unflipped lo and a flipped hi; returns the final hi.
LineSearch bisect(Ray& ray, double lo, double hi, double tol, const detail::QueryMeter* meter) {
  while (hi - lo > tol) {
    if (meter && !meter->can_afford()) return {hi, true};
    const double mid = 0.5 * (lo + hi);
    if (ray.flipped(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {hi, false};
}

LineSearch search_boundary(Ray& ray, double r_hi, double tol, double r_start,
                           const detail::QueryMeter* meter) {
  double lo = 0.0;
  double r = std::min(r_start, r_hi);
  while (true) {
    if (meter && !meter->can_afford()) return {std::nullopt, true};
    if (ray.flipped(r)) return bisect(ray, lo, r, tol, meter);
    if (r >= r_hi) return {std::nullopt, false};
    lo = r;
    r = std::min(2.0 * r, r_hi);
  }
}

double default_start(double r_hi, double tol) { return std::max(tol, r_hi / 1024.0); }

}  // namespace

std::optional<double> boundary_distance(Oracle& oracle, const Tensor& x, std::size_t y,
                                        const Tensor& d, double r_hi, double tol,
                                        std::optional<InputBox> box,
                                        std::optional<double> r_start) {
  detail::require_access(oracle, AccessMode::decision, "boundary search");
  detail::require_input(oracle, x);
  if (d.size() != x.size()) throw ShapeError("direction length does not match the input");
  if (!(r_hi > 0.0) || !(tol > 0.0)) throw std::invalid_argument("r_hi and tol must be positive");
  Ray ray(oracle, x, y, d, box);
  return search_boundary(ray, r_hi, tol, r_start.value_or(default_start(r_hi, tol)), nullptr)
      .radius;
}

AttackResult rays_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                         const AttackBudget& budget, const AttackOptions& opts,
                         const RaysParams& params) {
  budget.validate();
  if (budget.norm != Norm::linf) throw std::invalid_argument("RayS is implemented for linf only");
  detail::require_access(oracle, AccessMode::decision, "RayS");
  detail::require_input(oracle, x);

  const std::size_t d = x.size();
  detail::QueryMeter meter(oracle, budget.max_queries);
  const double r_hi = (opts.box.hi - opts.box.lo) * std::sqrt(static_cast<double>(d));
  const double tol = params.search_tol;

  Tensor dir = Tensor::filled(d, 1.0);
  double best_r = kInf;
  AttackResult result;
  result.x_adv = x;

  const auto adversarial_point = [&](const Tensor& direction, double r) {
    return Ray(oracle, x, y, direction, opts.box).point(r);
  };
  bool done = false;
  const auto record = [&] {
    result.loss_trace.push_back({meter.used(), detail::kNoValue, best_r});
    const Tensor candidate = adversarial_point(dir, best_r);
    if (norm_linf(candidate - x) <= budget.epsilon) {
      done = verify_success(oracle, candidate, y, opts.verification);
    }
  };

  {
    Ray ray(oracle, x, y, dir, opts.box);
    const LineSearch first = search_boundary(ray, r_hi, tol, default_start(r_hi, tol), &meter);
    if (first.radius) {
      best_r = *first.radius;
      record();
    }
  }

  std::size_t level = 0;
  std::size_t block = 0;
  while (!done && meter.can_afford()) {
    const std::size_t chunk = (d + (std::size_t{1} << level) - 1) >> level;
    const std::size_t begin = block * chunk;
    const std::size_t end = std::min(d, begin + chunk);
    Tensor candidate = dir;
    for (std::size_t k = begin; k < end; ++k) candidate[k] = -candidate[k];

    Ray ray(oracle, x, y, candidate, opts.box);
    if (std::isfinite(best_r)) {
      // Fast check at the current best radius: one query rejects the direction.
      if (ray.flipped(best_r)) {
        const LineSearch refined = bisect(ray, 0.0, best_r, tol, &meter);
        if (refined.radius && *refined.radius < best_r) {
          best_r = *refined.radius;
          dir = candidate;
          record();
        }
      }
    } else {
      const LineSearch found = search_boundary(ray, r_hi, tol, default_start(r_hi, tol), &meter);
      if (found.radius) {
        best_r = *found.radius;
        dir = candidate;
        record();
      }
    }

    ++block;
    if (block * chunk >= d) {
      block = 0;
      level = chunk == 1 ? 0 : level + 1;
    }
  }

  result.success = done;
  if (std::isfinite(best_r)) {
    result.x_adv = project(adversarial_point(dir, best_r), x, budget, opts.box);
  }
  return detail::finish(std::move(result), x, budget, meter);
}

AttackResult signflip_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                             const AttackBudget& budget, const SignFlipParams& params,
                             const AttackOptions& opts) {
  budget.validate();
  params.validate();
  if (budget.norm != Norm::linf) throw std::invalid_argument("SignFlip is implemented for linf only");
  detail::require_access(oracle, AccessMode::decision, "SignFlip");
  detail::require_input(oracle, x);

  const std::size_t d = x.size();
  detail::QueryMeter meter(oracle, budget.max_queries);
  Rng rng(opts.seed);
  std::bernoulli_distribution coin(0.5);
  const auto adversarial = [&](const Tensor& p) { return oracle.query_label(p) != y; };

  AttackResult result;
  result.x_adv = x;

  // Random sign corners, starting on the epsilon sphere and doubling the
  // radius until one is misclassified or the restart cap is reached.
  const double max_radius = opts.box.hi - opts.box.lo;
  std::optional<Tensor> start;
  std::size_t restarts = 0;
  for (double r = budget.epsilon; !start && restarts < params.restart_cap; r *= 2.0) {
    const double radius = std::min(r, max_radius);
    for (std::size_t t = 0; t < params.tries_per_radius && restarts < params.restart_cap; ++t) {
      if (!meter.can_afford()) break;
      Tensor p = x;
      for (double& v : p) v += coin(rng) ? radius : -radius;
      p = clip(p, opts.box.lo, opts.box.hi);
      ++restarts;
      if (adversarial(p)) {
        start = std::move(p);
        break;
      }
    }
    if (!meter.can_afford() || radius >= max_radius) break;
  }
  if (!start) return detail::finish(std::move(result), x, budget, meter);

  Tensor current = *start;
  double radius = norm_linf(current - x);
  result.loss_trace.push_back({meter.used(), detail::kNoValue, radius});
  bool done = radius <= budget.epsilon && verify_success(oracle, current, y, opts.verification);

  const auto flips = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(params.flip_fraction * static_cast<double>(d))));
  std::vector<std::size_t> coords(d);
  for (std::size_t k = 0; k < d; ++k) coords[k] = k;

  bool shrink_turn = true;
  while (!done && meter.can_afford()) {
    Tensor proposal = current;
    if (shrink_turn) {
      const double target = (1.0 - params.alpha) * radius;
      for (std::size_t k = 0; k < d; ++k) {
        proposal[k] = std::clamp(proposal[k], x[k] - target, x[k] + target);
      }
    } else {
      std::shuffle(coords.begin(), coords.end(), rng);
      for (std::size_t j = 0; j < flips; ++j) {
        const std::size_t k = coords[j];
        proposal[k] = x[k] - (proposal[k] - x[k]);
      }
      proposal = clip(proposal, opts.box.lo, opts.box.hi);
    }
    shrink_turn = !shrink_turn;

    const double proposal_radius = norm_linf(proposal - x);
    if (proposal_radius <= radius && adversarial(proposal)) {
      current = std::move(proposal);
      radius = proposal_radius;
      result.loss_trace.push_back({meter.used(), detail::kNoValue, radius});
      if (radius <= budget.epsilon) done = verify_success(oracle, current, y, opts.verification);
    }
  }

  result.success = done;
  result.x_adv = radius <= budget.epsilon ? current : project(current, x, budget, opts.box);
  return detail::finish(std::move(result), x, budget, meter);
}

}  // namespace rfd
