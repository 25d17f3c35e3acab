#include "rfd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rfd/errors.hpp"
#include "rfd/parallel.hpp"
#include "rfd/random.hpp"
#include "rfd/stats.hpp"

namespace rfd {
namespace {

void check_flip_domain(double nu, double mu, double grad_h_norm, double grad_x_norm) {
  if (!(mu > 0.0)) throw DomainError("attack variance mu must be positive");
  if (!(grad_x_norm > 0.0)) throw DomainError("input gradient norm must be positive");
  if (!(nu >= 0.0)) throw DomainError("defense variance nu must be nonnegative");
  if (!(grad_h_norm >= 0.0)) throw DomainError("feature gradient norm must be nonnegative");
}

double margin_at(const Model& model, const Tensor& x, std::size_t y) {
  return loss(forward(model, x), y, LossKind::margin);
}

// ||grad_h||^2 / ||grad_x||^2; +inf when only the input gradient vanishes.
double norm_ratio(const Model& model, const Tensor& x, std::size_t y, std::size_t cut) {
  const double gx = norm_l2(grad_input(model, x, y, LossKind::margin));
  const double gh = norm_l2(grad_at_layer(model, x, cut, y, LossKind::margin));
  if (gx == 0.0) return gh == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (gh * gh) / (gx * gx);
}

constexpr std::size_t kPartitions = 16;

}  // namespace

double cauchy_ratio_scale(double nu, double mu, double grad_h_norm, double grad_x_norm) {
  check_flip_domain(nu, mu, grad_h_norm, grad_x_norm);
  return std::sqrt(2.0 * nu / mu) * grad_h_norm / grad_x_norm;
}

double predicted_flip_prob(double nu, double mu, double grad_h_norm, double grad_x_norm) {
  check_flip_domain(nu, mu, grad_h_norm, grad_x_norm);
  const double inner = (2.0 * nu / mu) * (grad_h_norm * grad_h_norm) /
                       (grad_x_norm * grad_x_norm);
  if (inner == 0.0) return 0.0;
  return std::atan(-std::pow(inner, -0.5)) / std::numbers::pi + 0.5;
}

FlipPrediction predict_flip(double nu, double mu, double grad_h_norm, double grad_x_norm) {
  return {nu, mu, grad_h_norm, grad_x_norm,
          predicted_flip_prob(nu, mu, grad_h_norm, grad_x_norm)};
}

FlipEstimate empirical_flip_prob(const Model& model, const DefensePolicy& policy,
                                 const Tensor& x, std::size_t y, double mu,
                                 std::size_t trials, std::uint64_t seed, std::size_t jobs) {
  if (trials == 0) throw std::invalid_argument("empirical flip probability needs trials > 0");
  if (!(mu > 0.0)) throw DomainError("attack variance mu must be positive");
  policy.validate(model);
  const double base = margin_at(model, x, y);
  const double sd = std::sqrt(mu);

  struct Partial {
    std::size_t flips = 0;
    std::size_t resamples = 0;
  };
  std::vector<Partial> partials(kPartitions);
  parallel_for(kPartitions, jobs, [&](std::size_t part) {
    const std::size_t begin = trials * part / kPartitions;
    const std::size_t end = trials * (part + 1) / kPartitions;
    NormalSource proposals(derive_seed(seed, {0, part}));
    NormalSource defense(derive_seed(seed, {1, part}));
    Partial& out = partials[part];
    for (std::size_t t = begin; t < end; ++t) {
      Tensor moved = x;
      double deterministic = 0.0;
      while (true) {
        for (std::size_t k = 0; k < x.size(); ++k) moved[k] = x[k] + sd * proposals();
        deterministic = margin_at(model, moved, y) - base;
        if (deterministic != 0.0) break;
        ++out.resamples;
      }
      const double randomized =
          loss(randomized_forward(model, policy, moved, defense), y, LossKind::margin) -
          loss(randomized_forward(model, policy, x, defense), y, LossKind::margin);
      if (randomized * deterministic < 0.0) ++out.flips;
    }
  });

  FlipEstimate est;
  est.trials = trials;
  for (const Partial& p : partials) {
    est.flips += p.flips;
    est.resamples += p.resamples;
  }
  est.p_hat = static_cast<double>(est.flips) / static_cast<double>(trials);
  est.std_error = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(trials));
  return est;
}

std::string_view to_string(ProfilePhase phase) {
  return phase == ProfilePhase::raw ? "raw" : "perturbed";
}

std::vector<RatioProfile> ratio_profile(const Model& model, const Dataset& data,
                                        const std::vector<std::size_t>& layers, double nu,
                                        double mu, double phase_step) {
  if (data.size() == 0) throw std::invalid_argument("ratio profile of an empty dataset");
  if (!(mu > 0.0)) throw DomainError("attack variance mu must be positive");
  if (!(nu >= 0.0)) throw DomainError("defense variance nu must be nonnegative");
  for (std::size_t cut : layers) {
    if (cut > model.num_layers()) throw IndexError("profile layer " + std::to_string(cut) + " out of range");
  }

  std::vector<Tensor> stepped;
  stepped.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor& x = data.inputs[i];
    const Tensor g = grad_input(model, x, data.labels[i], LossKind::margin);
    Tensor p = x;
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] -= phase_step * (g[k] > 0.0 ? 1.0 : g[k] < 0.0 ? -1.0 : 0.0);
    }
    stepped.push_back(clip(p, data.box.lo, data.box.hi));
  }

  const double prefactor = 2.0 * nu / mu;
  std::vector<RatioProfile> out;
  for (std::size_t cut : layers) {
    for (ProfilePhase phase : {ProfilePhase::raw, ProfilePhase::perturbed}) {
      RatioProfile prof;
      prof.layer = cut;
      prof.phase = phase;
      std::vector<double> finite;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const Tensor& x = phase == ProfilePhase::raw ? data.inputs[i] : stepped[i];
        const double r = norm_ratio(model, x, data.labels[i], cut);
        prof.sample_ids.push_back(i);
        prof.ratios.push_back(r);
        prof.prefactored.push_back(prefactor * r);
        if (std::isfinite(prefactor * r)) finite.push_back(prefactor * r);
      }
      if (!finite.empty()) {
        constexpr std::array<double, 5> levels{0.05, 0.25, 0.5, 0.75, 0.95};
        for (std::size_t q = 0; q < levels.size(); ++q) prof.summary[q] = quantile(finite, levels[q]);
      } else {
        prof.summary.fill(std::numeric_limits<double>::quiet_NaN());
      }
      out.push_back(std::move(prof));
    }
  }
  return out;
}

RatioChange ratio_change_during_attack(const Model& model, Oracle& oracle,
                                       const AttackSettings& attack, const Tensor& x,
                                       std::size_t y, const AttackBudget& budget,
                                       std::size_t layer, const AttackOptions& opts,
                                       std::size_t record_every) {
  if (is_decision_attack(attack.id)) {
    throw std::invalid_argument("ratio change is tracked for score attacks only");
  }
  if (layer > model.num_layers()) throw IndexError("ratio layer out of range");
  if (record_every == 0) record_every = 1;

  RatioChange out;
  out.definition =
      "geometric mean of r[i+1]/r[i] over ratios r = ||grad_h||^2/||grad_x||^2 recorded at "
      "the starting iterate, every " + std::to_string(record_every) +
      "-th accepted iterate, and the final iterate";

  std::size_t seen = 0;
  AttackOptions hooked = opts;
  hooked.on_iterate = [&](const Tensor& iterate) {
    if (seen++ % record_every == 0) out.ratios.push_back(norm_ratio(model, iterate, y, layer));
    if (opts.on_iterate) opts.on_iterate(iterate);
  };
  const AttackResult result = run_attack(attack, oracle, x, y, budget, hooked);
  out.ratios.push_back(norm_ratio(model, result.x_adv, y, layer));

  std::vector<double> valid;
  for (double r : out.ratios) {
    if (std::isfinite(r) && r > 0.0) valid.push_back(r);
  }
  if (valid.size() < 2) {
    throw InsufficientDataError("fewer than two finite positive ratios recorded during the attack");
  }
  double log_sum = 0.0;
  for (std::size_t i = 1; i < valid.size(); ++i) log_sum += std::log(valid[i] / valid[i - 1]);
  out.change = std::exp(log_sum / static_cast<double>(valid.size() - 1));
  return out;
}

RobustnessMagnitude robustness_magnitude(const Model& model, const Dataset& data,
                                         std::size_t layer, double quantile_keep) {
  if (!(quantile_keep > 0.0 && quantile_keep < 1.0)) {
    throw std::invalid_argument("quantile_keep must lie in (0, 1)");
  }
  if (layer > model.num_layers()) throw IndexError("magnitude layer out of range");
  RobustnessMagnitude out;
  std::vector<double> grad_norms;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor& x = data.inputs[i];
    const std::size_t y = data.labels[i];
    const double l = margin_at(model, x, y);
    if (l <= 0.0) continue;
    const double gh = norm_l2(grad_at_layer(model, x, layer, y, LossKind::margin));
    if (gh == 0.0) continue;
    out.sample_ids.push_back(i);
    out.ratios.push_back(l / gh);
    grad_norms.push_back(gh);
  }
  if (out.ratios.empty()) {
    throw InsufficientDataError("no correctly classified samples with a nonzero feature gradient");
  }
  out.nu_star = quantile(out.ratios, 1.0 - quantile_keep);
  for (double gh : grad_norms) out.magnitudes.push_back(out.nu_star * gh);
  return out;
}

double decision_flip_variance(const Model& model, const DefensePolicy& policy,
                              const Tensor& x, std::size_t y, const Tensor& d, double r_opt) {
  policy.validate(model);
  const double n = norm_l2(d);
  if (!(n > 0.0)) throw std::invalid_argument("direction must be nonzero");
  const Tensor point = x + (r_opt / n) * d;
  double total = 0.0;
  for (std::size_t cut = 0; cut <= model.num_layers(); ++cut) {
    const double v = policy.variance_at(cut);
    if (v <= 0.0) continue;
    const double g = norm_l2(grad_at_layer(model, point, cut, y, LossKind::margin));
    total += v * g * g;
  }
  return total;
}

}  // namespace rfd
