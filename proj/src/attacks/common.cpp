#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"

namespace rfd {

void AttackBudget::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("attack epsilon must be positive");
  if (max_queries < 1) throw std::invalid_argument("attack budget needs at least one query");
}

AttackId parse_attack_id(std::string_view name) {
  if (name == "nes") return AttackId::nes;
  if (name == "square") return AttackId::square;
  if (name == "signhunter") return AttackId::signhunter;
  if (name == "rays") return AttackId::rays;
  if (name == "signflip") return AttackId::signflip;
  throw std::invalid_argument("unknown attack '" + std::string(name) + "'");
}

std::string_view to_string(AttackId id) {
  switch (id) {
    case AttackId::nes: return "nes";
    case AttackId::square: return "square";
    case AttackId::signhunter: return "signhunter";
    case AttackId::rays: return "rays";
    case AttackId::signflip: return "signflip";
  }
  return "unknown";
}

bool is_decision_attack(AttackId id) {
  return id == AttackId::rays || id == AttackId::signflip;
}

NesParams NesParams::defaults_for(Norm norm) {
  if (norm == Norm::l2) return NesParams{30, 0.005, 1.0, true};
  return NesParams{60, 0.01, 0.005, true};
}

void NesParams::validate() const {
  if (samples_per_step < 1) throw std::invalid_argument("NES needs at least one sample per step");
  if (!(fd_step > 0.0)) throw std::invalid_argument("NES finite-difference step must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("NES learning rate must be positive");
}

void SquareParams::validate() const {
  if (!(p_init > 0.0 && p_init <= 1.0)) throw std::invalid_argument("Square p_init must lie in (0, 1]");
}

void SignFlipParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("SignFlip alpha must lie in (0, 1)");
  if (!(flip_fraction > 0.0 && flip_fraction <= 1.0)) {
    throw std::invalid_argument("SignFlip flip fraction must lie in (0, 1]");
  }
  if (tries_per_radius < 1) throw std::invalid_argument("SignFlip needs at least one try per radius");
}

bool random_search_accept(double loss_new, double loss_old) { return loss_new - loss_old < 0.0; }

double square_p_selection(const SquareParams& params, std::size_t iteration,
                          std::size_t budget) {
  const double scale = static_cast<double>(budget) / 10000.0;
  double p = params.p_init;
  for (std::size_t milestone : params.schedule) {
    if (static_cast<double>(iteration) > static_cast<double>(milestone) * scale) p /= 2.0;
  }
  return p;
}

Tensor project(const Tensor& point, const Tensor& center, const AttackBudget& budget,
               const InputBox& box) {
  Tensor out = point;
  if (budget.norm == Norm::linf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::clamp(out[i], center[i] - budget.epsilon, center[i] + budget.epsilon);
    }
  } else {
    const Tensor delta = point - center;
    const double n = norm_l2(delta);
    if (n > budget.epsilon) out = center + (budget.epsilon / n) * delta;
  }
  return clip(out, box.lo, box.hi);
}

}  // namespace rfd

namespace rfd {

AttackResult run_attack(const AttackSettings& settings, Oracle& oracle, const Tensor& x,
                        std::size_t y, const AttackBudget& budget, const AttackOptions& opts) {
  switch (settings.id) {
    case AttackId::nes: return nes_attack(oracle, x, y, budget, settings.nes, opts);
    case AttackId::square: return square_attack(oracle, x, y, budget, settings.square, opts);
    case AttackId::signhunter: return signhunter_attack(oracle, x, y, budget, opts);
    case AttackId::rays: return rays_attack(oracle, x, y, budget, opts, settings.rays);
    case AttackId::signflip: return signflip_attack(oracle, x, y, budget, settings.signflip, opts);
  }
  throw std::logic_error("unreachable attack id");
}

}  // namespace rfd
