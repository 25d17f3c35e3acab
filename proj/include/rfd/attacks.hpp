#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "rfd/dataset.hpp"
#include "rfd/network.hpp"
#include "rfd/oracle.hpp"
#include "rfd/tensor.hpp"

namespace rfd {

enum class Norm { linf, l2 };

struct AttackBudget {
  std::size_t max_queries = 1000;
  double epsilon = 0.05;
  Norm norm = Norm::linf;
  void validate() const;
};

/// One trace entry. `loss` is NaN for decision attacks and `best_radius` is
/// NaN for score attacks.
struct TracePoint {
  std::size_t query = 0;
  double loss = 0.0;
  double best_radius = 0.0;
};

struct AttackResult {
  bool success = false;
  Tensor x_adv;
  std::size_t queries_used = 0;
  std::vector<TracePoint> loss_trace;
  double distance = 0.0;
};

/// Settings shared by every black-box attack.
struct AttackOptions {
  InputBox box{-1e9, 1e9};
  /// Layout for window attacks; unset means d channels of a 1x1 image.
  std::optional<GridShape> grid;
  VerificationConfig verification;
  std::uint64_t seed = 0;
  /// Called with each accepted iterate (score attacks: also the starting iterate).
  std::function<void(const Tensor&)> on_iterate;
};

enum class AttackId { nes, square, signhunter, rays, signflip };

AttackId parse_attack_id(std::string_view name);
std::string_view to_string(AttackId id);
bool is_decision_attack(AttackId id);

struct NesParams {
  std::size_t samples_per_step = 60;
  double fd_step = 0.01;
  double lr = 0.005;
  bool antithetic = true;

  /// Published defaults: 60 samples, step 0.01, lr 0.005 (linf); 30, 0.005, 1 (l2).
  static NesParams defaults_for(Norm norm);
  void validate() const;
};

struct SquareParams {
  double p_init = 0.05;
  /// Iteration milestones (for a 10000-query run) at which p halves; scaled
  /// proportionally to the actual budget.
  std::vector<std::size_t> schedule{10, 50, 200, 1000, 2000, 4000, 6000, 8000};
  void validate() const;
};

struct SignFlipParams {
  /// Shrink factor of the projection step.
  double alpha = 0.05;
  /// Fraction of coordinates whose sign is flipped per proposal.
  double flip_fraction = 0.1;
  /// Upper bound on queries spent searching for an adversarial starting point.
  std::size_t restart_cap = 200;
  /// Random corners tried per radius before the radius doubles.
  std::size_t tries_per_radius = 5;
  void validate() const;
};

struct RaysParams {
  /// Binary-search tolerance on the l2 radius along a direction.
  double search_tol = 1e-3;
};

/// The random-search acceptance rule: keep a proposal iff the loss strictly drops.
bool random_search_accept(double loss_new, double loss_old);

/// Current Square window fraction after `iteration` of a `budget`-query run.
double square_p_selection(const SquareParams& params, std::size_t iteration,
                          std::size_t budget);

/// One finite-difference estimate of the margin-loss gradient at x (no step taken).
Tensor nes_gradient(Oracle& oracle, const Tensor& x, std::size_t y, const NesParams& params,
                    std::uint64_t seed, const InputBox& box = {-1e9, 1e9});

AttackResult nes_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                        const AttackBudget& budget, const NesParams& params,
                        const AttackOptions& opts = {});

AttackResult square_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                           const AttackBudget& budget, const SquareParams& params,
                           const AttackOptions& opts = {});

AttackResult signhunter_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                               const AttackBudget& budget, const AttackOptions& opts = {});

/// Smallest r with label(x + r d / ||d||_2) != y, located by doubling from
/// `r_start` and bisecting to `tol`. nullopt when no flip occurs up to `r_hi`.
/// Query points are clipped to `box` when one is given.
std::optional<double> boundary_distance(Oracle& oracle, const Tensor& x, std::size_t y,
                                        const Tensor& d, double r_hi, double tol,
                                        std::optional<InputBox> box = std::nullopt,
                                        std::optional<double> r_start = std::nullopt);

AttackResult rays_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                         const AttackBudget& budget, const AttackOptions& opts = {},
                         const RaysParams& params = {});

AttackResult signflip_attack(Oracle& oracle, const Tensor& x, std::size_t y,
                             const AttackBudget& budget, const SignFlipParams& params = {},
                             const AttackOptions& opts = {});

/// White-box linf PGD on the margin loss, starting at x without random init.
AttackResult pgd_attack(const Model& model, const Tensor& x, std::size_t y,
                        double epsilon, std::size_t steps, double step_size,
                        std::optional<InputBox> box = std::nullopt);

/// Projection onto the budget ball around `center` followed by box clipping.
Tensor project(const Tensor& point, const Tensor& center, const AttackBudget& budget,
               const InputBox& box);

}  // namespace rfd

namespace rfd {

/// Attack selection plus the parameters of every attack, as read from a config.
struct AttackSettings {
  AttackId id = AttackId::square;
  NesParams nes;
  SquareParams square;
  SignFlipParams signflip;
  RaysParams rays;
};

/// Dispatches to the attack named by `settings.id`.
AttackResult run_attack(const AttackSettings& settings, Oracle& oracle, const Tensor& x,
                        std::size_t y, const AttackBudget& budget, const AttackOptions& opts);

}  // namespace rfd
