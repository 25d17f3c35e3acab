#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rfd/attacks.hpp"
#include "rfd/dataset.hpp"
#include "rfd/network.hpp"
#include "rfd/oracle.hpp"

namespace rfd {

/// Linearized probability that a random-search attacker sees the sign of its
/// loss difference flipped by the defense noise:
///
///   1/2 + arctan(-(2 nu / mu * gh^2 / gx^2)^(-1/2)) / pi
///
/// where gh = ||grad_h (L o g)||, gx = ||grad_x (L o f)||, nu is the defense
/// variance and mu the attacker's proposal variance. Continuously extended to
/// 0 when nu or gh is 0. Throws DomainError for mu <= 0 or gx == 0.
double predicted_flip_prob(double nu, double mu, double grad_h_norm, double grad_x_norm);

/// Scale of the zero-centred Cauchy law followed by the noise-to-signal ratio
/// of the loss differences: sqrt(2 nu / mu) * gh / gx.
double cauchy_ratio_scale(double nu, double mu, double grad_h_norm, double grad_x_norm);

struct FlipPrediction {
  double nu = 0.0;
  double mu = 0.0;
  double grad_h_norm = 0.0;
  double grad_x_norm = 0.0;
  double probability = 0.0;
};

FlipPrediction predict_flip(double nu, double mu, double grad_h_norm, double grad_x_norm);

struct FlipEstimate {
  std::size_t trials = 0;
  std::size_t flips = 0;
  double p_hat = 0.0;
  double std_error = 0.0;
  /// Proposals redrawn because the deterministic difference was exactly 0.
  std::size_t resamples = 0;
};

/// Monte Carlo frequency of sign disagreement between the randomized and the
/// deterministic loss difference for proposals u ~ N(0, mu I). The two
/// randomized evaluations use independent noise draws. Trials are split into
/// fixed partitions with derived seeds, so the result does not depend on `jobs`.
FlipEstimate empirical_flip_prob(const Model& model, const DefensePolicy& policy,
                                 const Tensor& x, std::size_t y, double mu,
                                 std::size_t trials, std::uint64_t seed,
                                 std::size_t jobs = 1);

enum class ProfilePhase { raw, perturbed };
std::string_view to_string(ProfilePhase phase);

struct RatioProfile {
  std::size_t layer = 0;
  ProfilePhase phase = ProfilePhase::raw;
  std::vector<std::size_t> sample_ids;
  /// ||grad_h||^2 / ||grad_x||^2 per sample.
  std::vector<double> ratios;
  /// (2 nu / mu) * ratio per sample.
  std::vector<double> prefactored;
  /// 5/25/50/75/95% quantiles of `prefactored` (finite values only).
  std::array<double, 5> summary{};
};

/// Gradient-norm ratios at each cut in `layers`, on raw samples and after one
/// signed descent step of size `phase_step` on the margin loss (clipped to the box).
std::vector<RatioProfile> ratio_profile(const Model& model, const Dataset& data,
                                        const std::vector<std::size_t>& layers, double nu,
                                        double mu, double phase_step);

struct RatioChange {
  /// Geometric mean of successive recorded ratios r_{i+1} / r_i.
  double change = 1.0;
  std::vector<double> ratios;
  std::string definition;
};

/// Tracks ||grad_h||^2 / ||grad_x||^2 at `layer` along a score attack's
/// accepted iterates (every `record_every`-th, plus the final point).
RatioChange ratio_change_during_attack(const Model& model, Oracle& oracle,
                                       const AttackSettings& attack, const Tensor& x,
                                       std::size_t y, const AttackBudget& budget,
                                       std::size_t layer, const AttackOptions& opts = {},
                                       std::size_t record_every = 1);

struct RobustnessMagnitude {
  /// Noise standard deviation at which roughly 1 - quantile_keep of the
  /// correctly classified samples flip.
  double nu_star = 0.0;
  std::vector<std::size_t> sample_ids;
  /// L(f(x), y) / ||grad_h (L o g)|| per retained sample.
  std::vector<double> ratios;
  /// nu_star * ||grad_h (L o g)|| per retained sample.
  std::vector<double> magnitudes;
};

RobustnessMagnitude robustness_magnitude(const Model& model, const Dataset& data,
                                         std::size_t layer, double quantile_keep = 0.99);

/// Linearized variance of the margin loss under the policy's noise at the
/// best-radius query point x + r_opt d / ||d||: sum over perturbed cuts of
/// nu_l * ||grad_{h_l} L||^2.
double decision_flip_variance(const Model& model, const DefensePolicy& policy,
                              const Tensor& x, std::size_t y, const Tensor& d, double r_opt);

}  // namespace rfd
