#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rfd/dataset.hpp"
#include "rfd/network.hpp"
#include "rfd/oracle.hpp"

namespace rfd {

enum class Activation { relu, tanh };

Activation parse_activation(std::string_view name);

/// Layer widths from input to logits (e.g. {2, 32, 32, 2}) with one
/// activation between consecutive dense layers.
struct NetworkSpec {
  std::vector<std::size_t> widths;
  Activation activation = Activation::relu;
  void validate() const;
};

/// PGD adversarial training: every minibatch sample is replaced by its PGD point.
struct AdversarialTraining {
  double epsilon = 0.1;
  std::size_t steps = 7;
  double step_size = 0.025;
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::optional<AdversarialTraining> adversarial;
  void validate() const;
};

/// Randomly initialized network (He-uniform for relu, Glorot-uniform for tanh, zero bias).
Model init_model(const NetworkSpec& spec, std::uint64_t seed);

struct TrainResult {
  Model model;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
};

/// Minibatch SGD with momentum on cross-entropy. Single-threaded and
/// bit-reproducible under `cfg.seed`. Throws TrainingError on divergence.
TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& cfg);

/// Deterministic accuracy of the bare model (margin > 0 counts as correct).
double accuracy(const Model& model, const Dataset& data);

/// PGD(epsilon) robust accuracy of the bare model.
double pgd_robust_accuracy(const Model& model, const Dataset& data, double epsilon,
                           std::size_t steps, double step_size);

struct CalibrationOptions {
  double tol = 0.005;
  std::uint64_t eval_seed = 0;
  std::size_t repeats = 9;
  double nu_start = 1e-4;
  std::size_t max_doublings = 30;
  std::size_t max_bisections = 80;
};

struct CalibrationResult {
  double nu = 0.0;
  double target_drop = 0.0;
  double base_accuracy = 0.0;
  double accuracy = 0.0;
  double measured_drop = 0.0;
  std::uint64_t eval_seed = 0;
  std::size_t repeats = 0;
  std::size_t evaluations = 0;
};

/// Noise variance whose clean-accuracy drop (majority of `repeats` draws,
/// pinned `eval_seed`) lies within tol of `target_drop`.
CalibrationResult calibrate_nu(const Model& model, const Dataset& data,
                               const DefensePolicy& policy_template, double target_drop,
                               const CalibrationOptions& opts = {});

}  // namespace rfd
