#include "rfd/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rfd/attacks.hpp"
#include "rfd/errors.hpp"
#include "rfd/random.hpp"

namespace rfd {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
  if (widths.size() < 2) throw ShapeError("network spec needs input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw ShapeError("network widths must be positive");
  }
  if (widths.back() < 2) throw ShapeError("network needs at least two output classes");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (adversarial) {
    if (!(adversarial->epsilon > 0.0) || adversarial->steps == 0 || !(adversarial->step_size > 0.0)) {
      throw std::invalid_argument("adversarial training needs positive epsilon, steps and step size");
    }
  }
}

Model init_model(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    const std::size_t fan_in = spec.widths[i];
    const std::size_t fan_out = spec.widths[i + 1];
    const double limit = spec.activation == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(fan_in))
                             : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Dense d{fan_in, fan_out, std::vector<double>(fan_in * fan_out), std::vector<double>(fan_out, 0.0)};
    for (double& w : d.weights) w = u(rng);
    layers.emplace_back(std::move(d));
    if (i + 2 < spec.widths.size()) {
      if (spec.activation == Activation::relu) {
        layers.emplace_back(Relu{fan_out});
      } else {
        layers.emplace_back(Tanh{fan_out});
      }
    }
  }
  return Model(std::move(layers), spec.widths.front(), spec.widths.back());
}

double accuracy(const Model& model, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!is_misclassified(forward(model, data.inputs[i]), data.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double pgd_robust_accuracy(const Model& model, const Dataset& data, double epsilon,
                           std::size_t steps, double step_size) {
  if (data.size() == 0) throw std::invalid_argument("robust accuracy of an empty dataset");
  std::size_t robust = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (is_misclassified(forward(model, data.inputs[i]), data.labels[i])) continue;
    const AttackResult r =
        pgd_attack(model, data.inputs[i], data.labels[i], epsilon, steps, step_size, data.box);
    if (!r.success) ++robust;
  }
  return static_cast<double>(robust) / static_cast<double>(data.size());
}

TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("cannot train on an empty dataset");
  if (data.input_dim() != spec.widths.front()) throw ShapeError("dataset dimension does not match the network input");
  if (data.num_classes() > spec.widths.back()) throw ShapeError("dataset has more classes than the network outputs");

  Model model = init_model(spec, cfg.seed);
  std::vector<Layer> layers = model.layers();
  std::vector<std::vector<double>> vel_w(layers.size());
  std::vector<std::vector<double>> vel_b(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (const auto* d = std::get_if<Dense>(&layers[i])) {
      vel_w[i].assign(d->weights.size(), 0.0);
      vel_b[i].assign(d->bias.size(), 0.0);
    }
  }

  Rng rng(derive_seed(cfg.seed, {1}));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double epoch_loss = 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::vector<std::vector<double>> gw(layers.size());
      std::vector<std::vector<double>> gb(layers.size());
      for (std::size_t i = 0; i < layers.size(); ++i) {
        gw[i].assign(vel_w[i].size(), 0.0);
        gb[i].assign(vel_b[i].size(), 0.0);
      }
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        Tensor x = data.inputs[idx];
        if (cfg.adversarial) {
          x = pgd_attack(model, x, data.labels[idx], cfg.adversarial->epsilon,
                         cfg.adversarial->steps, cfg.adversarial->step_size, data.box)
                  .x_adv;
        }
        ParameterGradients pg;
        try {
          pg = parameter_gradients(model, x, data.labels[idx], LossKind::cross_entropy);
        } catch (const ShapeError&) {
          throw TrainingError("training diverged: non-finite activations at epoch " +
                              std::to_string(epoch));
        }
        if (!std::isfinite(pg.loss)) {
          throw TrainingError("training diverged at epoch " + std::to_string(epoch));
        }
        epoch_loss += pg.loss;
        for (std::size_t i = 0; i < layers.size(); ++i) {
          for (std::size_t k = 0; k < gw[i].size(); ++k) gw[i][k] += pg.weights[i][k];
          for (std::size_t k = 0; k < gb[i].size(); ++k) gb[i][k] += pg.bias[i][k];
        }
      }
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto* d = std::get_if<Dense>(&layers[i]);
        if (!d) continue;
        for (std::size_t k = 0; k < d->weights.size(); ++k) {
          vel_w[i][k] = cfg.momentum * vel_w[i][k] - cfg.lr * scale * gw[i][k];
          d->weights[k] += vel_w[i][k];
        }
        for (std::size_t k = 0; k < d->bias.size(); ++k) {
          vel_b[i][k] = cfg.momentum * vel_b[i][k] - cfg.lr * scale * gb[i][k];
          d->bias[k] += vel_b[i][k];
        }
      }
      try {
        model = Model(layers, spec.widths.front(), spec.widths.back());
      } catch (const ShapeError&) {
        throw TrainingError("training diverged: non-finite parameters at epoch " + std::to_string(epoch));
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) throw TrainingError("training loss is not finite");
  }
  return TrainResult{model, epoch_loss, accuracy(model, data)};
}

CalibrationResult calibrate_nu(const Model& model, const Dataset& data,
                               const DefensePolicy& policy_template, double target_drop,
                               const CalibrationOptions& opts) {
  if (!(target_drop >= 0.0 && target_drop < 0.5)) {
    throw std::invalid_argument("target drop must lie in [0, 0.5)");
  }
  if (data.size() == 0) throw std::invalid_argument("calibration needs samples");
  if (policy_template.mode == DefenseMode::none) {
    throw std::invalid_argument("calibration needs an input or feature defense");
  }
  auto shared = std::make_shared<const Model>(model);
  CalibrationResult res;
  res.target_drop = target_drop;
  res.eval_seed = opts.eval_seed;
  res.repeats = opts.repeats;

  const auto measure = [&](double nu) {
    ++res.evaluations;
    DefendedOracle oracle(shared, policy_template.with_nu(nu), opts.eval_seed);
    return clean_accuracy(oracle, data, opts.repeats);
  };
  res.base_accuracy = measure(0.0);
  const auto accept = [&](double nu, double acc) {
    res.nu = nu;
    res.accuracy = acc;
    res.measured_drop = res.base_accuracy - acc;
    return res;
  };
  if (target_drop == 0.0) return accept(0.0, res.base_accuracy);

  double lo = 0.0;
  double hi = opts.nu_start;
  double last_drop = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double acc = measure(hi);
    last_drop = res.base_accuracy - acc;
    if (std::abs(last_drop - target_drop) <= opts.tol) return accept(hi, acc);
    if (last_drop > target_drop) break;
    if (k == opts.max_doublings) {
      throw CalibrationError("no bracketing variance: drop " + std::to_string(last_drop) +
                             " at nu " + std::to_string(hi) + " is still below target " +
                             std::to_string(target_drop));
    }
    lo = hi;
    hi *= 2.0;
  }
  for (std::size_t k = 0; k < opts.max_bisections; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double acc = measure(mid);
    const double drop = res.base_accuracy - acc;
    if (std::abs(drop - target_drop) <= opts.tol) return accept(mid, acc);
    if (drop > target_drop) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw CalibrationError("bisection on [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "] did not reach drop " + std::to_string(target_drop) + " +- " +
                         std::to_string(opts.tol));
}

}  // namespace rfd
