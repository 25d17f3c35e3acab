#include "rfd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfd/errors.hpp"

namespace rfd {

DefensePolicy DefensePolicy::none() { return {}; }

DefensePolicy DefensePolicy::input(double nu) {
  DefensePolicy p;
  p.mode = DefenseMode::input;
  p.nu = nu;
  return p;
}

DefensePolicy DefensePolicy::feature(std::vector<std::size_t> cuts, double nu) {
  DefensePolicy p;
  p.mode = DefenseMode::feature;
  p.nu = nu;
  p.layer_set = std::move(cuts);
  return p;
}

double DefensePolicy::variance_at(std::size_t cut) const {
  switch (mode) {
    case DefenseMode::none:
      return 0.0;
    case DefenseMode::input:
      return cut == 0 ? nu : 0.0;
    case DefenseMode::feature: {
      if (std::find(layer_set.begin(), layer_set.end(), cut) == layer_set.end()) return 0.0;
      const auto it = per_layer_nu.find(cut);
      return it == per_layer_nu.end() ? nu : it->second;
    }
  }
  return 0.0;
}

DefensePolicy DefensePolicy::with_nu(double new_nu) const {
  DefensePolicy p = *this;
  p.nu = new_nu;
  return p;
}

void DefensePolicy::validate(const Model& model) const {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw DomainError("defense variance must be finite and >= 0");
  for (const auto& [cut, v] : per_layer_nu) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("per-layer variance must be finite and >= 0");
    if (cut > model.num_layers()) throw IndexError("per-layer variance for invalid cut " + std::to_string(cut));
  }
  if (mode != DefenseMode::feature) return;
  if (layer_set.empty()) throw IndexError("feature defense needs a nonempty layer set");
  for (std::size_t cut : layer_set) {
    if (cut > model.num_layers()) {
      throw IndexError("defense layer " + std::to_string(cut) + " outside [0, " +
                       std::to_string(model.num_layers()) + "]");
    }
  }
}

namespace {

void add_noise(Tensor& z, double variance, NormalSource& noise) {
  if (variance <= 0.0) return;
  const double sd = std::sqrt(variance);
  for (double& v : z) v += sd * noise();
}

}  // namespace

Tensor randomized_forward(const Model& model, const DefensePolicy& policy,
                          const Tensor& x, NormalSource& noise) {
  switch (policy.mode) {
    case DefenseMode::none:
      return forward(model, x);
    case DefenseMode::input: {
      if (x.size() != model.input_dim()) throw ShapeError("input length does not match the model");
      Tensor shifted = x;
      add_noise(shifted, policy.nu, noise);
      return forward(model, shifted);
    }
    case DefenseMode::feature: {
      if (x.size() != model.input_dim()) throw ShapeError("input length does not match the model");
      Tensor z = x;
      add_noise(z, policy.variance_at(0), noise);
      for (std::size_t i = 0; i < model.num_layers(); ++i) {
        z = apply_layer(model.layers()[i], z);
        add_noise(z, policy.variance_at(i + 1), noise);
      }
      return z;
    }
  }
  throw std::logic_error("unreachable defense mode");
}

DefendedOracle::DefendedOracle(std::shared_ptr<const Model> model, DefensePolicy policy,
                               std::uint64_t seed, AccessMode access, std::size_t eot_m)
    : model_(std::move(model)),
      policy_(std::move(policy)),
      noise_(seed),
      access_(access),
      eot_m_(eot_m) {
  if (!model_) throw std::invalid_argument("oracle needs a model");
  policy_.validate(*model_);
  if (eot_m_ == 0) throw std::invalid_argument("EOT averaging factor must be >= 1");
}

void DefendedOracle::set_eot_m(std::size_t m) {
  if (m == 0) throw std::invalid_argument("EOT averaging factor must be >= 1");
  eot_m_ = m;
}

Tensor DefendedOracle::defended_forward(const Tensor& x) {
  Tensor acc = randomized_forward(*model_, policy_, x, noise_);
  for (std::size_t i = 1; i < eot_m_; ++i) {
    const Tensor draw = randomized_forward(*model_, policy_, x, noise_);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += draw[k];
  }
  if (eot_m_ > 1) {
    for (double& v : acc) v /= static_cast<double>(eot_m_);
  }
  query_count_ += eot_m_;
  return acc;
}

Tensor DefendedOracle::query_scores(const Tensor& x) {
  if (access_ != AccessMode::score) {
    throw AccessError("decision oracle refuses score queries");
  }
  return defended_forward(x);
}

std::size_t DefendedOracle::query_label(const Tensor& x) {
  return argmax(defended_forward(x));
}

Tensor DefendedOracle::uncounted_forward(const Tensor& x) {
  return randomized_forward(*model_, policy_, x, noise_);
}

DefendedOracle eot_wrap(DefendedOracle oracle, std::size_t m) {
  oracle.set_eot_m(m);
  return oracle;
}

void VerificationConfig::validate() const {
  if (runs == 0) throw std::invalid_argument("verification needs at least one run");
  if (2 * majority <= runs || majority > runs) {
    throw std::invalid_argument("verification majority must exceed runs / 2 and be <= runs");
  }
}

bool verify_success(Oracle& oracle, const Tensor& x_adv, std::size_t y,
                    const VerificationConfig& cfg) {
  cfg.validate();
  const std::size_t before = oracle.query_count();
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    if (is_misclassified(oracle.uncounted_forward(x_adv), y)) ++wrong;
  }
  if (oracle.query_count() != before) {
    throw std::logic_error("verification must not charge the attacker's budget");
  }
  return wrong >= cfg.majority;
}

double clean_accuracy(Oracle& oracle, const Dataset& data, std::size_t repeats) {
  if (repeats == 0) throw std::invalid_argument("clean accuracy needs repeats >= 1");
  if (data.size() == 0) throw std::invalid_argument("clean accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t votes = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
      if (!is_misclassified(oracle.uncounted_forward(data.inputs[i]), data.labels[i])) ++votes;
    }
    if (2 * votes > repeats) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace rfd
