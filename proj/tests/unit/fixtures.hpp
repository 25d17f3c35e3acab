#pragma once

#include <memory>

#include "rfd/dataset.hpp"
#include "rfd/network.hpp"
#include "rfd/train.hpp"

namespace fixtures {

/// Two-class model with logits (c.x, 0).
inline rfd::Model linear_model(std::vector<double> c) {
  const std::size_t d = c.size();
  std::vector<double> w(c);
  w.resize(2 * d, 0.0);
  return rfd::Model({rfd::Dense{d, 2, w, {0.0, 0.0}}}, d, 2);
}

inline std::shared_ptr<const rfd::Model> shared_linear(std::vector<double> c) {
  return std::make_shared<const rfd::Model>(linear_model(std::move(c)));
}

inline const rfd::Dataset& moons_train() {
  static const rfd::Dataset data = rfd::make_dataset(rfd::DatasetKind::two_moons, 1000, 0.1, 1);
  return data;
}

inline const rfd::Dataset& moons_test() {
  static const rfd::Dataset data = rfd::make_dataset(rfd::DatasetKind::two_moons, 200, 0.1, 2);
  return data;
}

/// 2-32-32-2 relu MLP trained on two moons with a pinned seed.
inline const rfd::Model& moons_mlp() {
  static const rfd::Model model = [] {
    rfd::TrainConfig cfg;
    cfg.epochs = 100;
    return rfd::train({{2, 32, 32, 2}, rfd::Activation::relu}, moons_train(), cfg).model;
  }();
  return model;
}

inline std::shared_ptr<const rfd::Model> shared_moons_mlp() {
  static const auto model = std::make_shared<const rfd::Model>(moons_mlp());
  return model;
}

}  // namespace fixtures
