#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "rfd/tensor.hpp"

namespace rfd {

/// Affine layer `out = weights * in + bias`; weights are out_dim x in_dim, row-major.
struct Dense {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Relu {
  std::size_t dim = 0;
};

struct Tanh {
  std::size_t dim = 0;
};

using Layer = std::variant<Dense, Relu, Tanh>;

std::size_t in_dim(const Layer& layer);
std::size_t out_dim(const Layer& layer);

/// Feedforward network f = g o h, splittable at any cut 0..num_layers().
///
/// Cut k means "after the first k layers": cut 0 is the input itself and
/// cut num_layers() is the logit vector.
class Model {
 public:
  Model(std::vector<Layer> layers, std::size_t input_dim, std::size_t num_classes);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  /// Width of the hidden representation at `cut`.
  std::size_t width_at(std::size_t cut) const;

  friend bool operator==(const Model&, const Model&);

 private:
  std::vector<Layer> layers_;
  std::size_t input_dim_;
  std::size_t num_classes_;
};

enum class LossKind { margin, cross_entropy };

Tensor apply_layer(const Layer& layer, const Tensor& z);

Tensor forward(const Model& model, const Tensor& x);
Tensor forward_to(const Model& model, std::size_t cut, const Tensor& x);
Tensor forward_from(const Model& model, std::size_t cut, const Tensor& hidden);

/// Runner-up class for the margin loss: argmax over i != y, lowest index on ties.
std::size_t runner_up(const Tensor& logits, std::size_t y);

double loss(const Tensor& logits, std::size_t y, LossKind kind);

/// Margin loss <= 0, i.e. a tie with the runner-up already counts as wrong.
bool is_misclassified(const Tensor& logits, std::size_t y);

/// d loss / d logits.
Tensor loss_gradient(const Tensor& logits, std::size_t y, LossKind kind);

Tensor grad_input(const Model& model, const Tensor& x, std::size_t y, LossKind kind);
Tensor grad_at_layer(const Model& model, const Tensor& x, std::size_t cut,
                     std::size_t y, LossKind kind);

/// Per-layer parameter gradients; entries for activation layers stay empty.
struct ParameterGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
  double loss = 0.0;
};

/// Loss and its gradient with respect to every dense layer's parameters.
ParameterGradients parameter_gradients(const Model& model, const Tensor& x,
                                       std::size_t y, LossKind kind);

/// Serialization as the versioned JSON model document.
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace rfd
