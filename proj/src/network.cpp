#include "rfd/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "rfd/errors.hpp"
#include "rfd/format.hpp"

namespace rfd {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_cut(const Model& model, std::size_t cut) {
  if (cut > model.num_layers()) {
    throw IndexError("cut " + std::to_string(cut) + " outside [0, " +
                     std::to_string(model.num_layers()) + "]");
  }
}

void check_class(const Tensor& logits, std::size_t y) {
  if (y >= logits.size()) {
    throw IndexError("class " + std::to_string(y) + " outside [0, " +
                     std::to_string(logits.size()) + ")");
  }
}

void check_width(std::size_t expected, const Tensor& t, const char* what) {
  if (t.size() != expected) {
    throw ShapeError(std::string(what) + ": expected length " +
                     std::to_string(expected) + ", got " + std::to_string(t.size()));
  }
}

// Activations z_0 = x, z_k = output of layer k-1.
std::vector<Tensor> forward_trace(const Model& model, const Tensor& x) {
  check_width(model.input_dim(), x, "forward");
  std::vector<Tensor> zs;
  zs.reserve(model.num_layers() + 1);
  zs.push_back(x);
  for (const Layer& layer : model.layers()) zs.push_back(apply_layer(layer, zs.back()));
  return zs;
}

// Gradient with respect to a layer's input given the gradient at its output.
Tensor backprop(const Layer& layer, const Tensor& in, const Tensor& out,
                const Tensor& g_out) {
  return std::visit(
      overloaded{
          [&](const Dense& d) {
            Tensor g = Tensor::zeros({d.in_dim});
            for (std::size_t r = 0; r < d.out_dim; ++r) {
              const double gr = g_out[r];
              const double* row = d.weights.data() + r * d.in_dim;
              for (std::size_t c = 0; c < d.in_dim; ++c) g[c] += row[c] * gr;
            }
            return g;
          },
          [&](const Relu&) {
            Tensor g = g_out;
            for (std::size_t i = 0; i < g.size(); ++i) {
              if (!(in[i] > 0.0)) g[i] = 0.0;
            }
            return g;
          },
          [&](const Tanh&) {
            Tensor g = g_out;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - out[i] * out[i];
            return g;
          },
      },
      layer);
}

}  // namespace

std::size_t in_dim(const Layer& layer) {
  return std::visit(overloaded{[](const Dense& d) { return d.in_dim; },
                               [](const Relu& r) { return r.dim; },
                               [](const Tanh& t) { return t.dim; }},
                    layer);
}

std::size_t out_dim(const Layer& layer) {
  return std::visit(overloaded{[](const Dense& d) { return d.out_dim; },
                               [](const Relu& r) { return r.dim; },
                               [](const Tanh& t) { return t.dim; }},
                    layer);
}

Model::Model(std::vector<Layer> layers, std::size_t input_dim, std::size_t num_classes)
    : layers_(std::move(layers)), input_dim_(input_dim), num_classes_(num_classes) {
  if (num_classes_ < 2) throw ShapeError("model needs at least two classes");
  if (input_dim_ == 0) throw ShapeError("model input dimension must be positive");
  std::size_t width = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (const auto* d = std::get_if<Dense>(&layer)) {
      if (d->weights.size() != d->in_dim * d->out_dim || d->bias.size() != d->out_dim) {
        throw ShapeError("dense layer " + std::to_string(i) +
                         " parameter sizes do not match its dimensions");
      }
      for (double w : d->weights) {
        if (!std::isfinite(w)) throw ShapeError("non-finite weight in layer " + std::to_string(i));
      }
      for (double b : d->bias) {
        if (!std::isfinite(b)) throw ShapeError("non-finite bias in layer " + std::to_string(i));
      }
    }
    if (in_dim(layer) != width || out_dim(layer) == 0) {
      throw ShapeError("layer " + std::to_string(i) + " expects width " +
                       std::to_string(in_dim(layer)) + " but receives " +
                       std::to_string(width));
    }
    width = out_dim(layer);
  }
  if (width != num_classes_) {
    throw ShapeError("final width " + std::to_string(width) + " != num_classes " +
                     std::to_string(num_classes_));
  }
}

std::size_t Model::width_at(std::size_t cut) const {
  check_cut(*this, cut);
  return cut == 0 ? input_dim_ : out_dim(layers_[cut - 1]);
}

bool operator==(const Model& a, const Model& b) {
  if (a.input_dim_ != b.input_dim_ || a.num_classes_ != b.num_classes_ ||
      a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const Layer& la = a.layers_[i];
    const Layer& lb = b.layers_[i];
    if (la.index() != lb.index()) return false;
    if (const auto* da = std::get_if<Dense>(&la)) {
      const auto& db = std::get<Dense>(lb);
      if (da->in_dim != db.in_dim || da->out_dim != db.out_dim ||
          da->weights != db.weights || da->bias != db.bias) {
        return false;
      }
    } else if (in_dim(la) != in_dim(lb)) {
      return false;
    }
  }
  return true;
}

Tensor apply_layer(const Layer& layer, const Tensor& z) {
  check_width(in_dim(layer), z, "layer input");
  return std::visit(
      overloaded{
          [&](const Dense& d) {
            std::vector<double> out(d.bias);
            for (std::size_t r = 0; r < d.out_dim; ++r) {
              const double* row = d.weights.data() + r * d.in_dim;
              double acc = 0.0;
              for (std::size_t c = 0; c < d.in_dim; ++c) acc += row[c] * z[c];
              out[r] += acc;
            }
            return Tensor::vector(std::move(out));
          },
          [&](const Relu&) {
            Tensor out = z;
            for (double& v : out) v = v > 0.0 ? v : 0.0;
            return out;
          },
          [&](const Tanh&) {
            Tensor out = z;
            for (double& v : out) v = std::tanh(v);
            return out;
          },
      },
      layer);
}

Tensor forward(const Model& model, const Tensor& x) {
  return forward_from(model, 0, x);
}

Tensor forward_to(const Model& model, std::size_t cut, const Tensor& x) {
  check_cut(model, cut);
  check_width(model.input_dim(), x, "forward_to");
  Tensor z = x;
  for (std::size_t i = 0; i < cut; ++i) z = apply_layer(model.layers()[i], z);
  return z;
}

Tensor forward_from(const Model& model, std::size_t cut, const Tensor& hidden) {
  check_cut(model, cut);
  check_width(model.width_at(cut), hidden, "forward_from");
  Tensor z = hidden;
  for (std::size_t i = cut; i < model.num_layers(); ++i) {
    z = apply_layer(model.layers()[i], z);
  }
  return z;
}

std::size_t runner_up(const Tensor& logits, std::size_t y) {
  check_class(logits, y);
  if (logits.size() < 2) throw ShapeError("margin loss needs at least two logits");
  std::size_t best = y == 0 ? 1 : 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i != y && logits[i] > logits[best]) best = i;
  }
  return best;
}

double loss(const Tensor& logits, std::size_t y, LossKind kind) {
  check_class(logits, y);
  if (kind == LossKind::margin) return logits[y] - logits[runner_up(logits, y)];
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  return m + std::log(s) - logits[y];
}

bool is_misclassified(const Tensor& logits, std::size_t y) {
  return loss(logits, y, LossKind::margin) <= 0.0;
}

Tensor loss_gradient(const Tensor& logits, std::size_t y, LossKind kind) {
  check_class(logits, y);
  Tensor g = Tensor::zeros({logits.size()});
  if (kind == LossKind::margin) {
    g[y] = 1.0;
    g[runner_up(logits, y)] = -1.0;
    return g;
  }
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    g[i] = std::exp(logits[i] - m);
    s += g[i];
  }
  for (double& v : g) v /= s;
  g[y] -= 1.0;
  return g;
}

Tensor grad_input(const Model& model, const Tensor& x, std::size_t y, LossKind kind) {
  return grad_at_layer(model, x, 0, y, kind);
}

Tensor grad_at_layer(const Model& model, const Tensor& x, std::size_t cut,
                     std::size_t y, LossKind kind) {
  check_cut(model, cut);
  const std::vector<Tensor> zs = forward_trace(model, x);
  Tensor g = loss_gradient(zs.back(), y, kind);
  for (std::size_t i = model.num_layers(); i-- > cut;) {
    g = backprop(model.layers()[i], zs[i], zs[i + 1], g);
  }
  return g;
}

ParameterGradients parameter_gradients(const Model& model, const Tensor& x,
                                       std::size_t y, LossKind kind) {
  const std::vector<Tensor> zs = forward_trace(model, x);
  ParameterGradients out;
  out.weights.resize(model.num_layers());
  out.bias.resize(model.num_layers());
  out.loss = loss(zs.back(), y, kind);
  Tensor g = loss_gradient(zs.back(), y, kind);
  for (std::size_t i = model.num_layers(); i-- > 0;) {
    const Layer& layer = model.layers()[i];
    if (const auto* d = std::get_if<Dense>(&layer)) {
      auto& gw = out.weights[i];
      gw.resize(d->weights.size());
      for (std::size_t r = 0; r < d->out_dim; ++r) {
        for (std::size_t c = 0; c < d->in_dim; ++c) gw[r * d->in_dim + c] = g[r] * zs[i][c];
      }
      out.bias[i].assign(g.begin(), g.end());
    }
    if (i > 0) g = backprop(layer, zs[i], zs[i + 1], g);
  }
  return out;
}

// --- serialization --------------------------------------------------------

namespace {

void append_array(std::string& s, const double* v, std::size_t n) {
  s += '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  s += ']';
}

}  // namespace

std::string model_to_json(const Model& model) {
  std::string s = "{\"version\":1,\"input_dim\":" + std::to_string(model.input_dim()) +
                  ",\"num_classes\":" + std::to_string(model.num_classes()) +
                  ",\"layers\":[";
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    if (i) s += ',';
    const Layer& layer = model.layers()[i];
    if (const auto* d = std::get_if<Dense>(&layer)) {
      s += "{\"kind\":\"dense\",\"w\":[";
      for (std::size_t r = 0; r < d->out_dim; ++r) {
        if (r) s += ',';
        append_array(s, d->weights.data() + r * d->in_dim, d->in_dim);
      }
      s += "],\"b\":";
      append_array(s, d->bias.data(), d->out_dim);
      s += '}';
    } else if (std::holds_alternative<Relu>(layer)) {
      s += "{\"kind\":\"relu\"}";
    } else {
      s += "{\"kind\":\"tanh\"}";
    }
  }
  s += "]}\n";
  return s;
}

Model model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version")) {
      throw FormatError("model file lacks a version field");
    }
    if (doc.at("version").get<int>() != 1) {
      throw FormatError("unsupported model version " + doc.at("version").dump());
    }
    const auto input_dim = doc.at("input_dim").get<std::size_t>();
    const auto num_classes = doc.at("num_classes").get<std::size_t>();
    std::vector<Layer> layers;
    std::size_t width = input_dim;
    for (const auto& jl : doc.at("layers")) {
      const auto kind = jl.at("kind").get<std::string>();
      if (kind == "dense") {
        Dense d;
        const auto& rows = jl.at("w");
        d.out_dim = rows.size();
        d.in_dim = d.out_dim ? rows.at(0).size() : 0;
        for (const auto& row : rows) {
          if (row.size() != d.in_dim) throw FormatError("ragged weight matrix");
          for (const auto& v : row) d.weights.push_back(v.get<double>());
        }
        d.bias = jl.at("b").get<std::vector<double>>();
        width = d.out_dim;
        layers.emplace_back(std::move(d));
      } else if (kind == "relu") {
        layers.emplace_back(Relu{width});
      } else if (kind == "tanh") {
        layers.emplace_back(Tanh{width});
      } else {
        throw FormatError("unknown layer kind '" + kind + "'");
      }
    }
    return Model(std::move(layers), input_dim, num_classes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent model dimensions: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << model_to_json(model);
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace rfd
