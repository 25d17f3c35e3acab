#include "rfd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rfd/errors.hpp"
#include "rfd/format.hpp"
#include "rfd/random.hpp"

namespace rfd {

std::size_t Dataset::input_dim() const {
  if (inputs.empty()) throw ShapeError("empty dataset has no input dimension");
  return inputs.front().size();
}

std::size_t Dataset::num_classes() const {
  if (labels.empty()) throw ShapeError("empty dataset has no classes");
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

void Dataset::validate() const {
  if (inputs.size() != labels.size()) {
    throw ShapeError("dataset has " + std::to_string(inputs.size()) + " inputs but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (!(box.lo < box.hi)) throw ShapeError("dataset box must satisfy lo < hi");
  if (inputs.empty()) return;
  const std::size_t d = inputs.front().size();
  if (grid && grid->channels * grid->side * grid->side != d) {
    throw ShapeError("grid metadata does not match the input dimension");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != d) throw ShapeError("sample " + std::to_string(i) + " has a different dimension");
    for (double v : inputs[i]) {
      if (v < box.lo || v > box.hi) {
        throw ShapeError("sample " + std::to_string(i) + " lies outside the input box");
      }
    }
  }
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  Dataset out{{inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n)},
              {labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n)},
              box,
              grid};
  return out;
}

GridShape grid_of(const Dataset& data) {
  if (data.grid) return *data.grid;
  return GridShape{data.input_dim(), 1};
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "two_moons") return DatasetKind::two_moons;
  if (name == "gaussian_blobs") return DatasetKind::gaussian_blobs;
  if (name == "rings") return DatasetKind::rings;
  if (name == "toy_grid") return DatasetKind::toy_grid;
  throw std::invalid_argument("unknown dataset kind '" + std::string(name) + "'");
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::two_moons: return "two_moons";
    case DatasetKind::gaussian_blobs: return "gaussian_blobs";
    case DatasetKind::rings: return "rings";
    case DatasetKind::toy_grid: return "toy_grid";
  }
  return "unknown";
}

Dataset make_dataset(DatasetKind kind, std::size_t n, double noise, std::uint64_t seed) {
  constexpr std::size_t kClasses = 2;
  if (n < 2 * kClasses) throw std::invalid_argument("dataset needs n >= 2 * classes");
  if (!(noise >= 0.0)) throw std::invalid_argument("dataset noise must be nonnegative");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % kClasses;
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset data;
  data.labels = labels;
  data.inputs.reserve(n);

  switch (kind) {
    case DatasetKind::two_moons:
    case DatasetKind::gaussian_blobs:
    case DatasetKind::rings: {
      data.box = kind == DatasetKind::gaussian_blobs ? InputBox{-6.0, 6.0} : InputBox{-3.0, 3.0};
      for (std::size_t y : labels) {
        double a = 0.0;
        double b = 0.0;
        if (kind == DatasetKind::two_moons) {
          const double t = std::numbers::pi * unit(rng);
          a = y == 0 ? std::cos(t) : 1.0 - std::cos(t);
          b = y == 0 ? std::sin(t) : 0.5 - std::sin(t);
          a += noise * normal(rng);
          b += noise * normal(rng);
        } else if (kind == DatasetKind::gaussian_blobs) {
          a = (y == 0 ? -1.5 : 1.5) + noise * normal(rng);
          b = noise * normal(rng);
        } else {
          const double t = 2.0 * std::numbers::pi * unit(rng);
          const double r = (y == 0 ? 1.0 : 2.0) + noise * normal(rng);
          a = r * std::cos(t);
          b = r * std::sin(t);
        }
        data.inputs.push_back(Tensor{std::clamp(a, data.box.lo, data.box.hi),
                                     std::clamp(b, data.box.lo, data.box.hi)});
      }
      break;
    }
    case DatasetKind::toy_grid: {
      constexpr std::size_t side = 4;
      data.box = {0.0, 1.0};
      data.grid = GridShape{1, side};
      for (std::size_t y : labels) {
        std::vector<double> px(side * side);
        for (std::size_t r = 0; r < side; ++r) {
          for (std::size_t c = 0; c < side; ++c) {
            const bool left = c < side / 2;
            const double shift = (left == (y == 0)) ? 0.2 : -0.2;
            px[r * side + c] = std::clamp(0.5 + shift + noise * normal(rng), 0.0, 1.0);
          }
        }
        data.inputs.push_back(Tensor({1, side, side}, std::move(px)));
      }
      break;
    }
  }
  data.validate();
  return data;
}

std::string dataset_to_json(const Dataset& data) {
  std::string s = "{\"version\":1,\"box\":[" + format_double(data.box.lo) + "," +
                  format_double(data.box.hi) + "],\"grid\":";
  s += data.grid ? "[" + std::to_string(data.grid->channels) + "," +
                       std::to_string(data.grid->side) + "]"
                 : std::string("null");
  s += ",\"x\":[";
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    if (i) s += ',';
    s += '[';
    const Tensor& t = data.inputs[i];
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (j) s += ',';
      s += format_double(t[j]);
    }
    s += ']';
  }
  s += "],\"y\":[";
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(data.labels[i]);
  }
  s += "]}\n";
  return s;
}

Dataset dataset_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("dataset file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version")) throw FormatError("dataset file lacks a version field");
    if (doc.at("version").get<int>() != 1) {
      throw FormatError("unsupported dataset version " + doc.at("version").dump());
    }
    Dataset data;
    const auto box = doc.at("box").get<std::vector<double>>();
    if (box.size() != 2) throw FormatError("dataset box must be [lo, hi]");
    data.box = {box[0], box[1]};
    if (!doc.at("grid").is_null()) {
      const auto g = doc.at("grid").get<std::vector<std::size_t>>();
      if (g.size() != 2) throw FormatError("dataset grid must be [channels, side]");
      data.grid = GridShape{g[0], g[1]};
    }
    for (const auto& row : doc.at("x")) {
      auto values = row.get<std::vector<double>>();
      if (data.grid) {
        data.inputs.emplace_back(std::vector<std::size_t>{data.grid->channels, data.grid->side, data.grid->side},
                                 std::move(values));
      } else {
        data.inputs.push_back(Tensor::vector(std::move(values)));
      }
    }
    data.labels = doc.at("y").get<std::vector<std::size_t>>();
    data.validate();
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed dataset file: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent dataset: ") + e.what());
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << dataset_to_json(data);
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_json(ss.str());
}

}  // namespace rfd
