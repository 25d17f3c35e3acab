#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfd/tensor.hpp"

namespace rfd {

/// Axis-aligned input domain [lo, hi]^d shared by every coordinate.
struct InputBox {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const InputBox&, const InputBox&) = default;
};

/// Image-like layout c x s x s used by window-based attacks.
struct GridShape {
  std::size_t channels = 1;
  std::size_t side = 1;
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<std::size_t> labels;
  InputBox box;
  std::optional<GridShape> grid;

  std::size_t size() const noexcept { return inputs.size(); }
  std::size_t input_dim() const;
  std::size_t num_classes() const;
  /// Throws ShapeError when lengths, dimensions or box containment are violated.
  void validate() const;
  /// The first `n` samples.
  Dataset head(std::size_t n) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Grid layout for window attacks; vectors without metadata are d channels of a 1x1 image.
GridShape grid_of(const Dataset& data);

enum class DatasetKind { two_moons, gaussian_blobs, rings, toy_grid };

DatasetKind parse_dataset_kind(std::string_view name);
std::string_view to_string(DatasetKind kind);

/// Balanced synthetic two-class data, deterministic under `seed`.
///
///  - two_moons: interleaved half circles with isotropic Gaussian jitter `noise`,
///    box [-3, 3]^2.
///  - gaussian_blobs: N((+-1.5, 0), noise^2 I), box [-6, 6]^2.
///  - rings: concentric circles of radius 1 and 2, radial jitter `noise`, box [-3, 3]^2.
///  - toy_grid: 1x4x4 images in [0, 1] whose left/right halves differ in
///    brightness depending on the class, pixel noise `noise`.
Dataset make_dataset(DatasetKind kind, std::size_t n, double noise, std::uint64_t seed);

std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const std::string& text);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace rfd
