#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rfd {

using Rng = std::mt19937_64;

/// Deterministic sub-seed for a (base seed, work-item coordinates) tuple.
/// Distinct tuples give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// Standard-normal source bound to its own engine.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return dist_(engine_); }
  Rng& engine() { return engine_; }

 private:
  Rng engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace rfd
