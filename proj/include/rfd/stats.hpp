#pragma once

#include <span>
#include <vector>

namespace rfd {

/// Linearly interpolated quantile (numpy's default rule) of unsorted values, q in [0, 1].
double quantile(std::span<const double> values, double q);

double mean(std::span<const double> values);
/// Unbiased sample variance.
double variance(std::span<const double> values);

}  // namespace rfd
