#pragma once

#include <string>

namespace rfd {

/// Decimal rendering with 17 significant digits (exact double round-trip).
/// Non-finite values render as `inf`, `-inf` or `nan`.
std::string format_double(double value);

}  // namespace rfd
