#pragma once

#include <cmath>
#include <limits>

#include "rfd/attacks.hpp"
#include "rfd/errors.hpp"

namespace rfd::detail {

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

// Tracks the queries one attack run has spent against its budget.
class QueryMeter {
 public:
  QueryMeter(Oracle& oracle, std::size_t max_queries)
      : oracle_(oracle), start_(oracle.query_count()), limit_(max_queries) {}

  std::size_t used() const { return oracle_.query_count() - start_; }
  bool can_afford(std::size_t n = 1) const {
    return used() + n * oracle_.cost_per_query() <= limit_;
  }

 private:
  Oracle& oracle_;
  std::size_t start_;
  std::size_t limit_;
};

inline void require_access(const Oracle& oracle, AccessMode mode, const char* attack) {
  if (oracle.access() != mode) {
    throw AccessError(std::string(attack) +
                      (mode == AccessMode::score ? " needs a score oracle"
                                                 : " needs a decision oracle"));
  }
}

inline void require_input(const Oracle& oracle, const Tensor& x) {
  if (x.size() != oracle.input_dim()) throw ShapeError("attack input length does not match the oracle");
}

inline double distance(const Tensor& a, const Tensor& b, Norm norm) {
  const Tensor diff = a - b;
  return norm == Norm::linf ? norm_linf(diff) : norm_l2(diff);
}

// The result fields every attack fills the same way.
inline AttackResult finish(AttackResult r, const Tensor& x, const AttackBudget& budget,
                           const QueryMeter& meter) {
  r.queries_used = meter.used();
  r.distance = distance(r.x_adv, x, budget.norm);
  return r;
}

}  // namespace rfd::detail
