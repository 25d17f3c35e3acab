#include "internal.hpp"

namespace rfd {

AttackResult pgd_attack(const Model& model, const Tensor& x, std::size_t y, double epsilon,
                        std::size_t steps, double step_size, std::optional<InputBox> box) {
  const AttackBudget ball{std::max<std::size_t>(steps, 1), epsilon, Norm::linf};
  ball.validate();
  const InputBox bounds = box.value_or(InputBox{-1e300, 1e300});

  AttackResult result;
  Tensor current = x;
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor g = grad_input(model, current, y, LossKind::margin);
    for (std::size_t k = 0; k < current.size(); ++k) {
      current[k] -= step_size * (g[k] > 0.0 ? 1.0 : g[k] < 0.0 ? -1.0 : 0.0);
    }
    current = project(current, x, ball, bounds);
    result.loss_trace.push_back({t + 1, loss(forward(model, current), y, LossKind::margin),
                                 detail::kNoValue});
  }
  result.x_adv = current;
  result.success = is_misclassified(forward(model, current), y);
  result.queries_used = steps;
  result.distance = norm_linf(current - x);
  return result;
}

}  // namespace rfd
