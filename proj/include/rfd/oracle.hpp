#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "rfd/dataset.hpp"
#include "rfd/network.hpp"
#include "rfd/random.hpp"
#include "rfd/tensor.hpp"

namespace rfd {

enum class DefenseMode { none, input, feature };

/// Where Gaussian noise N(0, nu I) is injected at inference time.
///
/// Feature-mode `layer_set` entries are cuts: 0 perturbs the input, k perturbs
/// the output of layer k-1, and num_layers() perturbs the logits.
struct DefensePolicy {
  DefenseMode mode = DefenseMode::none;
  double nu = 0.0;
  std::vector<std::size_t> layer_set;
  std::map<std::size_t, double> per_layer_nu;

  static DefensePolicy none();
  static DefensePolicy input(double nu);
  static DefensePolicy feature(std::vector<std::size_t> cuts, double nu);

  /// Noise variance applied at `cut`, or 0 when the cut is not perturbed.
  double variance_at(std::size_t cut) const;
  /// The same policy with a different base variance.
  DefensePolicy with_nu(double new_nu) const;
  /// Throws when nu < 0, or the layer set is empty or out of range in feature mode.
  void validate(const Model& model) const;

  friend bool operator==(const DefensePolicy&, const DefensePolicy&) = default;
};

/// One application of the randomized model: a fresh noise draw at every
/// perturbed cut, every layer always propagated.
Tensor randomized_forward(const Model& model, const DefensePolicy& policy,
                          const Tensor& x, NormalSource& noise);

enum class AccessMode { score, decision };

/// What an attacker may ask a deployed model. Every counted call consumes
/// `cost_per_query()` units of budget.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual AccessMode access() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;

  /// Logits; refused with AccessError on a decision oracle.
  virtual Tensor query_scores(const Tensor& x) = 0;
  virtual std::size_t query_label(const Tensor& x) = 0;

  virtual std::size_t query_count() const = 0;
  virtual std::size_t cost_per_query() const = 0;

  /// A single draw of the randomized model that is not charged to the
  /// attacker. Reserved for the evaluation harness.
  virtual Tensor uncounted_forward(const Tensor& x) = 0;
};

/// A model behind a defense policy, with its own noise stream and query counter.
class DefendedOracle final : public Oracle {
 public:
  DefendedOracle(std::shared_ptr<const Model> model, DefensePolicy policy,
                 std::uint64_t seed, AccessMode access = AccessMode::score,
                 std::size_t eot_m = 1);

  AccessMode access() const override { return access_; }
  std::size_t input_dim() const override { return model_->input_dim(); }
  std::size_t num_classes() const override { return model_->num_classes(); }

  Tensor query_scores(const Tensor& x) override;
  std::size_t query_label(const Tensor& x) override;

  std::size_t query_count() const override { return query_count_; }
  std::size_t cost_per_query() const override { return eot_m_; }
  Tensor uncounted_forward(const Tensor& x) override;

  /// Mean of eot_m randomized forwards; charges eot_m queries.
  Tensor defended_forward(const Tensor& x);

  const Model& model() const noexcept { return *model_; }
  std::shared_ptr<const Model> shared_model() const noexcept { return model_; }
  const DefensePolicy& policy() const noexcept { return policy_; }
  std::size_t eot_m() const noexcept { return eot_m_; }
  void set_eot_m(std::size_t m);

 private:
  std::shared_ptr<const Model> model_;
  DefensePolicy policy_;
  NormalSource noise_;
  AccessMode access_;
  std::size_t eot_m_;
  std::size_t query_count_ = 0;
};

/// The same oracle averaging `m` randomized forwards per query (EOT).
DefendedOracle eot_wrap(DefendedOracle oracle, std::size_t m);

struct VerificationConfig {
  std::size_t runs = 9;
  std::size_t majority = 5;
  void validate() const;
};

/// True when at least `cfg.majority` of `cfg.runs` fresh draws misclassify
/// `x_adv`. The draws are not charged to the oracle's query counter.
bool verify_success(Oracle& oracle, const Tensor& x_adv, std::size_t y,
                    const VerificationConfig& cfg = {});

/// Fraction of samples whose label agrees with y in a strict majority of
/// `repeats` uncounted draws.
double clean_accuracy(Oracle& oracle, const Dataset& data, std::size_t repeats);

}  // namespace rfd
