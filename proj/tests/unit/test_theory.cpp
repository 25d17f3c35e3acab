#include <doctest.h>

#include <boost/math/distributions/cauchy.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "rfd/errors.hpp"
#include "rfd/experiment.hpp"
#include "rfd/stats.hpp"
#include "rfd/theory.hpp"

using rfd::DefensePolicy;
using rfd::Tensor;

namespace {

double cauchy_cdf_at_minus_one(double scale) {
  return boost::math::cdf(boost::math::cauchy_distribution<double>(0.0, scale), -1.0);
}

const rfd::Model& tanh_mlp() {
  static const rfd::Model model = [] {
    rfd::TrainConfig cfg;
    cfg.epochs = 60;
    return rfd::train({{2, 16, 2}, rfd::Activation::tanh}, fixtures::moons_train(), cfg).model;
  }();
  return model;
}

}  // namespace

TEST_CASE("closed form spot values") {
  CHECK(rfd::predicted_flip_prob(0.0, 1.0, 1.0, 1.0) == 0.0);
  CHECK(rfd::predicted_flip_prob(0.3, 1.0, 0.0, 1.0) == 0.0);
  CHECK(rfd::predicted_flip_prob(0.5, 1.0, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  const double big = rfd::predicted_flip_prob(1e12, 1.0, 1.0, 1.0);
  CHECK(big > 0.4999);
  CHECK(big < 0.5);
  CHECK_THROWS_AS(rfd::predicted_flip_prob(1.0, 0.0, 1.0, 1.0), rfd::DomainError);
  CHECK_THROWS_AS(rfd::predicted_flip_prob(1.0, 1.0, 1.0, 0.0), rfd::DomainError);
  CHECK_THROWS_AS(rfd::predicted_flip_prob(-1.0, 1.0, 1.0, 1.0), rfd::DomainError);
}

TEST_CASE("closed form is monotone and below one half") {
  double previous = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double nu = std::pow(10.0, -6.0 + 12.0 * i / 99.0);
    const double p = rfd::predicted_flip_prob(nu, 1.0, 0.7, 1.3);
    CHECK(p >= previous);
    CHECK(p < 0.5);
    previous = p;
  }
  CHECK(rfd::predicted_flip_prob(1.0, 1.0, 2.0, 1.0) >= rfd::predicted_flip_prob(1.0, 1.0, 1.0, 1.0));
  CHECK(rfd::predicted_flip_prob(1.0, 2.0, 1.0, 1.0) <= rfd::predicted_flip_prob(1.0, 1.0, 1.0, 1.0));
  CHECK(rfd::predicted_flip_prob(1.0, 1.0, 1.0, 2.0) <= rfd::predicted_flip_prob(1.0, 1.0, 1.0, 1.0));
}

TEST_CASE("closed form depends only on nu / mu") {
  for (double k : {1e-3, 0.5, 7.0, 1e4}) {
    CHECK(std::abs(rfd::predicted_flip_prob(0.2 * k, 1.5 * k, 0.4, 0.9) -
                   rfd::predicted_flip_prob(0.2, 1.5, 0.4, 0.9)) <= 1e-12);
  }
}

TEST_CASE("closed form equals the Cauchy cdf at -1") {
  CHECK(rfd::cauchy_ratio_scale(0.5, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double s : {0.1, 1.0, 10.0}) {
    CHECK(std::abs(0.5 + std::atan(-1.0 / s) / std::numbers::pi - cauchy_cdf_at_minus_one(s)) <= 1e-12);
  }
  for (double q : {0.01, 1.0, 100.0}) {
    for (double ratio : {0.5, 1.0, 2.0}) {
      const double mu = 1.0;
      const double scale = rfd::cauchy_ratio_scale(q * mu, mu, ratio, 1.0);
      CHECK(std::abs(rfd::predicted_flip_prob(q * mu, mu, ratio, 1.0) - cauchy_cdf_at_minus_one(scale)) <= 1e-12);
    }
  }
  const auto f = rfd::predict_flip(0.5, 1.0, 1.0, 1.0);
  CHECK(f.probability == rfd::predicted_flip_prob(0.5, 1.0, 1.0, 1.0));
}

TEST_CASE("sampled noise-to-signal ratios follow the Cauchy law") {
  // (gh . (d1 - d2)) / (gx . u) with d ~ N(0, nu I) and u ~ N(0, mu I).
  const std::vector<double> gh{0.6, -0.3, 0.8};
  const std::vector<double> gx{1.1, 0.4};
  const double nu = 0.3;
  const double mu = 0.7;
  const double ghn = std::sqrt(0.36 + 0.09 + 0.64);
  const double gxn = std::sqrt(1.21 + 0.16);
  const double s = rfd::cauchy_ratio_scale(nu, mu, ghn, gxn);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  std::vector<double> ratios;
  ratios.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) {
    double num = 0.0;
    for (double g : gh) num += g * std::sqrt(nu) * (n(rng) - n(rng));
    double den = 0.0;
    for (double g : gx) den += g * std::sqrt(mu) * n(rng);
    ratios.push_back(num / den);
  }
  for (int k = 1; k <= 9; ++k) {
    const double q = k / 10.0;
    const double expected = s * std::tan(std::numbers::pi * (q - 0.5));
    CHECK(std::abs(rfd::quantile(ratios, q) - expected) < 0.05 * s);
  }
}

TEST_CASE("empirical flip probability without noise is zero") {
  const rfd::Model m = fixtures::linear_model({1.0, 2.0});
  const auto e = rfd::empirical_flip_prob(m, DefensePolicy::feature({1}, 0.0), Tensor{1.0, 1.0}, 0, 1.0, 1000, 3);
  CHECK(e.p_hat == 0.0);
  CHECK(e.flips == 0);
  CHECK(e.trials == 1000);
  CHECK_THROWS(rfd::empirical_flip_prob(m, DefensePolicy::feature({1}, 0.1), Tensor{1.0, 1.0}, 0, 1.0, 0, 3));
}

TEST_CASE("flip estimate bookkeeping and job independence") {
  const rfd::Model m = fixtures::linear_model({1.0, -0.5});
  const auto policy = DefensePolicy::feature({1}, 0.4);
  const Tensor x{0.3, 0.2};
  const auto a = rfd::empirical_flip_prob(m, policy, x, 0, 1.0, 20000, 5, 1);
  const auto b = rfd::empirical_flip_prob(m, policy, x, 0, 1.0, 20000, 5, 4);
  CHECK(a.flips == b.flips);
  CHECK(a.p_hat == static_cast<double>(a.flips) / a.trials);
  CHECK(a.std_error == doctest::Approx(std::sqrt(a.p_hat * (1 - a.p_hat) / a.trials)).epsilon(1e-14));
}

TEST_CASE("linear models match the closed form within four standard errors") {
  const auto rows = rfd::linear_theorem_grid({0.01, 1.0, 100.0}, {0.5, 1.0, 2.0}, 1.0, 100000, 1);
  REQUIRE(rows.size() == 9);
  for (const auto& r : rows) {
    CHECK(std::abs(r.p_hat - r.predicted) <= 4.0 * r.std_error);
    CHECK(r.pass);
  }
  CHECK(rows[0].grad_h_norm / rows[0].grad_x_norm == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rows[8].grad_h_norm / rows[8].grad_x_norm == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("small noise on a tanh MLP follows the linearization") {
  const rfd::Model& m = tanh_mlp();
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor& x = fixtures::moons_test().inputs[i];
    const std::size_t y = fixtures::moons_test().labels[i];
    const double gx = rfd::norm_l2(rfd::grad_input(m, x, y, rfd::LossKind::margin));
    const double gh = rfd::norm_l2(rfd::grad_at_layer(m, x, 2, y, rfd::LossKind::margin));
    const double predicted = rfd::predicted_flip_prob(1e-4, 1e-4, gh, gx);
    const auto e = rfd::empirical_flip_prob(m, DefensePolicy::feature({2}, 1e-4), x, y, 1e-4, 20000, i);
    CHECK(std::abs(e.p_hat - predicted) <= std::max(0.02, 4.0 * e.std_error));
  }
}

TEST_CASE("ratio profile at the input is the prefactor") {
  const rfd::Model& m = fixtures::moons_mlp();
  const rfd::Dataset data = fixtures::moons_test().head(20);
  const auto profiles = rfd::ratio_profile(m, data, {0, 2, 5}, 0.3, 0.6, 0.03);
  REQUIRE(profiles.size() == 6);
  for (const auto& p : profiles) {
    CHECK(p.sample_ids.size() == 20);
    for (double r : p.ratios) CHECK(r >= 0.0);
    if (p.layer == 0) {
      for (double v : p.prefactored) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("a zero phase step leaves the profile unchanged") {
  const rfd::Model& m = fixtures::moons_mlp();
  const rfd::Dataset data = fixtures::moons_test().head(10);
  const auto profiles = rfd::ratio_profile(m, data, {3}, 0.1, 0.1, 0.0);
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].phase == rfd::ProfilePhase::raw);
  CHECK(profiles[1].phase == rfd::ProfilePhase::perturbed);
  CHECK(profiles[0].ratios == profiles[1].ratios);
}

TEST_CASE("change of ratio on degenerate runs") {
  const auto linear = fixtures::shared_linear({1.0, -1.0});
  rfd::DefendedOracle oracle(linear, DefensePolicy::feature({1}, 0.1), 1);
  rfd::AttackSettings square;
  const auto along = rfd::ratio_change_during_attack(*linear, oracle, square, Tensor{2.0, 0.5}, 0,
                                                     {200, 0.3, rfd::Norm::linf}, 1);
  CHECK(along.change == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(along.definition.empty());

  const auto model = fixtures::shared_moons_mlp();
  rfd::DefendedOracle frozen_oracle(model, DefensePolicy::none(), 1);
  const auto frozen = rfd::ratio_change_during_attack(*model, frozen_oracle, square, Tensor{0.5, 0.25}, 0,
                                                      {1, 0.3, rfd::Norm::linf}, 3);
  CHECK(frozen.change == 1.0);

  // Inputs on the negative orthant give a vanishing input gradient.
  const auto dead = std::make_shared<const rfd::Model>(rfd::Model(
      {rfd::Relu{2}, rfd::Dense{2, 2, {1, 0, 0, 1}, {0.5, 0}}}, 2, 2));
  rfd::DefendedOracle dead_oracle(dead, DefensePolicy::none(), 1);
  rfd::AttackOptions opts;
  opts.box = {-10.0, -1.0};
  CHECK_THROWS_AS(rfd::ratio_change_during_attack(*dead, dead_oracle, square, Tensor{-5.0, -5.0}, 0,
                                                  {50, 0.3, rfd::Norm::linf}, 1, opts),
                  rfd::InsufficientDataError);
}

TEST_CASE("robustness magnitude on identical samples") {
  const rfd::Model m = fixtures::linear_model({1.0, 0.0});
  rfd::Dataset data;
  data.box = {-5, 5};
  for (int i = 0; i < 10; ++i) {
    data.inputs.push_back(Tensor{2.0, 1.0});
    data.labels.push_back(0);
  }
  const auto r = rfd::robustness_magnitude(m, data, 1);
  // L = 2 and the logit gradient is (1, -1).
  CHECK(r.nu_star == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(r.magnitudes.size() == 10);
  CHECK(r.magnitudes[0] == doctest::Approx(2.0).epsilon(1e-14));
  data.labels.assign(10, 1);
  CHECK_THROWS(rfd::robustness_magnitude(m, data, 1));
}

TEST_CASE("decision flip variance") {
  const rfd::Model m = fixtures::linear_model({1.0, 0.5});
  const Tensor x{1.0, 1.0};
  const Tensor d{-1.0, 0.0};
  CHECK(rfd::decision_flip_variance(m, DefensePolicy::feature({1}, 0.0), x, 0, d, 0.5) == 0.0);
  CHECK(rfd::decision_flip_variance(m, DefensePolicy::feature({1}, 0.3), x, 0, d, 0.5) ==
        doctest::Approx(0.6).epsilon(1e-14));

  const rfd::Model deep({rfd::Dense{2, 3, {1, 0, 0, 1, 1, -1}, {0, 0, 0}},
                         rfd::Dense{3, 2, {1, 2, 0, 0, 0, 1}, {0, 0}}},
                        2, 2);
  const auto policy = DefensePolicy::feature({1}, 0.2);
  const double predicted = rfd::decision_flip_variance(deep, policy, x, 0, d, 0.5);
  rfd::NormalSource noise(12);
  const Tensor q = x + (0.5 / rfd::norm_l2(d)) * d;
  std::vector<double> losses;
  for (int i = 0; i < 10000; ++i) {
    losses.push_back(rfd::loss(rfd::randomized_forward(deep, policy, q, noise), 0, rfd::LossKind::margin));
  }
  CHECK(std::abs(rfd::variance(losses) - predicted) <= 0.1 * predicted);
}
