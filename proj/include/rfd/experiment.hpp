#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rfd/attacks.hpp"
#include "rfd/config.hpp"
#include "rfd/dataset.hpp"
#include "rfd/network.hpp"
#include "rfd/oracle.hpp"
#include "rfd/train.hpp"

namespace rfd {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int config = 2;
inline constexpr int runtime = 3;
inline constexpr int failed_grid = 4;
}  // namespace exit_code

struct NamedDefense {
  std::string label;
  DefensePolicy policy;
};

/// Everything one robustness evaluation needs; one report cell per
/// (defense, attack, budget), each cell aggregating seeds x samples.
struct AttackExperiment {
  std::shared_ptr<const Model> model;
  Dataset samples;
  std::vector<NamedDefense> defenses;
  std::vector<AttackSettings> attacks;
  std::vector<std::size_t> budgets{1000, 10000};
  double epsilon = 0.05;
  Norm norm = Norm::linf;
  VerificationConfig verification;
  std::size_t eot_m = 1;
  std::vector<std::uint64_t> seeds{0};
  std::size_t jobs = 1;
};

struct SampleRow {
  std::uint64_t seed = 0;
  std::size_t sample_id = 0;
  std::size_t label = 0;
  bool clean_correct = false;
  bool success = false;
  std::size_t queries = 0;
  double distance = 0.0;
};

struct ReportCell {
  std::string defense;
  std::string attack;
  std::size_t budget = 0;
  /// Fraction of (seed, sample) pairs classified correctly before the attack.
  double clean_accuracy = 0.0;
  /// Fraction of (seed, sample) pairs correctly classified and not broken.
  double robust_accuracy = 0.0;
  /// Mean queries over attacked pairs (0 when none were attacked).
  double mean_queries = 0.0;
  std::size_t excluded = 0;
  std::size_t max_queries_used = 0;
  std::vector<SampleRow> rows;
};

struct RobustnessReport {
  std::vector<ReportCell> cells;
  double epsilon = 0.0;
  Norm norm = Norm::linf;
  VerificationConfig verification;
  std::size_t eot_m = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<NamedDefense> defenses;

  const ReportCell& cell(const std::string& defense, const std::string& attack,
                         std::size_t budget) const;
};

/// Runs every (defense, attack, budget, seed, sample) item with a fresh oracle.
/// Results are independent of `jobs`.
RobustnessReport run_attack_experiment(const AttackExperiment& exp);

std::string report_to_json(const RobustnessReport& report);

struct TheoremRow {
  double nu = 0.0;
  double mu = 0.0;
  double grad_h_norm = 0.0;
  double grad_x_norm = 0.0;
  double predicted = 0.0;
  double p_hat = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

/// Two-class single dense layer whose margin-loss input gradient has norm
/// sqrt(2) / norm_ratio, so that ||grad_logits|| / ||grad_x|| == norm_ratio.
Model linear_probe_model(double norm_ratio);

/// Compares closed form and Monte Carlo for a one-layer model with logit noise
/// over a (nu / mu) x (norm ratio) grid.
std::vector<TheoremRow> linear_theorem_grid(const std::vector<double>& nu_over_mu,
                                            const std::vector<double>& norm_ratios, double mu,
                                            std::size_t trials, std::uint64_t seed,
                                            std::size_t jobs = 1);

std::string theorem_csv(const std::vector<TheoremRow>& rows);

/// Shared command-line overrides.
struct CommandOptions {
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

int cmd_train(const Config& cfg, const CommandOptions& opts);
int cmd_attack(const Config& cfg, const CommandOptions& opts);
int cmd_verify_theorem(const Config& cfg, const CommandOptions& opts);
int cmd_profile(const Config& cfg, const CommandOptions& opts);
int cmd_calibrate(const Config& cfg, const CommandOptions& opts);

// Config readers shared by the commands (and handy for tests).
Dataset dataset_from_config(const Config& cfg, const std::string& prefix = "dataset");
DefensePolicy defense_from_config(const Config& cfg);
AttackSettings attack_from_config(const Config& cfg, const std::string& name, Norm norm);
Norm parse_norm(std::string_view name);

}  // namespace rfd
