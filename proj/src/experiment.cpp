#include "rfd/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "rfd/errors.hpp"
#include "rfd/format.hpp"
#include "rfd/parallel.hpp"
#include "rfd/random.hpp"
#include "rfd/theory.hpp"

namespace rfd {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string_view to_string(Norm norm) { return norm == Norm::linf ? "linf" : "l2"; }

std::string_view to_string(DefenseMode mode) {
  switch (mode) {
    case DefenseMode::none: return "none";
    case DefenseMode::input: return "input";
    case DefenseMode::feature: return "feature";
  }
  return "unknown";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void emit(const CommandOptions& opts, const std::string& content) {
  if (opts.out.empty()) {
    std::cout << content;
  } else {
    write_file(opts.out, content);
  }
}

ordered_json policy_json(const DefensePolicy& p) {
  ordered_json j;
  j["mode"] = to_string(p.mode);
  j["nu"] = p.nu;
  j["layers"] = p.layer_set;
  return j;
}

std::vector<std::uint64_t> seeds_from_config(const Config& cfg, const CommandOptions& opts) {
  if (opts.seed) return {*opts.seed};
  std::vector<std::uint64_t> seeds;
  for (std::size_t s : cfg.get_counts("run.seeds", {0})) seeds.push_back(s);
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  return seeds;
}

std::shared_ptr<const Model> model_from_config(const Config& cfg) {
  return std::make_shared<const Model>(load_model(cfg.get_string("model.path")));
}

Dataset samples_from_config(const Config& cfg) {
  Dataset data = dataset_from_config(cfg);
  const std::size_t n = cfg.get_count("run.samples", data.size());
  if (n > data.size()) {
    throw ConfigError("run.samples = " + std::to_string(n) + " exceeds the dataset size " +
                      std::to_string(data.size()));
  }
  return data.head(n);
}

CalibrationOptions calibration_options(const Config& cfg, const std::string& prefix) {
  CalibrationOptions c;
  c.tol = cfg.get_double(prefix + ".tol", c.tol);
  c.eval_seed = cfg.get_u64(prefix + ".seed", c.eval_seed);
  c.repeats = cfg.get_count(prefix + ".repeats", c.repeats);
  return c;
}

ordered_json calibration_json(const CalibrationResult& c) {
  ordered_json j;
  j["target_drop"] = c.target_drop;
  j["nu"] = c.nu;
  j["base_accuracy"] = c.base_accuracy;
  j["accuracy"] = c.accuracy;
  j["measured_drop"] = c.measured_drop;
  j["eval_seed"] = c.eval_seed;
  j["repeats"] = c.repeats;
  j["evaluations"] = c.evaluations;
  return j;
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string s;
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) s += ',';
    s += c;
    first = false;
  }
  s += '\n';
  return s;
}

}  // namespace

Norm parse_norm(std::string_view name) {
  if (name == "linf") return Norm::linf;
  if (name == "l2") return Norm::l2;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "'");
}

Dataset dataset_from_config(const Config& cfg, const std::string& prefix) {
  if (cfg.has(prefix + ".path")) return load_dataset(cfg.get_string(prefix + ".path"));
  const DatasetKind kind = parse_dataset_kind(cfg.get_string(prefix + ".kind"));
  return make_dataset(kind, cfg.get_count(prefix + ".n", 200), cfg.get_double(prefix + ".noise", 0.1),
                      cfg.get_u64(prefix + ".seed", 0));
}

DefensePolicy defense_from_config(const Config& cfg) {
  const std::string mode = cfg.get_string("defense.mode", "none");
  const double nu = cfg.get_double("defense.nu", 0.0);
  if (mode == "none") return DefensePolicy::none();
  if (mode == "input") return DefensePolicy::input(nu);
  if (mode == "feature") return DefensePolicy::feature(cfg.get_counts("defense.layers", {}), nu);
  throw ConfigError("defense.mode must be none, input or feature (got '" + mode + "')");
}

AttackSettings attack_from_config(const Config& cfg, const std::string& name, Norm norm) {
  AttackSettings s;
  s.id = parse_attack_id(name);
  s.nes = NesParams::defaults_for(norm);
  s.nes.samples_per_step = cfg.get_count("attack.nes.samples", s.nes.samples_per_step);
  s.nes.fd_step = cfg.get_double("attack.nes.fd_step", s.nes.fd_step);
  s.nes.lr = cfg.get_double("attack.nes.lr", s.nes.lr);
  s.nes.antithetic = cfg.get_bool("attack.nes.antithetic", s.nes.antithetic);
  s.square.p_init = cfg.get_double("attack.square.p_init", s.square.p_init);
  s.signflip.alpha = cfg.get_double("attack.signflip.alpha", s.signflip.alpha);
  s.signflip.flip_fraction = cfg.get_double("attack.signflip.flip_fraction", s.signflip.flip_fraction);
  s.signflip.restart_cap = cfg.get_count("attack.signflip.restart_cap", s.signflip.restart_cap);
  s.rays.search_tol = cfg.get_double("attack.rays.tol", s.rays.search_tol);
  return s;
}

// --- robustness evaluation ---------------------------------------------------

const ReportCell& RobustnessReport::cell(const std::string& defense, const std::string& attack,
                                         std::size_t budget) const {
  for (const ReportCell& c : cells) {
    if (c.defense == defense && c.attack == attack && c.budget == budget) return c;
  }
  throw std::out_of_range("no report cell for " + defense + "/" + attack + "/" +
                          std::to_string(budget));
}

RobustnessReport run_attack_experiment(const AttackExperiment& exp) {
  if (!exp.model) throw std::invalid_argument("experiment needs a model");
  if (exp.samples.size() == 0) throw std::invalid_argument("experiment needs samples");
  if (exp.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  exp.verification.validate();
  for (const NamedDefense& d : exp.defenses) d.policy.validate(*exp.model);

  struct CellKey {
    std::size_t defense, attack, budget;
  };
  std::vector<CellKey> keys;
  for (std::size_t d = 0; d < exp.defenses.size(); ++d) {
    for (std::size_t a = 0; a < exp.attacks.size(); ++a) {
      for (std::size_t b = 0; b < exp.budgets.size(); ++b) keys.push_back({d, a, b});
    }
  }
  const std::size_t n = exp.samples.size();
  const std::size_t per_cell = exp.seeds.size() * n;
  std::vector<SampleRow> rows(keys.size() * per_cell);

  parallel_for(rows.size(), exp.jobs, [&](std::size_t item) {
    const CellKey& key = keys[item / per_cell];
    const std::size_t seed_index = (item % per_cell) / n;
    const std::size_t i = item % n;
    const std::uint64_t seed = exp.seeds[seed_index];
    const NamedDefense& defense = exp.defenses[key.defense];
    const AttackSettings& attack = exp.attacks[key.attack];
    const Tensor& x = exp.samples.inputs[i];
    const std::size_t y = exp.samples.labels[i];

    SampleRow row;
    row.seed = seed;
    row.sample_id = i;
    row.label = y;
    {
      DefendedOracle judge(exp.model, defense.policy, derive_seed(seed, {i, 3}));
      row.clean_correct = !verify_success(judge, x, y, exp.verification);
    }
    if (row.clean_correct) {
      const AccessMode access =
          is_decision_attack(attack.id) ? AccessMode::decision : AccessMode::score;
      DefendedOracle oracle(exp.model, defense.policy, derive_seed(seed, {i, 1}), access,
                            exp.eot_m);
      AttackOptions opts;
      opts.box = exp.samples.box;
      opts.grid = exp.samples.grid;
      opts.verification = exp.verification;
      opts.seed = derive_seed(seed, {i, 2});
      const AttackBudget budget{exp.budgets[key.budget], exp.epsilon, exp.norm};
      const AttackResult r = run_attack(attack, oracle, x, y, budget, opts);
      DefendedOracle judge(exp.model, defense.policy, derive_seed(seed, {i, 4}));
      row.success = verify_success(judge, r.x_adv, y, exp.verification);
      row.queries = r.queries_used;
      row.distance = r.distance;
    }
    rows[item] = row;
  });

  RobustnessReport report;
  report.epsilon = exp.epsilon;
  report.norm = exp.norm;
  report.verification = exp.verification;
  report.eot_m = exp.eot_m;
  report.seeds = exp.seeds;
  report.defenses = exp.defenses;
  for (std::size_t c = 0; c < keys.size(); ++c) {
    ReportCell cell;
    cell.defense = exp.defenses[keys[c].defense].label;
    cell.attack = std::string(to_string(exp.attacks[keys[c].attack].id));
    cell.budget = exp.budgets[keys[c].budget];
    cell.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(c * per_cell),
                     rows.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell));
    std::size_t correct = 0;
    std::size_t robust = 0;
    std::size_t query_sum = 0;
    for (const SampleRow& r : cell.rows) {
      if (!r.clean_correct) {
        ++cell.excluded;
        continue;
      }
      ++correct;
      if (!r.success) ++robust;
      query_sum += r.queries;
      cell.max_queries_used = std::max(cell.max_queries_used, r.queries);
    }
    const auto total = static_cast<double>(cell.rows.size());
    cell.clean_accuracy = static_cast<double>(correct) / total;
    cell.robust_accuracy = static_cast<double>(robust) / total;
    cell.mean_queries = correct ? static_cast<double>(query_sum) / static_cast<double>(correct) : 0.0;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

std::string report_to_json(const RobustnessReport& report) {
  ordered_json j;
  j["epsilon"] = report.epsilon;
  j["norm"] = to_string(report.norm);
  j["verification"] = {{"runs", report.verification.runs},
                       {"majority", report.verification.majority}};
  j["eot_m"] = report.eot_m;
  j["seeds"] = report.seeds;
  j["clean_accuracy_repeats"] = report.verification.runs;
  ordered_json defenses = ordered_json::array();
  for (const NamedDefense& d : report.defenses) {
    ordered_json dj = policy_json(d.policy);
    dj["label"] = d.label;
    defenses.push_back(dj);
  }
  j["defenses"] = defenses;
  ordered_json cells = ordered_json::array();
  for (const ReportCell& c : report.cells) {
    ordered_json cj;
    cj["defense"] = c.defense;
    cj["attack"] = c.attack;
    cj["budget"] = c.budget;
    cj["clean_accuracy"] = c.clean_accuracy;
    cj["robust_accuracy"] = c.robust_accuracy;
    cj["mean_queries"] = c.mean_queries;
    cj["excluded"] = c.excluded;
    ordered_json rows = ordered_json::array();
    for (const SampleRow& r : c.rows) {
      rows.push_back({{"seed", r.seed},
                      {"sample_id", r.sample_id},
                      {"label", r.label},
                      {"clean_correct", r.clean_correct},
                      {"success", r.success},
                      {"queries", r.queries},
                      {"distance", r.distance}});
    }
    cj["rows"] = rows;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

// --- theorem verification --------------------------------------------------

Model linear_probe_model(double norm_ratio) {
  if (!(norm_ratio > 0.0)) throw DomainError("norm ratio must be positive");
  const double a = std::numbers::sqrt2 / (2.0 * norm_ratio);
  Dense d{2, 2, {a, 0.0, -a, 0.0}, {0.0, 0.0}};
  return Model({d}, 2, 2);
}

namespace {

TheoremRow theorem_row(const Model& model, const Tensor& x, std::size_t y, std::size_t cut,
                       double nu, double mu, std::size_t trials, std::uint64_t seed,
                       double floor, std::size_t jobs) {
  TheoremRow row;
  row.nu = nu;
  row.mu = mu;
  row.grad_x_norm = norm_l2(grad_input(model, x, y, LossKind::margin));
  row.grad_h_norm = norm_l2(grad_at_layer(model, x, cut, y, LossKind::margin));
  row.predicted = predicted_flip_prob(nu, mu, row.grad_h_norm, row.grad_x_norm);
  const FlipEstimate est =
      empirical_flip_prob(model, DefensePolicy::feature({cut}, nu), x, y, mu, trials, seed, jobs);
  row.p_hat = est.p_hat;
  row.std_error = est.std_error;
  row.trials = est.trials;
  row.pass = std::abs(row.p_hat - row.predicted) <= std::max(floor, 4.0 * row.std_error);
  return row;
}

}  // namespace

std::vector<TheoremRow> linear_theorem_grid(const std::vector<double>& nu_over_mu,
                                            const std::vector<double>& norm_ratios, double mu,
                                            std::size_t trials, std::uint64_t seed,
                                            std::size_t jobs) {
  std::vector<TheoremRow> rows;
  const Tensor x{0.25, -0.5};
  for (double ratio : norm_ratios) {
    const Model model = linear_probe_model(ratio);
    for (double q : nu_over_mu) {
      rows.push_back(theorem_row(model, x, 0, model.num_layers(), q * mu, mu, trials,
                                 derive_seed(seed, {rows.size()}), 0.0, jobs));
    }
  }
  return rows;
}

std::string theorem_csv(const std::vector<TheoremRow>& rows) {
  std::string s = "nu,mu,gh,gx,predicted,p_hat,stderr,trials,pass\n";
  for (const TheoremRow& r : rows) {
    s += csv_row({format_double(r.nu), format_double(r.mu), format_double(r.grad_h_norm),
                  format_double(r.grad_x_norm), format_double(r.predicted),
                  format_double(r.p_hat), format_double(r.std_error), std::to_string(r.trials),
                  r.pass ? "pass" : "fail"});
  }
  return s;
}

// --- commands ----------------------------------------------------------------

int cmd_train(const Config& cfg, const CommandOptions& opts) {
  const Dataset data = dataset_from_config(cfg);
  NetworkSpec spec;
  spec.widths = cfg.get_counts("model.layers", {data.input_dim(), 32, 32, 2});
  spec.activation = parse_activation(cfg.get_string("model.activation", "relu"));
  TrainConfig tc;
  tc.epochs = cfg.get_count("train.epochs", tc.epochs);
  tc.batch_size = cfg.get_count("train.batch_size", tc.batch_size);
  tc.lr = cfg.get_double("train.lr", tc.lr);
  tc.momentum = cfg.get_double("train.momentum", tc.momentum);
  tc.seed = opts.seed.value_or(cfg.get_u64("train.seed", tc.seed));
  if (cfg.has("train.adversarial.epsilon")) {
    AdversarialTraining at;
    at.epsilon = cfg.get_double("train.adversarial.epsilon");
    at.steps = cfg.get_count("train.adversarial.steps", at.steps);
    at.step_size = cfg.get_double("train.adversarial.step_size", at.epsilon / 4.0);
    tc.adversarial = at;
  }
  std::optional<Dataset> test;
  if (cfg.has("test.path") || cfg.has("test.kind")) test = dataset_from_config(cfg, "test");
  const std::string save_train = cfg.get_string("dataset.save", "");
  const std::string save_test = cfg.get_string("test.save", "");
  if (opts.out.empty()) throw ConfigError("train needs --out for the model file");
  cfg.reject_unused();

  const TrainResult result = train(spec, data, tc);
  save_model(result.model, opts.out);
  if (!save_train.empty()) save_dataset(data, save_train);
  if (test && !save_test.empty()) save_dataset(*test, save_test);

  ordered_json summary;
  summary["model"] = opts.out.string();
  summary["seed"] = tc.seed;
  summary["epochs"] = tc.epochs;
  summary["final_loss"] = result.final_loss;
  summary["train_accuracy"] = result.train_accuracy;
  if (test) summary["test_accuracy"] = accuracy(result.model, *test);
  std::cout << summary.dump(2) << "\n";
  return exit_code::ok;
}

int cmd_attack(const Config& cfg, const CommandOptions& opts) {
  AttackExperiment exp;
  exp.model = model_from_config(cfg);
  exp.samples = samples_from_config(cfg);
  exp.norm = parse_norm(cfg.get_string("budget.norm", "linf"));
  exp.epsilon = cfg.get_double("budget.epsilon", exp.epsilon);
  exp.budgets = cfg.get_counts("budget.queries", exp.budgets);
  exp.verification.runs = cfg.get_count("verify.runs", exp.verification.runs);
  exp.verification.majority = cfg.get_count("verify.majority", exp.verification.majority);
  exp.eot_m = cfg.get_count("eot.m", exp.eot_m);
  exp.seeds = seeds_from_config(cfg, opts);
  exp.jobs = opts.jobs;
  for (const std::string& name : cfg.get_strings("attack.name", {"square"})) {
    exp.attacks.push_back(attack_from_config(cfg, name, exp.norm));
  }

  DefensePolicy policy = defense_from_config(cfg);
  std::optional<CalibrationResult> calibration;
  if (cfg.has("defense.calibrate_drop")) {
    const double target = cfg.get_double("defense.calibrate_drop");
    const CalibrationOptions copts = calibration_options(cfg, "defense.calibrate");
    calibration = calibrate_nu(*exp.model, exp.samples, policy, target, copts);
    policy.nu = calibration->nu;
  }
  if (cfg.get_bool("defense.baseline", true) && policy.mode != DefenseMode::none) {
    exp.defenses.push_back({"none", DefensePolicy::none()});
  }
  exp.defenses.push_back({std::string(to_string(policy.mode)), policy});
  cfg.reject_unused();

  const RobustnessReport report = run_attack_experiment(exp);
  std::string text = report_to_json(report);
  if (calibration) {
    auto j = ordered_json::parse(text);
    j["calibration"] = calibration_json(*calibration);
    text = j.dump(2) + "\n";
  }
  emit(opts, text);
  return exit_code::ok;
}

int cmd_verify_theorem(const Config& cfg, const CommandOptions& opts) {
  const std::size_t trials = cfg.get_count("theorem.trials", 100000);
  const std::uint64_t seed = opts.seed.value_or(cfg.get_u64("theorem.seed", 0));
  const std::string which = cfg.get_string("theorem.model", "linear");
  std::vector<TheoremRow> rows;
  if (which == "linear") {
    const auto grid = cfg.get_doubles("theorem.nu_over_mu", {0.01, 1.0, 100.0});
    const auto ratios = cfg.get_doubles("theorem.norm_ratios", {0.5, 1.0, 2.0});
    const double mu = cfg.get_double("theorem.mu", 1.0);
    cfg.reject_unused();
    rows = linear_theorem_grid(grid, ratios, mu, trials, seed, opts.jobs);
  } else {
    const Model model = load_model(which);
    const Dataset data = dataset_from_config(cfg);
    const std::size_t sample = cfg.get_count("theorem.sample", 0);
    if (sample >= data.size()) throw ConfigError("theorem.sample exceeds the dataset size");
    const std::size_t cut = cfg.get_count("theorem.layer", model.num_layers());
    const auto nus = cfg.get_doubles("theorem.nu", {1e-4});
    const auto mus = cfg.get_doubles("theorem.mu", {1e-4});
    const double floor = cfg.get_double("theorem.tolerance_floor", 0.0);
    cfg.reject_unused();
    for (double mu : mus) {
      for (double nu : nus) {
        rows.push_back(theorem_row(model, data.inputs[sample], data.labels[sample], cut, nu, mu,
                                   trials, derive_seed(seed, {rows.size()}), floor, opts.jobs));
      }
    }
  }
  emit(opts, theorem_csv(rows));
  const bool all_pass = std::all_of(rows.begin(), rows.end(), [](const TheoremRow& r) { return r.pass; });
  return all_pass ? exit_code::ok : exit_code::failed_grid;
}

int cmd_profile(const Config& cfg, const CommandOptions& opts) {
  const auto model = model_from_config(cfg);
  const Dataset data = samples_from_config(cfg);
  std::vector<std::size_t> all_cuts;
  for (std::size_t c = 0; c <= model->num_layers(); ++c) all_cuts.push_back(c);
  const auto layers = cfg.get_counts("profile.layers", all_cuts);
  const double nu = cfg.get_double("profile.nu", 1e-2);
  const double mu = cfg.get_double("profile.mu", 1e-2);
  const double epsilon = cfg.get_double("budget.epsilon", 0.05);
  const double phase_step = cfg.get_double("profile.phase_step", 0.1 * epsilon);
  const double keep = cfg.get_double("profile.keep", 0.99);
  const std::string change_attack = cfg.get_string("profile.change_attack", "");
  const std::size_t change_samples = cfg.get_count("profile.change_samples", std::min<std::size_t>(20, data.size()));
  const std::size_t change_budget = cfg.get_counts("budget.queries", {1000}).front();
  const std::size_t record_every = cfg.get_count("profile.record_every", 1);
  const DefensePolicy policy = defense_from_config(cfg);
  std::optional<AttackSettings> attack;
  if (!change_attack.empty()) attack = attack_from_config(cfg, change_attack, Norm::linf);
  const std::uint64_t seed = opts.seed.value_or(cfg.get_counts("run.seeds", {0}).front());
  cfg.reject_unused();
  if (opts.out.empty()) throw ConfigError("profile needs --out DIR");
  std::filesystem::create_directories(opts.out);

  std::string ratio_csv = "layer,phase,sample_id,ratio,prefactored_ratio\n";
  for (const RatioProfile& p : ratio_profile(*model, data, layers, nu, mu, phase_step)) {
    for (std::size_t k = 0; k < p.sample_ids.size(); ++k) {
      ratio_csv += csv_row({std::to_string(p.layer), std::string(to_string(p.phase)),
                            std::to_string(p.sample_ids[k]), format_double(p.ratios[k]),
                            format_double(p.prefactored[k])});
    }
  }
  write_file(opts.out / "ratio_profile.csv", ratio_csv);

  ordered_json meta;
  meta["nu"] = nu;
  meta["mu"] = mu;
  meta["phase_step"] = phase_step;
  meta["quantile_keep"] = keep;
  ordered_json nu_star = ordered_json::object();
  std::string mag_csv = "layer,sample_id,loss_over_grad,magnitude\n";
  for (std::size_t cut : layers) {
    const RobustnessMagnitude m = robustness_magnitude(*model, data, cut, keep);
    nu_star[std::to_string(cut)] = m.nu_star;
    for (std::size_t k = 0; k < m.sample_ids.size(); ++k) {
      mag_csv += csv_row({std::to_string(cut), std::to_string(m.sample_ids[k]),
                          format_double(m.ratios[k]), format_double(m.magnitudes[k])});
    }
  }
  meta["nu_star"] = nu_star;
  write_file(opts.out / "robustness_magnitude.csv", mag_csv);

  if (attack) {
    std::string change_csv = "layer,sample_id,change,recorded_points\n";
    std::string definition;
    const AttackBudget budget{change_budget, epsilon, Norm::linf};
    for (std::size_t cut : layers) {
      for (std::size_t i = 0; i < std::min(change_samples, data.size()); ++i) {
        DefendedOracle oracle(model, policy, derive_seed(seed, {i, 1}));
        AttackOptions aopts;
        aopts.box = data.box;
        aopts.grid = data.grid;
        aopts.seed = derive_seed(seed, {i, 2});
        try {
          const RatioChange rc = ratio_change_during_attack(*model, oracle, *attack, data.inputs[i],
                                                            data.labels[i], budget, cut, aopts,
                                                            record_every);
          definition = rc.definition;
          change_csv += csv_row({std::to_string(cut), std::to_string(i), format_double(rc.change),
                                 std::to_string(rc.ratios.size())});
        } catch (const InsufficientDataError&) {
          change_csv += csv_row({std::to_string(cut), std::to_string(i), "nan", "0"});
        }
      }
    }
    meta["change_of_ratio"] = {{"attack", change_attack},
                               {"budget", change_budget},
                               {"definition", definition},
                               {"defense", policy_json(policy)}};
    write_file(opts.out / "ratio_change.csv", change_csv);
  }
  write_file(opts.out / "profile_meta.json", meta.dump(2) + "\n");
  return exit_code::ok;
}

int cmd_calibrate(const Config& cfg, const CommandOptions& opts) {
  const auto model = model_from_config(cfg);
  const Dataset data = samples_from_config(cfg);
  const DefensePolicy policy = defense_from_config(cfg);
  const auto targets = cfg.get_doubles("calibrate.targets", {0.01, 0.02});
  CalibrationOptions copts = calibration_options(cfg, "calibrate");
  if (opts.seed) copts.eval_seed = *opts.seed;
  cfg.reject_unused();

  ordered_json j;
  j["defense"] = policy_json(policy);
  j["eval_seed"] = copts.eval_seed;
  j["repeats"] = copts.repeats;
  j["tol"] = copts.tol;
  ordered_json results = ordered_json::array();
  for (double target : targets) results.push_back(calibration_json(calibrate_nu(*model, data, policy, target, copts)));
  j["results"] = results;
  emit(opts, j.dump(2) + "\n");
  return exit_code::ok;
}

}  // namespace rfd
