// Acceptance suite: one PASS/FAIL line per criterion.

#include <boost/math/distributions/cauchy.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "rfd/attacks.hpp"
#include "rfd/experiment.hpp"
#include "rfd/format.hpp"
#include "rfd/stats.hpp"
#include "rfd/theory.hpp"
#include "rfd/train.hpp"

using namespace rfd;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t env_jobs() {
  const char* v = std::getenv("RFD_JOBS");
  return v && *v ? std::max(1ul, std::stoul(v)) : 1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Pinned acceptance setup: two moons, 2-32-32-2 relu MLP, 200 epochs.
struct Setup {
  Dataset train_set = make_dataset(DatasetKind::two_moons, 1000, 0.1, 1);
  Dataset test_set = make_dataset(DatasetKind::two_moons, 200, 0.1, 2);
  std::shared_ptr<const Model> model;
  double test_accuracy = 0.0;
  std::filesystem::path dir;

  Setup() {
    TrainConfig cfg;
    cfg.epochs = 200;
    model = std::make_shared<const Model>(train({{2, 32, 32, 2}, Activation::relu}, train_set, cfg).model);
    test_accuracy = accuracy(*model, test_set);
    dir = std::filesystem::temp_directory_path() / "rfd_acceptance";
    std::filesystem::create_directories(dir);
    save_model(*model, dir / "model.json");
    save_dataset(test_set, dir / "test.json");
  }
};

// Counts every call kind so accounting can be audited after a run.
class AuditingOracle final : public Oracle {
 public:
  explicit AuditingOracle(DefendedOracle inner) : inner_(std::move(inner)) {}
  AccessMode access() const override { return inner_.access(); }
  std::size_t input_dim() const override { return inner_.input_dim(); }
  std::size_t num_classes() const override { return inner_.num_classes(); }
  Tensor query_scores(const Tensor& x) override {
    const std::size_t before = inner_.query_count();
    Tensor z = inner_.query_scores(x);
    step_ok = step_ok && inner_.query_count() - before == inner_.cost_per_query();
    ++counted;
    return z;
  }
  std::size_t query_label(const Tensor& x) override {
    const std::size_t before = inner_.query_count();
    const std::size_t label = inner_.query_label(x);
    step_ok = step_ok && inner_.query_count() - before == inner_.cost_per_query();
    ++counted;
    return label;
  }
  std::size_t query_count() const override { return inner_.query_count(); }
  std::size_t cost_per_query() const override { return inner_.cost_per_query(); }
  Tensor uncounted_forward(const Tensor& x) override {
    const std::size_t before = inner_.query_count();
    Tensor z = inner_.uncounted_forward(x);
    uncounted_ok = uncounted_ok && inner_.query_count() == before;
    ++uncounted;
    return z;
  }

  std::size_t counted = 0;
  std::size_t uncounted = 0;
  bool step_ok = true;
  bool uncounted_ok = true;

 private:
  DefendedOracle inner_;
};

Verdict theorem_grid() {
  const auto t0 = Clock::now();
  const auto rows = linear_theorem_grid({0.01, 1.0, 100.0}, {0.5, 1.0, 2.0}, 1.0, 100000, 2024, env_jobs());
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  bool pass = rows.size() == 9;
  for (const auto& r : rows) {
    worst = std::max(worst, std::abs(r.p_hat - r.predicted) / r.std_error);
    pass = pass && std::abs(r.p_hat - r.predicted) <= 4.0 * r.std_error;
  }
  return {pass && elapsed < 30.0, "max |p_hat - p| / stderr = " + fmt(worst) + " over " +
                                      std::to_string(rows.size()) + " points, " + fmt(elapsed, 3) + " s"};
}

Verdict closed_form() {
  bool pass = predicted_flip_prob(0.0, 1.0, 1.0, 1.0) == 0.0;
  // (2 nu / mu) ratio^2 = 1 at nu = 0.5, mu = 1 and unit norms.
  const double quarter = predicted_flip_prob(0.5, 1.0, 1.0, 1.0);
  pass = pass && std::abs(quarter - 0.25) <= 1e-15;
  double previous = -1.0;
  bool below_half = true;
  bool monotone = true;
  for (int i = 0; i < 100; ++i) {
    const double nu = std::pow(10.0, -8.0 + 16.0 * i / 99.0);
    const double p = predicted_flip_prob(nu, 1.0, 0.8, 1.1);
    below_half = below_half && p < 0.5;
    monotone = monotone && p >= previous;
    previous = p;
  }
  const double limit = predicted_flip_prob(1e12, 1.0, 1.0, 1.0);
  below_half = below_half && limit < 0.5;
  pass = pass && below_half && monotone;
  return {pass, "p(nu=0) = 0, p(quarter point) = " + format_double(quarter) + ", monotone over 100-point log grid: " +
                    (monotone ? "yes" : "no") + ", p(1e12) = " + format_double(limit)};
}

Verdict cauchy_correspondence() {
  double worst = 0.0;
  for (double q : {0.01, 1.0, 100.0}) {
    for (double ratio : {0.5, 1.0, 2.0}) {
      const double s = cauchy_ratio_scale(q, 1.0, ratio, 1.0);
      const double cdf = boost::math::cdf(boost::math::cauchy_distribution<double>(0.0, s), -1.0);
      worst = std::max(worst, std::abs(predicted_flip_prob(q, 1.0, ratio, 1.0) - cdf));
    }
  }
  return {worst <= 1e-12, "max |p - CauchyCDF(-1)| = " + fmt(worst, 3)};
}

Verdict gradient_fidelity(const Model& m) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  double worst = 0.0;
  int points = 0;
  const double h = 1e-5;
  while (points < 50) {
    const Tensor x{u(rng), u(rng)};
    // Skip points within 1e-3 of a relu kink or a margin tie.
    double kink = std::abs(loss(forward(m, x), 0, LossKind::margin));
    Tensor z = x;
    for (const Layer& layer : m.layers()) {
      if (std::holds_alternative<Relu>(layer)) {
        for (double v : z) kink = std::min(kink, std::abs(v));
      }
      z = apply_layer(layer, z);
    }
    if (kink < 1e-3) continue;
    ++points;
    const std::size_t y = argmax(forward(m, x));
    for (std::size_t cut = 0; cut <= m.num_layers(); ++cut) {
      const Tensor hidden = forward_to(m, cut, x);
      const Tensor g = grad_at_layer(m, x, cut, y, LossKind::margin);
      for (std::size_t i = 0; i < hidden.size(); ++i) {
        Tensor up = hidden;
        Tensor down = hidden;
        up[i] += h;
        down[i] -= h;
        const double fd = (loss(forward_from(m, cut, up), y, LossKind::margin) -
                           loss(forward_from(m, cut, down), y, LossKind::margin)) /
                          (2 * h);
        worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-8}));
      }
    }
  }
  return {worst < 1e-5, "max relative error " + fmt(worst, 3) + " over 50 points x " +
                            std::to_string(m.num_layers() + 1) + " cuts"};
}

struct EfficacyRun {
  nlohmann::json report;
  std::string bytes_serial;
  std::string bytes_parallel;
  double seconds = 0.0;
};

std::string attack_config(const Setup& s, std::size_t cut) {
  return "model.path = " + (s.dir / "model.json").string() + "\n" +
         "dataset.path = " + (s.dir / "test.json").string() + "\n" +
         "run.samples = 200\n"
         "run.seeds = 0, 1, 2\n"
         "defense.mode = feature\n"
         "defense.layers = " + std::to_string(cut) + "\n"
         "defense.calibrate_drop = 0.02\n"
         "defense.calibrate.tol = 0.005\n"
         "attack.name = square, signhunter, nes, rays, signflip\n"
         "attack.nes.samples = 10\n"
         "attack.nes.lr = 0.03\n"
         "budget.queries = 500\n"
         "budget.epsilon = 0.3\n"
         "budget.norm = linf\n";
}

EfficacyRun run_efficacy(const Setup& s, std::size_t cut, bool twice) {
  EfficacyRun run;
  const auto t0 = Clock::now();
  const auto out1 = s.dir / ("report_cut" + std::to_string(cut) + "_serial.json");
  cmd_attack(Config::parse(attack_config(s, cut)), {out1, std::nullopt, 1});
  run.seconds = seconds_since(t0);
  run.bytes_serial = slurp(out1);
  run.report = nlohmann::json::parse(run.bytes_serial);
  if (twice) {
    const auto out8 = s.dir / ("report_cut" + std::to_string(cut) + "_jobs8.json");
    cmd_attack(Config::parse(attack_config(s, cut)), {out8, std::nullopt, 8});
    run.bytes_parallel = slurp(out8);
  }
  return run;
}

double robust(const nlohmann::json& report, const std::string& defense, const std::string& attack) {
  for (const auto& c : report["cells"]) {
    if (c["defense"] == defense && c["attack"] == attack) return c["robust_accuracy"].get<double>();
  }
  throw std::runtime_error("missing cell " + defense + "/" + attack);
}

std::string gains(const nlohmann::json& report) {
  std::string s;
  for (const char* a : {"square", "signhunter", "nes", "rays", "signflip"}) {
    if (!s.empty()) s += ", ";
    s += std::string(a) + " " + fmt(robust(report, "none", a), 3) + " -> " + fmt(robust(report, "feature", a), 3);
  }
  return s;
}

Verdict defense_efficacy(const Setup& s, const EfficacyRun& run) {
  const auto& r = run.report;
  const double drop = r["calibration"]["measured_drop"].get<double>();
  const double g_square = robust(r, "feature", "square") - robust(r, "none", "square");
  const double g_hunter = robust(r, "feature", "signhunter") - robust(r, "none", "signhunter");
  const double g_nes = robust(r, "feature", "nes") - robust(r, "none", "nes");
  const bool pass = s.test_accuracy >= 0.97 && std::abs(drop - 0.02) <= 0.005 + 1e-12 &&
                    g_square >= 0.10 - 1e-12 && g_hunter >= 0.10 - 1e-12 && g_nes >= 0.05 - 1e-12 &&
                    run.seconds < 300.0;
  return {pass, "test acc " + fmt(s.test_accuracy, 3) + ", nu " + fmt(r["calibration"]["nu"].get<double>()) +
                    " (drop " + fmt(drop, 3) + "), gains square " + fmt(100 * g_square, 3) + " pp, signhunter " +
                    fmt(100 * g_hunter, 3) + " pp, nes " + fmt(100 * g_nes, 3) + " pp, " + fmt(run.seconds, 3) + " s"};
}

Verdict decision_efficacy(const EfficacyRun& run) {
  const auto& r = run.report;
  const double rays_none = robust(r, "none", "rays");
  const double rays_def = robust(r, "feature", "rays");
  const double flip_none = robust(r, "none", "signflip");
  const double flip_def = robust(r, "feature", "signflip");
  return {rays_def > rays_none && flip_def > flip_none,
          "rays " + fmt(rays_none, 3) + " -> " + fmt(rays_def, 3) + ", signflip " + fmt(flip_none, 3) + " -> " +
              fmt(flip_def, 3)};
}

Verdict boundary_oracle() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  double worst = 0.0;
  int found = 0;
  int receding_ok = 0;
  int receding = 0;
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> c{n(rng), n(rng)};
    const auto model = std::make_shared<const Model>(
        Model({Dense{2, 2, {c[0], c[1], 0.0, 0.0}, {0.0, 0.0}}}, 2, 2));
    const Tensor x{n(rng), n(rng)};
    const double cx = c[0] * x[0] + c[1] * x[1];
    const std::size_t y = cx > 0 ? 0 : 1;
    // Direction towards the boundary with a random tangential component.
    const double sgn = cx > 0 ? -1.0 : 1.0;
    const double t = n(rng);
    const Tensor d{sgn * c[0] - t * c[1], sgn * c[1] + t * c[0]};
    const double cd = (c[0] * d[0] + c[1] * d[1]) / norm_l2(d);
    DefendedOracle oracle(model, DefensePolicy::none(), 0, AccessMode::decision);
    const auto r = boundary_distance(oracle, x, y, d, 1e3, 1e-6);
    if (r) {
      ++found;
      worst = std::max(worst, std::abs(*r - (-cx / cd)));
    }
    ++receding;
    receding_ok += !boundary_distance(oracle, x, y, -1.0 * d, 1e3, 1e-6).has_value();
  }
  return {found == 20 && worst <= 1e-6 && receding_ok == receding,
          "max error " + fmt(worst, 3) + " over " + std::to_string(found) + " pairs, receding directions flagged " +
              std::to_string(receding_ok) + "/" + std::to_string(receding)};
}

Verdict query_accounting(const Setup& s, const std::vector<EfficacyRun*>& runs) {
  std::size_t worst = 0;
  bool budget_ok = true;
  for (const EfficacyRun* run : runs) {
    for (const auto& c : run->report["cells"]) {
      for (const auto& row : c["rows"]) {
        worst = std::max<std::size_t>(worst, row["queries"].get<std::size_t>());
        budget_ok = budget_ok && row["queries"].get<std::size_t>() <= c["budget"].get<std::size_t>();
      }
    }
  }
  // Audited EOT runs of every attack on near-boundary samples.
  bool step_ok = true;
  bool uncounted_ok = true;
  bool eot_budget_ok = true;
  std::size_t verifications = 0;
  for (auto id : {AttackId::nes, AttackId::square, AttackId::signhunter, AttackId::rays, AttackId::signflip}) {
    for (std::size_t i = 0; i < 10; ++i) {
      const AccessMode mode = is_decision_attack(id) ? AccessMode::decision : AccessMode::score;
      AuditingOracle oracle(DefendedOracle(s.model, DefensePolicy::feature({2}, 0.05), i, mode, 10));
      AttackSettings settings;
      settings.id = id;
      settings.nes = {10, 0.01, 0.03, true};
      AttackOptions opts;
      opts.box = s.test_set.box;
      opts.seed = i;
      const AttackResult r = run_attack(settings, oracle, s.test_set.inputs[i], s.test_set.labels[i],
                                        {1000, 0.3, Norm::linf}, opts);
      step_ok = step_ok && oracle.step_ok && oracle.query_count() == 10 * oracle.counted;
      uncounted_ok = uncounted_ok && oracle.uncounted_ok;
      eot_budget_ok = eot_budget_ok && r.queries_used <= 1000 && r.queries_used == oracle.query_count();
      verifications += oracle.uncounted;
    }
  }
  return {budget_ok && step_ok && uncounted_ok && eot_budget_ok && verifications > 0,
          "max queries " + std::to_string(worst) + " of 500, eot cost per call 10: " + (step_ok ? "yes" : "no") +
              ", " + std::to_string(verifications) + " verification draws left the counter unchanged: " +
              (uncounted_ok ? "yes" : "no")};
}

Verdict eot_variance(const Setup& s) {
  const auto policy = DefensePolicy::feature({2}, 0.05);
  const Tensor x = s.test_set.inputs[0];
  const std::size_t y = s.test_set.labels[0];
  const Tensor xu = x + Tensor{0.01, -0.02};
  auto diff_variance = [&](std::size_t m) {
    DefendedOracle oracle(s.model, policy, 99, AccessMode::score, m);
    std::vector<double> d;
    for (int i = 0; i < 10000; ++i) {
      d.push_back(loss(oracle.query_scores(xu), y, LossKind::margin) - loss(oracle.query_scores(x), y, LossKind::margin));
    }
    return variance(d);
  };
  const double ratio = diff_variance(10) / diff_variance(1);
  return {ratio >= 1.0 / 15.0 && ratio <= 1.0 / 6.7, "var(M=10) / var(M=1) = " + fmt(ratio) + " (1/" + fmt(1.0 / ratio) + ")"};
}

Verdict determinism(const EfficacyRun& run) {
  const bool same = !run.bytes_serial.empty() && run.bytes_serial == run.bytes_parallel;
  return {same, "jobs 1 vs 8 reports: " + std::to_string(run.bytes_serial.size()) + " bytes, " +
                    (same ? "identical" : "different")};
}

Verdict round_trip(const Setup& s) {
  const Model back = load_model(s.dir / "model.json");
  const Dataset data = load_dataset(s.dir / "test.json");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int identical = 0;
  for (int i = 0; i < 100; ++i) {
    const Tensor x{u(rng), u(rng)};
    identical += forward(back, x) == forward(*s.model, x);
  }
  const bool data_ok = data == s.test_set;
  return {identical == 100 && data_ok, std::to_string(identical) + "/100 probes bit-identical, dataset " +
                                           (data_ok ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  // Criteria listed after --known-failures are expected to fail; the exit
  // status reports any deviation from that list in either direction.
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--known-failures" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) known.insert(std::stoi(item));
    }
  }

  std::set<int> failed;
  const auto report = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) failed.insert(id);
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << v.detail << std::endl;
  };

  report(1, "theorem oracle grid", theorem_grid);
  report(2, "closed-form spot values", closed_form);
  report(3, "Cauchy correspondence", cauchy_correspondence);

  const Setup setup;
  report(4, "gradient fidelity", [&] { return gradient_fidelity(*setup.model); });

  EfficacyRun pinned;
  try {
    pinned = run_efficacy(setup, 4, true);
  } catch (const std::exception& e) {
    std::cout << "error: efficacy run failed: " << e.what() << std::endl;
  }
  report(5, "score-based defense efficacy", [&] { return defense_efficacy(setup, pinned); });
  report(6, "decision-based defense efficacy", [&] { return decision_efficacy(pinned); });
  report(7, "boundary-distance oracle", boundary_oracle);
  report(8, "query accounting", [&] { return query_accounting(setup, {&pinned}); });
  report(9, "EOT variance", [&] { return eot_variance(setup); });
  report(10, "determinism", [&] { return determinism(pinned); });
  report(11, "model/dataset round trip", [&] { return round_trip(setup); });

  // Supplementary measurements, not criteria.
  for (std::size_t cut : {1u, 2u, 3u, 5u}) {
    try {
      const EfficacyRun run = run_efficacy(setup, cut, false);
      std::cout << "info  robust accuracy with noise at cut " << cut << ": " << gains(run.report) << std::endl;
    } catch (const std::exception& e) {
      std::cout << "info  cut " << cut << " run failed: " << e.what() << std::endl;
    }
  }
  if (!pinned.report.is_null()) {
    std::cout << "info  robust accuracy with noise at cut 4: " << gains(pinned.report) << std::endl;
  }
  {
    const auto input = robustness_magnitude(*setup.model, setup.test_set, 0);
    const auto deep = robustness_magnitude(*setup.model, setup.test_set, setup.model->num_layers() - 1);
    const double in_median = quantile(input.magnitudes, 0.5);
    const double deep_median = quantile(deep.magnitudes, 0.5);
    std::cout << (deep_median >= in_median ? "PASS" : "FAIL")
              << "  profile: deepest hidden-layer median robustness magnitude " << fmt(deep_median)
              << " >= input median " << fmt(in_median) << std::endl;
    if (deep_median < in_median) failed.insert(0);
  }

  std::cout << "summary: " << (11 - std::count_if(failed.begin(), failed.end(), [](int i) { return i > 0; }))
            << "/11 criteria passed" << std::endl;
  if (failed != known) {
    std::cout << "unexpected outcome: failing set differs from the declared known failures" << std::endl;
    return 1;
  }
  return 0;
}
