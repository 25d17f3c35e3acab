#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rfd/attacks.hpp"
#include "rfd/config.hpp"
#include "rfd/errors.hpp"
#include "rfd/experiment.hpp"
#include "rfd/theory.hpp"
#include "rfd/train.hpp"

namespace py = pybind11;
using namespace rfd;

namespace {

Tensor to_tensor(const std::vector<double>& v) { return Tensor::vector(v); }
std::vector<double> to_list(const Tensor& t) { return t.values(); }

std::vector<std::vector<double>> rows_of(const std::vector<Tensor>& ts) {
  std::vector<std::vector<double>> out;
  out.reserve(ts.size());
  for (const Tensor& t : ts) out.push_back(t.values());
  return out;
}

AccessMode parse_access(const std::string& s) {
  if (s == "score") return AccessMode::score;
  if (s == "decision") return AccessMode::decision;
  throw std::invalid_argument("access must be 'score' or 'decision', got '" + s + "'");
}

int run_command(const std::string& name, const std::string& config_text,
                std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed,
                std::size_t jobs) {
  const Config cfg = Config::parse(config_text, "<python>");
  const CommandOptions opts{out.value_or(std::filesystem::path{}), seed, jobs};
  if (name == "train") return cmd_train(cfg, opts);
  if (name == "attack") return cmd_attack(cfg, opts);
  if (name == "verify-theorem") return cmd_verify_theorem(cfg, opts);
  if (name == "profile") return cmd_profile(cfg, opts);
  if (name == "calibrate") return cmd_calibrate(cfg, opts);
  throw std::invalid_argument("unknown command '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_rfdlab, m) {
  m.doc() = "Randomized feature defense and black-box attack toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<AccessError>(m, "AccessError", PyExc_RuntimeError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_RuntimeError);

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_property_readonly("num_layers", &Model::num_layers)
      .def_property_readonly("input_dim", &Model::input_dim)
      .def_property_readonly("num_classes", &Model::num_classes)
      .def("width_at", &Model::width_at)
      .def("to_json", [](const Model& self) { return model_to_json(self); })
      .def("save", [](const Model& self, const std::filesystem::path& p) { save_model(self, p); })
      .def("forward", [](const Model& self, const std::vector<double>& x) {
        return to_list(forward(self, to_tensor(x)));
      })
      .def("forward_to", [](const Model& self, std::size_t cut, const std::vector<double>& x) {
        return to_list(forward_to(self, cut, to_tensor(x)));
      })
      .def("forward_from", [](const Model& self, std::size_t cut, const std::vector<double>& h) {
        return to_list(forward_from(self, cut, to_tensor(h)));
      })
      .def("grad_at_layer",
           [](const Model& self, const std::vector<double>& x, std::size_t cut, std::size_t y) {
             return to_list(grad_at_layer(self, to_tensor(x), cut, y, LossKind::margin));
           })
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

  m.def("load_model", [](const std::filesystem::path& p) { return std::make_shared<Model>(load_model(p)); });
  m.def("model_from_json", [](const std::string& s) { return std::make_shared<Model>(model_from_json(s)); });

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("inputs", [](const Dataset& d) { return rows_of(d.inputs); })
      .def_readonly("labels", &Dataset::labels)
      .def_property_readonly("box", [](const Dataset& d) { return std::pair(d.box.lo, d.box.hi); })
      .def("__len__", &Dataset::size)
      .def("head", &Dataset::head)
      .def("save", [](const Dataset& self, const std::filesystem::path& p) { save_dataset(self, p); })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("make_dataset",
        [](const std::string& kind, std::size_t n, double noise, std::uint64_t seed) {
          return make_dataset(parse_dataset_kind(kind), n, noise, seed);
        },
        py::arg("kind"), py::arg("n"), py::arg("noise") = 0.1, py::arg("seed") = 0);
  m.def("load_dataset", &load_dataset);

  m.def("train",
        [](const Dataset& data, std::vector<std::size_t> widths, const std::string& activation,
           std::size_t epochs, std::size_t batch_size, double lr, double momentum, std::uint64_t seed) {
          TrainConfig cfg;
          cfg.epochs = epochs;
          cfg.batch_size = batch_size;
          cfg.lr = lr;
          cfg.momentum = momentum;
          cfg.seed = seed;
          return std::make_shared<Model>(
              train({std::move(widths), parse_activation(activation)}, data, cfg).model);
        },
        py::arg("data"), py::arg("widths"), py::arg("activation") = "relu", py::arg("epochs") = 200,
        py::arg("batch_size") = 32, py::arg("lr") = 0.05, py::arg("momentum") = 0.9, py::arg("seed") = 0);
  m.def("accuracy", [](const Model& model, const Dataset& data) { return accuracy(model, data); });

  py::class_<DefensePolicy>(m, "DefensePolicy")
      .def_static("none", &DefensePolicy::none)
      .def_static("input", &DefensePolicy::input, py::arg("nu"))
      .def_static("feature", &DefensePolicy::feature, py::arg("cuts"), py::arg("nu"))
      .def_readonly("nu", &DefensePolicy::nu)
      .def_readonly("layers", &DefensePolicy::layer_set)
      .def("with_nu", &DefensePolicy::with_nu);

  py::class_<DefendedOracle>(m, "Oracle")
      .def(py::init([](std::shared_ptr<Model> model, DefensePolicy policy, std::uint64_t seed,
                       const std::string& access, std::size_t eot_m) {
             return DefendedOracle(std::move(model), std::move(policy), seed, parse_access(access), eot_m);
           }),
           py::arg("model"), py::arg("policy"), py::arg("seed") = 0, py::arg("access") = "score",
           py::arg("eot_m") = 1)
      .def("query_scores", [](DefendedOracle& o, const std::vector<double>& x) {
        return to_list(o.query_scores(to_tensor(x)));
      })
      .def("query_label", [](DefendedOracle& o, const std::vector<double>& x) {
        return o.query_label(to_tensor(x));
      })
      .def_property_readonly("query_count", &DefendedOracle::query_count)
      .def("verify_success",
           [](DefendedOracle& o, const std::vector<double>& x, std::size_t y, std::size_t runs,
              std::size_t majority) {
             return verify_success(o, to_tensor(x), y, {runs, majority});
           },
           py::arg("x_adv"), py::arg("y"), py::arg("runs") = 9, py::arg("majority") = 5);

  m.def("run_attack",
        [](const std::string& name, DefendedOracle& oracle, const std::vector<double>& x, std::size_t y,
           double epsilon, std::size_t queries, const std::string& norm, std::uint64_t seed,
           std::pair<double, double> box) {
          AttackSettings settings;
          settings.id = parse_attack_id(name);
          const Norm n = parse_norm(norm);
          settings.nes = NesParams::defaults_for(n);
          AttackOptions opts;
          opts.box = {box.first, box.second};
          opts.seed = seed;
          const AttackResult r = run_attack(settings, oracle, to_tensor(x), y, {queries, epsilon, n}, opts);
          py::dict out;
          out["success"] = r.success;
          out["x_adv"] = to_list(r.x_adv);
          out["queries_used"] = r.queries_used;
          out["distance"] = r.distance;
          return out;
        },
        py::arg("name"), py::arg("oracle"), py::arg("x"), py::arg("y"), py::arg("epsilon"),
        py::arg("queries"), py::arg("norm") = "linf", py::arg("seed") = 0,
        py::arg("box") = std::pair(-1e9, 1e9));

  m.def("predicted_flip_prob", &predicted_flip_prob, py::arg("nu"), py::arg("mu"),
        py::arg("grad_h_norm"), py::arg("grad_x_norm"));
  m.def("cauchy_ratio_scale", &cauchy_ratio_scale, py::arg("nu"), py::arg("mu"),
        py::arg("grad_h_norm"), py::arg("grad_x_norm"));
  m.def("empirical_flip_prob",
        [](const Model& model, const DefensePolicy& policy, const std::vector<double>& x, std::size_t y,
           double mu, std::size_t trials, std::uint64_t seed) {
          const FlipEstimate e = empirical_flip_prob(model, policy, to_tensor(x), y, mu, trials, seed);
          return std::pair(e.p_hat, e.std_error);
        },
        py::arg("model"), py::arg("policy"), py::arg("x"), py::arg("y"), py::arg("mu"),
        py::arg("trials"), py::arg("seed") = 0);
  m.def("theorem_grid_csv",
        [](std::vector<double> ratios, std::vector<double> norm_ratios, double mu, std::size_t trials,
           std::uint64_t seed) {
          return theorem_csv(linear_theorem_grid(ratios, norm_ratios, mu, trials, seed));
        },
        py::arg("nu_over_mu"), py::arg("norm_ratios"), py::arg("mu") = 1.0, py::arg("trials") = 100000,
        py::arg("seed") = 0);

  m.def("calibrate_nu",
        [](const Model& model, const Dataset& data, const DefensePolicy& policy, double target_drop,
           double tol, std::uint64_t eval_seed) {
          CalibrationOptions opts;
          opts.tol = tol;
          opts.eval_seed = eval_seed;
          const CalibrationResult r = calibrate_nu(model, data, policy, target_drop, opts);
          py::dict out;
          out["nu"] = r.nu;
          out["base_accuracy"] = r.base_accuracy;
          out["accuracy"] = r.accuracy;
          out["measured_drop"] = r.measured_drop;
          return out;
        },
        py::arg("model"), py::arg("data"), py::arg("policy"), py::arg("target_drop"),
        py::arg("tol") = 0.005, py::arg("eval_seed") = 0);

  m.def("run_command", &run_command, py::arg("name"), py::arg("config"), py::arg("out") = py::none(),
        py::arg("seed") = py::none(), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
}
