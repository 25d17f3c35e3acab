#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rfd/config.hpp"
#include "rfd/errors.hpp"
#include "rfd/experiment.hpp"

namespace {

std::size_t default_jobs() {
  const char* env = std::getenv("RFD_JOBS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const unsigned long v = std::stoul(env);
    return v == 0 ? 1 : v;
  } catch (const std::exception&) {
    std::cerr << "warning: ignoring non-numeric RFD_JOBS='" << env << "'\n";
    return 1;
  }
}

struct Invocation {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help,
                      Invocation& inv, bool out_required) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config,-c", inv.config, "experiment config file")->required()->check(CLI::ExistingFile);
  auto* out = sub->add_option("--out,-o", inv.out, "output path");
  if (out_required) out->required();
  sub->add_option("--seed", inv.seed, "override the configured seed");
  sub->add_option("--jobs,-j", inv.jobs, "worker threads (default: RFD_JOBS or 1)")
      ->check(CLI::PositiveNumber);
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized feature defense lab"};
  app.require_subcommand(1);
  Invocation inv;
  inv.jobs = default_jobs();

  using Command = int (*)(const rfd::Config&, const rfd::CommandOptions&);
  struct Entry {
    CLI::App* sub;
    Command run;
  };
  const Entry entries[] = {
      {add_command(app, "train", "train a classifier and save it to --out", inv, true), rfd::cmd_train},
      {add_command(app, "attack", "evaluate attacks against defended models", inv, false), rfd::cmd_attack},
      {add_command(app, "verify-theorem", "compare the flip-probability closed form with Monte Carlo", inv, false),
       rfd::cmd_verify_theorem},
      {add_command(app, "profile", "write gradient-ratio profiles into the --out directory", inv, true),
       rfd::cmd_profile},
      {add_command(app, "calibrate", "pick the defense variance for target accuracy drops", inv, false),
       rfd::cmd_calibrate},
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rfd::exit_code::ok : rfd::exit_code::usage;
  }

  for (const Entry& e : entries) {
    if (!e.sub->parsed()) continue;
    rfd::CommandOptions opts;
    opts.out = inv.out;
    if (e.sub->count("--seed") > 0) opts.seed = inv.seed;
    opts.jobs = inv.jobs;
    try {
      return e.run(rfd::Config::load(inv.config), opts);
    } catch (const rfd::ConfigError& err) {
      std::cerr << "config error: " << err.what() << "\n";
      return rfd::exit_code::config;
    } catch (const rfd::FormatError& err) {
      std::cerr << "input error: " << err.what() << "\n";
      return rfd::exit_code::config;
    } catch (const std::invalid_argument& err) {
      std::cerr << "config error: " << err.what() << "\n";
      return rfd::exit_code::config;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << "\n";
      return rfd::exit_code::runtime;
    }
  }
  return rfd::exit_code::usage;
}
