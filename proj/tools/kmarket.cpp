// Command-line front end: run scenarios, list presets, run acceptance suites.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "kmarket/acceptance.hpp"
#include "kmarket/errors.hpp"
#include "kmarket/parallel.hpp"
#include "kmarket/runner.hpp"
#include "kmarket/scenario.hpp"

namespace {

int run_command(const std::string& target, std::optional<std::uint64_t> seed,
                std::optional<std::string> out) {
  kmarket::ScenarioConfig config = kmarket::load_scenario(target);
  if (seed) config.seed = *seed;
  if (out) config.output_dir = *out;
  const kmarket::RunResult res = kmarket::run_scenario(config);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "mode " << kmarket::to_string(config.mode) << ", seed " << config.seed
            << ", outputs in " << res.output_dir.string() << '\n';
  return kmarket::exit_ok;
}

int verify_command(const std::string& suite, std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : kmarket::run_acceptance(suite, seed)) {
    std::cout << kmarket::format_result(r) << std::endl;
    ok = ok && r.passed;
  }
  return ok ? kmarket::exit_ok : kmarket::exit_acceptance_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic market simulator"};
  app.require_subcommand(1);

  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* run = app.add_subcommand("run", "Run a scenario from a config file or preset");
  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  run->add_option("config", target, "Config file or preset name")->required();
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--out", out, "Output directory");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* presets = app.add_subcommand("presets", "Preset scenarios");
  auto* list = presets->add_subcommand("list", "List preset names");
  presets->require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Run an acceptance suite");
  std::string suite = "all";
  std::uint64_t verify_seed = 1;
  verify->add_option("suite", suite, "Suite name")->required();
  verify->add_option("--seed", verify_seed, "Master seed");
  verify->add_option("--threads", threads, "Worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kmarket::exit_config_error;
  }

  kmarket::set_thread_count(threads);
  try {
    if (*run) return run_command(target, seed, out);
    if (*list) {
      for (const auto& name : kmarket::preset_names()) std::cout << name << '\n';
      return kmarket::exit_ok;
    }
    if (*verify) return verify_command(suite, verify_seed);
  } catch (const kmarket::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kmarket::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kmarket::exit_runtime_error;
  }
  return kmarket::exit_ok;
}
