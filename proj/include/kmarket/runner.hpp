#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kmarket/csv_io.hpp"
#include "kmarket/scenario.hpp"

namespace kmarket {

enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 1,
  exit_runtime_error = 2,
  exit_acceptance_failure = 3
};

struct RunResult {
  std::filesystem::path output_dir;
  Report report;
  std::vector<std::string> warnings;
};

/// Runs the configured pipeline and writes all artifacts into
/// config.output_dir. Throws ConfigError / ModelError on failure.
RunResult run_scenario(const ScenarioConfig& config);

struct StationarityCheck {
  double t = 0.0;
  double ks = 0.0;
};

struct SteadyStateResult {
  bool stationary = false;
  double t_stationary = 0.0;
  std::vector<StationarityCheck> checks;
  /// Price cloud when the stopping rule fired (or at the cap).
  std::vector<double> stationary_prices;
  /// Clouds pooled over the tail-sampling window.
  std::vector<double> pooled_prices;
  /// (X + Y) / 2 averaged over the sampling window.
  double P_inf = 0.0;
  double P_x = 0.0;
  double P_y = 0.0;
  TrajectoryRecord trajectory;
  std::vector<std::string> warnings;
};

/// High-frequency run with the stationarity stopping rule followed by the
/// tail-sampling window.
SteadyStateResult run_steady_state(const ScenarioConfig& config);

/// Initial particle cloud and broker ensemble for a config.
Population initial_population(const ScenarioConfig& config, StreamDomain domain);
BrokerEnsemble initial_brokers(const ScenarioConfig& config);
FundamentalPriceProcess fundamental_process(const ScenarioConfig& config);

}  // namespace kmarket
