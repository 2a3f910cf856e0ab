#pragma once

// Scenario configuration: INI-style text with one section per module.
//
//   [run]         mode, seed, T_end, sample_every, snapshot_every, output_dir
//   [market]      kappa nu r D rho omega gamma alpha beta dt chi value_fn
//   [kinetic]     epsilon eta_truncation
//   [population]  N M X0 Y0 S0 initial x_log_sd y_log_sd s_log_sd control
//   [fundamental] sf0 process volatility
//   [coupling]    scheme chartist portfolio_noise
//   [steady_state] check_fraction ks_threshold tail_snapshots tail_gap
//
// `mode` and `N` are always required, `M` for the broker modes. Everything
// else has a default, and emit_config writes every key explicitly.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kmarket/broker_market.hpp"
#include "kmarket/kinetic_solver.hpp"
#include "kmarket/market_core.hpp"
#include "kmarket/micro_dynamics.hpp"

namespace kmarket {

enum class ScenarioMode {
  micro_det,
  micro_noisy,
  kinetic,
  coupled_long_term,
  coupled_high_frequency,
  hf_steady_state
};

enum class InitialLaw { point_mass, lognormal };

struct ScenarioConfig {
  std::string name = "custom";
  ScenarioMode mode = ScenarioMode::kinetic;
  std::uint64_t seed = 1;
  std::size_t sample_every = 1;
  std::size_t snapshot_every = 0;
  std::string output_dir = "out";

  MarketParams market;
  KineticParams kinetic;

  std::size_t N = 1;
  std::size_t M = 0;
  double X0 = 20.0;
  double Y0 = 20.0;
  double S0 = 5.0;
  InitialLaw initial = InitialLaw::point_mass;
  double x_log_sd = 0.0;
  double y_log_sd = 0.0;
  double s_log_sd = 0.0;
  ControlLaw control = ControlLaw::mean_field;

  double sf0 = 5.0;
  bool sf_stochastic = false;
  double sf_volatility = 0.1;

  BrokerScheme scheme = BrokerScheme::euler_maruyama;
  ChartistVariant kc_variant = ChartistVariant::pooled;
  bool portfolio_noise = true;

  // hf_steady_state: clouds are compared every check_fraction * T_end; the
  // run is stationary once the two-sample K-S distance drops below
  // ks_threshold. Then tail_snapshots clouds tail_gap apart are pooled.
  double check_fraction = 0.1;
  double ks_threshold = 0.01;
  std::size_t tail_snapshots = 10;
  double tail_gap = 0.2;

  [[nodiscard]] bool uses_brokers() const noexcept {
    return mode == ScenarioMode::coupled_long_term ||
           mode == ScenarioMode::coupled_high_frequency ||
           mode == ScenarioMode::hf_steady_state;
  }

  /// Throws ConfigError naming the offending key.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

std::string_view to_string(ScenarioMode mode);

ScenarioConfig parse_config(std::string_view text);
std::string emit_config(const ScenarioConfig& config);

std::vector<std::string> preset_names();
[[nodiscard]] bool is_preset(std::string_view name);
ScenarioConfig preset(std::string_view name);

/// A preset name or the path of a config file.
ScenarioConfig load_scenario(const std::string& preset_or_path);

}  // namespace kmarket
