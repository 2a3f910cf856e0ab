#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kmarket/csv_io.hpp"
#include "kmarket/errors.hpp"
#include "kmarket/runner.hpp"

using namespace kmarket;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kmarket_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioConfig tiny(ScenarioMode mode) {
  ScenarioConfig c = preset("random_fundamental_price");
  c.mode = mode;
  c.N = 200;
  c.M = 300;
  c.market.T_end = c.market.dt;
  c.kinetic.n_samples = c.N;
  return c;
}

}  // namespace

TEST_CASE("CSV writers") {
  const fs::path dir = scratch("csv");
  TrajectoryRecord rec;
  rec.append({5.0, 0.5, 6.0, 0.0}, 20.0, 21.0, 0.1);
  rec.append({5.5, 0.25, 6.0, 0.1}, 20.5, 20.0, -0.1);
  write_trajectory_csv(dir / "sub" / "t.csv", rec);
  const NumericTable t = read_numeric_csv(dir / "sub" / "t.csv");
  CHECK(t.header == std::vector<std::string>{"t", "S", "ED", "X", "Y"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1] == std::vector<double>{0.1, 5.5, 0.25, 20.5, 20.0});

  Report r;
  r.add("fit", "mu", 0.1);
  r.add("run", "mode", std::string("kinetic"));
  r.write(dir / "report.csv");
  CHECK(slurp(dir / "report.csv") == "name,param,value\nfit,mu,0.10000000000000001\nrun,mode,kinetic\n");
  CHECK(format_value(0.5) == "0.5");
  CHECK_THROWS(read_numeric_csv(dir / "missing.csv"));
  fs::remove_all(dir);
}

TEST_CASE("one-step run in every mode") {
  for (auto mode : {ScenarioMode::micro_det, ScenarioMode::micro_noisy, ScenarioMode::kinetic,
                    ScenarioMode::coupled_long_term, ScenarioMode::coupled_high_frequency,
                    ScenarioMode::hf_steady_state}) {
    CAPTURE(to_string(mode));
    ScenarioConfig c = mode == ScenarioMode::hf_steady_state ? preset("hf_steady_state")
                                                             : tiny(mode);
    if (mode == ScenarioMode::hf_steady_state) {
      c.N = 200;
      c.M = 300;
      c.kinetic.n_samples = c.N;
      c.market.T_end = c.market.dt;
    }
    c.output_dir = scratch(std::string(to_string(mode))).string();
    const RunResult res = run_scenario(c);
    CHECK(fs::exists(res.output_dir / "resolved.ini"));
    CHECK(fs::exists(res.output_dir / "report.csv"));
    const NumericTable t = read_numeric_csv(res.output_dir / "trajectory.csv");
    CHECK(t.rows.size() == 2);
    CHECK(parse_config(slurp(res.output_dir / "resolved.ini")) == c);
    fs::remove_all(res.output_dir);
  }
}

TEST_CASE("re-running the resolved config reproduces every file") {
  ScenarioConfig c = preset("high_frequency_trader");
  c.N = 500;
  c.M = 800;
  c.kinetic.n_samples = c.N;
  c.market.T_end = 0.02;
  c.snapshot_every = 10;
  c.output_dir = scratch("rerun_a").string();
  const RunResult a = run_scenario(c);
  ScenarioConfig again = parse_config(slurp(a.output_dir / "resolved.ini"));
  again.output_dir = scratch("rerun_b").string();
  const RunResult b = run_scenario(again);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.output_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.output_dir);
    if (rel == "resolved.ini") continue;
    CAPTURE(rel.string());
    REQUIRE(fs::exists(b.output_dir / rel));
    CHECK(slurp(entry.path()) == slurp(b.output_dir / rel));
    ++compared;
  }
  CHECK(compared > 5);
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
}

TEST_CASE("kinetic run reports the marginal comparison") {
  ScenarioConfig c = preset("computation_of_marginal");
  c.N = 5000;
  c.kinetic.n_samples = c.N;
  c.market.T_end = 0.05;
  c.output_dir = scratch("marginal").string();
  const RunResult res = run_scenario(c);
  bool found = false;
  for (const auto& row : res.report.rows()) {
    if (row[0] == "marginal_h" && row[1] == "ks") {
      found = true;
      CHECK(std::stod(row[2]) < 0.05);
    }
  }
  CHECK(found);
  CHECK(fs::exists(res.output_dir / "marginal_h_oracle.csv"));
  CHECK(fs::exists(res.output_dir / "snapshots" / "index.csv"));
  fs::remove_all(res.output_dir);
}

TEST_CASE("invalid configs are rejected before running") {
  ScenarioConfig c = tiny(ScenarioMode::coupled_long_term);
  c.M = 0;
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
  ScenarioConfig d = tiny(ScenarioMode::kinetic);
  d.market.T_end = 0.5 * d.market.dt;
  CHECK_THROWS(run_scenario(d));
}
