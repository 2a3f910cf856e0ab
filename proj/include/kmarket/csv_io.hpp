#pragma once

// CSV artifacts. UTF-8, header row, '.' decimal separator, values written
// with enough digits to round-trip doubles exactly.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmarket/analytics.hpp"
#include "kmarket/market_core.hpp"
#include "kmarket/micro_dynamics.hpp"

namespace kmarket {

/// Columns t,S,ED,X,Y.
void write_trajectory_csv(const std::filesystem::path& path,
                          const TrajectoryRecord& rec);
/// Columns t,K,sf.
void write_estimates_csv(const std::filesystem::path& path,
                         const TrajectoryRecord& rec);
/// Columns x,y.
void write_portfolio_csv(const std::filesystem::path& path,
                         std::span<const AgentState> agents);
/// Column s.
void write_price_csv(const std::filesystem::path& path,
                     std::span<const double> prices);
/// Columns bin_center,density.
void write_histogram_csv(const std::filesystem::path& path,
                         const DensityEstimate& est);
/// Columns theoretical,empirical.
void write_qq_csv(const std::filesystem::path& path,
                  std::span<const std::pair<double, double>> pairs);
/// Columns k,exponent.
void write_hill_csv(const std::filesystem::path& path, const HillStability& h);

/// Fit and diagnostic rows, written as name,param,value.
class Report {
 public:
  void add(std::string name, std::string param, double value);
  void add(std::string name, std::string param, std::string value);
  void write(const std::filesystem::path& path) const;
  [[nodiscard]] const std::vector<std::array<std::string, 3>>& rows() const noexcept {
    return rows_;
  }

 private:
  std::vector<std::array<std::string, 3>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

/// Numeric CSV with a header row.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
NumericTable read_numeric_csv(const std::filesystem::path& path);

std::string format_value(double v);

}  // namespace kmarket
