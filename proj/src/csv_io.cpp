#include "kmarket/csv_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kmarket {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string format_value(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const TrajectoryRecord& rec) {
  auto out = open_out(path);
  out << "t,S,ED,X,Y\n";
  for (std::size_t i = 0; i < rec.size(); ++i) {
    out << format_value(rec.times[i]) << ',' << format_value(rec.S_path[i]) << ','
        << format_value(rec.ED_path[i]) << ',' << format_value(rec.X_path[i])
        << ',' << format_value(rec.Y_path[i]) << '\n';
  }
  finish(out, path);
}

void write_estimates_csv(const std::filesystem::path& path,
                         const TrajectoryRecord& rec) {
  auto out = open_out(path);
  out << "t,K,sf\n";
  for (std::size_t i = 0; i < rec.size(); ++i) {
    out << format_value(rec.times[i]) << ',' << format_value(rec.K_path[i])
        << ',' << format_value(rec.sf_path[i]) << '\n';
  }
  finish(out, path);
}

void write_portfolio_csv(const std::filesystem::path& path,
                         std::span<const AgentState> agents) {
  auto out = open_out(path);
  out << "x,y\n";
  for (const auto& a : agents) {
    out << format_value(a.x) << ',' << format_value(a.y) << '\n';
  }
  finish(out, path);
}

void write_price_csv(const std::filesystem::path& path,
                     std::span<const double> prices) {
  auto out = open_out(path);
  out << "s\n";
  for (double s : prices) out << format_value(s) << '\n';
  finish(out, path);
}

void write_histogram_csv(const std::filesystem::path& path,
                         const DensityEstimate& est) {
  auto out = open_out(path);
  out << "bin_center,density\n";
  for (std::size_t i = 0; i < est.bins(); ++i) {
    out << format_value(est.center(i)) << ',' << format_value(est.densities[i])
        << '\n';
  }
  finish(out, path);
}

void write_qq_csv(const std::filesystem::path& path,
                  std::span<const std::pair<double, double>> pairs) {
  auto out = open_out(path);
  out << "theoretical,empirical\n";
  for (const auto& [t, e] : pairs) {
    out << format_value(t) << ',' << format_value(e) << '\n';
  }
  finish(out, path);
}

void write_hill_csv(const std::filesystem::path& path, const HillStability& h) {
  auto out = open_out(path);
  out << "k,exponent\n";
  for (const auto& p : h.points) out << p.k << ',' << format_value(p.exponent) << '\n';
  finish(out, path);
}

void Report::add(std::string name, std::string param, double value) {
  rows_.push_back({std::move(name), std::move(param), format_value(value)});
}

void Report::add(std::string name, std::string param, std::string value) {
  rows_.push_back({std::move(name), std::move(param), std::move(value)});
}

void Report::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << "name,param,value\n";
  for (const auto& row : rows_) {
    out << escape(row[0]) << ',' << escape(row[1]) << ',' << escape(row[2]) << '\n';
  }
  finish(out, path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  NumericTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
  std::istringstream head(line);
  for (std::string cell; std::getline(head, cell, ',');) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw std::runtime_error("non-numeric cell '" + cell + "' in " + path.string());
      }
      row.push_back(v);
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("ragged row in " + path.string());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace kmarket
