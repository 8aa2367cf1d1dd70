#pragma once

// Result persistence. Reports are flattened into tables first so that the
// CSV and JSON renderings carry the same cells; CSV numbers use %.17g, JSON
// numbers the shortest round-tripping form, so both parse to the same doubles.

#include "satlab/adversary.hpp"
#include "satlab/saturation_lab.hpp"

#include "json.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace satlab {

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// delta, worst_error, alpha, rule, converged.
Table rate_table(const RateReport& report);
/// lam_k, delta_k, alpha_k, error_k, ratio_k, delta_over_alpha, checks_passed.
Table saturation_table(const SaturationReport& report);
/// One row per (delta, direction) pair of a rate experiment.
Table direction_table(const RateReport& report);

std::string format_number(double x);
std::string to_csv(const Table& table);
/// Array of row objects keyed by column name.
nlohmann::json to_json(const Table& table);

nlohmann::json rate_report_json(const RateReport& report);
nlohmann::json saturation_report_json(const SaturationReport& report);

/// Throws io with the path in the message.
void write_text(const std::string& path, const std::string& content);
void write_csv(const Table& table, const std::string& path);
void write_csv(const RateReport& report, const std::string& path);
void write_csv(const SaturationReport& report, const std::string& path);
void write_json(const nlohmann::json& doc, const std::string& path);

/// Log-log scatter of the points with the fitted line exp(b) x^slope and a
/// "slope 0.500" style annotation.
std::string loglog_svg(const std::vector<std::pair<double, double>>& points, const SlopeFit& fit,
                       const std::string& title = "");
void write_loglog_svg(const std::vector<std::pair<double, double>>& points, const SlopeFit& fit,
                      const std::string& path, const std::string& title = "");

}  // namespace satlab
