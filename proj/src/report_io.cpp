#include "satlab/report_io.hpp"

#include "satlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace satlab {

using nlohmann::json;

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorKind::invalid_input, "table row has " + std::to_string(row.size()) +
                                              " cells, expected " +
                                              std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

Table rate_table(const RateReport& report) {
  Table t{{"delta", "worst_error", "alpha", "rule", "converged"}, {}};
  for (const auto& s : report.samples) {
    t.add({s.delta, s.worst_error, s.alpha, s.rule, s.converged});
  }
  return t;
}

Table saturation_table(const SaturationReport& report) {
  Table t{{"lam_k", "delta_k", "alpha_k", "error_k", "ratio_k", "delta_over_alpha",
           "checks_passed"},
          {}};
  for (const auto& r : report.rows) {
    t.add({r.lam_k, r.delta_k, r.alpha_k, r.error_k, r.ratio_k, r.delta_over_alpha,
           r.checks_passed});
  }
  return t;
}

Table direction_table(const RateReport& report) {
  Table t{{"delta", "index", "kind", "alpha", "error", "data_residual", "converged", "failure"},
          {}};
  for (std::size_t i = 0; i < report.samples.size() && i < report.details.size(); ++i) {
    for (const auto& r : report.details[i].rows) {
      t.add({report.samples[i].delta, static_cast<long long>(r.index), r.kind, r.alpha, r.error,
             r.data_residual, r.converged, r.failure});
    }
  }
  return t;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render(const Cell& cell) {
  struct {
    std::string operator()(double x) const { return format_number(x); }
    std::string operator()(long long x) const { return std::to_string(x); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const std::string& s) const { return csv_field(s); }
  } visitor;
  return std::visit(visitor, cell);
}

json cell_json(const Cell& cell) {
  return std::visit([](const auto& v) { return json(v); }, cell);
}

json fit_json(const SlopeFit& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += csv_field(table.columns[c]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += render(row[c]);
    }
    out += '\n';
  }
  return out;
}

json to_json(const Table& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
    rows.push_back(std::move(obj));
  }
  return rows;
}

json rate_report_json(const RateReport& report) {
  json failures = json::array();
  for (const auto& [delta, why] : report.failures) {
    failures.push_back({{"delta", delta}, {"reason", why}});
  }
  return {{"fit", fit_json(report.fit)},
          {"samples", to_json(rate_table(report))},
          {"failures", failures}};
}

json saturation_report_json(const SaturationReport& report) {
  json extra = json::array();
  for (const auto& r : report.rows) {
    extra.push_back({{"k", r.k},
                     {"isolated", r.isolated},
                     {"flagged", r.flagged},
                     {"note", r.note},
                     {"pythagoras_residual", r.check.pythagoras_residual},
                     {"cross_term", r.check.cross_term},
                     {"perturbation_sq", r.check.perturbation_sq},
                     {"lower_bound", r.check.lower_bound}});
  }
  return {{"rows", to_json(saturation_table(report))},
          {"row_details", extra},
          {"first_ratio", report.first_ratio},
          {"ratio_floor", report.ratio_floor},
          {"first_delta_over_alpha", report.first_delta_over_alpha},
          {"tail_delta_over_alpha", report.tail_delta_over_alpha}};
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
  out << content;
  out.close();
  if (!out) throw Error(ErrorKind::io, "failed writing " + path);
}

void write_csv(const Table& table, const std::string& path) { write_text(path, to_csv(table)); }

void write_csv(const RateReport& report, const std::string& path) {
  write_csv(rate_table(report), path);
}

void write_csv(const SaturationReport& report, const std::string& path) {
  write_csv(saturation_table(report), path);
}

void write_json(const json& doc, const std::string& path) { write_text(path, doc.dump(2) + "\n"); }

std::string loglog_svg(const std::vector<std::pair<double, double>>& points, const SlopeFit& fit,
                       const std::string& title) {
  constexpr double W = 640, H = 480, M = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) continue;
    const double lx = std::log10(x), ly = std::log10(y);
    if (first) {
      x0 = x1 = lx;
      y0 = y1 = ly;
      first = false;
    }
    x0 = std::min(x0, lx);
    x1 = std::max(x1, lx);
    y0 = std::min(y0, ly);
    y1 = std::max(y1, ly);
  }
  if (x1 - x0 < 1e-12) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad_x = 0.05 * (x1 - x0), pad_y = 0.05 * (y1 - y0);
  x0 -= pad_x;
  x1 += pad_x;
  y0 -= pad_y;
  y1 += pad_y;
  auto px = [&](double lx) { return M + (lx - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double ly) { return H - M - (ly - y0) / (y1 - y0) * (H - 2 * M); };

  std::ostringstream s;
  char buf[256];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                M, M, W - 2 * M, H - 2 * M);
  s << buf;
  for (int d = static_cast<int>(std::ceil(x0)); d <= static_cast<int>(std::floor(x1)); ++d) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"middle\">1e%d"
                  "</text>\n",
                  px(d), H - M + 16, d);
    s << buf;
  }
  for (int d = static_cast<int>(std::ceil(y0)); d <= static_cast<int>(std::floor(y1)); ++d) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">1e%d"
                  "</text>\n",
                  M - 6, py(d) + 4, d);
    s << buf;
  }
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) continue;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3.5\" fill=\"#1f77b4\"/>\n",
                  px(std::log10(x)), py(std::log10(y)));
    s << buf;
  }
  // Fit is in natural logs: log y = b + m log x.
  auto fit_ly = [&](double lx) {
    return (fit.intercept + fit.slope * lx * std::log(10.0)) / std::log(10.0);
  };
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#d62728\" "
                "stroke-dasharray=\"6,4\"/>\n",
                px(x0), py(fit_ly(x0)), px(x1), py(fit_ly(x1)));
  s << "<clipPath id=\"plot\"><rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M
    << "\" height=\"" << H - 2 * M << "\"/></clipPath>\n";
  s << "<g clip-path=\"url(#plot)\">" << buf << "</g>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" font-size=\"14\" fill=\"#d62728\">slope %.3f "
                "(r^2 %.4f)</text>\n",
                M + 10, M + 20, fit.slope, fit.r_squared);
  s << buf;
  if (!title.empty()) {
    std::string esc;
    for (char c : title) {
      if (c == '<') esc += "&lt;";
      else if (c == '>') esc += "&gt;";
      else if (c == '&') esc += "&amp;";
      else esc += c;
    }
    s << "<text x=\"" << W / 2 << "\" y=\"" << M / 2
      << "\" font-size=\"15\" text-anchor=\"middle\">" << esc << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_loglog_svg(const std::vector<std::pair<double, double>>& points, const SlopeFit& fit,
                      const std::string& path, const std::string& title) {
  write_text(path, loglog_svg(points, fit, title));
}

}  // namespace satlab
