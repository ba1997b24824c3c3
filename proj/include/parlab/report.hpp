#pragma once

// EstimateReport: one checked inequality, with the measured left side, the
// constant-free right side, the implied constant and fitted exponents.
// Serializes to JSON objects and to a fixed-column CSV row.

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "parlab/geometry.hpp"

namespace parlab {

enum class CheckStatus { pass, fail, hypothesis_not_met, report_only, skipped };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::hypothesis_not_met: return "hypothesis-not-met";
    case CheckStatus::report_only: return "report-only";
    case CheckStatus::skipped: return "skipped";
  }
  return "unknown";
}

struct EstimateReport {
  std::string name;    // checker identifier
  std::string anchor;  // estimate identifier
  double lhs = 0.0;
  double rhs_kernel = 0.0;
  double implied_constant = 0.0;  // lhs / rhs_kernel
  std::map<std::string, double> exponents;
  std::map<std::string, double> params;
  std::string grid_descriptor;
  CheckStatus status = CheckStatus::pass;
  double budget = 0.0;
  std::string note;

  bool passed() const { return status != CheckStatus::fail; }
};

inline std::string describe(const Grid& g) {
  std::ostringstream os;
  os << g.dim << "d n=" << g.n[0];
  if (g.dim == 2) os << "x" << g.n[1];
  os << std::setprecision(6) << " dt=" << g.dt << " t_end=" << g.t_end;
  return os.str();
}

inline double implied(double lhs, double rhs) {
  if (rhs == 0.0) return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

inline nlohmann::json to_json(const EstimateReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["anchor"] = r.anchor;
  j["lhs"] = r.lhs;
  j["rhs_kernel"] = r.rhs_kernel;
  j["implied_constant"] = r.implied_constant;
  j["exponents"] = r.exponents;
  j["params"] = r.params;
  j["grid"] = r.grid_descriptor;
  j["status"] = to_string(r.status);
  j["pass"] = r.passed();
  j["budget"] = r.budget;
  j["note"] = r.note;
  return j;
}

// Column order is frozen; exponents and params flatten to key=value lists.
inline std::string csv_header() {
  return "name,anchor,lhs,rhs_kernel,implied_constant,status,pass,budget,grid,exponents,params,note";
}

inline std::string csv_escape(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n') c = ';';
  return out;
}

inline std::string to_csv_row(const EstimateReport& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto kv = [](const std::map<std::string, double>& m) {
    std::ostringstream s;
    s << std::setprecision(17);
    bool first = true;
    for (const auto& [k, v] : m) {
      if (!first) s << " ";
      s << k << "=" << v;
      first = false;
    }
    return s.str();
  };
  os << csv_escape(r.name) << "," << csv_escape(r.anchor) << "," << r.lhs << "," << r.rhs_kernel
     << "," << r.implied_constant << "," << to_string(r.status) << "," << (r.passed() ? 1 : 0)
     << "," << r.budget << "," << csv_escape(r.grid_descriptor) << "," << kv(r.exponents) << ","
     << kv(r.params) << "," << csv_escape(r.note);
  return os.str();
}

inline void write_reports_json(const std::string& path, const std::vector<EstimateReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_reports_json: cannot open " + path);
  f << arr.dump(2) << "\n";
}

inline void write_reports_csv(const std::string& path, const std::vector<EstimateReport>& reports) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_reports_csv: cannot open " + path);
  f << csv_header() << "\n";
  for (const auto& r : reports) f << to_csv_row(r) << "\n";
}

// Least-squares slope of log(y) against log(x); pairs with y <= 0 are skipped.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0) || !(x[i] > 0)) continue;
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("loglog_slope: need at least 2 positive samples");
  double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::invalid_argument("loglog_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace parlab
