#include "ortho/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace ortho {

bool CheckReport::pass() const {
  for (const auto& r : rows) {
    if (!r.pass) return false;
  }
  return true;
}

void CheckReport::add(const std::string& name, double value, double tolerance,
                      const std::string& criterion, bool ok) {
  rows.push_back(CheckRow{name, value, tolerance, criterion, ok});
}

void CheckReport::info(const std::string& name, double value) {
  rows.push_back(CheckRow{name, value, 0.0, "(info)", true});
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  // Shortest decimal that round-trips to the same double.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string to_text(const CheckReport& report) {
  std::size_t w_name = 5, w_value = 5, w_crit = 9;
  std::vector<std::string> values;
  values.reserve(report.rows.size());
  for (const auto& r : report.rows) {
    values.push_back(format_double(r.value));
    w_name = std::max(w_name, r.name.size());
    w_value = std::max(w_value, values.back().size());
    w_crit = std::max(w_crit, r.criterion.size());
  }
  std::ostringstream out;
  out << "== ortho " << report.command << " ==\n";
  out << "digest: " << report.input_digest << "  version: " << report.tool_version
      << "  seed: " << report.seed << "\n";
  out << pad("check", w_name + 2) << pad("value", w_value + 2)
      << pad("criterion", w_crit + 2) << "status\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << pad(r.name, w_name + 2) << pad(values[i], w_value + 2)
        << pad(r.criterion, w_crit + 2) << (r.pass ? "PASS" : "FAIL") << "\n";
  }
  for (const auto& n : report.notes) {
    out << "note: " << n << "\n";
  }
  out << "overall: " << (report.pass() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

std::string to_csv(const CheckReport& report) {
  std::ostringstream out;
  out << "check,value,tolerance,pass\n";
  for (const auto& r : report.rows) {
    out << r.name << "," << format_double(r.value) << "," << format_double(r.tolerance)
        << "," << (r.pass ? 1 : 0) << "\n";
  }
  out << "provenance,digest=" << report.input_digest
      << ";version=" << report.tool_version << ";seed=" << report.seed << ",,\n";
  return out.str();
}

}  // namespace ortho
