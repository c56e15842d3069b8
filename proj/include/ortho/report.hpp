#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ortho {

inline constexpr const char* kToolVersion = "0.1.0";

// One verified quantity: its name, measured value, the criterion it is held
// to (human-readable, e.g. "<= 1e-10" or "|v+1| <= 1e-6") and the verdict.
struct CheckRow {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;  // numeric bound used by the criterion
  std::string criterion;
  bool pass = true;
};

// Ordered list of checks plus provenance (digest of the input files, tool
// version, seed) so runs are auditable and reproducible.
struct CheckReport {
  std::string command;
  std::vector<CheckRow> rows;
  std::vector<std::string> notes;
  std::string input_digest;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;

  bool pass() const;
  void add(const std::string& name, double value, double tolerance,
           const std::string& criterion, bool ok);
  // Informational row without a pass criterion.
  void info(const std::string& name, double value);
};

// Shortest round-trip decimal rendering ("%.17g"); stable across runs.
std::string format_double(double v);

std::string to_text(const CheckReport& report);

// CSV with columns check,value,tolerance,pass and a trailing provenance row.
std::string to_csv(const CheckReport& report);

}  // namespace ortho
