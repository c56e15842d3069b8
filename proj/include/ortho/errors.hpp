#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ortho {

// Error classes used across the library:
//   io_error             -- malformed input file; message carries "file:line:".
//   std::invalid_argument -- violated precondition (dimension mismatch,
//                            non-normalized distribution, bad grid, ...).
//   std::domain_error    -- mathematical degeneracy discovered while running
//                            (lost support, zero variance, degenerate Jacobian,
//                            direction leaving the admissible set, ...).
class io_error : public std::runtime_error {
 public:
  io_error(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ortho
