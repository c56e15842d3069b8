#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ortho/model_core.hpp"

namespace ortho::io {

// Line-oriented "key = value" file shared by every input format.
//   - blank lines and lines starting with '#' are ignored
//   - keys match [A-Za-z0-9._]+ and may appear at most once
//   - values are whitespace-separated tokens; ';' separates matrix rows
// Parse errors throw ortho::io_error with "file:line:" context.
class KeyValueFile {
 public:
  struct Entry {
    std::size_t line = 0;
    std::string raw;
  };

  static KeyValueFile parse(const std::string& path,
                            const std::set<std::string>& allowed_keys);

  bool has(const std::string& key) const;
  const Entry& require(const std::string& key) const;

  // Typed accessors; malformed numbers raise io_error at the entry's line.
  std::vector<std::string> strings(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  double real(const std::string& key) const;
  std::vector<std::vector<double>> real_matrix(const std::string& key) const;

  const std::string& path() const { return path_; }
  std::size_t line_of(const std::string& key) const { return require(key).line; }

 private:
  std::string path_;
  std::map<std::string, Entry> entries_;
};

struct ParsedModel {
  SpacePtr space;
  Distribution p0;
};

// Model file: keys `space.atoms` (names), optional `space.nu` (weights,
// default counting measure) and `p0` (densities).
ParsedModel load_model(const std::string& path);

// Function file: key `values`, one real per atom of `space`.
RealFunction load_function(const std::string& path, const SpacePtr& space);

// FNV-1a 64-bit digest over the raw bytes of the given files, hex-encoded.
// Used as report provenance.
std::string digest_files(const std::vector<std::string>& paths);

}  // namespace ortho::io
