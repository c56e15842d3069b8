#include "ortho/model_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "ortho/errors.hpp"

namespace ortho::io {

namespace {

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_')) {
      return false;
    }
  }
  return true;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_real(const std::string& file, std::size_t line, const std::string& tok) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) {
    throw io_error(file, line, "invalid number '" + tok + "'");
  }
  return v;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& path,
                                 const std::set<std::string>& allowed_keys) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  KeyValueFile f;
  f.path_ = path;
  std::string raw_line;
  std::size_t lineno = 0;
  while (std::getline(in, raw_line)) {
    ++lineno;
    const std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw io_error(path, lineno, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw io_error(path, lineno, "invalid key '" + key + "'");
    }
    if (!allowed_keys.count(key)) {
      throw io_error(path, lineno, "unknown key '" + key + "'");
    }
    if (f.entries_.count(key)) {
      throw io_error(path, lineno, "duplicate key '" + key + "'");
    }
    if (value.empty()) {
      throw io_error(path, lineno, "key '" + key + "' has no value");
    }
    f.entries_[key] = Entry{lineno, value};
  }
  return f;
}

bool KeyValueFile::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

const KeyValueFile::Entry& KeyValueFile::require(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw io_error(path_ + ": missing required key '" + key + "'");
  }
  return it->second;
}

std::vector<std::string> KeyValueFile::strings(const std::string& key) const {
  const Entry& e = require(key);
  return tokenize(e.raw);
}

std::vector<double> KeyValueFile::reals(const std::string& key) const {
  const Entry& e = require(key);
  std::vector<double> out;
  for (const auto& tok : tokenize(e.raw)) {
    out.push_back(parse_real(path_, e.line, tok));
  }
  return out;
}

double KeyValueFile::real(const std::string& key) const {
  const Entry& e = require(key);
  const auto v = reals(key);
  if (v.size() != 1) {
    throw io_error(path_, e.line, "key '" + key + "' expects a single number");
  }
  return v[0];
}

std::vector<std::vector<double>> KeyValueFile::real_matrix(const std::string& key) const {
  const Entry& e = require(key);
  std::vector<std::vector<double>> rows;
  std::string row;
  std::istringstream in(e.raw);
  while (std::getline(in, row, ';')) {
    std::vector<double> r;
    for (const auto& tok : tokenize(row)) {
      r.push_back(parse_real(path_, e.line, tok));
    }
    if (r.empty()) {
      throw io_error(path_, e.line, "key '" + key + "' has an empty matrix row");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

ParsedModel load_model(const std::string& path) {
  const auto f = KeyValueFile::parse(path, {"space.atoms", "space.nu", "p0"});
  const auto atoms = f.strings("space.atoms");
  std::vector<double> nu;
  if (f.has("space.nu")) {
    nu = f.reals("space.nu");
    if (nu.size() != atoms.size()) {
      throw io_error(path, f.line_of("space.nu"),
                     "space.nu has " + std::to_string(nu.size()) +
                         " entries, expected " + std::to_string(atoms.size()));
    }
    for (double w : nu) {
      if (w <= 0.0) {
        throw io_error(path, f.line_of("space.nu"),
                       "space.nu entries must be strictly positive");
      }
    }
  }
  const auto p0 = f.reals("p0");
  if (p0.size() != atoms.size()) {
    throw io_error(path, f.line_of("p0"),
                   "p0 has " + std::to_string(p0.size()) + " entries, expected " +
                       std::to_string(atoms.size()));
  }
  for (double v : p0) {
    if (v < 0.0) {
      throw io_error(path, f.line_of("p0"), "p0 entries must be non-negative");
    }
  }
  SpacePtr space;
  try {
    space = SampleSpace::make(atoms, nu);
  } catch (const std::invalid_argument& e) {
    throw io_error(path, f.line_of("space.atoms"), e.what());
  }
  try {
    return ParsedModel{space, Distribution(space, p0)};
  } catch (const std::invalid_argument& e) {
    throw io_error(path, f.line_of("p0"), e.what());
  }
}

RealFunction load_function(const std::string& path, const SpacePtr& space) {
  const auto f = KeyValueFile::parse(path, {"values"});
  const auto v = f.reals("values");
  if (v.size() != space->size()) {
    throw io_error(path, f.line_of("values"),
                   "values has " + std::to_string(v.size()) + " entries, expected " +
                       std::to_string(space->size()));
  }
  return RealFunction(space, v);
}

std::string digest_files(const std::vector<std::string>& paths) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a 64 offset basis
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001B3ull;
  };
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    char c;
    while (in.get(c)) mix(static_cast<unsigned char>(c));
    mix(0x1F);  // file separator
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace ortho::io
