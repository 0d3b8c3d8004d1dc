#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pdflow/linalg.hpp"

namespace pdflow::config {

// A flat key/value document: one `key = value` pair per line, `#` comments,
// dotted keys for grouping. Values are either a scalar or a
// whitespace-separated list of numbers. Entry order is preserved so dumps
// are canonical and hashable.
class Document {
 public:
  bool has(const std::string& key) const;
  const std::string* find(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string dump() const;

  static Document parse(const std::string& text);      // throws ConfigInvalid
  static Document parse_file(const std::string& path); // throws ConfigInvalid

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Typed accessors; all throw ConfigInvalid naming the offending key.
double get_double(const Document& doc, const std::string& key);
double get_double_or(const Document& doc, const std::string& key, double fallback);
long get_long_or(const Document& doc, const std::string& key, long fallback);
std::string get_string_or(const Document& doc, const std::string& key,
                          const std::string& fallback);
Vector get_vector(const Document& doc, const std::string& key);
Vector get_vector_or(const Document& doc, const std::string& key,
                     const Vector& fallback);

std::string format_double(double v);        // shortest 17-significant-digit form
std::string format_vector(const Vector& v);

// FNV-1a 64-bit hash, used for deterministic run identifiers.
std::string fnv1a_hex(const std::string& text);

}  // namespace pdflow::config
