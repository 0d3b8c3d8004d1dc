#include "pdflow/config.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigInvalid("empty numeric value for key '" + key + "'");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ConfigInvalid("key '" + key + "': cannot parse number '" + t + "'");
  return v;
}

}  // namespace

bool Document::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* Document::find(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

void Document::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::string Document::dump() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

Document Document::parse(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("line " + std::to_string(lineno) +
                          ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigInvalid("line " + std::to_string(lineno) + ": empty key");
    if (doc.has(key))
      throw ConfigInvalid("duplicate key '" + key + "' at line " +
                          std::to_string(lineno));
    doc.entries_.emplace_back(key, value);
  }
  return doc;
}

Document Document::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

double get_double(const Document& doc, const std::string& key) {
  const std::string* v = doc.find(key);
  if (!v) throw ConfigInvalid("missing required key '" + key + "'");
  return parse_number(key, *v);
}

double get_double_or(const Document& doc, const std::string& key, double fallback) {
  const std::string* v = doc.find(key);
  return v ? parse_number(key, *v) : fallback;
}

long get_long_or(const Document& doc, const std::string& key, long fallback) {
  const std::string* v = doc.find(key);
  if (!v) return fallback;
  const double d = parse_number(key, *v);
  const long l = static_cast<long>(d);
  if (static_cast<double>(l) != d)
    throw ConfigInvalid("key '" + key + "': expected an integer, got '" + *v + "'");
  return l;
}

std::string get_string_or(const Document& doc, const std::string& key,
                          const std::string& fallback) {
  const std::string* v = doc.find(key);
  return v ? *v : fallback;
}

Vector get_vector(const Document& doc, const std::string& key) {
  const std::string* v = doc.find(key);
  if (!v) throw ConfigInvalid("missing required key '" + key + "'");
  std::istringstream in(*v);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(parse_number(key, tok));
  Vector out(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) out(static_cast<Eigen::Index>(i)) = vals[i];
  return out;
}

Vector get_vector_or(const Document& doc, const std::string& key,
                     const Vector& fallback) {
  return doc.has(key) ? get_vector(doc, key) : fallback;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v(i));
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pdflow::config
