#include "fairrep/kv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fairrep/error.hpp"

namespace fairrep {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

std::map<std::string, std::string> parse_key_value(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(fmt::format("line {}: expected key=value", line_no));
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw Error(fmt::format("line {}: empty key", line_no));
    if (out.count(key)) throw Error(fmt::format("line {}: duplicate key '{}'", line_no, key));
    out.emplace(std::move(key), trim(t.substr(eq + 1)));
  }
  return out;
}

std::string format_double(double value) { return fmt::format("{}", value); }

double parse_double(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  // Underflow to a subnormal is fine; overflow is not.
  if (t.empty() || end != t.c_str() + t.size() || (errno == ERANGE && std::isinf(v))) {
    throw Error(fmt::format("field '{}': not a number: '{}'", field, text));
  }
  return v;
}

std::int64_t parse_int(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw Error(fmt::format("field '{}': not an integer: '{}'", field, text));
  }
  return v;
}

std::uint64_t parse_uint(const std::string& text, const std::string& field) {
  const std::int64_t v = parse_int(text, field);
  if (v < 0) throw Error(fmt::format("field '{}': must be non-negative", field));
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw Error(fmt::format("field '{}': not a boolean: '{}'", field, text));
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace fairrep
