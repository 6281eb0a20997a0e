#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fairrep {

/// Parses flat `key=value` text. Blank lines and lines starting with '#' are
/// ignored; keys and values are trimmed. Duplicate keys are an error.
std::map<std::string, std::string> parse_key_value(const std::string& text);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& field);
std::int64_t parse_int(const std::string& text, const std::string& field);
std::uint64_t parse_uint(const std::string& text, const std::string& field);
bool parse_bool(const std::string& text, const std::string& field);

/// 64-bit FNV-1a, used for schema fingerprints.
std::uint64_t fnv1a64(const std::string& data);

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace fairrep
