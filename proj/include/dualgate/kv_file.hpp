#pragma once

#include <map>
#include <string>
#include <vector>

namespace dualgate {

// One `key=value` line. `#` starts a comment; blank lines are skipped.
struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

std::vector<KvEntry> parse_kv_text(const std::string& text);
std::vector<KvEntry> read_kv_file(const std::string& path);

// Strict scalar conversions; throw ConfigError naming key and line.
double kv_to_double(const KvEntry& e);
long long kv_to_int(const KvEntry& e);
bool kv_to_bool(const KvEntry& e);

}  // namespace dualgate
