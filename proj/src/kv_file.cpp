#include "dualgate/kv_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dualgate/errors.hpp"

namespace dualgate {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void type_error(const KvEntry& e, const char* expected) {
  throw ConfigError("type error for key '" + e.key + "': expected " + expected + ", got '" +
                        e.value + "'",
                    e.line);
}

}  // namespace

std::vector<KvEntry> parse_kv_text(const std::string& text) {
  std::vector<KvEntry> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value, got '" + body + "'", line);
    }
    KvEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("empty key", line);
    for (const auto& prev : out) {
      if (prev.key == e.key) {
        throw ConfigError("duplicate key '" + e.key + "' (first on line " +
                              std::to_string(prev.line) + ")",
                          line);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<KvEntry> read_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_kv_text(buf.str());
}

double kv_to_double(const KvEntry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) type_error(e, "a number");
  return v;
}

long long kv_to_int(const KvEntry& e) {
  long long v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) type_error(e, "an integer");
  return v;
}

bool kv_to_bool(const KvEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "off") return false;
  type_error(e, "a boolean (true/false)");
}

}  // namespace dualgate
