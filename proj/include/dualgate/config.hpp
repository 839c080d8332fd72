#pragma once

#include <string>

#include "dualgate/protocol.hpp"

namespace dualgate {

// Field sweep for the `levels` report.
struct LevelSweep {
  double b_min = 0.0;  // gauss
  double b_max = 20.0;
  double b_step = 0.1;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::string constants_file;  // resolved path
  LevelSweep levels;
  // Canonical `key=value` text of every setting after parsing. Hashing this instead of the
  // raw file makes the hash independent of comments and ordering.
  std::string canonical;
};

/// Flat key=value file with dotted section names. Every key is optional except
/// atoms.constants_file; missing keys keep the built-in preset value. Relative paths are
/// resolved against the config file's directory. Throws ConfigError with a line number for
/// unknown keys, bad values and unreadable files.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& base_dir);

// Rebuilds RunConfig::canonical after programmatic edits (e.g. command-line overrides).
std::string canonical_text(const RunConfig& cfg);

// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace dualgate
