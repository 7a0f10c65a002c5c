#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "emvqm/spatial.hpp"
#include "emvqm/svr.hpp"
#include "emvqm/temporal.hpp"

namespace emvqm {

struct EvalConfig {
  double train_fraction = 0.8;
  bool grid_search = false;  // pick (C, epsilon) per fold on the training split
  bool welch = true;        // unequal-variance t-test for significance
  double alpha = 0.05;
};

struct PipelineConfig {
  SpatialConfig spatial;
  TemporalConfig temporal;
  SvrParams svr;
  EvalConfig eval;
  int threads = 1;  // extraction and cross-validation workers

  void validate() const;
};

using ConfigDigest = std::array<std::uint8_t, 32>;

// Line-based "key = value" text. '#' starts a comment, blank lines are
// skipped, unknown or repeated keys and malformed values raise ConfigError.
// Keys not given keep their defaults.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

// Every key with its current value and a note saying whether the default is
// fixed by the method or a convention. parse_config(format_config(c)) == c.
std::string format_config(const PipelineConfig& cfg);

// SHA-256 over the canonical text of the keys that affect extracted
// features; the evaluation and worker settings are left out.
ConfigDigest config_digest(const PipelineConfig& cfg);
std::string to_hex(const ConfigDigest& digest);

}  // namespace emvqm
