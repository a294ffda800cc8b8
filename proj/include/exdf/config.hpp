#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "exdf/archive.hpp"
#include "exdf/model.hpp"

namespace exdf {

/// Everything a run needs. Paths are absolute after loading (relative
/// entries resolve against the config file's directory).
struct RunConfig {
  std::filesystem::path station_file;
  std::filesystem::path grid_file;
  std::filesystem::path threshold_file; ///< optional fixed thresholds
  std::filesystem::path output_dir = ".";
  double quantile = 0.80;
  double coverage_min = 0.75;
  ModelKind model = ModelKind::exdf;
  ModelSpec spec;
  McmcSettings mcmc;
  bool prefit_decay = false;
  std::size_t max_draws = 1000;
  double cutoff = 0.5;
  double rhat_max = 1.1;

  /// Throws ConfigError on any invalid value.
  void validate() const;
};

/// TOML-like `key = value` lines: numbers, "strings", true/false and
/// [a, b, ...] arrays; `#` starts a comment; `[section]` headers are
/// accepted and ignored. Unknown or repeated keys are errors.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its value, one per line in a fixed order; parse_config
/// of this text reproduces the configuration.
std::string canonical_config(const RunConfig& config);

/// FNV-1a 64-bit digest of a string, as 16 hex digits.
std::string text_checksum(const std::string& text);

struct ManifestOutput {
  std::filesystem::path path;
  std::string checksum;
};

/// JSON record written beside outputs: command, canonical config and its
/// hash, seed, versions and output checksums.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const RunConfig& config, const std::vector<ManifestOutput>& outputs);

/// Reads the configuration stored in a manifest.
RunConfig load_manifest_config(const std::filesystem::path& path);

inline constexpr const char* kVersion = "0.1.0";

} // namespace exdf
