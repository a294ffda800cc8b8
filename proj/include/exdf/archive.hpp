#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "exdf/basis.hpp"
#include "exdf/data.hpp"
#include "exdf/model.hpp"

namespace exdf {

enum class ModelKind { exdf, gaussian };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct McmcSettings {
  long n_iter = 500000;
  long burn_in = 100000;
  long thin = 100;
  int n_chains = 2;
  std::uint64_t seed = 1;

  void validate() const;
  long draws_per_chain() const { return (n_iter - burn_in) / thin; }
};

struct SiteInfo {
  std::string id;
  Location location;
  std::int64_t cell_id = 0;
  double threshold_y = 0.0;
  double threshold_x = 0.0;
};

struct BlockSummary {
  std::string name;
  double acceptance_rate = 0.0;
  double step_scale = 0.0;
};

/// Thinned draws of every chain plus everything needed to predict from them.
struct PosteriorArchive {
  ModelKind model = ModelKind::exdf;
  ModelSpec spec;
  McmcSettings settings;
  BasisDomain domain;
  std::vector<SiteInfo> sites;
  ParameterLayout layout;
  std::vector<Eigen::MatrixXd> chains; ///< rows are draws, columns follow `layout`
  std::vector<std::vector<BlockSummary>> blocks; ///< per chain
  std::vector<std::string> warnings;

  int n_sites() const { return static_cast<int>(sites.size()); }
  std::size_t n_chains() const { return chains.size(); }
  std::size_t draws_per_chain() const;
  std::vector<double> trace(std::size_t chain, std::size_t param) const;
  /// Up to `max_draws` draws spread evenly over the pooled chains.
  std::vector<Eigen::VectorXd> pooled_draws(std::size_t max_draws) const;
};

/// Binary container: 8-byte magic "EXDFPOST", u32 format version, u64
/// header length, UTF-8 JSON header, then for each chain the draws as
/// little-endian IEEE-754 doubles, draw-major. Written to a temporary file
/// and renamed into place.
void write_archive(const PosteriorArchive& archive, const std::filesystem::path& path);
PosteriorArchive read_archive(const std::filesystem::path& path);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

} // namespace exdf
