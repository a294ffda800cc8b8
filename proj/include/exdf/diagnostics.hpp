#pragma once

#include <span>
#include <string>
#include <vector>

#include "exdf/archive.hpp"

namespace exdf {

struct RhatResult {
  double value = 0.0;
  /// Within-chain variance was zero; value is NaN.
  bool degenerate = false;
};

/// Split-R-hat: every chain is cut into two halves (a middle draw of an
/// odd-length chain is dropped) and the between/within variance ratio is
/// computed over the halves. Needs at least 2 chains of length >= 10.
RhatResult split_rhat(std::span<const std::vector<double>> chains);

/// Split-R-hat of one flattened parameter across the archive's chains.
RhatResult gelman_rubin(const PosteriorArchive& archive, std::size_t param);

struct GroupRhat {
  std::string group;
  double max_rhat = 0.0;   ///< over non-degenerate elements
  std::string worst;       ///< element attaining max_rhat
  std::size_t degenerate = 0;
};

std::vector<GroupRhat> group_rhat(const PosteriorArchive& archive);

} // namespace exdf
