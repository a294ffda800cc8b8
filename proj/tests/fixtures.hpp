#pragma once

#include <vector>

#include "exdf/data.hpp"
#include "exdf/simulate.hpp"

namespace exdf::test {

struct Synthetic {
  SimulationResult sim;
  Dataset data; ///< thresholds applied
  std::vector<CollocatedPair> pairs;
};

inline Synthetic synthesize(const SyntheticScenario& sc) {
  Synthetic s;
  s.sim = simulate(sc);
  s.data = s.sim.data;
  apply_fixed_thresholds(s.data, s.sim.thresholds);
  s.pairs = collocate(s.data.stations, s.data.grid);
  return s;
}

} // namespace exdf::test
