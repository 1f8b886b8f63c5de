#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "spinn/grid.hpp"

namespace spinn {

using json = nlohmann::json;

// Two snapshots of the state separated by a time lag delta > 0. Pairs need
// not come from the same trajectory and need not share a common delta.
struct SnapshotPair {
  Field phi1;
  Field phi2;
  double delta = 0.0;
};

struct Dataset {
  GridPtr grid;
  std::vector<SnapshotPair> pairs;
  json meta;  // advisory provenance: generator model, seeds, fine_dt, ...
};

}  // namespace spinn
