#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spinn/dataset.hpp"
#include "spinn/mlp.hpp"

namespace spinn {

// Snapshot-pair dataset format (little-endian):
//   magic "SPINNDS1" (8 bytes), u32 nx, u32 ny, f64 lx, f64 ly, u32 pair
//   count N, u32 metadata byte length M, M bytes of UTF-8 JSON metadata, then
//   N records of [f64 delta, nx*ny f64 phi1 row-major, nx*ny f64 phi2
//   row-major]. Round trips are bit-exact; declared sizes are checked against
//   the file length before any payload is read.
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

// JSON model document: layer_sizes, weights (nested row-major arrays),
// biases, meta. Numbers round-trip f64 exactly.
void write_model(const std::filesystem::path& path, const MlpParams& params, const json& meta);
std::pair<MlpParams, json> read_model(const std::filesystem::path& path);

struct CurvePoint {
  double phi = 0.0;
  double f_learned = 0.0;
  std::optional<double> f_true;
};

// CSV with header "phi,f_learned,f_true" (last column only when present),
// full f64 precision.
void export_curve(const std::filesystem::path& path, std::span<const CurvePoint> table);

}  // namespace spinn
