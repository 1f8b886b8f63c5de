#include "spinn/dataio.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spinn {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'I', 'N', 'N', 'D', 'S', '1'};
constexpr std::uint32_t kMaxDim = 1u << 16;
constexpr std::uint32_t kMaxPairs = 1u << 24;
constexpr std::uint32_t kMaxMetaBytes = 1u << 30;

template <class T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_raw(std::istream& is, T& v, const char* what) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw IoError(IoCode::Truncated, std::string("dataset file truncated while reading ") + what);
  }
}

void require_stream(const std::ostream& os, const std::filesystem::path& path) {
  if (!os) {
    throw IoError(IoCode::Io, "failed to write " + path.string());
  }
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  const GridSpec& g = *ds.grid;
  for (const SnapshotPair& p : ds.pairs) {
    if (!(p.delta > 0.0)) throw ValidationError("write_dataset: pair delta must be positive");
    if (p.phi1.values.size() != g.nx * static_cast<Eigen::Index>(g.ny) ||
        p.phi2.values.size() != g.nx * static_cast<Eigen::Index>(g.ny)) {
      throw ValidationError("write_dataset: pair fields do not match the dataset grid");
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoCode::Io, "cannot open " + path.string() + " for writing");

  os.write(kMagic, sizeof(kMagic));
  write_raw(os, static_cast<std::uint32_t>(g.nx));
  write_raw(os, static_cast<std::uint32_t>(g.ny));
  write_raw(os, g.lx);
  write_raw(os, g.ly);
  write_raw(os, static_cast<std::uint32_t>(ds.pairs.size()));
  const std::string meta = ds.meta.is_null() ? std::string("{}") : ds.meta.dump();
  if (meta.size() > kMaxMetaBytes) {
    throw IoError(IoCode::DimensionOverflow, "write_dataset: metadata too large");
  }
  write_raw(os, static_cast<std::uint32_t>(meta.size()));
  os.write(meta.data(), static_cast<std::streamsize>(meta.size()));

  const std::streamsize field_bytes =
      static_cast<std::streamsize>(sizeof(double)) * g.nx * g.ny;
  for (const SnapshotPair& p : ds.pairs) {
    write_raw(os, p.delta);
    os.write(reinterpret_cast<const char*>(p.phi1.values.data()), field_bytes);
    os.write(reinterpret_cast<const char*>(p.phi2.values.data()), field_bytes);
  }
  require_stream(os, path);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoCode::Io, "cannot open " + path.string() + " for reading");
  is.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(is.tellg());
  is.seekg(0, std::ios::beg);

  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(IoCode::BadMagic, "not a SPINNDS1 dataset: " + path.string());
  }
  std::uint32_t nx = 0, ny = 0, npairs = 0, meta_len = 0;
  double lx = 0.0, ly = 0.0;
  read_raw(is, nx, "nx");
  read_raw(is, ny, "ny");
  read_raw(is, lx, "lx");
  read_raw(is, ly, "ly");
  read_raw(is, npairs, "pair count");
  read_raw(is, meta_len, "metadata length");

  if (nx == 0 || ny == 0 || nx > kMaxDim || ny > kMaxDim || npairs > kMaxPairs ||
      meta_len > kMaxMetaBytes) {
    throw IoError(IoCode::DimensionOverflow,
                  "dataset header declares unreasonable dimensions: " + path.string());
  }
  const std::uint64_t nodes = static_cast<std::uint64_t>(nx) * ny;
  const std::uint64_t expected = 8 + 4 + 4 + 8 + 8 + 4 + 4 + meta_len +
                                 static_cast<std::uint64_t>(npairs) * (8 + 2 * 8 * nodes);
  if (expected != file_size) {
    std::ostringstream msg;
    msg << "dataset length mismatch: header declares " << expected << " bytes, file has "
        << file_size << " (" << path.string() << ")";
    throw IoError(IoCode::Truncated, msg.str());
  }

  std::string meta_str(meta_len, '\0');
  is.read(meta_str.data(), meta_len);
  if (!is) throw IoError(IoCode::Truncated, "dataset file truncated in metadata");
  json meta;
  try {
    meta = meta_len == 0 ? json::object() : json::parse(meta_str);
  } catch (const json::parse_error& e) {
    throw IoError(IoCode::Schema, std::string("dataset metadata is not valid JSON: ") + e.what());
  }

  Dataset ds;
  ds.grid = make_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly);
  ds.meta = std::move(meta);
  for (std::uint32_t i = 0; i < npairs; ++i) {
    SnapshotPair p;
    read_raw(is, p.delta, "pair delta");
    if (!(p.delta > 0.0) || !std::isfinite(p.delta)) {
      throw IoError(IoCode::Schema, "dataset pair has a non-positive time lag");
    }
    p.phi1 = make_field(ds.grid);
    p.phi2 = make_field(ds.grid);
    is.read(reinterpret_cast<char*>(p.phi1.values.data()), 8 * static_cast<std::streamsize>(nodes));
    is.read(reinterpret_cast<char*>(p.phi2.values.data()), 8 * static_cast<std::streamsize>(nodes));
    if (!is) throw IoError(IoCode::Truncated, "dataset file truncated in pair payload");
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

void write_model(const std::filesystem::path& path, const MlpParams& params, const json& meta) {
  json doc;
  doc["layer_sizes"] = params.layer_sizes;
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    json W = json::array();
    for (Eigen::Index i = 0; i < params.weights[l].rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < params.weights[l].cols(); ++j) {
        row.push_back(params.weights[l](i, j));
      }
      W.push_back(std::move(row));
    }
    weights.push_back(std::move(W));
    json b = json::array();
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) b.push_back(params.biases[l][i]);
    biases.push_back(std::move(b));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  doc["meta"] = meta.is_null() ? json::object() : meta;

  std::ofstream os(path);
  if (!os) throw IoError(IoCode::Io, "cannot open " + path.string() + " for writing");
  os << doc.dump(2) << "\n";
  require_stream(os, path);
}

std::pair<MlpParams, json> read_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoCode::Io, "cannot open " + path.string() + " for reading");
  json doc;
  try {
    is >> doc;
  } catch (const json::parse_error& e) {
    throw IoError(IoCode::Schema, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("layer_sizes") || !doc.contains("weights") ||
      !doc.contains("biases")) {
    throw IoError(IoCode::Schema,
                  "model document must contain layer_sizes, weights and biases: " + path.string());
  }
  MlpParams p;
  try {
    p.layer_sizes = doc["layer_sizes"].get<std::vector<int>>();
    const json& weights = doc["weights"];
    const json& biases = doc["biases"];
    if (p.layer_sizes.size() < 2 || weights.size() != p.layer_sizes.size() - 1 ||
        biases.size() != weights.size()) {
      throw IoError(IoCode::Schema, "model document has inconsistent layer structure");
    }
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
      const int n_out = p.layer_sizes[l + 1];
      const int n_in = p.layer_sizes[l];
      if (static_cast<int>(weights[l].size()) != n_out ||
          static_cast<int>(biases[l].size()) != n_out) {
        throw IoError(IoCode::Schema, "model weights/biases do not match layer_sizes");
      }
      Eigen::MatrixXd W(n_out, n_in);
      for (int i = 0; i < n_out; ++i) {
        if (static_cast<int>(weights[l][i].size()) != n_in) {
          throw IoError(IoCode::Schema, "model weight row has the wrong length");
        }
        for (int j = 0; j < n_in; ++j) W(i, j) = weights[l][i][j].get<double>();
      }
      Eigen::VectorXd b(n_out);
      for (int i = 0; i < n_out; ++i) b[i] = biases[l][i].get<double>();
      p.weights.push_back(std::move(W));
      p.biases.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw IoError(IoCode::Schema, std::string("malformed model document: ") + e.what());
  }
  json meta = doc.contains("meta") ? doc["meta"] : json::object();
  return {std::move(p), std::move(meta)};
}

void export_curve(const std::filesystem::path& path, std::span<const CurvePoint> table) {
  const bool has_true = !table.empty() && table.front().f_true.has_value();
  std::ofstream os(path);
  if (!os) throw IoError(IoCode::Io, "cannot open " + path.string() + " for writing");
  os << (has_true ? "phi,f_learned,f_true\n" : "phi,f_learned\n");
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (const CurvePoint& pt : table) {
    put(pt.phi);
    os << ',';
    put(pt.f_learned);
    if (has_true) {
      os << ',';
      put(pt.f_true.value_or(0.0));
    }
    os << '\n';
  }
  require_stream(os, path);
}

}  // namespace spinn
