#pragma once

// Dataset container: a directory holding meta.json and six little-endian
// array files. An optional node_map.u32 records the original id of each node
// when the graph was produced by standardize().

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "pprgo/binary_io.hpp"
#include "pprgo/graph.hpp"

namespace pprgo {

inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.filename().string(), 0, "missing file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.filename().string(), 0, std::string("invalid JSON: ") + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeError("cannot open for writing: " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw RuntimeError("write failed: " + path.string());
}

inline std::uint64_t meta_field(const nlohmann::json& meta, const char* key) {
  if (!meta.contains(key) || !meta[key].is_number_unsigned())
    throw DataError("meta.json", 0, std::string("field '") + key + "' missing or not a non-negative integer");
  return meta[key].get<std::uint64_t>();
}

}  // namespace detail

inline void save_dataset(const std::filesystem::path& dir, const AttributedGraph& g,
                         std::span<const NodeId> node_map = {}) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {{"n", g.n}, {"m", g.m()}, {"d", g.d}, {"c", g.c}, {"format_version", kDatasetFormatVersion}};
  detail::write_json_file(dir / "meta.json", meta);
  io::write_array(dir / "adj_indptr.u64", g.adj_indptr);
  io::write_array(dir / "adj_indices.u32", g.adj_indices);
  io::write_array(dir / "feat_indptr.u64", g.feat_indptr);
  io::write_array(dir / "feat_indices.u32", g.feat_indices);
  io::write_array(dir / "feat_values.f32", g.feat_values);
  io::write_array(dir / "labels.u32", g.labels);
  if (!node_map.empty()) io::write_array(dir / "node_map.u32", node_map);
}

/// Loads and fully validates a dataset directory (standardized-graph invariants included).
inline AttributedGraph load_dataset(const std::filesystem::path& dir) {
  const auto meta = detail::read_json_file(dir / "meta.json");
  const auto version = detail::meta_field(meta, "format_version");
  if (version != kDatasetFormatVersion)
    throw DataError("meta.json", 0, "unsupported format_version " + std::to_string(version));

  AttributedGraph g;
  g.n = detail::meta_field(meta, "n");
  const std::uint64_t m = detail::meta_field(meta, "m");
  g.d = detail::meta_field(meta, "d");
  g.c = detail::meta_field(meta, "c");

  g.adj_indptr = io::read_array<std::uint64_t>(dir / "adj_indptr.u64", g.n + 1);
  g.adj_indices = io::read_array<NodeId>(dir / "adj_indices.u32", m);
  g.feat_indptr = io::read_array<std::uint64_t>(dir / "feat_indptr.u64", g.n + 1);
  const std::uint64_t nnz = g.feat_indptr.back();
  g.feat_indices = io::read_array<std::uint32_t>(dir / "feat_indices.u32", nnz);
  g.feat_values = io::read_array<float>(dir / "feat_values.f32", nnz);
  g.labels = io::read_array<std::uint32_t>(dir / "labels.u32", g.n);
  validate(g);
  return g;
}

/// The persisted standardize() remap, or the identity when none was saved.
inline std::vector<NodeId> load_node_map(const std::filesystem::path& dir, std::uint64_t n) {
  if (!std::filesystem::exists(dir / "node_map.u32")) {
    std::vector<NodeId> identity(n);
    std::iota(identity.begin(), identity.end(), NodeId{0});
    return identity;
  }
  return io::read_array<NodeId>(dir / "node_map.u32", n);
}

}  // namespace pprgo
