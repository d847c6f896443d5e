#pragma once

// Plain-text edge list + feature CSR -> dataset container.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "pprgo/binary_io.hpp"
#include "pprgo/dataset.hpp"
#include "pprgo/error.hpp"
#include "pprgo/graph.hpp"

namespace pprgo {

/// One "u v" pair per line. Blank lines and lines starting with '#' are
/// skipped. Anything else raises DataError naming the 1-based line.
inline std::vector<Edge> parse_edge_list(std::istream& in, const std::string& name = "edges") {
  std::vector<Edge> edges;
  std::string line;
  std::uint64_t lineno = 0;
  const auto fail = [&](const std::string& why) {
    throw DataError(name + ":" + std::to_string(lineno) + ": " + why + " in line '" + line + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() != 2) fail("expected 2 fields, got " + std::to_string(tokens.size()));
    NodeId ids[2];
    for (int i = 0; i < 2; ++i) {
      const auto& t = tokens[i];
      const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), ids[i]);
      if (ec != std::errc() || end != t.data() + t.size()) fail("invalid node id '" + t + "'");
    }
    edges.emplace_back(ids[0], ids[1]);
  }
  return edges;
}

inline std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open edge list");
  return parse_edge_list(in, path.string());
}

struct ConvertResult {
  AttributedGraph graph;
  std::vector<NodeId> node_map;
  std::uint64_t input_nodes = 0;
};

/// Builds the raw graph from edges plus optional features directory
/// (feat_indptr.u64, feat_indices.u32, feat_values.f32, labels.u32), then
/// symmetrizes and keeps the largest connected component. Without features
/// every node gets one constant feature and label 0.
inline ConvertResult build_dataset(const std::vector<Edge>& edges, const std::filesystem::path& features_dir = {},
                                   std::uint64_t feature_dim = 0) {
  AttributedGraph g;
  std::uint64_t max_id = 0;
  for (auto [u, v] : edges) max_id = std::max<std::uint64_t>(max_id, std::max(u, v));
  if (!features_dir.empty()) {
    g.labels = io::read_array<std::uint32_t>(features_dir / "labels.u32");
    g.n = g.labels.size();
    g.feat_indptr = io::read_array<std::uint64_t>(features_dir / "feat_indptr.u64", g.n + 1);
    g.feat_indices = io::read_array<std::uint32_t>(features_dir / "feat_indices.u32", g.feat_indptr.back());
    g.feat_values = io::read_array<float>(features_dir / "feat_values.f32", g.feat_indptr.back());
    std::uint32_t max_feat = 0, max_label = 0;
    for (auto f : g.feat_indices) max_feat = std::max(max_feat, f);
    for (auto l : g.labels) max_label = std::max(max_label, l);
    g.d = feature_dim > 0 ? feature_dim : (g.feat_indices.empty() ? 1 : std::uint64_t{max_feat} + 1);
    g.c = g.n > 0 ? std::uint64_t{max_label} + 1 : 0;
    if (!edges.empty() && max_id >= g.n)
      throw DataError("edge list references node " + std::to_string(max_id) + " but features describe " +
                      std::to_string(g.n) + " nodes");
  } else {
    g.n = edges.empty() ? 0 : max_id + 1;
    g.d = 1;
    g.c = 1;
    g.feat_indptr.resize(g.n + 1);
    for (std::uint64_t v = 0; v <= g.n; ++v) g.feat_indptr[v] = v;
    g.feat_indices.assign(g.n, 0);
    g.feat_values.assign(g.n, 1.0F);
    g.labels.assign(g.n, 0);
  }
  std::tie(g.adj_indptr, g.adj_indices) = csr_from_edges(g.n, edges);
  validate_structure(g);
  auto std_graph = standardize(g);
  validate(std_graph.graph);
  return {std::move(std_graph.graph), std::move(std_graph.node_map), g.n};
}

}  // namespace pprgo
