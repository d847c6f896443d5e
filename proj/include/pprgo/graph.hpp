#pragma once

// Attributed graphs in CSR form: adjacency, sparse features and labels,
// plus the preprocessing applied before any experiment (largest connected
// component, symmetrization, duplicate-edge merging) and the split sampler.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pprgo/error.hpp"
#include "pprgo/random.hpp"

namespace pprgo {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable (by convention: shared as const&) attributed graph.
/// Adjacency and features are both CSR; degrees are row lengths and a
/// self-loop contributes 1 to its node's degree.
struct AttributedGraph {
  std::uint64_t n = 0;
  std::uint64_t d = 0;  // feature dimension
  std::uint64_t c = 0;  // class count

  std::vector<std::uint64_t> adj_indptr{0};
  std::vector<NodeId> adj_indices;

  std::vector<std::uint64_t> feat_indptr{0};
  std::vector<std::uint32_t> feat_indices;
  std::vector<float> feat_values;

  std::vector<std::uint32_t> labels;

  std::uint64_t m() const noexcept { return adj_indices.size(); }

  std::uint64_t degree(NodeId v) const noexcept { return adj_indptr[v + 1] - adj_indptr[v]; }

  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {adj_indices.data() + adj_indptr[v], static_cast<std::size_t>(degree(v))};
  }

  std::span<const std::uint32_t> feature_indices(NodeId v) const noexcept {
    return {feat_indices.data() + feat_indptr[v],
            static_cast<std::size_t>(feat_indptr[v + 1] - feat_indptr[v])};
  }

  std::span<const float> feature_values(NodeId v) const noexcept {
    return {feat_values.data() + feat_indptr[v],
            static_cast<std::size_t>(feat_indptr[v + 1] - feat_indptr[v])};
  }

  bool operator==(const AttributedGraph&) const = default;
};

struct DataSplit {
  std::vector<NodeId> train_nodes;
  std::vector<NodeId> val_nodes;
  std::vector<NodeId> test_nodes;
  std::uint64_t seed = 0;

  bool operator==(const DataSplit&) const = default;
};

struct StandardizedGraph {
  AttributedGraph graph;
  /// node_map[new_id] = id in the input graph.
  std::vector<NodeId> node_map;
};

namespace detail {

inline void check_csr(const std::vector<std::uint64_t>& indptr, std::span<const std::uint32_t> indices,
                      std::uint64_t rows, std::uint64_t cols, const std::string& indptr_file,
                      const std::string& indices_file) {
  if (indptr.size() != rows + 1)
    throw DataError(indptr_file, 0,
                    "expected " + std::to_string(rows + 1) + " offsets, got " + std::to_string(indptr.size()));
  if (indptr.front() != 0) throw DataError(indptr_file, 0, "first offset must be 0");
  for (std::uint64_t i = 0; i < rows; ++i)
    if (indptr[i + 1] < indptr[i]) throw DataError(indptr_file, i + 1, "non-monotone indptr");
  if (indptr.back() != indices.size())
    throw DataError(indptr_file, rows,
                    "last offset " + std::to_string(indptr.back()) + " != index count " +
                        std::to_string(indices.size()));
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t e = indptr[r]; e < indptr[r + 1]; ++e) {
      if (indices[e] >= cols)
        throw DataError(indices_file, e,
                        "index out of range: " + std::to_string(indices[e]) + " >= " + std::to_string(cols));
      if (e > indptr[r] && indices[e] <= indices[e - 1])
        throw DataError(indices_file, e, "row " + std::to_string(r) + " is not strictly increasing");
    }
  }
}

}  // namespace detail

/// Structural CSR checks: offsets, index ranges, sorted unique rows, label range.
inline void validate_structure(const AttributedGraph& g) {
  detail::check_csr(g.adj_indptr, g.adj_indices, g.n, g.n, "adj_indptr.u64", "adj_indices.u32");
  detail::check_csr(g.feat_indptr, g.feat_indices, g.n, g.d, "feat_indptr.u64", "feat_indices.u32");
  if (g.feat_values.size() != g.feat_indices.size())
    throw DataError("feat_values.f32", std::min(g.feat_values.size(), g.feat_indices.size()),
                    "feature values and indices differ in length");
  if (g.labels.size() != g.n)
    throw DataError("labels.u32", std::min<std::uint64_t>(g.labels.size(), g.n), "expected one label per node");
  for (std::uint64_t v = 0; v < g.n; ++v)
    if (g.labels[v] >= g.c)
      throw DataError("labels.u32", v,
                      "label " + std::to_string(g.labels[v]) + " out of range for " + std::to_string(g.c) +
                          " classes");
}

/// Full invariants of a standardized graph: structure, symmetry, no isolated nodes.
inline void validate(const AttributedGraph& g) {
  validate_structure(g);
  for (NodeId v = 0; v < g.n; ++v) {
    if (g.degree(v) == 0) throw DataError("adj_indptr.u64", v, "node " + std::to_string(v) + " has degree 0");
    for (std::uint64_t e = g.adj_indptr[v]; e < g.adj_indptr[v + 1]; ++e) {
      const NodeId u = g.adj_indices[e];
      auto row = g.neighbors(u);
      if (!std::binary_search(row.begin(), row.end(), v))
        throw DataError("adj_indices.u32", e,
                        "edge (" + std::to_string(v) + "," + std::to_string(u) + ") has no reverse");
    }
  }
}

/// CSR adjacency (sorted, duplicate-free rows) from an edge list, as given: no symmetrization.
inline std::pair<std::vector<std::uint64_t>, std::vector<NodeId>> csr_from_edges(std::uint64_t n,
                                                                                 std::span<const Edge> edges) {
  std::vector<std::uint64_t> indptr(n + 1, 0);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw DataError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    ++indptr[u + 1];
  }
  std::partial_sum(indptr.begin(), indptr.end(), indptr.begin());
  std::vector<NodeId> indices(edges.size());
  std::vector<std::uint64_t> cursor(indptr.begin(), indptr.end() - 1);
  for (const auto& [u, v] : edges) indices[cursor[u]++] = v;

  std::vector<std::uint64_t> out_ptr(n + 1, 0);
  std::uint64_t write = 0;
  for (std::uint64_t r = 0; r < n; ++r) {
    auto first = indices.begin() + static_cast<std::ptrdiff_t>(indptr[r]);
    auto last = indices.begin() + static_cast<std::ptrdiff_t>(indptr[r + 1]);
    std::sort(first, last);
    last = std::unique(first, last);
    for (auto it = first; it != last; ++it) indices[write++] = *it;
    out_ptr[r + 1] = write;
  }
  indices.resize(write);
  return {std::move(out_ptr), std::move(indices)};
}

/// Component id per node (ids in order of smallest member); adjacency must be symmetric.
inline std::vector<std::uint32_t> connected_components(const std::vector<std::uint64_t>& indptr,
                                                       std::span<const NodeId> indices, std::uint32_t* count) {
  const std::uint64_t n = indptr.size() - 1;
  constexpr auto unseen = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> comp(n, unseen);
  std::uint32_t next = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < n; ++s) {
    if (comp[s] != unseen) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (std::uint64_t e = indptr[v]; e < indptr[v + 1]; ++e) {
        const NodeId u = indices[e];
        if (comp[u] == unseen) {
          comp[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  if (count != nullptr) *count = next;
  return comp;
}

/// Undirected, unweighted, duplicate-free induced subgraph on the largest
/// connected component (ties go to the component holding the smallest id).
/// Surviving nodes keep their relative order.
inline StandardizedGraph standardize(const AttributedGraph& g) {
  validate_structure(g);
  if (g.n == 0) throw DataError("cannot standardize an empty graph");

  std::vector<Edge> sym;
  sym.reserve(2 * g.m());
  for (NodeId v = 0; v < g.n; ++v)
    for (NodeId u : g.neighbors(v)) {
      sym.emplace_back(v, u);
      if (u != v) sym.emplace_back(u, v);
    }
  auto [indptr, indices] = csr_from_edges(g.n, sym);

  std::uint32_t num_components = 0;
  const auto comp = connected_components(indptr, indices, &num_components);
  std::vector<std::uint64_t> sizes(num_components, 0);
  for (auto id : comp) ++sizes[id];
  const auto keep = static_cast<std::uint32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  StandardizedGraph out;
  constexpr auto dropped = static_cast<NodeId>(-1);
  std::vector<NodeId> remap(g.n, dropped);
  for (NodeId v = 0; v < g.n; ++v)
    if (comp[v] == keep) {
      remap[v] = static_cast<NodeId>(out.node_map.size());
      out.node_map.push_back(v);
    }

  AttributedGraph& r = out.graph;
  r.n = out.node_map.size();
  r.d = g.d;
  r.c = g.c;
  r.adj_indptr.assign(1, 0);
  r.feat_indptr.assign(1, 0);
  for (NodeId old : out.node_map) {
    for (std::uint64_t e = indptr[old]; e < indptr[old + 1]; ++e) r.adj_indices.push_back(remap[indices[e]]);
    r.adj_indptr.push_back(r.adj_indices.size());
    auto fi = g.feature_indices(old);
    auto fv = g.feature_values(old);
    r.feat_indices.insert(r.feat_indices.end(), fi.begin(), fi.end());
    r.feat_values.insert(r.feat_values.end(), fv.begin(), fv.end());
    r.feat_indptr.push_back(r.feat_indices.size());
    r.labels.push_back(g.labels[old]);
  }
  if (r.m() == 0) throw DataError("graph has no edges; largest component is an isolated node");
  return out;
}

inline bool is_connected(const AttributedGraph& g) {
  std::uint32_t count = 0;
  connected_components(g.adj_indptr, g.adj_indices, &count);
  return count <= 1;
}

inline constexpr std::uint64_t kTrainPerClass = 20;
inline constexpr std::uint64_t kValPerTrain = 10;

/// Non-stratified uniform split: 20·c train nodes, 10× as many validation
/// nodes, everything else is test. Each list is sorted.
inline DataSplit sample_split(const AttributedGraph& g, std::uint64_t seed) {
  const std::uint64_t n_train = kTrainPerClass * g.c;
  const std::uint64_t n_val = kValPerTrain * n_train;
  if (g.c == 0 || g.n <= n_train + n_val)
    throw DataError("graph too small for split: n=" + std::to_string(g.n) + " needs more than " +
                    std::to_string(n_train + n_val) + " nodes for c=" + std::to_string(g.c));
  std::vector<NodeId> perm(g.n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  Rng rng(seed, stream::split);
  rng.shuffle(perm);

  DataSplit split;
  split.seed = seed;
  const auto at = [&](std::uint64_t i) { return perm.begin() + static_cast<std::ptrdiff_t>(i); };
  split.train_nodes.assign(at(0), at(n_train));
  split.val_nodes.assign(at(n_train), at(n_train + n_val));
  split.test_nodes.assign(at(n_train + n_val), perm.end());
  std::sort(split.train_nodes.begin(), split.train_nodes.end());
  std::sort(split.val_nodes.begin(), split.val_nodes.end());
  std::sort(split.test_nodes.begin(), split.test_nodes.end());
  return split;
}

}  // namespace pprgo
