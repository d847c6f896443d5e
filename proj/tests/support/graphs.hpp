#pragma once

// Small fixture graphs and a planted-partition attributed-graph generator
// used across the unit, integration and acceptance suites.

#include <cmath>
#include <vector>

#include "pprgo/graph.hpp"
#include "pprgo/random.hpp"

namespace pprgo::testing {

/// Graph from an undirected edge list, one constant feature, all labels 0.
inline AttributedGraph undirected(std::uint64_t n, const std::vector<Edge>& edges, std::uint64_t classes = 1) {
  std::vector<Edge> both;
  for (auto [u, v] : edges) {
    both.emplace_back(u, v);
    if (u != v) both.emplace_back(v, u);
  }
  AttributedGraph g;
  g.n = n;
  g.d = 1;
  g.c = classes;
  std::tie(g.adj_indptr, g.adj_indices) = csr_from_edges(n, both);
  g.feat_indptr.assign(1, 0);
  for (std::uint64_t v = 0; v < n; ++v) {
    g.feat_indices.push_back(0);
    g.feat_values.push_back(1.0F);
    g.feat_indptr.push_back(g.feat_indices.size());
  }
  g.labels.assign(n, 0);
  return g;
}

inline AttributedGraph two_cycle() { return undirected(2, {{0, 1}}); }

/// Node 0 is the center.
inline AttributedGraph star(std::uint32_t leaves) {
  std::vector<Edge> edges;
  for (NodeId l = 1; l <= leaves; ++l) edges.emplace_back(0, l);
  return undirected(leaves + 1, edges);
}

inline AttributedGraph ring(std::uint32_t n) {
  std::vector<Edge> edges;
  for (NodeId v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
  return undirected(n, edges);
}

/// Connected random graph: a random spanning tree plus `extra` random edges.
inline AttributedGraph random_connected(std::uint32_t n, std::uint32_t extra, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId v = 1; v < n; ++v) edges.emplace_back(static_cast<NodeId>(rng.below(v)), v);
  for (std::uint32_t i = 0; i < extra; ++i) {
    const auto u = static_cast<NodeId>(rng.below(n));
    const auto v = static_cast<NodeId>(rng.below(n));
    if (u != v) edges.emplace_back(u, v);
  }
  return undirected(n, edges);
}

struct PlantedPartition {
  std::uint32_t n = 2000;
  std::uint32_t classes = 4;
  double avg_degree = 6.0;
  double homophily = 0.8;         // fraction of edges inside a class
  std::uint32_t features = 200;
  std::uint32_t words_per_node = 12;
  double signal = 0.3;            // share of words drawn from the class vocabulary
  std::uint64_t seed = 1;
};

/// Homophilous random graph with class-dependent sparse bag-of-words
/// features, already standardized.
inline AttributedGraph planted_partition(const PlantedPartition& p) {
  Rng rng(p.seed);
  std::vector<std::uint32_t> labels(p.n);
  std::vector<std::vector<NodeId>> members(p.classes);
  for (NodeId v = 0; v < p.n; ++v) {
    labels[v] = static_cast<std::uint32_t>(rng.below(p.classes));
    members[labels[v]].push_back(v);
  }
  std::vector<Edge> edges;
  const auto num_edges = static_cast<std::uint64_t>(p.avg_degree * p.n / 2.0);
  for (std::uint64_t e = 0; e < num_edges; ++e) {
    const auto u = static_cast<NodeId>(rng.below(p.n));
    NodeId v;
    if (rng.uniform() < p.homophily) {
      const auto& same = members[labels[u]];
      v = same[rng.below(same.size())];
    } else {
      v = static_cast<NodeId>(rng.below(p.n));
    }
    if (u != v) {
      edges.emplace_back(u, v);
      edges.emplace_back(v, u);
    }
  }
  AttributedGraph g;
  g.n = p.n;
  g.d = p.features;
  g.c = p.classes;
  std::tie(g.adj_indptr, g.adj_indices) = csr_from_edges(p.n, edges);
  const std::uint32_t vocab = p.features / p.classes;
  g.feat_indptr.assign(1, 0);
  std::vector<std::uint32_t> words;
  for (NodeId v = 0; v < p.n; ++v) {
    words.clear();
    for (std::uint32_t w = 0; w < p.words_per_node; ++w) {
      if (rng.uniform() < p.signal)
        words.push_back(labels[v] * vocab + static_cast<std::uint32_t>(rng.below(vocab)));
      else
        words.push_back(static_cast<std::uint32_t>(rng.below(p.features)));
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (auto w : words) {
      g.feat_indices.push_back(w);
      g.feat_values.push_back(1.0F / std::sqrt(static_cast<float>(words.size())));
    }
    g.feat_indptr.push_back(g.feat_indices.size());
  }
  g.labels = labels;
  return standardize(g).graph;
}

}  // namespace pprgo::testing
