#pragma once

// Prediction paths: truncated power iteration over D^{-1}A, sparse-logit
// propagation, direct top-k aggregation, and accuracy evaluation.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pprgo/dense.hpp"
#include "pprgo/error.hpp"
#include "pprgo/graph.hpp"
#include "pprgo/model.hpp"
#include "pprgo/parallel.hpp"
#include "pprgo/ppr.hpp"
#include "pprgo/random.hpp"

namespace pprgo {

enum class Propagation { none, power_iteration, topk, dense_oracle };

inline const char* to_string(Propagation p) {
  switch (p) {
    case Propagation::none: return "none";
    case Propagation::power_iteration: return "power_iteration";
    case Propagation::topk: return "topk";
    case Propagation::dense_oracle: return "dense_oracle";
  }
  return "unknown";
}

/// Class-probability rows (softmaxed) or raw logits, with their provenance.
template <typename T>
struct PredictionMatrix {
  Matrix<T> values;
  bool probabilities = true;
  Propagation source = Propagation::none;
  std::uint32_t steps = 0;

  std::size_t rows() const noexcept { return values.rows(); }
  std::uint32_t predicted(std::size_t row) const { return static_cast<std::uint32_t>(argmax(values.row(row))); }
};

template <typename T>
void softmax_rows(Matrix<T>& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) softmax_inplace(m.row(r));
}

inline constexpr std::size_t kForwardChunk = 1024;

/// Logits for `nodes` (all nodes when empty) written into an n×c matrix;
/// rows of other nodes stay exactly zero.
template <typename T>
Matrix<T> compute_logits(const AttributedGraph& g, const ModelParams<T>& params, std::span<const NodeId> nodes,
                         std::size_t workers) {
  std::vector<NodeId> all;
  if (nodes.empty()) {
    all.resize(g.n);
    std::iota(all.begin(), all.end(), NodeId{0});
    nodes = all;
  }
  Matrix<T> H(g.n, params.c());
  const std::size_t chunks = (nodes.size() + kForwardChunk - 1) / kForwardChunk;
  parallel_for(
      chunks, workers,
      [&](std::size_t chunk, std::size_t) {
        const auto first = chunk * kForwardChunk;
        const auto part = nodes.subspan(first, std::min(kForwardChunk, nodes.size() - first));
        const auto logits = forward_local(params, gather_features<T>(g, part));
        for (std::size_t i = 0; i < part.size(); ++i) std::copy_n(logits.row(i).begin(), params.c(), H.row(part[i]).begin());
      },
      1);
  return H;
}

/// Q0 = H, Q(p+1) = (1 - alpha) D^{-1} A Q(p) + alpha H; returns Q(steps).
/// Rows are split across workers; each row is computed the same way
/// regardless of the split. When `step_deltas` is given it receives
/// max|Q(p+1) - Q(p)| for every step.
template <typename T>
Matrix<T> propagate(const AttributedGraph& g, const Matrix<T>& H, double alpha, std::uint32_t steps, std::size_t workers,
                    std::vector<double>* step_deltas = nullptr) {
  if (H.rows() != g.n)
    throw RuntimeError("logit rows " + std::to_string(H.rows()) + " != node count " + std::to_string(g.n));
  const std::size_t c = H.cols();
  const T keep = static_cast<T>(1.0 - alpha);
  const T teleport = static_cast<T>(alpha);
  Matrix<T> current = H;
  Matrix<T> next(g.n, c);
  constexpr std::size_t kRowChunk = 2048;
  const std::size_t chunks = (g.n + kRowChunk - 1) / kRowChunk;
  for (std::uint32_t step = 0; step < steps; ++step) {
    parallel_for(
        chunks, workers,
        [&](std::size_t chunk, std::size_t) {
          const auto end = std::min<std::uint64_t>(g.n, (chunk + 1) * kRowChunk);
          for (auto v = static_cast<NodeId>(chunk * kRowChunk); v < end; ++v) {
            auto out = next.row(v);
            std::fill(out.begin(), out.end(), T{0});
            for (NodeId u : g.neighbors(v)) {
              auto src = current.row(u);
              for (std::size_t k = 0; k < c; ++k) out[k] += src[k];
            }
            const T scale = keep / static_cast<T>(g.degree(v));
            auto h = H.row(v);
            for (std::size_t k = 0; k < c; ++k) out[k] = scale * out[k] + teleport * h[k];
          }
        },
        1);
    if (step_deltas != nullptr)
      step_deltas->push_back(static_cast<double>(max_abs_diff<T>(next.flat(), current.flat())));
    std::swap(current, next);
  }
  return current;
}

template <typename T>
PredictionMatrix<T> power_iteration_predict(const AttributedGraph& g, const Matrix<T>& H, double alpha,
                                            std::uint32_t steps, std::size_t workers = 1) {
  PredictionMatrix<T> pred{propagate(g, H, alpha, steps, workers), true, Propagation::power_iteration, steps};
  softmax_rows(pred.values);
  return pred;
}

/// softmax(Π_topk H): one prediction row per top-k source.
template <typename T>
PredictionMatrix<T> topk_predict(const TopKMatrix& topk, const Matrix<T>& H) {
  PredictionMatrix<T> pred{Matrix<T>(topk.rows(), H.cols()), true, Propagation::topk, 0};
  for (std::size_t i = 0; i < topk.rows(); ++i) {
    const auto row = topk.row(i);
    aggregate_into<T, double>(row.weights, row.ids, H, pred.values.row(i));
    softmax_inplace(pred.values.row(i));
  }
  return pred;
}

struct InferenceTiming {
  double forward_s = 0.0;
  double propagation_s = 0.0;
  std::uint64_t logit_rows = 0;
};

/// Nodes whose logits are evaluated for a given fraction: all nodes for
/// fraction 1, otherwise ceil(fraction * n) nodes drawn uniformly.
inline std::vector<NodeId> sample_logit_nodes(std::uint64_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  std::vector<NodeId> nodes(n);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  const auto count = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(n))));
  if (count == n) return nodes;
  Rng rng(seed, stream::sparse_logits);
  rng.shuffle(nodes);
  nodes.resize(count);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

/// Evaluates f on a random fraction of nodes, leaves the other logit rows at
/// zero and smooths them over the graph with `steps` power-iteration steps.
template <typename T>
PredictionMatrix<T> sparse_logit_predict(const AttributedGraph& g, const ModelParams<T>& params, double fraction,
                                         double alpha, std::uint32_t steps, std::uint64_t seed, std::size_t workers = 1,
                                         InferenceTiming* timing = nullptr) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto nodes = sample_logit_nodes(g.n, fraction, seed);
  const Matrix<T> H = compute_logits(g, params, nodes, workers);
  const auto t1 = clock::now();
  auto pred = power_iteration_predict(g, H, alpha, steps, workers);
  const auto t2 = clock::now();
  if (timing != nullptr) {
    timing->forward_s = std::chrono::duration<double>(t1 - t0).count();
    timing->propagation_s = std::chrono::duration<double>(t2 - t1).count();
    timing->logit_rows = nodes.size();
  }
  return pred;
}

struct Metrics {
  double accuracy = 0.0;
  std::uint64_t n_eval = 0;
  std::uint64_t correct = 0;
  std::vector<std::uint64_t> per_class_total;    // by true label
  std::vector<std::uint64_t> per_class_correct;  // by true label
};

/// Argmax accuracy over `nodes`; prediction row index == node id.
template <typename T>
Metrics evaluate(const PredictionMatrix<T>& pred, std::span<const std::uint32_t> labels, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw ConfigError("evaluate: empty node set");
  Metrics m;
  m.per_class_total.assign(pred.values.cols(), 0);
  m.per_class_correct.assign(pred.values.cols(), 0);
  for (NodeId v : nodes) {
    if (v >= pred.rows() || v >= labels.size()) throw ConfigError("evaluate: node " + std::to_string(v) + " out of range");
    const auto y = labels[v];
    if (y >= pred.values.cols()) throw DataError("evaluate: label out of range");
    ++m.per_class_total[y];
    if (pred.predicted(v) == y) {
      ++m.per_class_correct[y];
      ++m.correct;
    }
  }
  m.n_eval = nodes.size();
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.n_eval);
  return m;
}

}  // namespace pprgo
