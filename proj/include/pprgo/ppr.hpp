#pragma once

// Sparse approximate personalized PageRank by local push, top-k truncation,
// symmetric renormalization and the batched, multi-worker driver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprgo/binary_io.hpp"
#include "pprgo/dataset.hpp"
#include "pprgo/error.hpp"
#include "pprgo/graph.hpp"
#include "pprgo/parallel.hpp"
#include "pprgo/random.hpp"

namespace pprgo {

/// Sparse vector with strictly increasing ids.
struct SparseVector {
  std::vector<NodeId> ids;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return ids.size(); }
  double sum() const noexcept {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  double at(NodeId id) const noexcept {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    return (it != ids.end() && *it == id) ? values[static_cast<std::size_t>(it - ids.begin())] : 0.0;
  }
  bool operator==(const SparseVector&) const = default;
};

/// Knobs of the iteration-bounded push used for very large graphs.
struct BoundedPush {
  std::uint32_t max_iterations = 10;
  double drop_threshold = 0.0;
  std::uint64_t degree_cap = 10000;
  std::uint64_t seed = 0;
};

struct PprConfig {
  double alpha = 0.25;
  double epsilon = 1e-4;
  std::uint32_t k = 32;
  bool renormalize_sym = false;
  std::optional<BoundedPush> bounded;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (bounded) {
      if (bounded->max_iterations < 1) throw ConfigError("bounded.max_iterations must be at least 1");
      if (bounded->degree_cap < 1) throw ConfigError("bounded.degree_cap must be at least 1");
      if (bounded->drop_threshold < 0.0) throw ConfigError("bounded.drop_threshold must be non-negative");
    }
  }
};

struct PushStats {
  std::uint64_t pushes = 0;
  std::uint64_t edge_updates = 0;

  PushStats& operator+=(const PushStats& o) {
    pushes += o.pushes;
    edge_updates += o.edge_updates;
    return *this;
  }
};

/// Worker-owned scratch for one push run: estimate, residual and the active
/// worklist. Arrays are graph-sized and reset in O(touched) between sources,
/// so one PushState serves any number of sources on the same graph.
///
/// Invariants: estimate and residual entries are >= 0; the estimate mass is
/// non-decreasing and bounded by 1.
class PushState {
 public:
  explicit PushState(std::uint64_t n) : estimate_(n, 0.0), residual_(n, 0.0), seen_(n, 0), queued_(n, 0) {}

  /// Unbounded push with a FIFO worklist; a node is enqueued when its
  /// residual first exceeds alpha * epsilon * degree.
  SparseVector run(const AttributedGraph& g, double alpha, NodeId source, double epsilon, PushStats* stats = nullptr) {
    begin(g, alpha, source);
    std::deque<NodeId> queue;
    if (active(g, alpha, epsilon, source)) enqueue(queue, source);
    PushStats local;
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      queued_[v] = 0;
      push_all(g, alpha, epsilon, v, local, [&](NodeId u) { enqueue(queue, u); });
    }
    if (stats != nullptr) *stats += local;
    return collect();
  }

  /// Iteration-bounded push: at most max_iterations sweeps over the active
  /// set, residuals below drop_threshold discarded after each sweep, and
  /// nodes above degree_cap pushing to degree_cap sampled neighbors.
  SparseVector run_bounded(const AttributedGraph& g, double alpha, NodeId source, double epsilon,
                           const BoundedPush& bounds, PushStats* stats = nullptr) {
    begin(g, alpha, source);
    std::vector<NodeId> current;
    std::vector<NodeId> next;
    if (active(g, alpha, epsilon, source)) enqueue(current, source);
    PushStats local;
    std::vector<NodeId> sampled;
    for (std::uint32_t sweep = 0; sweep < bounds.max_iterations && !current.empty(); ++sweep) {
      std::optional<Rng> rng;
      for (const NodeId v : current) {
        queued_[v] = 0;
        if (g.degree(v) <= bounds.degree_cap) {
          push_all(g, alpha, epsilon, v, local, [&](NodeId u) { enqueue(next, u); });
          continue;
        }
        if (!rng) rng.emplace(stream_seed(bounds.seed, source), stream::degree_cap, sweep);
        sample_neighbors(g.neighbors(v), bounds.degree_cap, *rng, sampled);
        push_to(g, alpha, epsilon, v, sampled, local, [&](NodeId u) { enqueue(next, u); });
      }
      if (bounds.drop_threshold > 0.0) {
        for (const NodeId v : touched_)
          if (residual_[v] < bounds.drop_threshold) {
            residual_[v] = 0.0;
            queued_[v] = 0;
          }
        std::erase_if(next, [&](NodeId v) { return queued_[v] == 0; });
      }
      current.swap(next);
      next.clear();
    }
    for (const NodeId v : current) queued_[v] = 0;
    if (stats != nullptr) *stats += local;
    return collect();
  }

  /// Residual of the most recent run (sparse, sorted by id).
  SparseVector residual() const {
    SparseVector r;
    std::vector<NodeId> ids(touched_.begin(), touched_.end());
    std::sort(ids.begin(), ids.end());
    for (NodeId v : ids)
      if (residual_[v] > 0.0) {
        r.ids.push_back(v);
        r.values.push_back(residual_[v]);
      }
    return r;
  }

 private:
  void begin(const AttributedGraph& g, double alpha, NodeId source) {
    if (estimate_.size() != g.n) throw RuntimeError("push scratch sized for a different graph");
    if (source >= g.n) throw RuntimeError("source " + std::to_string(source) + " out of range");
    for (NodeId v : touched_) {
      estimate_[v] = 0.0;
      residual_[v] = 0.0;
      seen_[v] = 0;
      queued_[v] = 0;
    }
    touched_.clear();
    touch(source);
    residual_[source] = alpha;
  }

  bool active(const AttributedGraph& g, double alpha, double epsilon, NodeId v) const {
    return residual_[v] > alpha * epsilon * static_cast<double>(g.degree(v));
  }

  void touch(NodeId v) {
    if (!seen_[v]) {
      seen_[v] = 1;
      touched_.push_back(v);
    }
  }

  template <typename Queue>
  void enqueue(Queue& q, NodeId v) {
    queued_[v] = 1;
    q.push_back(v);
  }

  template <typename OnActive>
  void push_to(const AttributedGraph& g, double alpha, double epsilon, NodeId v, std::span<const NodeId> targets,
               PushStats& stats, OnActive&& on_active) {
    if (targets.empty()) throw RuntimeError("push from node " + std::to_string(v) + " with degree 0");
    // Mass is read before the residual is cleared.
    const double rv = residual_[v];
    const double mass = (1.0 - alpha) * rv / static_cast<double>(targets.size());
    if (!std::isfinite(mass)) throw RuntimeError("non-finite push mass at node " + std::to_string(v));
    estimate_[v] += rv;
    residual_[v] = 0.0;
    for (const NodeId u : targets) {
      touch(u);
      residual_[u] += mass;
      if (!queued_[u] && active(g, alpha, epsilon, u)) on_active(u);
    }
    ++stats.pushes;
    stats.edge_updates += targets.size();
  }

  template <typename OnActive>
  void push_all(const AttributedGraph& g, double alpha, double epsilon, NodeId v, PushStats& stats,
                OnActive&& on_active) {
    push_to(g, alpha, epsilon, v, g.neighbors(v), stats, on_active);
  }

  static void sample_neighbors(std::span<const NodeId> neighbors, std::uint64_t count, Rng& rng,
                               std::vector<NodeId>& out) {
    out.assign(neighbors.begin(), neighbors.end());
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto j = i + rng.below(out.size() - i);
      std::swap(out[i], out[j]);
    }
    out.resize(count);
    std::sort(out.begin(), out.end());
  }

  SparseVector collect() const {
    std::vector<NodeId> ids;
    ids.reserve(touched_.size());
    for (NodeId v : touched_)
      if (estimate_[v] > 0.0) ids.push_back(v);
    std::sort(ids.begin(), ids.end());
    SparseVector out;
    out.ids = std::move(ids);
    out.values.reserve(out.ids.size());
    for (NodeId v : out.ids) out.values.push_back(estimate_[v]);
    return out;
  }

  std::vector<double> estimate_;
  std::vector<double> residual_;
  std::vector<char> seen_;
  std::vector<char> queued_;
  std::vector<NodeId> touched_;
};

inline SparseVector push_ppr(const AttributedGraph& g, double alpha, NodeId source, double epsilon,
                             PushStats* stats = nullptr) {
  PushState state(g.n);
  return state.run(g, alpha, source, epsilon, stats);
}

inline SparseVector push_ppr_bounded(const AttributedGraph& g, double alpha, NodeId source, double epsilon,
                                     const BoundedPush& bounds, PushStats* stats = nullptr) {
  if (bounds.max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (bounds.degree_cap < 1) throw ConfigError("degree_cap must be at least 1");
  PushState state(g.n);
  return state.run_bounded(g, alpha, source, epsilon, bounds, stats);
}

/// Keeps the k largest entries (ties: smaller id wins); the rest are dropped.
inline SparseVector topk_truncate(const SparseVector& vec, std::uint32_t k) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (vec.nnz() <= k) return vec;
  std::vector<std::uint32_t> order(vec.nnz());
  std::iota(order.begin(), order.end(), 0U);
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (vec.values[a] != vec.values[b]) return vec.values[a] > vec.values[b];
    return vec.ids[a] < vec.ids[b];
  };
  std::nth_element(order.begin(), order.begin() + k - 1, order.end(), better);
  order.resize(k);
  std::sort(order.begin(), order.end());  // positions are id-ordered already
  SparseVector out;
  out.ids.reserve(k);
  out.values.reserve(k);
  for (auto i : order) {
    out.ids.push_back(vec.ids[i]);
    out.values.push_back(vec.values[i]);
  }
  return out;
}

/// Row-sparse top-k PPR matrix; row i belongs to sources[i] and lists its
/// neighborhood in increasing node id.
struct TopKMatrix {
  std::vector<NodeId> sources;
  std::vector<std::uint64_t> indptr{0};
  std::vector<NodeId> indices;
  std::vector<double> weights;

  struct Row {
    std::span<const NodeId> ids;
    std::span<const double> weights;
  };

  std::size_t rows() const noexcept { return sources.size(); }
  std::uint64_t nnz() const noexcept { return indices.size(); }

  Row row(std::size_t i) const noexcept {
    const auto b = indptr[i];
    const auto len = static_cast<std::size_t>(indptr[i + 1] - b);
    return {{indices.data() + b, len}, {weights.data() + b, len}};
  }

  void append_row(const SparseVector& v) {
    indices.insert(indices.end(), v.ids.begin(), v.ids.end());
    weights.insert(weights.end(), v.values.begin(), v.values.end());
    indptr.push_back(indices.size());
  }

  bool operator==(const TopKMatrix&) const = default;
};

/// D^{1/2} Π D^{-1/2}: weight(i, j) scaled by sqrt(d_i / d_j).
inline TopKMatrix renormalize_sym(const TopKMatrix& topk, const AttributedGraph& g) {
  TopKMatrix out = topk;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double di = std::sqrt(static_cast<double>(g.degree(out.sources[i])));
    for (auto e = out.indptr[i]; e < out.indptr[i + 1]; ++e)
      out.weights[e] = out.weights[e] * di / std::sqrt(static_cast<double>(g.degree(out.indices[e])));
  }
  return out;
}

inline SparseVector push_with_config(PushState& state, const AttributedGraph& g, const PprConfig& config,
                                     NodeId source, PushStats* stats) {
  return config.bounded ? state.run_bounded(g, config.alpha, source, config.epsilon, *config.bounded, stats)
                        : state.run(g, config.alpha, source, config.epsilon, stats);
}

/// One truncated (and optionally renormalized) PPR row per source, computed
/// on `workers` threads. Row i depends only on sources[i].
inline TopKMatrix batch_topk_ppr(const AttributedGraph& g, const PprConfig& config, std::span<const NodeId> sources,
                                 std::size_t workers, PushStats* stats = nullptr) {
  config.validate();
  if (sources.empty()) throw ConfigError("batch_topk_ppr needs at least one source");
  for (NodeId s : sources)
    if (s >= g.n) throw ConfigError("source " + std::to_string(s) + " out of range");
  workers = std::clamp<std::size_t>(workers, 1, sources.size());

  std::vector<SparseVector> rows(sources.size());
  std::vector<PushState> scratch;
  scratch.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) scratch.emplace_back(g.n);
  std::vector<PushStats> per_worker(workers);
  parallel_for(sources.size(), workers, [&](std::size_t i, std::size_t w) {
    rows[i] = topk_truncate(push_with_config(scratch[w], g, config, sources[i], &per_worker[w]), config.k);
  });

  TopKMatrix out;
  out.sources.assign(sources.begin(), sources.end());
  for (const auto& r : rows) out.append_row(r);
  if (stats != nullptr)
    for (const auto& s : per_worker) *stats += s;
  return config.renormalize_sym ? renormalize_sym(out, g) : out;
}

struct MassProfile {
  std::vector<std::uint64_t> ks;
  std::vector<double> mean_topk_sum;  // parallel to ks
  double mean_total = 0.0;            // mean of complete vector sums
};

/// Powers of two up to n, with n itself appended.
inline std::vector<std::uint64_t> default_k_schedule(std::uint64_t n) {
  std::vector<std::uint64_t> ks;
  for (std::uint64_t k = 1; k < n; k *= 2) ks.push_back(k);
  ks.push_back(n);
  return ks;
}

/// Mean over sources of the sum of the top-k untruncated push values, per k.
inline MassProfile topk_mass_profile(const AttributedGraph& g, const PprConfig& config, std::span<const NodeId> sources,
                                     std::span<const std::uint64_t> ks, std::size_t workers) {
  config.validate();
  if (sources.empty()) throw ConfigError("topk_mass_profile needs at least one source");
  workers = std::clamp<std::size_t>(workers, 1, sources.size());
  std::vector<std::vector<double>> partial(sources.size(), std::vector<double>(ks.size(), 0.0));
  std::vector<double> totals(sources.size(), 0.0);
  std::vector<PushState> scratch;
  for (std::size_t w = 0; w < workers; ++w) scratch.emplace_back(g.n);
  parallel_for(sources.size(), workers, [&](std::size_t i, std::size_t w) {
    auto vec = push_with_config(scratch[w], g, config, sources[i], nullptr);
    auto values = std::move(vec.values);
    std::sort(values.begin(), values.end(), std::greater<>());
    std::vector<double> prefix(values.size() + 1, 0.0);
    for (std::size_t j = 0; j < values.size(); ++j) prefix[j + 1] = prefix[j] + values[j];
    for (std::size_t q = 0; q < ks.size(); ++q) partial[i][q] = prefix[std::min<std::size_t>(ks[q], values.size())];
    totals[i] = prefix.back();
  });

  MassProfile profile;
  profile.ks.assign(ks.begin(), ks.end());
  profile.mean_topk_sum.assign(ks.size(), 0.0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t q = 0; q < ks.size(); ++q) profile.mean_topk_sum[q] += partial[i][q];
    profile.mean_total += totals[i];
  }
  const auto count = static_cast<double>(sources.size());
  for (double& v : profile.mean_topk_sum) v /= count;
  profile.mean_total /= count;
  return profile;
}

// Persistence: ppr_meta.json + ppr_indptr.u64 / ppr_indices.u32 / ppr_weights.f32,
// plus ppr_sources.u32 naming the node of each row.

inline void save_topk(const std::filesystem::path& dir, const TopKMatrix& topk, const PprConfig& config) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {{"alpha", config.alpha},
                         {"epsilon", config.epsilon},
                         {"k", config.k},
                         {"renormalized", config.renormalize_sym},
                         {"sources", topk.rows()},
                         {"nnz", topk.nnz()},
                         {"format_version", 1}};
  detail::write_json_file(dir / "ppr_meta.json", meta);
  io::write_array(dir / "ppr_indptr.u64", topk.indptr);
  io::write_array(dir / "ppr_indices.u32", topk.indices);
  std::vector<float> weights(topk.weights.begin(), topk.weights.end());
  io::write_array(dir / "ppr_weights.f32", weights);
  io::write_array(dir / "ppr_sources.u32", topk.sources);
}

struct LoadedTopK {
  TopKMatrix matrix;
  PprConfig config;
};

inline LoadedTopK load_topk(const std::filesystem::path& dir, std::uint64_t n) {
  const auto meta = detail::read_json_file(dir / "ppr_meta.json");
  LoadedTopK out;
  try {
    out.config.alpha = meta.at("alpha").get<double>();
    out.config.epsilon = meta.at("epsilon").get<double>();
    out.config.k = meta.at("k").get<std::uint32_t>();
    out.config.renormalize_sym = meta.at("renormalized").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ppr_meta.json", 0, e.what());
  }
  const auto rows = detail::meta_field(meta, "sources");
  auto& t = out.matrix;
  t.indptr = io::read_array<std::uint64_t>(dir / "ppr_indptr.u64", rows + 1);
  const auto nnz = t.indptr.back();
  t.indices = io::read_array<NodeId>(dir / "ppr_indices.u32", nnz);
  const auto weights = io::read_array<float>(dir / "ppr_weights.f32", nnz);
  t.weights.assign(weights.begin(), weights.end());
  if (std::filesystem::exists(dir / "ppr_sources.u32")) {
    t.sources = io::read_array<NodeId>(dir / "ppr_sources.u32", rows);
  } else {
    t.sources.resize(rows);
    std::iota(t.sources.begin(), t.sources.end(), NodeId{0});
  }
  detail::check_csr(t.indptr, t.indices, rows, n, "ppr_indptr.u64", "ppr_indices.u32");
  for (std::size_t i = 0; i < rows; ++i)
    if (t.sources[i] >= n) throw DataError("ppr_sources.u32", i, "source out of range");
  for (std::size_t e = 0; e < t.weights.size(); ++e)
    if (!(t.weights[e] > 0.0)) throw DataError("ppr_weights.f32", e, "weights must be positive");
  return out;
}

}  // namespace pprgo
