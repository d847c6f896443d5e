#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pprgo/error.hpp"
#include "pprgo/graph.hpp"
#include "pprgo/infer.hpp"
#include "pprgo/model.hpp"
#include "pprgo/ppr.hpp"
#include "pprgo/random.hpp"

namespace pprgo {

/// Shuffles the top-k rows with `seed` and cuts them into consecutive
/// batches of batch_size (the last one may be short). Neighbor ids within a
/// batch are deduplicated in order of first appearance.
inline std::vector<Batch> build_batches(const TopKMatrix& topk, std::span<const NodeId> train_nodes,
                                        std::span<const std::uint32_t> labels, std::uint32_t batch_size,
                                        std::uint64_t seed) {
  if (train_nodes.empty()) throw ConfigError("empty training set");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!std::equal(topk.sources.begin(), topk.sources.end(), train_nodes.begin(), train_nodes.end()))
    throw ConfigError("top-k rows do not match the training nodes");

  std::vector<std::uint32_t> order(topk.rows());
  std::iota(order.begin(), order.end(), 0U);
  Rng rng(seed, stream::epoch_shuffle);
  rng.shuffle(order);

  std::vector<Batch> batches;
  std::unordered_map<NodeId, std::uint32_t> slot_of;
  for (std::size_t first = 0; first < order.size(); first += batch_size) {
    const std::size_t last = std::min<std::size_t>(order.size(), first + batch_size);
    Batch b;
    slot_of.clear();
    for (std::size_t i = first; i < last; ++i) {
      const auto r = order[i];
      b.rows.push_back(r);
      b.labels.push_back(labels[topk.sources[r]]);
      const auto row = topk.row(r);
      for (std::size_t s = 0; s < row.ids.size(); ++s) {
        auto [it, inserted] = slot_of.try_emplace(row.ids[s], static_cast<std::uint32_t>(b.unique_nodes.size()));
        if (inserted) b.unique_nodes.push_back(row.ids[s]);
        b.slot_unique.push_back(it->second);
        b.weights.push_back(row.weights[s]);
      }
      b.row_offsets.push_back(b.slot_unique.size());
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

struct TrainLog {
  std::vector<double> epoch_loss;
  double preprocessing_s = 0.0;
  double training_s = 0.0;
  double per_epoch_s = 0.0;
  double val_accuracy = 0.0;
  std::uint64_t ppr_rows = 0;
  std::uint64_t ppr_nnz = 0;
  std::uint64_t max_batch_unique = 0;  // largest gathered feature-row count
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;
  TrainLog log;
  TopKMatrix topk;
};

/// Steps of power iteration used for the post-training validation score.
inline constexpr std::uint32_t kValidationSteps = 2;

/// Precomputes top-k PPR for the training nodes only, then runs epochs of
/// minibatch Adam on the sequential single-writer loop and scores the
/// validation set once at the end.
template <typename T>
TrainResult<T> train_model(const AttributedGraph& g, const DataSplit& split, const PprConfig& ppr_config,
                           const TrainConfig& config, std::size_t workers = 1,
                           const std::function<void(std::uint32_t, double)>& on_epoch = {}) {
  ppr_config.validate();
  config.validate();
  using clock = std::chrono::steady_clock;
  TrainResult<T> result;

  const auto t0 = clock::now();
  result.topk = batch_topk_ppr(g, ppr_config, split.train_nodes, workers);
  const auto t1 = clock::now();
  result.log.preprocessing_s = std::chrono::duration<double>(t1 - t0).count();
  result.log.ppr_rows = result.topk.rows();
  result.log.ppr_nnz = result.topk.nnz();

  result.params = init_params<T>(g.d, config.hidden, g.c, config.seed);
  AdamState<T> adam(result.params);
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = build_batches(result.topk, split.train_nodes, g.labels, config.batch_size,
                                       stream_seed(config.seed, epoch));
    double loss_sum = 0.0;
    for (const Batch& batch : batches) {
      const auto features = gather_features<T>(g, batch.unique_nodes);
      result.log.max_batch_unique = std::max<std::uint64_t>(result.log.max_batch_unique, batch.unique_nodes.size());
      LossAndGrad<T> lg;
      if (config.dropout_rate > 0.0) {
        Rng rng(config.seed, stream::dropout, step);
        const auto masks =
            make_dropout_masks<T>(config.dropout_rate, features.nnz(), features.rows(), config.hidden, rng);
        lg = loss_and_grad(result.params, batch, features, config.weight_decay, &masks);
      } else {
        lg = loss_and_grad(result.params, batch, features, config.weight_decay);
      }
      adam_step(result.params, lg.grad, adam, config.learning_rate);
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(batch.size());
      ++step;
    }
    result.log.epoch_loss.push_back(loss_sum / static_cast<double>(split.train_nodes.size()));
    if (on_epoch) on_epoch(epoch, result.log.epoch_loss.back());
  }
  const auto t2 = clock::now();
  result.log.training_s = std::chrono::duration<double>(t2 - t1).count();
  result.log.per_epoch_s = config.epochs > 0 ? result.log.training_s / config.epochs : 0.0;

  if (!split.val_nodes.empty()) {
    const auto H = compute_logits(g, result.params, {}, workers);
    const auto pred = power_iteration_predict(g, H, ppr_config.alpha, kValidationSteps, workers);
    result.log.val_accuracy = evaluate(pred, g.labels, split.val_nodes).accuracy;
  }
  return result;
}

}  // namespace pprgo
