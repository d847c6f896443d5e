#pragma once

// End-to-end experiment driver: split -> train -> predict -> evaluate per
// seed, with the runtime breakdown reported as preprocessing / training /
// inference (forward + propagation) / total.

#include <sys/resource.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprgo/config.hpp"
#include "pprgo/dataset.hpp"
#include "pprgo/graph.hpp"
#include "pprgo/infer.hpp"
#include "pprgo/model.hpp"
#include "pprgo/ppr.hpp"
#include "pprgo/train.hpp"

namespace pprgo {

/// Peak resident set size of this process in bytes.
inline std::uint64_t peak_rss_bytes() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0;
  return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024;  // ru_maxrss is KiB on Linux
}

struct SeedResult {
  std::uint64_t seed = 0;
  double preprocessing_s = 0, per_epoch_s = 0, training_s = 0;
  double forward_s = 0, propagation_s = 0, inference_s = 0, total_s = 0;
  std::uint64_t peak_rss_bytes = 0;
  double accuracy = 0;
  double val_accuracy = 0;
  std::uint64_t n_test = 0;
  double final_loss = 0;
};

inline const std::vector<std::string>& seed_result_fields() {
  static const std::vector<std::string> fields{"preprocessing_s", "per_epoch_s",    "training_s", "forward_s",
                                               "propagation_s",   "inference_s",    "total_s",    "peak_rss_bytes",
                                               "accuracy",        "val_accuracy"};
  return fields;
}

inline nlohmann::json to_json(const SeedResult& r) {
  return {{"seed", r.seed},
          {"preprocessing_s", r.preprocessing_s},
          {"per_epoch_s", r.per_epoch_s},
          {"training_s", r.training_s},
          {"forward_s", r.forward_s},
          {"propagation_s", r.propagation_s},
          {"inference_s", r.inference_s},
          {"total_s", r.total_s},
          {"peak_rss_bytes", r.peak_rss_bytes},
          {"accuracy", r.accuracy},
          {"val_accuracy", r.val_accuracy},
          {"n_test", r.n_test},
          {"final_loss", r.final_loss}};
}

inline nlohmann::json train_log_json(const TrainLog& log) {
  return {{"epoch_loss", log.epoch_loss},   {"preprocessing_s", log.preprocessing_s},
          {"training_s", log.training_s},   {"per_epoch_s", log.per_epoch_s},
          {"val_accuracy", log.val_accuracy}, {"ppr_rows", log.ppr_rows},
          {"ppr_nnz", log.ppr_nnz},         {"max_batch_unique", log.max_batch_unique}};
}

/// Artifacts a single seed may persist; empty path = keep nothing.
struct SeedOutputs {
  std::filesystem::path dir;
};

template <typename T>
SeedResult run_seed_typed(const AttributedGraph& g, const RunConfig& config, std::uint64_t seed,
                          const SeedOutputs& outputs) {
  const DataSplit split = sample_split(g, seed);
  TrainConfig train = config.train;
  train.seed = seed;
  const std::size_t workers = resolve_workers(config.workers);

  auto trained = train_model<T>(g, split, config.ppr, train, workers);

  InferenceTiming timing;
  const auto pred = sparse_logit_predict(g, trained.params, config.inference.fraction, config.ppr.alpha,
                                         config.inference.steps, stream_seed(config.inference.seed, seed), workers,
                                         &timing);
  const auto metrics = evaluate(pred, g.labels, split.test_nodes);

  SeedResult r;
  r.seed = seed;
  r.preprocessing_s = trained.log.preprocessing_s;
  r.training_s = trained.log.training_s;
  r.per_epoch_s = trained.log.per_epoch_s;
  r.forward_s = timing.forward_s;
  r.propagation_s = timing.propagation_s;
  r.inference_s = timing.forward_s + timing.propagation_s;
  r.total_s = r.preprocessing_s + r.training_s + r.inference_s;
  r.peak_rss_bytes = peak_rss_bytes();
  r.accuracy = metrics.accuracy;
  r.val_accuracy = trained.log.val_accuracy;
  r.n_test = metrics.n_eval;
  r.final_loss = trained.log.epoch_loss.empty() ? 0.0 : trained.log.epoch_loss.back();

  if (!outputs.dir.empty()) {
    std::filesystem::create_directories(outputs.dir);
    save_topk(outputs.dir / "ppr", trained.topk, config.ppr);
    detail::write_json_file(outputs.dir / "train_log.json", train_log_json(trained.log));
    save_checkpoint(outputs.dir / "model", trained.params,
                    {{"seed", seed}, {"split_seed", seed}, {"ppr", to_json(config.ppr)}, {"train", to_json(train)}});
  }
  return r;
}

inline SeedResult run_seed(const AttributedGraph& g, const RunConfig& config, std::uint64_t seed,
                           const SeedOutputs& outputs = {}) {
  return config.train.double_precision ? run_seed_typed<double>(g, config, seed, outputs)
                                       : run_seed_typed<float>(g, config, seed, outputs);
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over seeds
};

inline Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(values.size()));
  return s;
}

inline nlohmann::json aggregate_results(const std::vector<SeedResult>& runs) {
  nlohmann::json mean = nlohmann::json::object(), stdev = nlohmann::json::object();
  for (const auto& field : seed_result_fields()) {
    std::vector<double> values;
    for (const auto& r : runs) values.push_back(to_json(r)[field].get<double>());
    const auto s = summarize(values);
    mean[field] = s.mean;
    stdev[field] = s.std;
  }
  return {{"mean", mean}, {"std", stdev}};
}

struct RunAllResult {
  std::vector<SeedResult> runs;
  nlohmann::json results;
  std::optional<nlohmann::json> grid;
};

/// Runs every seed, writes results.json (and grid.json when a grid is
/// configured) into config.output, with per-seed artifacts under seed_<s>/.
inline RunAllResult run_all(const RunConfig& config, const std::function<void(const std::string&)>& log = {}) {
  config.validate();
  auto g = load_dataset(config.dataset);
  g = standardize(g).graph;  // no-op on a stored standardized graph

  RunAllResult out;
  for (auto seed : config.seeds) {
    const auto dir = config.output / ("seed_" + std::to_string(seed));
    out.runs.push_back(run_seed(g, config, seed, {dir}));
    if (log) log("seed " + std::to_string(seed) + ": accuracy " + std::to_string(out.runs.back().accuracy));
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : out.runs) runs.push_back(to_json(r));
  const auto agg = aggregate_results(out.runs);
  out.results = {{"config", to_json(config)},
                 {"dataset", {{"n", g.n}, {"m", g.m()}, {"d", g.d}, {"c", g.c}}},
                 {"runs", runs},
                 {"mean", agg["mean"]},
                 {"std", agg["std"]}};
  std::filesystem::create_directories(config.output);
  detail::write_json_file(config.output / "results.json", out.results);

  if (config.grid) {
    nlohmann::json mean_grid = nlohmann::json::array(), std_grid = nlohmann::json::array();
    for (double eps : config.grid->epsilons) {
      nlohmann::json mean_row = nlohmann::json::array(), std_row = nlohmann::json::array();
      for (auto k : config.grid->ks) {
        RunConfig cell = config;
        cell.ppr.epsilon = eps;
        cell.ppr.k = k;
        std::vector<double> acc;
        for (auto seed : config.seeds) acc.push_back(run_seed(g, cell, seed).accuracy);
        const auto s = summarize(acc);
        mean_row.push_back(s.mean);
        std_row.push_back(s.std);
        if (log) log("grid eps=" + std::to_string(eps) + " k=" + std::to_string(k) + ": " + std::to_string(s.mean));
      }
      mean_grid.push_back(mean_row);
      std_grid.push_back(std_row);
    }
    out.grid = nlohmann::json{{"epsilons", config.grid->epsilons},
                              {"ks", config.grid->ks},
                              {"seeds", config.seeds},
                              {"accuracy_mean", mean_grid},
                              {"accuracy_std", std_grid}};
    detail::write_json_file(config.output / "grid.json", *out.grid);
  }
  return out;
}

}  // namespace pprgo
