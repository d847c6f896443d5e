#pragma once

// JSON (de)serialization of the experiment configuration. Unknown keys are
// rejected so that a typo never silently falls back to a default.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprgo/error.hpp"
#include "pprgo/model.hpp"
#include "pprgo/ppr.hpp"

namespace pprgo {

struct InferenceConfig {
  std::uint32_t steps = 2;
  double fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("inference.fraction must lie in (0, 1]");
  }
};

struct GridConfig {
  std::vector<double> epsilons;
  std::vector<std::uint32_t> ks;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path output = "results";
  PprConfig ppr;
  TrainConfig train;
  InferenceConfig inference;
  std::uint64_t split_seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t workers = 1;
  std::optional<GridConfig> grid;

  void validate() const {
    ppr.validate();
    train.validate();
    inference.validate();
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (grid) {
      if (grid->epsilons.empty() || grid->ks.empty()) throw ConfigError("grid needs epsilons and ks");
      for (double e : grid->epsilons)
        if (!(e > 0.0)) throw ConfigError("grid epsilons must be positive");
      for (auto k : grid->ks)
        if (k < 1) throw ConfigError("grid ks must be at least 1");
    }
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : obj.items())
    if (!known.contains(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read_opt(const nlohmann::json& obj, const char* key, T& target, const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return;
  try {
    target = obj[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const PprConfig& c) {
  nlohmann::json j = {{"alpha", c.alpha}, {"epsilon", c.epsilon}, {"k", c.k}, {"renormalize_sym", c.renormalize_sym}};
  if (c.bounded)
    j["bounded"] = {{"max_iterations", c.bounded->max_iterations},
                    {"drop_threshold", c.bounded->drop_threshold},
                    {"degree_cap", c.bounded->degree_cap},
                    {"seed", c.bounded->seed}};
  else
    j["bounded"] = nullptr;
  return j;
}

inline PprConfig ppr_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"alpha", "epsilon", "k", "renormalize_sym", "bounded"}, "ppr");
  PprConfig c;
  detail::read_opt(j, "alpha", c.alpha, "ppr");
  detail::read_opt(j, "epsilon", c.epsilon, "ppr");
  detail::read_opt(j, "k", c.k, "ppr");
  detail::read_opt(j, "renormalize_sym", c.renormalize_sym, "ppr");
  if (j.contains("bounded") && !j["bounded"].is_null()) {
    const auto& b = j["bounded"];
    detail::reject_unknown(b, {"max_iterations", "drop_threshold", "degree_cap", "seed"}, "ppr.bounded");
    BoundedPush bp;
    detail::read_opt(b, "max_iterations", bp.max_iterations, "ppr.bounded");
    detail::read_opt(b, "drop_threshold", bp.drop_threshold, "ppr.bounded");
    detail::read_opt(b, "degree_cap", bp.degree_cap, "ppr.bounded");
    detail::read_opt(b, "seed", bp.seed, "ppr.bounded");
    c.bounded = bp;
  }
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"dropout_rate", c.dropout_rate}, {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},       {"epochs", c.epochs},             {"hidden", c.hidden},
          {"seed", c.seed},                   {"double_precision", c.double_precision}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j,
                         {"learning_rate", "dropout_rate", "weight_decay", "batch_size", "epochs", "hidden", "seed",
                          "double_precision"},
                         "train");
  TrainConfig c;
  detail::read_opt(j, "learning_rate", c.learning_rate, "train");
  detail::read_opt(j, "dropout_rate", c.dropout_rate, "train");
  detail::read_opt(j, "weight_decay", c.weight_decay, "train");
  detail::read_opt(j, "batch_size", c.batch_size, "train");
  detail::read_opt(j, "epochs", c.epochs, "train");
  detail::read_opt(j, "hidden", c.hidden, "train");
  detail::read_opt(j, "seed", c.seed, "train");
  detail::read_opt(j, "double_precision", c.double_precision, "train");
  return c;
}

inline nlohmann::json to_json(const InferenceConfig& c) {
  return {{"steps", c.steps}, {"fraction", c.fraction}, {"seed", c.seed}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {{"dataset", c.dataset.string()},
                      {"output", c.output.string()},
                      {"ppr", to_json(c.ppr)},
                      {"train", to_json(c.train)},
                      {"inference", to_json(c.inference)},
                      {"split_seed", c.split_seed},
                      {"seeds", c.seeds},
                      {"workers", c.workers}};
  if (c.grid) j["grid"] = {{"epsilons", c.grid->epsilons}, {"ks", c.grid->ks}};
  return j;
}

/// Parses a run configuration; relative paths resolve against `base_dir`.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  detail::reject_unknown(j,
                         {"dataset", "output", "ppr", "train", "inference", "split_seed", "seeds", "num_seeds",
                          "workers", "grid"},
                         "config");
  RunConfig c;
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_relative() && !base_dir.empty()) ? base_dir / path : path;
  };
  if (j.contains("dataset")) c.dataset = resolve(j["dataset"].get<std::string>());
  if (j.contains("output")) c.output = resolve(j["output"].get<std::string>());
  if (j.contains("ppr")) c.ppr = ppr_config_from_json(j["ppr"]);
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  if (j.contains("inference")) {
    const auto& inf = j["inference"];
    detail::reject_unknown(inf, {"steps", "fraction", "seed"}, "inference");
    detail::read_opt(inf, "steps", c.inference.steps, "inference");
    detail::read_opt(inf, "fraction", c.inference.fraction, "inference");
    detail::read_opt(inf, "seed", c.inference.seed, "inference");
  }
  detail::read_opt(j, "split_seed", c.split_seed, "config");
  detail::read_opt(j, "workers", c.workers, "config");
  if (j.contains("seeds") && j.contains("num_seeds")) throw ConfigError("give either seeds or num_seeds, not both");
  detail::read_opt(j, "seeds", c.seeds, "config");
  if (j.contains("num_seeds")) {
    std::uint64_t count = 0;
    detail::read_opt(j, "num_seeds", count, "config");
    c.seeds.resize(count);
    std::iota(c.seeds.begin(), c.seeds.end(), std::uint64_t{0});
  }
  if (j.contains("grid") && !j["grid"].is_null()) {
    const auto& g = j["grid"];
    detail::reject_unknown(g, {"epsilons", "ks"}, "grid");
    GridConfig grid;
    detail::read_opt(g, "epsilons", grid.epsilons, "grid");
    detail::read_opt(g, "ks", grid.ks, "grid");
    c.grid = grid;
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

}  // namespace pprgo
