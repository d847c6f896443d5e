// pprgo command-line driver.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pprgo/config.hpp"
#include "pprgo/convert.hpp"
#include "pprgo/dataset.hpp"
#include "pprgo/error.hpp"
#include "pprgo/infer.hpp"
#include "pprgo/model.hpp"
#include "pprgo/parallel.hpp"
#include "pprgo/pipeline.hpp"
#include "pprgo/ppr.hpp"
#include "pprgo/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pprgo;

namespace {

struct Overrides {
  std::string config, dataset, output;
  std::optional<double> alpha, epsilon, lr, dropout, wd, fraction;
  std::optional<std::uint32_t> k, epochs, hidden, batch, steps;
  std::optional<std::uint64_t> seed, split_seed, num_seeds;
  std::optional<std::size_t> workers;
  bool renormalize = false, double_precision = false;

  void add_ppr(CLI::App* app) {
    app->add_option("--alpha", alpha, "teleport probability");
    app->add_option("--epsilon", epsilon, "push tolerance");
    app->add_option("--k", k, "entries kept per PPR row");
    app->add_flag("--renormalize", renormalize, "apply D^1/2 . D^-1/2 renormalization to top-k rows");
  }
  void add_train(CLI::App* app) {
    app->add_option("--epochs", epochs);
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--dropout", dropout);
    app->add_option("--weight-decay", wd);
    app->add_option("--hidden", hidden);
    app->add_option("--batch-size", batch);
    app->add_flag("--double", double_precision, "64-bit training");
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (!dataset.empty()) c.dataset = dataset;
    if (!output.empty()) c.output = output;
    if (alpha) c.ppr.alpha = *alpha;
    if (epsilon) c.ppr.epsilon = *epsilon;
    if (k) c.ppr.k = *k;
    if (renormalize) c.ppr.renormalize_sym = true;
    if (lr) c.train.learning_rate = *lr;
    if (dropout) c.train.dropout_rate = *dropout;
    if (wd) c.train.weight_decay = *wd;
    if (epochs) c.train.epochs = *epochs;
    if (hidden) c.train.hidden = *hidden;
    if (batch) c.train.batch_size = *batch;
    if (double_precision) c.train.double_precision = true;
    if (seed) c.train.seed = *seed;
    if (split_seed) c.split_seed = *split_seed;
    if (steps) c.inference.steps = *steps;
    if (fraction) c.inference.fraction = *fraction;
    if (num_seeds) {
      c.seeds.resize(*num_seeds);
      std::iota(c.seeds.begin(), c.seeds.end(), std::uint64_t{0});
    }
    if (workers) c.workers = *workers;
    if (c.dataset.empty()) throw ConfigError("no dataset given (use --dataset or the config file)");
    c.validate();
    return c;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

json split_json(const DataSplit& s) {
  return {{"seed", s.seed}, {"train", s.train_nodes}, {"val", s.val_nodes}, {"test", s.test_nodes}};
}

DataSplit read_split(const fs::path& path, const AttributedGraph& g) {
  const auto j = detail::read_json_file(path);
  DataSplit s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_nodes = j.at("train").get<std::vector<NodeId>>();
    s.val_nodes = j.at("val").get<std::vector<NodeId>>();
    s.test_nodes = j.at("test").get<std::vector<NodeId>>();
  } catch (const json::exception& e) {
    throw DataError(path.string(), 0, e.what());
  }
  for (const auto* list : {&s.train_nodes, &s.val_nodes, &s.test_nodes})
    for (NodeId v : *list)
      if (v >= g.n) throw DataError(path.string(), 0, "node " + std::to_string(v) + " out of range");
  return s;
}

double checkpoint_alpha(const Checkpoint& cp) {
  if (cp.metadata.contains("ppr") && cp.metadata["ppr"].contains("alpha"))
    return cp.metadata["ppr"]["alpha"].get<double>();
  return PprConfig{}.alpha;
}

void check_model_fits(const Checkpoint& cp, const AttributedGraph& g) {
  if (cp.params.d() != g.d || cp.params.c() != g.c)
    throw DataError("checkpoint shape (d=" + std::to_string(cp.params.d()) + ", c=" + std::to_string(cp.params.c()) +
                    ") does not match dataset (d=" + std::to_string(g.d) + ", c=" + std::to_string(g.c) + ")");
}

struct InferArgs {
  std::string checkpoint, dataset;
  std::uint32_t steps = InferenceConfig{}.steps;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void add(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
    app->add_option("--dataset", dataset, "dataset directory")->required();
    app->add_option("--steps", steps, "power-iteration steps p");
    app->add_option("--fraction", fraction, "share of nodes whose logits are computed");
    app->add_option("--seed", seed, "seed for the sparse-logit sample");
    app->add_option("--workers", workers);
  }
};

struct Inference {
  AttributedGraph graph;
  Checkpoint checkpoint;
  PredictionMatrix<float> pred;
  InferenceTiming timing;
};

Inference run_inference(const InferArgs& a) {
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw ConfigError("--fraction must lie in (0, 1]");
  Inference r;
  r.graph = load_dataset(a.dataset);
  r.checkpoint = load_checkpoint(a.checkpoint);
  check_model_fits(r.checkpoint, r.graph);
  r.pred = sparse_logit_predict(r.graph, r.checkpoint.params, a.fraction, checkpoint_alpha(r.checkpoint), a.steps,
                                a.seed, resolve_workers(a.workers), &r.timing);
  return r;
}

int run(int argc, char** argv) {
  CLI::App app{"PPRGo node classification: push PPR, train, predict, evaluate"};
  app.require_subcommand(1);

  // convert
  std::string edges_path, features_dir, convert_out;
  std::uint64_t feature_dim = 0;
  auto* convert = app.add_subcommand("convert", "edge list + feature CSR -> dataset directory");
  convert->add_option("--edges", edges_path, "text file with one 'u v' pair per line")->required();
  convert->add_option("--features", features_dir,
                      "directory with feat_indptr.u64, feat_indices.u32, feat_values.f32, labels.u32");
  convert->add_option("--dims", feature_dim, "feature dimension (default: max index + 1)");
  convert->add_option("--out", convert_out, "output dataset directory")->required();

  // split
  std::string split_dataset, split_out;
  std::uint64_t split_seed = 0;
  auto* split = app.add_subcommand("split", "sample a train/val/test split");
  split->add_option("--dataset", split_dataset)->required();
  split->add_option("--seed", split_seed);
  split->add_option("--out", split_out, "split.json path")->required();

  // ppr
  Overrides ppr_args;
  std::string ppr_out, ppr_split, ppr_sources = "train";
  auto* ppr = app.add_subcommand("ppr", "top-k PPR rows for a set of sources");
  ppr->add_option("--config", ppr_args.config, "run configuration JSON");
  ppr->add_option("--dataset", ppr_args.dataset);
  ppr_args.add_ppr(ppr);
  ppr->add_option("--sources", ppr_sources, "train (split training nodes) or all")
      ->check(CLI::IsMember({"train", "all"}));
  ppr->add_option("--split", ppr_split, "split.json to take training nodes from");
  ppr->add_option("--split-seed", ppr_args.split_seed);
  ppr->add_option("--workers", ppr_args.workers);
  ppr->add_option("--out", ppr_out, "output directory")->required();

  // train
  Overrides train_args;
  std::string train_out;
  auto* train = app.add_subcommand("train", "precompute PPR and train the model");
  train->add_option("--config", train_args.config, "run configuration JSON");
  train->add_option("--dataset", train_args.dataset);
  train_args.add_ppr(train);
  train_args.add_train(train);
  train->add_option("--seed", train_args.seed, "training seed");
  train->add_option("--split-seed", train_args.split_seed);
  train->add_option("--workers", train_args.workers);
  train->add_option("--out", train_out, "checkpoint directory")->required();

  // predict
  InferArgs predict_args;
  std::string predict_out, probs_out;
  auto* predict = app.add_subcommand("predict", "predict labels for every node");
  predict_args.add(predict);
  predict->add_option("--out", predict_out, "predictions.u32 path")->required();
  predict->add_option("--probs", probs_out, "optional probs.f32 path (n x c, row-major)");

  // eval
  InferArgs eval_args;
  std::string eval_out, eval_split;
  std::optional<std::uint64_t> eval_split_seed;
  auto* eval = app.add_subcommand("eval", "accuracy on the test nodes of a split");
  eval_args.add(eval);
  eval->add_option("--split", eval_split, "split.json (default: resample from the checkpoint's split seed)");
  eval->add_option("--split-seed", eval_split_seed);
  eval->add_option("--out", eval_out, "metrics.json path")->required();

  // run-all
  Overrides all_args;
  auto* run_all_cmd = app.add_subcommand("run-all", "split, train, predict and evaluate over several seeds");
  run_all_cmd->add_option("--config", all_args.config, "run configuration JSON");
  run_all_cmd->add_option("--dataset", all_args.dataset);
  run_all_cmd->add_option("--output", all_args.output, "results directory");
  all_args.add_ppr(run_all_cmd);
  all_args.add_train(run_all_cmd);
  run_all_cmd->add_option("--steps", all_args.steps);
  run_all_cmd->add_option("--fraction", all_args.fraction);
  run_all_cmd->add_option("--num-seeds", all_args.num_seeds);
  run_all_cmd->add_option("--workers", all_args.workers);

  // bench
  auto* bench = app.add_subcommand("bench", "throughput measurements");
  bench->require_subcommand(1);
  Overrides bench_ppr_args;
  std::uint64_t bench_sources = 1000, bench_seed = 0;
  bool bench_bounded = false;
  auto* bench_ppr = bench->add_subcommand("ppr", "push throughput on random sources");
  bench_ppr->add_option("--dataset", bench_ppr_args.dataset)->required();
  bench_ppr_args.add_ppr(bench_ppr);
  bench_ppr->add_option("--sources", bench_sources, "number of random sources (capped at n)");
  bench_ppr->add_option("--seed", bench_seed);
  bench_ppr->add_flag("--bounded", bench_bounded, "bounded sweep variant");
  bench_ppr->add_option("--workers", bench_ppr_args.workers);
  InferArgs bench_infer_args;
  std::uint32_t bench_repeat = 3;
  auto* bench_infer = bench->add_subcommand("infer", "forward and propagation timings");
  bench_infer_args.add(bench_infer);
  bench_infer->add_option("--repeat", bench_repeat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::config);
  }

  if (*convert) {
    const auto edges = read_edge_list(edges_path);
    const auto result = build_dataset(edges, features_dir, feature_dim);
    save_dataset(convert_out, result.graph, result.node_map);
    std::printf("dataset: n=%llu m=%llu d=%llu c=%llu (dropped %llu nodes outside the largest component)\n",
                static_cast<unsigned long long>(result.graph.n), static_cast<unsigned long long>(result.graph.m()),
                static_cast<unsigned long long>(result.graph.d), static_cast<unsigned long long>(result.graph.c),
                static_cast<unsigned long long>(result.input_nodes - result.graph.n));
  } else if (*split) {
    const auto g = load_dataset(split_dataset);
    const auto s = sample_split(g, split_seed);
    detail::write_json_file(split_out, split_json(s));
    std::printf("train=%zu val=%zu test=%zu\n", s.train_nodes.size(), s.val_nodes.size(), s.test_nodes.size());
  } else if (*ppr) {
    const auto config = ppr_args.resolve();
    const auto g = load_dataset(config.dataset);
    std::vector<NodeId> sources;
    if (ppr_sources == "all") {
      sources.resize(g.n);
      std::iota(sources.begin(), sources.end(), NodeId{0});
    } else {
      sources = ppr_split.empty() ? sample_split(g, config.split_seed).train_nodes
                                  : read_split(ppr_split, g).train_nodes;
    }
    PushStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    const auto topk = batch_topk_ppr(g, config.ppr, sources, resolve_workers(config.workers), &stats);
    const double elapsed = seconds_since(t0);
    save_topk(ppr_out, topk, config.ppr);
    std::printf("rows=%zu nnz=%zu pushes=%llu time_s=%.4f\n", topk.rows(), topk.nnz(),
                static_cast<unsigned long long>(stats.pushes), elapsed);
  } else if (*train) {
    const auto config = train_args.resolve();
    const auto g = load_dataset(config.dataset);
    const auto s = sample_split(g, config.split_seed);
    const auto workers = resolve_workers(config.workers);
    const auto meta = json{{"seed", config.train.seed},
                           {"split_seed", config.split_seed},
                           {"ppr", to_json(config.ppr)},
                           {"train", to_json(config.train)}};
    const auto finish = [&](const auto& result) {
      save_checkpoint(train_out, result.params, meta);
      save_topk(fs::path(train_out) / "ppr", result.topk, config.ppr);
      detail::write_json_file(fs::path(train_out) / "train_log.json", train_log_json(result.log));
      std::printf("final_loss=%.6f val_accuracy=%.4f preprocessing_s=%.4f training_s=%.4f\n",
                  result.log.epoch_loss.empty() ? 0.0 : result.log.epoch_loss.back(), result.log.val_accuracy,
                  result.log.preprocessing_s, result.log.training_s);
    };
    if (config.train.double_precision)
      finish(train_model<double>(g, s, config.ppr, config.train, workers));
    else
      finish(train_model<float>(g, s, config.ppr, config.train, workers));
  } else if (*predict) {
    const auto r = run_inference(predict_args);
    std::vector<std::uint32_t> labels(r.pred.rows());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(r.pred.predicted(i));
    io::write_array(predict_out, labels);
    if (!probs_out.empty()) {
      auto probs = r.pred.values;
      if (!r.pred.probabilities) softmax_rows(probs);
      io::write_array(probs_out, std::span<const float>(probs.flat()));
    }
    std::printf("nodes=%zu forward_s=%.4f propagation_s=%.4f\n", labels.size(), r.timing.forward_s,
                r.timing.propagation_s);
  } else if (*eval) {
    const auto r = run_inference(eval_args);
    DataSplit s;
    if (!eval_split.empty()) {
      s = read_split(eval_split, r.graph);
    } else {
      std::uint64_t seed = eval_split_seed.value_or(0);
      if (!eval_split_seed && r.checkpoint.metadata.contains("split_seed"))
        seed = r.checkpoint.metadata["split_seed"].get<std::uint64_t>();
      s = sample_split(r.graph, seed);
    }
    const auto m = evaluate(r.pred, r.graph.labels, s.test_nodes);
    json per_class = json::array();
    for (std::size_t c = 0; c < m.per_class_total.size(); ++c)
      per_class.push_back({{"class", c},
                           {"n_eval", m.per_class_total[c]},
                           {"correct", m.per_class_correct[c]},
                           {"accuracy", m.per_class_total[c] > 0 ? static_cast<double>(m.per_class_correct[c]) /
                                                                       static_cast<double>(m.per_class_total[c])
                                                                 : 0.0}});
    const json metrics = {{"accuracy", m.accuracy},
                          {"n_eval", m.n_eval},
                          {"inference_s", r.timing.forward_s + r.timing.propagation_s},
                          {"forward_s", r.timing.forward_s},
                          {"propagation_s", r.timing.propagation_s},
                          {"steps", eval_args.steps},
                          {"fraction", eval_args.fraction},
                          {"per_class", per_class}};
    detail::write_json_file(eval_out, metrics);
    std::printf("accuracy=%.4f n_eval=%llu\n", m.accuracy, static_cast<unsigned long long>(m.n_eval));
  } else if (*run_all_cmd) {
    const auto config = all_args.resolve();
    const auto result = run_all(config, [](const std::string& line) { std::printf("%s\n", line.c_str()); });
    const auto& mean = result.results["mean"];
    const auto& stdev = result.results["std"];
    std::printf("accuracy %.4f +- %.4f | preprocessing %.3fs training %.3fs inference %.3fs total %.3fs\n",
                mean["accuracy"].get<double>(), stdev["accuracy"].get<double>(),
                mean["preprocessing_s"].get<double>(), mean["training_s"].get<double>(),
                mean["inference_s"].get<double>(), mean["total_s"].get<double>());
  } else if (*bench_ppr) {
    if (bench_ppr_args.dataset.empty()) throw ConfigError("--dataset is required");
    RunConfig config;
    config.dataset = bench_ppr_args.dataset;
    if (bench_ppr_args.alpha) config.ppr.alpha = *bench_ppr_args.alpha;
    if (bench_ppr_args.epsilon) config.ppr.epsilon = *bench_ppr_args.epsilon;
    if (bench_ppr_args.k) config.ppr.k = *bench_ppr_args.k;
    config.ppr.renormalize_sym = bench_ppr_args.renormalize;
    if (bench_bounded) config.ppr.bounded = BoundedPush{};
    config.ppr.validate();
    const auto g = load_dataset(config.dataset);
    std::vector<NodeId> sources(g.n);
    std::iota(sources.begin(), sources.end(), NodeId{0});
    Rng rng(bench_seed);
    rng.shuffle(sources);
    sources.resize(std::min<std::uint64_t>(bench_sources, g.n));
    PushStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    const auto topk = batch_topk_ppr(g, config.ppr, sources, resolve_workers(bench_ppr_args.workers.value_or(1)),
                                     &stats);
    const double elapsed = seconds_since(t0);
    std::printf("sources: %zu\n", sources.size());
    std::printf("pushes: %llu\n", static_cast<unsigned long long>(stats.pushes));
    std::printf("time_s: %.6f\n", elapsed);
    std::printf("pushes/sec: %.1f\n", elapsed > 0 ? static_cast<double>(stats.pushes) / elapsed : 0.0);
    std::printf("mean nnz per row: %.3f\n", static_cast<double>(topk.nnz()) / static_cast<double>(topk.rows()));
  } else if (*bench_infer) {
    double forward = 0, propagation = 0;
    for (std::uint32_t i = 0; i < std::max<std::uint32_t>(bench_repeat, 1); ++i) {
      const auto r = run_inference(bench_infer_args);
      forward += r.timing.forward_s;
      propagation += r.timing.propagation_s;
    }
    const double reps = std::max<std::uint32_t>(bench_repeat, 1);
    std::printf("forward_s: %.6f\npropagation_s: %.6f\ninference_s: %.6f\n", forward / reps, propagation / reps,
                (forward + propagation) / reps);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::runtime);
  }
}
