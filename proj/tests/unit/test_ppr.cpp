#include <gtest/gtest.h>

#include "support/scratch.hpp"

#include <filesystem>

#include "pprgo/oracle.hpp"
#include "pprgo/ppr.hpp"
#include "support/graphs.hpp"

using namespace pprgo;
using namespace pprgo::testing;

namespace {
SparseVector make_vec(std::vector<NodeId> ids, std::vector<double> values) { return {std::move(ids), std::move(values)}; }
}  // namespace

TEST(PushPpr, TwoCycle) {
  const auto g = two_cycle();
  const double eps = 1e-8;
  const auto pi = push_ppr(g, 0.25, 0, eps);
  EXPECT_NEAR(pi.at(0), 4.0 / 7.0, eps * 1);
  EXPECT_NEAR(pi.at(1), 3.0 / 7.0, eps * 1);
  EXPECT_LE(pi.at(0), 4.0 / 7.0);
  EXPECT_LE(pi.at(1), 3.0 / 7.0);
}

TEST(PushPpr, StarCenter) {
  const auto g = star(3);
  const double eps = 1e-8;
  const auto pi = push_ppr(g, 0.25, 0, eps);
  EXPECT_NEAR(pi.at(0), 4.0 / 7.0, eps * 3);
  for (NodeId leaf = 1; leaf <= 3; ++leaf) EXPECT_NEAR(pi.at(leaf), 1.0 / 7.0, eps);
}

TEST(PushPpr, LargeEpsilonGivesZeroVector) {
  const auto g = star(3);
  EXPECT_EQ(push_ppr(g, 0.25, 0, 1.0 / 3.0).nnz(), 0U);
  EXPECT_EQ(push_ppr(g, 0.25, 1, 1.0).nnz(), 0U);
  EXPECT_GT(push_ppr(g, 0.25, 0, 0.3).nnz(), 0U);
}

TEST(PushPpr, OutputSortedNonNegativeAndSubStochastic) {
  const auto g = random_connected(120, 200, 5);
  const auto pi = push_ppr(g, 0.15, 7, 1e-5);
  EXPECT_TRUE(std::is_sorted(pi.ids.begin(), pi.ids.end()));
  for (double v : pi.values) EXPECT_GT(v, 0.0);
  EXPECT_LE(pi.sum(), 1.0 + 1e-12);
}

TEST(PushPpr, ResidualBelowThresholdAtTermination) {
  const auto g = random_connected(80, 100, 6);
  const double alpha = 0.25, eps = 1e-3;
  PushState state(g.n);
  const auto pi = state.run(g, alpha, 3, eps);
  const auto r = state.residual();
  for (std::size_t i = 0; i < r.nnz(); ++i) EXPECT_LE(r.values[i], alpha * eps * g.degree(r.ids[i]));
  // Each push moves r_v into the estimate and spreads (1 - alpha) r_v, so sum(p) + sum(r) / alpha stays 1.
  EXPECT_NEAR(pi.sum() + r.sum() / alpha, 1.0, 1e-12);
}

TEST(PushPpr, ScratchReuseMatchesFreshState) {
  const auto g = random_connected(100, 150, 8);
  PushState state(g.n);
  for (NodeId s : {0U, 50U, 99U, 0U}) EXPECT_EQ(state.run(g, 0.2, s, 1e-4), push_ppr(g, 0.2, s, 1e-4));
}

TEST(PushPpr, ErrorsOnBadInput) {
  const auto g = two_cycle();
  EXPECT_THROW(push_ppr(g, 0.25, 2, 1e-4), RuntimeError);
  auto isolated = two_cycle();
  isolated.adj_indptr = {0, 0, 0};
  isolated.adj_indices.clear();
  EXPECT_THROW(push_ppr(isolated, 0.25, 0, 1e-4), RuntimeError);
}

TEST(PushPprBounded, ReducesToUnboundedVariant) {
  const auto g = random_connected(150, 300, 9);
  BoundedPush b{.max_iterations = 1000000, .drop_threshold = 0.0, .degree_cap = g.n, .seed = 1};
  for (NodeId s : {0U, 17U, 149U}) EXPECT_EQ(push_ppr_bounded(g, 0.25, s, 1e-5, b), push_ppr(g, 0.25, s, 1e-5));
}

TEST(PushPprBounded, SingleSweepOnTwoCycle) {
  const auto pi = push_ppr_bounded(two_cycle(), 0.25, 0, 1e-8, {.max_iterations = 1});
  EXPECT_EQ(pi.nnz(), 1U);
  EXPECT_DOUBLE_EQ(pi.at(0), 0.25);
  EXPECT_DOUBLE_EQ(pi.at(1), 0.0);
}

TEST(PushPprBounded, DegreeCapOnStarCenter) {
  const auto g = star(5);
  PushState state(g.n);
  state.run_bounded(g, 0.25, 0, 1e-8, {.max_iterations = 1, .degree_cap = 1, .seed = 3});
  const auto r = state.residual();
  ASSERT_EQ(r.nnz(), 1U);
  EXPECT_NE(r.ids[0], 0U);
  EXPECT_DOUBLE_EQ(r.values[0], 0.75 * 0.25);
}

TEST(PushPprBounded, DropThresholdDiscardsResidual) {
  const auto g = random_connected(100, 100, 10);
  const auto full = push_ppr_bounded(g, 0.25, 0, 1e-6, {.max_iterations = 100});
  const auto dropped = push_ppr_bounded(g, 0.25, 0, 1e-6, {.max_iterations = 100, .drop_threshold = 1e-3});
  EXPECT_LT(dropped.sum(), full.sum());
  EXPECT_LT(dropped.nnz(), full.nnz());
  for (double v : dropped.values) EXPECT_GT(v, 0.0);
}

TEST(PushPprBounded, DeterministicAndSubStochastic) {
  const auto g = star(40);
  BoundedPush b{.max_iterations = 5, .degree_cap = 4, .seed = 12};
  const auto a = push_ppr_bounded(g, 0.25, 0, 1e-6, b);
  EXPECT_EQ(a, push_ppr_bounded(g, 0.25, 0, 1e-6, b));
  EXPECT_LE(a.sum(), 1.0);
  for (double v : a.values) EXPECT_GE(v, 0.0);
}

TEST(PushPprBounded, RejectsBadBounds) {
  EXPECT_THROW(push_ppr_bounded(two_cycle(), 0.25, 0, 1e-4, {.max_iterations = 0}), ConfigError);
  EXPECT_THROW(push_ppr_bounded(two_cycle(), 0.25, 0, 1e-4, {.degree_cap = 0}), ConfigError);
}

TEST(TopK, SelectsLargest) {
  const auto out = topk_truncate(make_vec({0, 1, 2}, {0.5, 0.3, 0.2}), 2);
  EXPECT_EQ(out, make_vec({0, 1}, {0.5, 0.3}));
}

TEST(TopK, KAtLeastNnzIsIdentity) {
  const auto v = make_vec({1, 4, 9}, {0.1, 0.7, 0.2});
  EXPECT_EQ(topk_truncate(v, 3), v);
  EXPECT_EQ(topk_truncate(v, 50), v);
}

TEST(TopK, TiesGoToSmallerId) {
  EXPECT_EQ(topk_truncate(make_vec({0, 1, 2}, {0.2, 0.2, 0.2}), 2), make_vec({0, 1}, {0.2, 0.2}));
  EXPECT_EQ(topk_truncate(make_vec({3, 5, 8, 9}, {0.1, 0.4, 0.1, 0.4}), 3), make_vec({3, 5, 9}, {0.1, 0.4, 0.4}));
}

TEST(TopK, KZeroIsConfigError) { EXPECT_THROW(topk_truncate(make_vec({0}, {1.0}), 0), ConfigError); }

TEST(BatchTopK, TwoCycleAllSources) {
  const auto g = two_cycle();
  PprConfig cfg{.alpha = 0.25, .epsilon = 1e-9, .k = 2};
  const std::vector<NodeId> sources{0, 1};
  const auto t = batch_topk_ppr(g, cfg, sources, 1);
  ASSERT_EQ(t.rows(), 2U);
  EXPECT_NEAR(t.row(0).weights[0], 4.0 / 7.0, 1e-9);
  EXPECT_NEAR(t.row(0).weights[1], 3.0 / 7.0, 1e-9);
  EXPECT_NEAR(t.row(1).weights[0], 3.0 / 7.0, 1e-9);
  EXPECT_NEAR(t.row(1).weights[1], 4.0 / 7.0, 1e-9);
}

TEST(BatchTopK, WorkerCountDoesNotChangeOutput) {
  const auto g = random_connected(200, 600, 13);
  std::vector<NodeId> sources(g.n);
  std::iota(sources.begin(), sources.end(), NodeId{0});
  const PprConfig cfg{.epsilon = 1e-5, .k = 16};
  const auto one = batch_topk_ppr(g, cfg, sources, 1);
  EXPECT_EQ(one, batch_topk_ppr(g, cfg, sources, 8));
  EXPECT_EQ(one, batch_topk_ppr(g, cfg, sources, 3));
}

TEST(BatchTopK, RowDependsOnlyOnItsSource) {
  const auto g = random_connected(100, 200, 14);
  const PprConfig cfg{.epsilon = 1e-5, .k = 8};
  const std::vector<NodeId> forward{3, 40, 77}, backward{77, 40, 3};
  const auto a = batch_topk_ppr(g, cfg, forward, 2);
  const auto b = batch_topk_ppr(g, cfg, backward, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ra = a.row(i), rb = b.row(2 - i);
    EXPECT_TRUE(std::equal(ra.ids.begin(), ra.ids.end(), rb.ids.begin(), rb.ids.end()));
    EXPECT_TRUE(std::equal(ra.weights.begin(), ra.weights.end(), rb.weights.begin(), rb.weights.end()));
  }
}

TEST(BatchTopK, KOneKeepsTheOracleArgmax) {
  const auto g = random_connected(80, 120, 15);
  const auto exact = oracle::exact_ppr_dense(g, 0.25);
  std::vector<NodeId> sources(g.n);
  std::iota(sources.begin(), sources.end(), NodeId{0});
  const auto t = batch_topk_ppr(g, {.epsilon = 1e-8, .k = 1}, sources, 1);
  for (NodeId i = 0; i < g.n; ++i) {
    Eigen::Index best = 0;
    exact.row(i).maxCoeff(&best);
    ASSERT_EQ(t.row(i).ids.size(), 1U);
    EXPECT_EQ(t.row(i).ids[0], static_cast<NodeId>(best)) << "row " << i;
  }
}

TEST(BatchTopK, RowInvariants) {
  const auto g = planted_partition({.n = 600, .seed = 2});
  std::vector<NodeId> sources(g.n);
  std::iota(sources.begin(), sources.end(), NodeId{0});
  const auto t = batch_topk_ppr(g, {.k = 10}, sources, 2);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const auto r = t.row(i);
    EXPECT_LE(r.ids.size(), 10U);
    EXPECT_TRUE(std::adjacent_find(r.ids.begin(), r.ids.end(), std::greater_equal<>()) == r.ids.end());
    double total = 0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      total += w;
    }
    EXPECT_LE(total, 1.0 + 1e-6);
  }
}

TEST(BatchTopK, Errors) {
  const auto g = two_cycle();
  EXPECT_THROW(batch_topk_ppr(g, {}, std::vector<NodeId>{}, 1), ConfigError);
  EXPECT_THROW(batch_topk_ppr(g, {}, std::vector<NodeId>{2}, 1), ConfigError);
  EXPECT_THROW(batch_topk_ppr(g, {.alpha = 1.0}, std::vector<NodeId>{0}, 1), ConfigError);
  EXPECT_THROW(batch_topk_ppr(g, {.epsilon = 0.0}, std::vector<NodeId>{0}, 1), ConfigError);
  EXPECT_THROW(batch_topk_ppr(g, {.k = 0}, std::vector<NodeId>{0}, 1), ConfigError);
}

TEST(Renormalize, RegularGraphUnchanged) {
  const auto g = ring(12);
  std::vector<NodeId> sources{0, 5, 11};
  const auto t = batch_topk_ppr(g, {.epsilon = 1e-6, .k = 6}, sources, 1);
  const auto r = renormalize_sym(t, g);
  for (std::size_t e = 0; e < t.weights.size(); ++e) EXPECT_DOUBLE_EQ(r.weights[e], t.weights[e]);
}

TEST(Renormalize, ScalesBySqrtDegreeRatio) {
  const auto g = star(4);  // center degree 4, leaves degree 1
  TopKMatrix t;
  t.sources = {0};
  t.append_row(make_vec({1}, {0.3}));
  EXPECT_DOUBLE_EQ(renormalize_sym(t, g).weights[0], 0.6);
}

TEST(Renormalize, TwiceDiffersFromOnce) {
  const auto g = star(4);
  TopKMatrix t;
  t.sources = {0};
  t.append_row(make_vec({1}, {0.3}));
  const auto once = renormalize_sym(t, g);
  EXPECT_NE(renormalize_sym(once, g).weights[0], once.weights[0]);
}

TEST(Renormalize, ConfigFlagApplies) {
  const auto g = star(4);
  const std::vector<NodeId> sources{0, 2};
  const auto raw = batch_topk_ppr(g, {.epsilon = 1e-6, .k = 5}, sources, 1);
  const auto sym = batch_topk_ppr(g, {.epsilon = 1e-6, .k = 5, .renormalize_sym = true}, sources, 1);
  EXPECT_EQ(sym, renormalize_sym(raw, g));
}

TEST(ExactPpr, TwoCycle) {
  const auto pi = oracle::exact_ppr_dense(two_cycle(), 0.25);
  EXPECT_NEAR(pi(0, 0), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(pi(0, 1), 3.0 / 7.0, 1e-12);
  EXPECT_NEAR(pi(1, 0), 3.0 / 7.0, 1e-12);
  EXPECT_NEAR(pi(1, 1), 4.0 / 7.0, 1e-12);
}

TEST(ExactPpr, AlphaNearOneIsNearIdentity) {
  const auto g = random_connected(30, 30, 16);
  const auto pi = oracle::exact_ppr_dense(g, 0.999);
  EXPECT_LT((pi - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff(), 2e-3);
}

TEST(ExactPpr, RowsSumToOne) {
  const auto g = random_connected(50, 60, 17);
  const auto pi = oracle::exact_ppr_dense(g, 0.25);
  for (Eigen::Index i = 0; i < pi.rows(); ++i) EXPECT_NEAR(pi.row(i).sum(), 1.0, 1e-10);
}

TEST(ExactPpr, SizeLimit) {
  const auto g = ring(static_cast<std::uint32_t>(oracle::kMaxOracleNodes + 1));
  EXPECT_THROW(oracle::exact_ppr_dense(g, 0.25), ConfigError);
}

TEST(MassProfile, TwoCycle) {
  const auto g = two_cycle();
  const std::vector<NodeId> sources{0, 1};
  const std::vector<std::uint64_t> ks{1, 2};
  const auto p = topk_mass_profile(g, {.epsilon = 1e-9}, sources, ks, 1);
  EXPECT_NEAR(p.mean_topk_sum[0], 4.0 / 7.0, 1e-8);
  EXPECT_NEAR(p.mean_topk_sum[1], 1.0, 1e-8);
  EXPECT_NEAR(p.mean_total, p.mean_topk_sum[1], 1e-15);
}

TEST(MassProfile, MonotoneAndCompleteAtN) {
  const auto g = random_connected(150, 300, 18);
  std::vector<NodeId> sources(g.n);
  std::iota(sources.begin(), sources.end(), NodeId{0});
  const auto ks = default_k_schedule(g.n);
  EXPECT_EQ(ks.back(), g.n);
  const auto p = topk_mass_profile(g, {.epsilon = 1e-5}, sources, ks, 2);
  for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_GE(p.mean_topk_sum[i], p.mean_topk_sum[i - 1]);
  EXPECT_NEAR(p.mean_topk_sum.back(), p.mean_total, 1e-12);
  EXPECT_LE(p.mean_topk_sum.back(), 1.0);
}

TEST(TopKFiles, RoundTrip) {
  const auto g = random_connected(60, 90, 19);
  const std::vector<NodeId> sources{4, 1, 30};
  const PprConfig cfg{.alpha = 0.2, .epsilon = 1e-4, .k = 5};
  const auto t = batch_topk_ppr(g, cfg, sources, 1);
  const auto dir = pprgo::testing::scratch_dir("pprgo_topk_roundtrip");
  std::filesystem::remove_all(dir);
  save_topk(dir, t, cfg);
  const auto loaded = load_topk(dir, g.n);
  EXPECT_EQ(loaded.matrix.sources, t.sources);
  EXPECT_EQ(loaded.matrix.indptr, t.indptr);
  EXPECT_EQ(loaded.matrix.indices, t.indices);
  for (std::size_t e = 0; e < t.weights.size(); ++e)
    EXPECT_EQ(loaded.matrix.weights[e], static_cast<double>(static_cast<float>(t.weights[e])));
  EXPECT_EQ(loaded.config.alpha, 0.2);
  EXPECT_EQ(loaded.config.k, 5U);
  const auto meta = detail::read_json_file(dir / "ppr_meta.json");
  EXPECT_EQ(meta["sources"], 3);
  EXPECT_EQ(meta["renormalized"], false);
  EXPECT_THROW(load_topk(dir, 10), DataError);
}
