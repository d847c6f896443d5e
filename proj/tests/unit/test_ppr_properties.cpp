#include <gtest/gtest.h>

#include "pprgo/oracle.hpp"
#include "pprgo/ppr.hpp"
#include "support/graphs.hpp"

using namespace pprgo;
using namespace pprgo::testing;

namespace {

struct Case {
  AttributedGraph g;
  std::uint64_t seed;
};

std::vector<Case> graphs(int count, std::uint64_t base_seed) {
  std::vector<Case> out;
  Rng rng(base_seed);
  for (int i = 0; i < count; ++i) {
    const auto n = static_cast<std::uint32_t>(20 + rng.below(181));
    const auto extra = static_cast<std::uint32_t>(rng.below(3 * n));
    out.push_back({random_connected(n, extra, base_seed * 1000 + i), base_seed * 1000 + i});
  }
  return out;
}

}  // namespace

TEST(PprProperty, UnderestimateWithinDegreeScaledBound) {
  for (const auto& [g, seed] : graphs(12, 1)) {
    for (double alpha : {0.1, 0.25, 0.5}) {
      const auto exact = oracle::exact_ppr_dense(g, alpha);
      for (double eps : {1e-2, 1e-4}) {
        PushState state(g.n);
        for (NodeId s = 0; s < g.n; s += 7) {
          const auto pi = state.run(g, alpha, s, eps);
          for (NodeId v = 0; v < g.n; ++v) {
            const double gap = exact(s, v) - pi.at(v);
            ASSERT_GE(gap, -1e-9) << "graph " << seed << " source " << s << " node " << v;
            ASSERT_LE(gap, eps * g.degree(v) + 1e-9) << "graph " << seed << " source " << s << " node " << v;
          }
        }
      }
    }
  }
}

TEST(PprProperty, ErrorShrinksWithEpsilon) {
  for (const auto& [g, seed] : graphs(10, 2)) {
    const auto exact = oracle::exact_ppr_dense(g, 0.25);
    double coarse = 0, fine = 0;
    const auto a = push_ppr(g, 0.25, 0, 1e-2), b = push_ppr(g, 0.25, 0, 1e-4);
    for (NodeId v = 0; v < g.n; ++v) {
      coarse = std::max(coarse, exact(0, v) - a.at(v));
      fine = std::max(fine, exact(0, v) - b.at(v));
    }
    EXPECT_LT(fine, coarse) << "graph " << seed;
  }
}

TEST(PprProperty, PushCountBounded) {
  for (const auto& [g, seed] : graphs(10, 3)) {
    for (double alpha : {0.1, 0.25, 0.5})
      for (double eps : {1e-2, 1e-3, 1e-4}) {
        PushStats stats;
        push_ppr(g, alpha, 0, eps, &stats);
        EXPECT_LE(static_cast<double>(stats.pushes), 1.0 / (alpha * eps)) << "graph " << seed;
      }
  }
}

TEST(PprProperty, EstimateMassNonDecreasingInPrecision) {
  const auto g = random_connected(150, 250, 4);
  double previous = 0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double mass = push_ppr(g, 0.25, 3, eps).sum();
    EXPECT_GE(mass, previous);
    EXPECT_LE(mass, 1.0 + 1e-12);
    previous = mass;
  }
}

TEST(PprProperty, BatchIsDeterministicAcrossRuns) {
  const auto g = random_connected(180, 400, 5);
  std::vector<NodeId> sources(g.n);
  std::iota(sources.begin(), sources.end(), NodeId{0});
  Rng(5).shuffle(sources);
  const PprConfig cfg{.alpha = 0.1, .epsilon = 1e-5, .k = 20};
  EXPECT_EQ(batch_topk_ppr(g, cfg, sources, 4), batch_topk_ppr(g, cfg, sources, 4));
}
