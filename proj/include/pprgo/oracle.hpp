#pragma once

// Dense 64-bit reference computations for small graphs. Used by tests and
// the acceptance suite to check the sparse paths; never on the hot path.

#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "pprgo/error.hpp"
#include "pprgo/graph.hpp"
#include "pprgo/infer.hpp"

namespace pprgo::oracle {

inline constexpr std::uint64_t kMaxOracleNodes = 2000;

inline void check_size(const AttributedGraph& g) {
  if (g.n > kMaxOracleNodes)
    throw ConfigError("dense oracle limited to " + std::to_string(kMaxOracleNodes) + " nodes, got " +
                      std::to_string(g.n));
}

inline Eigen::MatrixXd adjacency(const AttributedGraph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.n), static_cast<Eigen::Index>(g.n));
  for (NodeId v = 0; v < g.n; ++v)
    for (NodeId u : g.neighbors(v)) a(v, u) = 1.0;
  return a;
}

/// alpha * (I - (1 - alpha) D^{-1} A)^{-1} by LU solve.
inline Eigen::MatrixXd exact_ppr_dense(const AttributedGraph& g, double alpha) {
  check_size(g);
  const auto n = static_cast<Eigen::Index>(g.n);
  Eigen::MatrixXd walk = adjacency(g);
  for (Eigen::Index v = 0; v < n; ++v) {
    const double deg = walk.row(v).sum();
    if (deg == 0.0) throw DataError("oracle: node " + std::to_string(v) + " has degree 0");
    walk.row(v) /= deg;
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - (1.0 - alpha) * walk;
  return alpha * system.partialPivLu().inverse();
}

/// alpha * (I - (1 - alpha) Ã)^{-1} with Ã = D̃^{-1/2} (A + I) D̃^{-1/2}.
inline Eigen::MatrixXd ppnp_sym_matrix(const AttributedGraph& g, double alpha) {
  check_size(g);
  const auto n = static_cast<Eigen::Index>(g.n);
  Eigen::MatrixXd a = adjacency(g) + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd norm = inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - (1.0 - alpha) * norm;
  return alpha * system.partialPivLu().inverse();
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) total += (out(i, j) = std::exp(logits(i, j) - mx));
    out.row(i) /= total;
  }
  return out;
}

inline Eigen::MatrixXd to_eigen(const Matrix<double>& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
  return out;
}

inline Matrix<double> from_eigen(const Eigen::MatrixXd& m) {
  Matrix<double> out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

/// Π^ppr H without softmax.
inline Matrix<double> dense_ppr_propagate(const AttributedGraph& g, const Matrix<double>& H, double alpha) {
  return from_eigen(exact_ppr_dense(g, alpha) * to_eigen(H));
}

/// softmax(Π^sym H), the fully propagated dense reference.
inline PredictionMatrix<double> ppnp_oracle_predict(const AttributedGraph& g, const Matrix<double>& H, double alpha) {
  if (H.rows() != g.n) throw RuntimeError("logit rows do not match node count");
  PredictionMatrix<double> pred{from_eigen(ppnp_sym_matrix(g, alpha) * to_eigen(H)), true, Propagation::dense_oracle, 0};
  softmax_rows(pred.values);
  return pred;
}

}  // namespace pprgo::oracle
