#pragma once

// Per-node network f(x) = relu(x W1 + b1) W2 + b2, PPR-weighted aggregation
// of its logits, softmax cross-entropy with L2 weight decay, exact gradients
// and Adam. Everything is templated on the arithmetic type: float for
// training, double for gradient checks.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprgo/binary_io.hpp"
#include "pprgo/dataset.hpp"
#include "pprgo/dense.hpp"
#include "pprgo/error.hpp"
#include "pprgo/graph.hpp"
#include "pprgo/random.hpp"

namespace pprgo {

/// CSR feature rows gathered for a set of nodes.
template <typename T>
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::uint64_t> indptr{0};
  std::vector<std::uint32_t> indices;
  std::vector<T> values;

  std::size_t rows() const noexcept { return indptr.size() - 1; }
  std::size_t nnz() const noexcept { return indices.size(); }
};

template <typename T>
SparseRows<T> gather_features(const AttributedGraph& g, std::span<const NodeId> nodes) {
  SparseRows<T> out;
  out.cols = g.d;
  out.indptr.reserve(nodes.size() + 1);
  for (NodeId v : nodes) {
    auto fi = g.feature_indices(v);
    auto fv = g.feature_values(v);
    out.indices.insert(out.indices.end(), fi.begin(), fi.end());
    for (float x : fv) out.values.push_back(static_cast<T>(x));
    out.indptr.push_back(out.indices.size());
  }
  return out;
}

/// Parameters stored contiguously in checkpoint order: W1 (d×h), b1 (h), W2 (h×c), b2 (c).
template <typename T>
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::size_t d, std::size_t h, std::size_t c) : d_(d), h_(h), c_(c), data_(d * h + h + h * c + c, T{0}) {}

  std::size_t d() const noexcept { return d_; }
  std::size_t h() const noexcept { return h_; }
  std::size_t c() const noexcept { return c_; }

  std::span<T> all() noexcept { return data_; }
  std::span<const T> all() const noexcept { return data_; }

  std::span<T> W1() noexcept { return all().subspan(0, d_ * h_); }
  std::span<T> b1() noexcept { return all().subspan(d_ * h_, h_); }
  std::span<T> W2() noexcept { return all().subspan(d_ * h_ + h_, h_ * c_); }
  std::span<T> b2() noexcept { return all().subspan(d_ * h_ + h_ + h_ * c_, c_); }
  std::span<const T> W1() const noexcept { return all().subspan(0, d_ * h_); }
  std::span<const T> b1() const noexcept { return all().subspan(d_ * h_, h_); }
  std::span<const T> W2() const noexcept { return all().subspan(d_ * h_ + h_, h_ * c_); }
  std::span<const T> b2() const noexcept { return all().subspan(d_ * h_ + h_ + h_ * c_, c_); }

  void set_zero() { std::fill(data_.begin(), data_.end(), T{0}); }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out(d_, h_, c_);
    std::transform(data_.begin(), data_.end(), out.all().begin(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const ModelParams&) const = default;

 private:
  std::size_t d_ = 0, h_ = 0, c_ = 0;
  std::vector<T> data_;
};

/// Glorot-uniform weights, zero biases.
template <typename T>
ModelParams<T> init_params(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed) {
  ModelParams<T> p(d, h, c);
  Rng rng(seed, stream::init);
  const double limit1 = std::sqrt(6.0 / static_cast<double>(d + h));
  for (T& w : p.W1()) w = static_cast<T>(rng.uniform(-limit1, limit1));
  const double limit2 = std::sqrt(6.0 / static_cast<double>(h + c));
  for (T& w : p.W2()) w = static_cast<T>(rng.uniform(-limit2, limit2));
  return p;
}

/// Inverted-dropout multipliers: 0 or 1/(1-rate) per input non-zero and per hidden unit.
template <typename T>
struct DropoutMasks {
  std::vector<T> input;
  Matrix<T> hidden;
};

template <typename T>
DropoutMasks<T> make_dropout_masks(double rate, std::size_t input_nnz, std::size_t rows, std::size_t hidden, Rng& rng) {
  DropoutMasks<T> masks{std::vector<T>(input_nnz), Matrix<T>(rows, hidden)};
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (T& m : masks.input) m = rng.uniform() < rate ? T{0} : keep;
  for (T& m : masks.hidden.flat()) m = rng.uniform() < rate ? T{0} : keep;
  return masks;
}

template <typename T>
struct ForwardCache {
  Matrix<T> pre_activation;  // rows × h
  Matrix<T> hidden;          // after relu and dropout
  Matrix<T> logits;          // rows × c
};

namespace detail {

template <typename T>
void check_finite(std::span<const T> values, const char* what) {
  for (T v : values)
    if (!std::isfinite(v)) throw RuntimeError(std::string("non-finite ") + what);
}

}  // namespace detail

/// Logits H for each feature row; masks select training mode. Each output
/// row depends only on its own input row.
template <typename T>
ForwardCache<T> forward_cached(const ModelParams<T>& p, const SparseRows<T>& x, const DropoutMasks<T>* masks) {
  if (x.cols != p.d())
    throw RuntimeError("feature width " + std::to_string(x.cols) + " != model input " + std::to_string(p.d()));
  const std::size_t rows = x.rows(), h = p.h(), c = p.c();
  if (masks != nullptr && (masks->input.size() != x.nnz() || masks->hidden.rows() != rows || masks->hidden.cols() != h))
    throw RuntimeError("dropout mask shape mismatch");
  ForwardCache<T> fc{Matrix<T>(rows, h), Matrix<T>(rows, h), Matrix<T>(rows, c)};
  const auto W1 = p.W1(), b1 = p.b1(), W2 = p.W2(), b2 = p.b2();
  for (std::size_t r = 0; r < rows; ++r) {
    auto pre = fc.pre_activation.row(r);
    std::copy(b1.begin(), b1.end(), pre.begin());
    for (auto e = x.indptr[r]; e < x.indptr[r + 1]; ++e) {
      const T xv = masks != nullptr ? x.values[e] * masks->input[e] : x.values[e];
      if (xv == T{0}) continue;
      const T* w = W1.data() + static_cast<std::size_t>(x.indices[e]) * h;
      for (std::size_t j = 0; j < h; ++j) pre[j] += xv * w[j];
    }
    auto act = fc.hidden.row(r);
    for (std::size_t j = 0; j < h; ++j) {
      act[j] = pre[j] > T{0} ? pre[j] : T{0};
      if (masks != nullptr) act[j] *= masks->hidden(r, j);
    }
    auto out = fc.logits.row(r);
    std::copy(b2.begin(), b2.end(), out.begin());
    for (std::size_t j = 0; j < h; ++j) {
      if (act[j] == T{0}) continue;
      const T* w = W2.data() + j * c;
      for (std::size_t k = 0; k < c; ++k) out[k] += act[j] * w[k];
    }
  }
  detail::check_finite<T>(fc.logits.flat(), "logits");
  return fc;
}

template <typename T>
Matrix<T> forward_local(const ModelParams<T>& p, const SparseRows<T>& x, const DropoutMasks<T>* masks = nullptr) {
  return forward_cached(p, x, masks).logits;
}

/// z = Σ_s weights[s] · H[rows[s]], written to `out` (length c).
template <typename T, typename W>
void aggregate_into(std::span<const W> weights, std::span<const std::uint32_t> rows, const Matrix<T>& H,
                    std::span<T> out) {
  if (weights.size() != rows.size())
    throw RuntimeError("aggregate: " + std::to_string(weights.size()) + " weights for " + std::to_string(rows.size()) +
                       " rows");
  if (out.size() != H.cols()) throw RuntimeError("aggregate: output width mismatch");
  std::fill(out.begin(), out.end(), T{0});
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const T w = static_cast<T>(weights[s]);
    auto h = H.row(rows[s]);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * h[k];
  }
}

/// Pre-softmax PPR-weighted sum of logit rows; H_rows is aligned with weights.
template <typename T, typename W>
std::vector<T> aggregate(std::span<const W> weights, const Matrix<T>& H_rows) {
  if (weights.size() != H_rows.rows())
    throw RuntimeError("aggregate: " + std::to_string(weights.size()) + " weights for " +
                       std::to_string(H_rows.rows()) + " logit rows");
  std::vector<std::uint32_t> rows(weights.size());
  std::iota(rows.begin(), rows.end(), 0U);
  std::vector<T> z(H_rows.cols());
  aggregate_into<T, W>(weights, rows, H_rows, z);
  return z;
}

/// Training batch: rows of the top-k matrix with their neighbor slots
/// pointing into a deduplicated list of nodes whose features are gathered.
struct Batch {
  std::vector<std::uint32_t> rows;            // indices into the top-k matrix
  std::vector<std::uint64_t> row_offsets{0};  // slot range per batch row
  std::vector<std::uint32_t> slot_unique;     // slot -> index into unique_nodes
  std::vector<double> weights;                // PPR weight per slot
  std::vector<NodeId> unique_nodes;
  std::vector<std::uint32_t> labels;          // per batch row

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t slots() const noexcept { return slot_unique.size(); }
};

template <typename T>
struct LossAndGrad {
  T loss = 0;
  ModelParams<T> grad;
};

/// Mean softmax cross-entropy of the aggregated logits plus
/// weight_decay/2 · (|W1|² + |W2|²), with its exact gradient. PPR weights
/// are constants. `features` must be gathered for batch.unique_nodes.
template <typename T>
LossAndGrad<T> loss_and_grad(const ModelParams<T>& p, const Batch& batch, const SparseRows<T>& features,
                             double weight_decay, const DropoutMasks<T>* masks = nullptr) {
  const std::size_t b = batch.size(), h = p.h(), c = p.c();
  if (b == 0) throw RuntimeError("empty batch");
  if (features.rows() != batch.unique_nodes.size()) throw RuntimeError("features not gathered for batch nodes");
  const auto fc = forward_cached(p, features, masks);

  Matrix<T> d_logits(features.rows(), c);
  std::vector<T> z(c);
  T loss = 0;
  const T inv_b = T{1} / static_cast<T>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto first = batch.row_offsets[i], last = batch.row_offsets[i + 1];
    if (first == last) throw RuntimeError("batch row without neighbors");
    const std::uint32_t y = batch.labels[i];
    if (y >= c) throw RuntimeError("label " + std::to_string(y) + " out of range");
    const std::span<const double> w(batch.weights.data() + first, last - first);
    const std::span<const std::uint32_t> slots(batch.slot_unique.data() + first, last - first);
    aggregate_into<T, double>(w, slots, fc.logits, z);
    const T mx = *std::max_element(z.begin(), z.end());
    T total = 0;
    for (std::size_t k = 0; k < c; ++k) total += std::exp(z[k] - mx);
    loss += (mx + std::log(total) - z[y]) * inv_b;
    // dz = (softmax(z) - onehot(y)) / b, scattered back through the weights.
    for (std::size_t k = 0; k < c; ++k) z[k] = (std::exp(z[k] - mx) / total - (k == y ? T{1} : T{0})) * inv_b;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      auto dst = d_logits.row(slots[s]);
      const T ws = static_cast<T>(w[s]);
      for (std::size_t k = 0; k < c; ++k) dst[k] += ws * z[k];
    }
  }

  LossAndGrad<T> out{0, ModelParams<T>(p.d(), h, c)};
  auto gW1 = out.grad.W1(), gb1 = out.grad.b1(), gW2 = out.grad.W2(), gb2 = out.grad.b2();
  const auto W2 = p.W2();
  std::vector<T> d_pre(h);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto dl = d_logits.row(r);
    auto act = fc.hidden.row(r);
    for (std::size_t k = 0; k < c; ++k) gb2[k] += dl[k];
    for (std::size_t j = 0; j < h; ++j) {
      T back = 0;
      for (std::size_t k = 0; k < c; ++k) {
        back += dl[k] * W2[j * c + k];
        gW2[j * c + k] += act[j] * dl[k];
      }
      T gate = fc.pre_activation(r, j) > T{0} ? T{1} : T{0};
      if (masks != nullptr) gate *= masks->hidden(r, j);
      d_pre[j] = back * gate;
      gb1[j] += d_pre[j];
    }
    for (auto e = features.indptr[r]; e < features.indptr[r + 1]; ++e) {
      const T xv = masks != nullptr ? features.values[e] * masks->input[e] : features.values[e];
      if (xv == T{0}) continue;
      T* g = gW1.data() + static_cast<std::size_t>(features.indices[e]) * h;
      for (std::size_t j = 0; j < h; ++j) g[j] += xv * d_pre[j];
    }
  }

  if (weight_decay != 0.0) {
    const T wd = static_cast<T>(weight_decay);
    T norm = 0;
    for (auto [w, g] : {std::pair{p.W1(), gW1}, std::pair{p.W2(), gW2}})
      for (std::size_t i = 0; i < w.size(); ++i) {
        norm += w[i] * w[i];
        g[i] += wd * w[i];
      }
    loss += wd * norm / T{2};
  }
  if (!std::isfinite(loss)) throw RuntimeError("non-finite loss");
  out.loss = loss;
  return out;
}

template <typename T>
struct AdamState {
  ModelParams<T> first_moment;
  ModelParams<T> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const ModelParams<T>& shape)
      : first_moment(shape.d(), shape.h(), shape.c()), second_moment(shape.d(), shape.h(), shape.c()) {}
};

/// Bias-corrected Adam update of every parameter.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, double learning_rate) {
  if (grads.all().size() != params.all().size() || state.first_moment.all().size() != params.all().size())
    throw RuntimeError("adam_step: shape mismatch");
  ++state.step;
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
  const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.step)));
  const T lr = static_cast<T>(learning_rate), eps = static_cast<T>(state.epsilon);
  auto theta = params.all();
  auto g = grads.all();
  auto m = state.first_moment.all();
  auto v = state.second_moment.all();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (T{1} - b1) * g[i];
    v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
    const T update = lr * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + eps);
    if (!std::isfinite(update)) throw RuntimeError("non-finite Adam update");
    theta[i] -= update;
  }
}

struct TrainConfig {
  double learning_rate = 0.005;
  double dropout_rate = 0.1;
  double weight_decay = 1e-4;
  std::uint32_t batch_size = 512;
  std::uint32_t epochs = 200;
  std::uint32_t hidden = 32;
  std::uint64_t seed = 0;
  bool double_precision = false;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (hidden < 1) throw ConfigError("hidden must be at least 1");
  }
};

// Checkpoint: model.json (shapes, hyperparameters, free-form metadata) and
// params.f32 holding W1, b1, W2, b2 back to back.

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const ModelParams<T>& params, nlohmann::json metadata) {
  std::filesystem::create_directories(dir);
  metadata["d"] = params.d();
  metadata["h"] = params.h();
  metadata["c"] = params.c();
  metadata["dtype"] = "f32";
  metadata["order"] = {"W1", "b1", "W2", "b2"};
  detail::write_json_file(dir / "model.json", metadata);
  const auto flat = params.all();
  std::vector<float> values(flat.begin(), flat.end());
  io::write_array(dir / "params.f32", values);
}

struct Checkpoint {
  ModelParams<float> params;
  nlohmann::json metadata;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint cp;
  cp.metadata = detail::read_json_file(dir / "model.json");
  const auto d = detail::meta_field(cp.metadata, "d");
  const auto h = detail::meta_field(cp.metadata, "h");
  const auto c = detail::meta_field(cp.metadata, "c");
  cp.params = ModelParams<float>(d, h, c);
  const auto values = io::read_array<float>(dir / "params.f32", cp.params.all().size());
  std::copy(values.begin(), values.end(), cp.params.all().begin());
  return cp;
}

}  // namespace pprgo
