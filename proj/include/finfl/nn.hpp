//
// Copyright 2026 The finfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// One-hidden-layer ReLU MLP with softmax cross-entropy, trained by plain
// mini-batch SGD, with exact per-example gradients.
//
// Parameter flattening order (used by GradientVector and checkpoints):
//   w1  input_dim x hidden_dim, row-major (w1[i * hidden_dim + j])
//   b1  hidden_dim
//   w2  hidden_dim x class_count, row-major (w2[j * class_count + c])
//   b2  class_count
//
// Checkpoint format (all integers and floats little-endian):
//   bytes 0..7   ASCII "FINFLMLP"
//   u32          format version (1)
//   u32          input_dim
//   u32          hidden_dim
//   u32          class_count
//   f64 x N      parameters in flattening order, N = parameter_count()

#ifndef FINFL_NN_HPP_
#define FINFL_NN_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finfl/rng.hpp"

namespace finfl {

struct LabeledExample {
  std::vector<double> features;
  std::size_t label = 0;
};

struct GradientVector {
  std::vector<double> values;
};

class MlpModel {
 public:
  MlpModel() = default;

  // Zero-initialized model.
  MlpModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count)
      : input_dim_(input_dim),
        hidden_dim_(hidden_dim),
        class_count_(class_count),
        params_(input_dim * hidden_dim + hidden_dim + hidden_dim * class_count + class_count,
                0.0) {
    if (input_dim == 0 || hidden_dim == 0 || class_count < 2) {
      throw std::invalid_argument("MlpModel: need input_dim, hidden_dim >= 1 and >= 2 classes");
    }
  }

  // Glorot-uniform weights, zero biases, drawn from `rng`.
  static MlpModel glorot(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count,
                         Rng& rng) {
    MlpModel m(input_dim, hidden_dim, class_count);
    const double r1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
    const double r2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + class_count));
    std::uniform_real_distribution<double> u1(-r1, r1);
    std::uniform_real_distribution<double> u2(-r2, r2);
    for (double& w : m.w1()) w = u1(rng);
    for (double& w : m.w2()) w = u2(rng);
    return m;
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> w1() { return params().subspan(w1_offset(), input_dim_ * hidden_dim_); }
  std::span<double> b1() { return params().subspan(b1_offset(), hidden_dim_); }
  std::span<double> w2() { return params().subspan(w2_offset(), hidden_dim_ * class_count_); }
  std::span<double> b2() { return params().subspan(b2_offset(), class_count_); }
  std::span<const double> w1() const { return params().subspan(w1_offset(), input_dim_ * hidden_dim_); }
  std::span<const double> b1() const { return params().subspan(b1_offset(), hidden_dim_); }
  std::span<const double> w2() const { return params().subspan(w2_offset(), hidden_dim_ * class_count_); }
  std::span<const double> b2() const { return params().subspan(b2_offset(), class_count_); }

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return input_dim_ * hidden_dim_; }
  std::size_t w2_offset() const { return b1_offset() + hidden_dim_; }
  std::size_t b2_offset() const { return w2_offset() + hidden_dim_ * class_count_; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t class_count_ = 0;
  std::vector<double> params_;
};

namespace internal {

inline void check_example(const MlpModel& model, const LabeledExample& example) {
  if (example.features.size() != model.input_dim()) {
    throw std::invalid_argument("feature length " + std::to_string(example.features.size()) +
                                " does not match model input_dim " +
                                std::to_string(model.input_dim()));
  }
  if (example.label >= model.class_count()) {
    throw std::invalid_argument("label " + std::to_string(example.label) +
                                " out of range for " + std::to_string(model.class_count()) +
                                " classes");
  }
}

// Activations of one forward pass, kept for the backward pass.
struct ForwardState {
  std::vector<double> pre;     // hidden pre-activations
  std::vector<double> hidden;  // ReLU(pre)
  std::vector<double> probs;   // softmax(logits)
  double loss = 0.0;
};

inline void forward(const MlpModel& model, const LabeledExample& example, ForwardState& s) {
  const std::size_t d = model.input_dim();
  const std::size_t h = model.hidden_dim();
  const std::size_t k = model.class_count();
  const auto w1 = model.w1();
  const auto b1 = model.b1();
  const auto w2 = model.w2();
  const auto b2 = model.b2();

  s.pre.assign(b1.begin(), b1.end());
  for (std::size_t i = 0; i < d; ++i) {
    const double x = example.features[i];
    if (x == 0.0) continue;
    const double* row = w1.data() + i * h;
    for (std::size_t j = 0; j < h; ++j) s.pre[j] += x * row[j];
  }
  s.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) s.hidden[j] = s.pre[j] > 0.0 ? s.pre[j] : 0.0;

  s.probs.assign(b2.begin(), b2.end());
  for (std::size_t j = 0; j < h; ++j) {
    const double a = s.hidden[j];
    if (a == 0.0) continue;
    const double* row = w2.data() + j * k;
    for (std::size_t c = 0; c < k; ++c) s.probs[c] += a * row[c];
  }
  // Stable log-softmax.
  const double max_logit = *std::max_element(s.probs.begin(), s.probs.end());
  const double true_logit_shifted = s.probs[example.label] - max_logit;
  double z = 0.0;
  for (double& v : s.probs) {
    v = std::exp(v - max_logit);
    z += v;
  }
  s.loss = std::log(z) - true_logit_shifted;
  for (double& v : s.probs) v /= z;
}

// Adds scale * grad(loss) into `out` (length parameter_count()).
inline void accumulate_gradient(const MlpModel& model, const LabeledExample& example,
                                const ForwardState& s, double scale, std::span<double> out) {
  const std::size_t d = model.input_dim();
  const std::size_t h = model.hidden_dim();
  const std::size_t k = model.class_count();
  const auto w2 = model.w2();

  double* gw1 = out.data() + model.w1_offset();
  double* gb1 = out.data() + model.b1_offset();
  double* gw2 = out.data() + model.w2_offset();
  double* gb2 = out.data() + model.b2_offset();

  std::vector<double> dlogits(s.probs);
  dlogits[example.label] -= 1.0;
  for (std::size_t c = 0; c < k; ++c) dlogits[c] *= scale;

  std::vector<double> dpre(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    if (s.pre[j] <= 0.0) continue;
    const double a = s.hidden[j];
    const double* wrow = w2.data() + j * k;
    double* grow = gw2 + j * k;
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      grow[c] += a * dlogits[c];
      acc += wrow[c] * dlogits[c];
    }
    dpre[j] = acc;
  }
  for (std::size_t c = 0; c < k; ++c) gb2[c] += dlogits[c];
  for (std::size_t j = 0; j < h; ++j) gb1[j] += dpre[j];
  for (std::size_t i = 0; i < d; ++i) {
    const double x = example.features[i];
    if (x == 0.0) continue;
    double* grow = gw1 + i * h;
    for (std::size_t j = 0; j < h; ++j) grow[j] += x * dpre[j];
  }
}

}  // namespace internal

// Softmax cross-entropy at the true label.
inline double forward_loss(const MlpModel& model, const LabeledExample& example) {
  internal::check_example(model, example);
  internal::ForwardState s;
  internal::forward(model, example, s);
  return s.loss;
}

inline std::size_t predict(const MlpModel& model, const LabeledExample& example) {
  internal::check_example(model, example);
  internal::ForwardState s;
  internal::forward(model, example, s);
  return static_cast<std::size_t>(std::max_element(s.probs.begin(), s.probs.end()) -
                                  s.probs.begin());
}

inline double accuracy(const MlpModel& model, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& e : data) hits += predict(model, e) == e.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

inline GradientVector per_example_grad(const MlpModel& model, const LabeledExample& example) {
  internal::check_example(model, example);
  internal::ForwardState s;
  internal::forward(model, example, s);
  GradientVector g{std::vector<double>(model.parameter_count(), 0.0)};
  internal::accumulate_gradient(model, example, s, 1.0, g.values);
  return g;
}

inline double dot(const GradientVector& a, const GradientVector& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("dot: gradient lengths differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
  return acc;
}

inline double norm(const GradientVector& g) { return std::sqrt(dot(g, g)); }

inline double cosine(const GradientVector& a, const GradientVector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine: zero-norm gradient");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// Throws if any parameter is NaN or infinite.
inline void require_finite(const MlpModel& model) {
  for (double v : model.params()) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite model parameter after update");
  }
}

// One step of size `eta` along the mean gradient of `batch`.
inline void sgd_step(MlpModel& model, std::span<const LabeledExample> data,
                     std::span<const std::size_t> batch, double eta) {
  std::vector<double> grad(model.parameter_count(), 0.0);
  internal::ForwardState s;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    internal::check_example(model, data[idx]);
    internal::forward(model, data[idx], s);
    internal::accumulate_gradient(model, data[idx], s, scale, grad);
  }
  auto p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= eta * grad[i];
  require_finite(model);
}

// One epoch: shuffle with `rng`, then one averaged-gradient step per batch of
// `batch_size` (the last batch may be short).
inline MlpModel sgd_epoch(MlpModel model, std::span<const LabeledExample> data, double eta,
                          std::size_t batch_size, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("sgd_epoch: empty data");
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("sgd_epoch: eta must be finite and non-negative");
  }
  if (batch_size == 0 || batch_size > data.size()) {
    throw std::invalid_argument("sgd_epoch: batch_size must be in [1, |data|]");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    sgd_step(model, data, std::span<const std::size_t>(order).subspan(start, end - start), eta);
  }
  return model;
}

namespace internal {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

constexpr char kCheckpointMagic[8] = {'F', 'I', 'N', 'F', 'L', 'M', 'L', 'P'};
constexpr std::size_t kCheckpointHeader = 8 + 4 * 4;

}  // namespace internal

inline std::vector<std::uint8_t> serialize_checkpoint(const MlpModel& model) {
  std::vector<std::uint8_t> out(internal::kCheckpointMagic, internal::kCheckpointMagic + 8);
  internal::put_u32(out, 1);
  internal::put_u32(out, static_cast<std::uint32_t>(model.input_dim()));
  internal::put_u32(out, static_cast<std::uint32_t>(model.hidden_dim()));
  internal::put_u32(out, static_cast<std::uint32_t>(model.class_count()));
  for (double v : model.params()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

inline MlpModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < internal::kCheckpointHeader ||
      std::memcmp(bytes.data(), internal::kCheckpointMagic, 8) != 0) {
    throw std::runtime_error("not a finfl MLP checkpoint");
  }
  if (internal::get_u32(bytes, 8) != 1) throw std::runtime_error("unsupported checkpoint version");
  MlpModel model(internal::get_u32(bytes, 12), internal::get_u32(bytes, 16),
                 internal::get_u32(bytes, 20));
  if (bytes.size() != internal::kCheckpointHeader + 8 * model.parameter_count()) {
    throw std::runtime_error("checkpoint payload size does not match its header");
  }
  auto p = model.params();
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::uint64_t bits = 0;
    const std::size_t at = internal::kCheckpointHeader + 8 * k;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[at + i]) << (8 * i);
    p[k] = std::bit_cast<double>(bits);
  }
  return model;
}

}  // namespace finfl

#endif  // FINFL_NN_HPP_
