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

// Datasets: strict IDX (MNIST-format) parsing, synthetic Gaussian blobs,
// label-noise injection and the paired data orderings used by the
// consistency experiment.

#ifndef FINFL_DATA_HPP_
#define FINFL_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "finfl/nn.hpp"
#include "finfl/rng.hpp"

namespace finfl {

enum class Provenance { kIdxFile, kSynthetic };

struct Dataset {
  std::vector<LabeledExample> examples;
  std::size_t class_count = 0;
  Provenance provenance = Provenance::kSynthetic;
  // Sorted indices whose labels were flipped by inject_label_noise.
  std::optional<std::vector<std::size_t>> noise_mask;

  std::size_t size() const { return examples.size(); }
  std::size_t input_dim() const { return examples.empty() ? 0 : examples.front().features.size(); }
};

class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace internal {

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  if (bytes.size() < at + 4) throw IdxError("IDX header truncated");
  return (static_cast<std::uint32_t>(bytes[at]) << 24) |
         (static_cast<std::uint32_t>(bytes[at + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[at + 2]) << 8) | static_cast<std::uint32_t>(bytes[at + 3]);
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void expect_magic(std::span<const std::uint8_t> bytes, std::uint32_t want) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != want) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "IDX magic mismatch: got 0x%08x, want 0x%08x", magic, want);
    throw IdxError(buf);
  }
}

inline void expect_payload(std::span<const std::uint8_t> bytes, std::size_t header,
                           std::size_t payload) {
  if (bytes.size() < header + payload) throw IdxError("IDX payload truncated");
  if (bytes.size() > header + payload) throw IdxError("IDX file has trailing bytes");
}

}  // namespace internal

// Images scaled to [0, 1] by /255, one row-major vector per image.
inline std::vector<std::vector<double>> parse_idx_images(std::span<const std::uint8_t> bytes) {
  internal::expect_magic(bytes, kIdxImageMagic);
  const std::uint64_t count = internal::read_be32(bytes, 4);
  const std::uint64_t rows = internal::read_be32(bytes, 8);
  const std::uint64_t cols = internal::read_be32(bytes, 12);
  const std::uint64_t pixels = rows * cols;  // < 2^64, cannot overflow
  if (pixels != 0 && count > std::numeric_limits<std::size_t>::max() / pixels) {
    throw IdxError("IDX dimensions overflow");
  }
  const std::uint64_t total = count * pixels;
  if (total > std::numeric_limits<std::size_t>::max() - 16) throw IdxError("IDX dimensions overflow");
  internal::expect_payload(bytes, 16, static_cast<std::size_t>(total));
  std::vector<std::vector<double>> images(count, std::vector<double>(pixels));
  const std::uint8_t* p = bytes.data() + 16;
  for (auto& img : images) {
    for (double& v : img) v = static_cast<double>(*p++) / 255.0;
  }
  return images;
}

inline std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  internal::expect_magic(bytes, kIdxLabelMagic);
  const std::uint32_t count = internal::read_be32(bytes, 4);
  internal::expect_payload(bytes, 8, count);
  return {bytes.begin() + 8, bytes.end()};
}

// Inverse of parse_idx_images for images whose pixels are multiples of 1/255.
inline std::vector<std::uint8_t> write_idx_images(const std::vector<std::vector<double>>& images,
                                                  std::uint32_t rows, std::uint32_t cols) {
  std::vector<std::uint8_t> out;
  internal::write_be32(out, kIdxImageMagic);
  internal::write_be32(out, static_cast<std::uint32_t>(images.size()));
  internal::write_be32(out, rows);
  internal::write_be32(out, cols);
  for (const auto& img : images) {
    if (img.size() != static_cast<std::size_t>(rows) * cols) {
      throw std::invalid_argument("write_idx_images: image size does not match rows * cols");
    }
    for (double v : img) {
      out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  }
  return out;
}

inline std::vector<std::uint8_t> write_idx_labels(std::span<const std::size_t> labels) {
  std::vector<std::uint8_t> out;
  internal::write_be32(out, kIdxLabelMagic);
  internal::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (std::size_t l : labels) {
    if (l > 255) throw std::invalid_argument("write_idx_labels: label does not fit in a byte");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

// Pairs parsed images with labels. class_count is max label + 1 unless given.
inline Dataset dataset_from_idx(std::span<const std::uint8_t> image_bytes,
                                std::span<const std::uint8_t> label_bytes,
                                std::size_t class_count = 0) {
  auto images = parse_idx_images(image_bytes);
  auto labels = parse_idx_labels(label_bytes);
  if (images.size() != labels.size()) {
    throw IdxError("IDX image count " + std::to_string(images.size()) +
                   " does not match label count " + std::to_string(labels.size()));
  }
  Dataset ds;
  ds.provenance = Provenance::kIdxFile;
  std::size_t max_label = 0;
  for (std::size_t l : labels) max_label = std::max(max_label, l);
  ds.class_count = class_count == 0 ? max_label + 1 : class_count;
  if (!labels.empty() && max_label >= ds.class_count) {
    throw IdxError("IDX label out of range for class_count");
  }
  ds.examples.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    ds.examples.push_back({std::move(images[i]), labels[i]});
  }
  return ds;
}

// Restriction of `data` to `indices`, in that order. Noise masks are remapped.
inline Dataset select(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.class_count = data.class_count;
  out.provenance = data.provenance;
  std::vector<std::size_t> mask;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= data.size()) throw std::out_of_range("select: index out of range");
    out.examples.push_back(data.examples[i]);
    if (data.noise_mask &&
        std::binary_search(data.noise_mask->begin(), data.noise_mask->end(), i)) {
      mask.push_back(k);
    }
  }
  if (data.noise_mask) {
    std::sort(mask.begin(), mask.end());
    out.noise_mask = std::move(mask);
  }
  return out;
}

// Flips ceil(fraction * n) distinct labels, each to a uniformly random
// different class.
inline Dataset inject_label_noise(Dataset data, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("inject_label_noise: fraction must lie in (0, 1)");
  }
  if (data.class_count < 2) {
    throw std::invalid_argument("inject_label_noise: need at least two classes");
  }
  const std::size_t n = data.size();
  const auto flips = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(n), std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `flips` entries are a uniform sample.
  for (std::size_t i = 0; i < flips; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::size_t> mask(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(flips));
  std::uniform_int_distribution<std::size_t> other(1, data.class_count - 1);
  for (std::size_t i : mask) {
    auto& label = data.examples[i].label;
    label = (label + other(rng)) % data.class_count;
  }
  std::sort(mask.begin(), mask.end());
  data.noise_mask = std::move(mask);
  return data;
}

// Isotropic unit-variance Gaussian clusters. With class_count <= dim the
// means are separation/sqrt(2) * e_c (pairwise distance `separation`);
// otherwise they sit on the first axis `separation` apart. Every feature is
// then min-max scaled into [0, 1] over the whole dataset. Examples are
// interleaved by class: index i has class i % class_count.
inline Dataset make_blobs(std::size_t class_count, std::size_t per_class, std::size_t dim,
                          double separation, Rng& rng) {
  if (class_count == 0 || dim == 0 || !(separation > 0.0)) {
    throw std::invalid_argument("make_blobs: class_count, dim and separation must be positive");
  }
  Dataset ds;
  ds.class_count = class_count;
  ds.provenance = Provenance::kSynthetic;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t k = 0; k < per_class; ++k) {
    for (std::size_t c = 0; c < class_count; ++c) {
      LabeledExample e;
      e.label = c;
      e.features.resize(dim);
      for (double& v : e.features) v = noise(rng);
      if (class_count <= dim) {
        e.features[c] += separation / std::sqrt(2.0);
      } else {
        e.features[0] += separation * static_cast<double>(c);
      }
      ds.examples.push_back(std::move(e));
    }
  }
  for (std::size_t f = 0; f < dim && !ds.examples.empty(); ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& e : ds.examples) {
      lo = std::min(lo, e.features[f]);
      hi = std::max(hi, e.features[f]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& e : ds.examples) e.features[f] = (e.features[f] - lo) / span;
  }
  return ds;
}

// Two orderings of the dataset that differ only by swapping the first two
// examples of `class_label`.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffle_config_pair(
    const Dataset& data, std::size_t class_label) {
  std::vector<std::size_t> a(data.size());
  std::iota(a.begin(), a.end(), std::size_t{0});
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < data.size() && hits.size() < 2; ++i) {
    if (data.examples[i].label == class_label) hits.push_back(i);
  }
  if (hits.size() < 2) {
    throw std::invalid_argument("shuffle_config_pair: fewer than two examples of class " +
                                std::to_string(class_label));
  }
  std::vector<std::size_t> b = a;
  std::swap(b[hits[0]], b[hits[1]]);
  return {std::move(a), std::move(b)};
}

}  // namespace finfl

#endif  // FINFL_DATA_HPP_
