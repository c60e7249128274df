#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hifanet/config.hpp"
#include "hifanet/errors.hpp"
#include "hifanet/tensor.hpp"

namespace hifanet {

/// One k x k patch: per-pixel feature vectors and 2D predicted labels.
struct PatchObservation {
  std::size_t k = 0, d = 0;
  std::vector<float> features;        // k*k*d
  std::vector<std::uint16_t> labels;  // k*k
};

/// Everything the networks see for one group of M points, each observed in N
/// frames through a k x k patch of d-dimensional features.
struct ObservationTensor {
  std::size_t m = 0, n = 0, k = 0, d = 0;
  std::vector<float> features;            // M*N*k*k*d
  std::vector<double> coords;             // M*3, meters
  std::vector<std::uint16_t> labels;      // M, ground truth
  std::vector<std::uint32_t> frame_ids;   // M*N
  std::vector<std::uint16_t> patch_labels;  // M*N*k*k

  ObservationTensor() = default;
  ObservationTensor(std::size_t m_, std::size_t n_, std::size_t k_, std::size_t d_)
      : m(m_), n(n_), k(k_), d(d_),
        features(m_ * n_ * k_ * k_ * d_),
        coords(m_ * 3),
        labels(m_),
        frame_ids(m_ * n_),
        patch_labels(m_ * n_ * k_ * k_) {}

  std::size_t patch_pixels() const { return k * k; }

  float* patch_features(std::size_t point, std::size_t frame) {
    return features.data() + (point * n + frame) * k * k * d;
  }
  const float* patch_features(std::size_t point, std::size_t frame) const {
    return features.data() + (point * n + frame) * k * k * d;
  }
  std::uint16_t* patch_label_data(std::size_t point, std::size_t frame) {
    return patch_labels.data() + (point * n + frame) * k * k;
  }
  const std::uint16_t* patch_label_data(std::size_t point, std::size_t frame) const {
    return patch_labels.data() + (point * n + frame) * k * k;
  }

  PatchObservation patch(std::size_t point, std::size_t frame) const {
    PatchObservation p{k, d, {}, {}};
    const float* f = patch_features(point, frame);
    p.features.assign(f, f + k * k * d);
    const std::uint16_t* l = patch_label_data(point, frame);
    p.labels.assign(l, l + k * k);
    return p;
  }

  bool consistent() const {
    return features.size() == m * n * k * k * d && coords.size() == m * 3 && labels.size() == m &&
           frame_ids.size() == m * n && patch_labels.size() == m * n * k * k &&
           std::all_of(coords.begin(), coords.end(), [](double c) { return std::isfinite(c); });
  }

  bool operator==(const ObservationTensor&) const = default;
};

inline void check_against(const ObservationTensor& obs, const HiFANetConfig& cfg) {
  if (!obs.consistent()) throw ShapeMismatch("observation tensor buffers are inconsistent");
  if (obs.m != cfg.m || obs.n != cfg.n || obs.d != cfg.d)
    throw ShapeMismatch("observation dims (M=" + std::to_string(obs.m) + ", N=" + std::to_string(obs.n) +
                        ", d=" + std::to_string(obs.d) + ") do not match the model config");
  for (auto l : obs.labels)
    if (l >= cfg.class_count) throw LabelOutOfRange("ground-truth label " + std::to_string(l) + " out of range");
}

/// Groups stacked into dense model inputs.
struct Batch {
  num::Tensor features;      // [G, M, N, k*k, d]
  num::Tensor coords;        // [G, M, 3]
  std::vector<int> labels;   // G*M
  std::size_t groups = 0;
};

inline Batch make_batch(std::span<const ObservationTensor* const> groups) {
  if (groups.empty()) throw EmptyDataset("cannot batch zero groups");
  const ObservationTensor& first = *groups.front();
  const std::size_t G = groups.size(), M = first.m, N = first.n, P = first.k * first.k, D = first.d;
  Batch b;
  b.groups = G;
  b.features = num::Tensor(num::Shape{G, M, N, P, D});
  b.coords = num::Tensor(num::Shape{G, M, 3});
  b.labels.reserve(G * M);
  double* f = b.features.data();
  double* c = b.coords.data();
  for (const ObservationTensor* g : groups) {
    if (g->m != M || g->n != N || g->k != first.k || g->d != D || !g->consistent())
      throw ShapeMismatch("groups in a batch must share dimensions");
    f = std::copy(g->features.begin(), g->features.end(), f);
    c = std::copy(g->coords.begin(), g->coords.end(), c);
    for (auto l : g->labels) b.labels.push_back(l);
  }
  return b;
}

inline Batch make_batch(std::span<const ObservationTensor> groups) {
  std::vector<const ObservationTensor*> ptrs;
  ptrs.reserve(groups.size());
  for (const auto& g : groups) ptrs.push_back(&g);
  return make_batch(std::span<const ObservationTensor* const>(ptrs));
}

}  // namespace hifanet
