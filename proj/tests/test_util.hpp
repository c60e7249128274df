#pragma once

// Helpers shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hifanet/hifanet.hpp"

namespace testutil {

using hifanet::HiFANetConfig;
using hifanet::ObservationTensor;
using hifanet::num::Shape;
using hifanet::num::Tensor;

inline Tensor uniform_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

/// Small network used wherever every coordinate of every parameter matters.
inline HiFANetConfig tiny_config() {
  HiFANetConfig c;
  c.m = 3;
  c.n = 2;
  c.k = 3;
  c.d = 16;
  c.heads = 2;
  c.d1 = 4;
  c.d2 = 4;
  c.class_count = 4;
  c.ffn_width = 16;
  c.prior_width = 12;
  c.head_width = 20;
  return c;
}

inline ObservationTensor random_observation(const HiFANetConfig& cfg, std::mt19937_64& rng) {
  ObservationTensor obs(cfg.m, cfg.n, cfg.k, cfg.d);
  std::normal_distribution<float> feat(0.0f, 1.0f);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(cfg.class_count) - 1);
  std::uniform_int_distribution<std::uint32_t> frame(0, 99);
  for (float& f : obs.features) f = feat(rng);
  for (double& c : obs.coords) c = coord(rng);
  for (auto& l : obs.labels) l = static_cast<std::uint16_t>(label(rng));
  for (auto& f : obs.frame_ids) f = frame(rng);
  for (auto& l : obs.patch_labels) l = static_cast<std::uint16_t>(label(rng));
  return obs;
}

inline std::vector<ObservationTensor> random_groups(const HiFANetConfig& cfg, std::size_t count,
                                                    std::mt19937_64& rng) {
  std::vector<ObservationTensor> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_observation(cfg, rng));
  return out;
}

/// Copy of `obs` with the frame axis of every point reordered by `perm`.
inline ObservationTensor permute_frames(const ObservationTensor& obs, const std::vector<std::size_t>& perm) {
  ObservationTensor out = obs;
  const std::size_t patch = obs.k * obs.k * obs.d;
  for (std::size_t p = 0; p < obs.m; ++p)
    for (std::size_t f = 0; f < obs.n; ++f) {
      std::copy_n(obs.patch_features(p, perm[f]), patch, out.patch_features(p, f));
      std::copy_n(obs.patch_label_data(p, perm[f]), obs.k * obs.k, out.patch_label_data(p, f));
      out.frame_ids[p * obs.n + f] = obs.frame_ids[p * obs.n + perm[f]];
    }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Plain-loop dense layer y = x W + b over rows of width `in`.
inline std::vector<double> ref_dense(const std::vector<double>& x, std::size_t in, const Tensor& w, const Tensor& b) {
  const std::size_t out = w.dim(1), rows = x.size() / in;
  std::vector<double> y(rows * out);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w[i * out + o];
      y[r * out + o] = acc;
    }
  return y;
}

inline std::vector<double> ref_relu(std::vector<double> x) {
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

}  // namespace testutil
