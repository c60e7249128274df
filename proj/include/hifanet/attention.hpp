#pragma once

// The three hierarchical attention blocks, the structural-prior encoder and
// the classification head.
//
// Parameter names are "<block>.<layer>.weight" / "<block>.<layer>.bias" with
// weights stored input-major ([in, out]) so a layer is y = x W + b.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hifanet/autodiff.hpp"
#include "hifanet/config.hpp"
#include "hifanet/observation.hpp"

namespace hifanet::model {

using num::ParamStore;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Var;

/// Optional record of intermediate activations and attention weights.
struct ForwardTrace {
  std::map<std::string, Tensor> attention_weights;  // block -> [B, H, Lq, Lk]
  std::optional<Tensor> patch_out, instance_out, interpoint_out;
};

inline void add_dense(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                      bool with_bias = true) {
  store.add(name + ".weight", Tensor(Shape{in, out}));
  if (with_bias) store.add(name + ".bias", Tensor(Shape{out}));
}

/// y = x W (+ b when the layer has a bias).
inline Var dense(Tape& tape, ParamStore& store, const std::string& name, Var x) {
  Var weight = tape.param(store, name + ".weight");
  const std::string bias = name + ".bias";
  if (store.contains(bias)) return num::linear(x, weight, tape.param(store, bias));
  return num::linear(x, weight, tape.constant(Tensor(Shape{weight.shape()[1]})));
}

/// linear -> relu -> linear
inline Var feed_forward(Tape& tape, ParamStore& store, const std::string& block, Var x) {
  return dense(tape, store, block + ".ffn2", num::relu(dense(tape, store, block + ".ffn1", x)));
}

// Key projections have no bias: a key bias adds the same q.b to every logit
// of a query and cancels in the softmax, so it could never be trained.
inline void add_attention_block(ParamStore& store, const std::string& block, std::size_t d, std::size_t key_width,
                                std::size_t ffn_width) {
  add_dense(store, block + ".key", d, key_width, false);
  add_dense(store, block + ".query", d, key_width);
  add_dense(store, block + ".value", d, d);
  add_dense(store, block + ".ffn1", d, ffn_width);
  add_dense(store, block + ".ffn2", ffn_width, d);
}

inline void add_patch_attention(ParamStore& store, const HiFANetConfig& cfg) {
  add_attention_block(store, "patch", cfg.d, cfg.heads * cfg.d1, cfg.ffn_width);
}
inline void add_instance_attention(ParamStore& store, const HiFANetConfig& cfg) {
  add_attention_block(store, "instance", cfg.d, cfg.heads * cfg.d1, cfg.ffn_width);
}
inline void add_interpoint_attention(ParamStore& store, const HiFANetConfig& cfg) {
  add_attention_block(store, "interpoint", cfg.d, cfg.heads * cfg.d2, cfg.ffn_width);
}
inline void add_structural_prior(ParamStore& store, const HiFANetConfig& cfg) {
  add_dense(store, "prior.fc1", 3, cfg.prior_width);
  // No bias on the last layer: it would shift every key row alike (see above).
  add_dense(store, "prior.fc2", cfg.prior_width, cfg.heads * cfg.d2, false);
}
inline void add_classifier(ParamStore& store, const HiFANetConfig& cfg) {
  add_dense(store, "head.fc1", cfg.d, cfg.head_width);
  add_dense(store, "head.fc2", cfg.head_width, cfg.head_width);
  add_dense(store, "head.fc3", cfg.head_width, cfg.class_count);
}

/// Glorot-uniform weights, zero biases. Parameters are visited in name order
/// so the result depends only on the seed and the set of names.
inline void initialize(ParamStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : store) {
    const bool is_weight = name.size() >= 7 && name.compare(name.size() - 7, 7, ".weight") == 0;
    if (!is_weight || t.rank() != 2) {
      std::fill(t.values().begin(), t.values().end(), 0.0);
      continue;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(t.dim(0) + t.dim(1)));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& v : t.values()) v = dist(rng);
  }
}

inline std::size_t count_parameters(const ParamStore& store) {
  std::size_t total = 0;
  for (const auto& [_, t] : store) total += t.size();
  return total;
}

/// Element counts grouped by block (the text before the first '.').
inline std::map<std::string, std::size_t> parameter_breakdown(const ParamStore& store) {
  std::map<std::string, std::size_t> out;
  for (const auto& [name, t] : store) out[name.substr(0, name.find('.'))] += t.size();
  return out;
}

namespace detail {

inline void keep_weights(ForwardTrace* trace, const std::string& block, Tensor&& w) {
  if (trace) trace->attention_weights[block] = std::move(w);
}

}  // namespace detail

/// Patch aggregation: [R, k*k, d] -> [R, d].
///
/// Keys and values come from every pixel, the query from the principal
/// (center) pixel only. The attended value is passed through the feed-forward
/// net and the principal pixel's raw feature is added back.
inline Var patch_attention(Tape& tape, ParamStore& store, const HiFANetConfig& cfg, Var patches,
                           ForwardTrace* trace = nullptr) {
  const Shape& s = patches.shape();
  if (s.size() != 3 || s[1] != cfg.patch_pixels() || s[2] != cfg.d)
    throw ShapeMismatch("patch_attention: expected [R, " + std::to_string(cfg.patch_pixels()) + ", " +
                        std::to_string(cfg.d) + "], got " + num::to_string(s));
  const std::size_t rows = s[0];
  Var principal = num::select(patches, 1, cfg.principal_pixel());
  Var query = dense(tape, store, "patch.query", num::reshape(principal, Shape{rows, 1, cfg.d}));
  Var key = dense(tape, store, "patch.key", patches);
  Var value = dense(tape, store, "patch.value", patches);
  Tensor weights;
  Var attended = num::multihead_attention(query, key, value, cfg.heads, 1.0 / std::sqrt(double(cfg.d1)),
                                          trace ? &weights : nullptr);
  detail::keep_weights(trace, "patch", std::move(weights));
  Var mixed = feed_forward(tape, store, "patch", num::reshape(attended, Shape{rows, cfg.d}));
  return num::add(mixed, principal);
}

/// Instance aggregation: [R, N, d] -> [R, d]. Self-attention across the N
/// instances of a point, feed-forward net, then the mean over instances.
inline Var instance_attention(Tape& tape, ParamStore& store, const HiFANetConfig& cfg, Var instances,
                              ForwardTrace* trace = nullptr) {
  const Shape& s = instances.shape();
  if (s.size() != 3 || s[2] != cfg.d)
    throw ShapeMismatch("instance_attention: expected [R, N, " + std::to_string(cfg.d) + "], got " +
                        num::to_string(s));
  Var query = dense(tape, store, "instance.query", instances);
  Var key = dense(tape, store, "instance.key", instances);
  Var value = dense(tape, store, "instance.value", instances);
  Tensor weights;
  Var attended = num::multihead_attention(query, key, value, cfg.heads, 1.0 / std::sqrt(double(cfg.d1)),
                                          trace ? &weights : nullptr);
  detail::keep_weights(trace, "instance", std::move(weights));
  return num::mean_over_axis(feed_forward(tape, store, "instance", attended), 1);
}

/// Pairwise coordinate differences p_i - p_j: [G, M, 3] -> [G, M, M, 3].
inline Tensor pairwise_differences(const Tensor& coords) {
  if (coords.rank() != 3 || coords.dim(2) != 3)
    throw ShapeMismatch("coords must be [G, M, 3], got " + num::to_string(coords.shape()));
  const std::size_t G = coords.dim(0), M = coords.dim(1);
  Tensor out(Shape{G, M, M, 3});
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j)
        for (std::size_t c = 0; c < 3; ++c)
          out[((g * M + i) * M + j) * 3 + c] = coords[(g * M + i) * 3 + c] - coords[(g * M + j) * 3 + c];
  return out;
}

/// Structural prior K_pe: every difference p_i - p_j is encoded by
/// fc(3 -> prior_width) -> relu -> fc(-> heads*d2) and row i keeps the mean
/// over j. [G, M, 3] -> [G, M, heads*d2].
inline Var structural_prior(Tape& tape, ParamStore& store, const HiFANetConfig& /*cfg*/, const Tensor& coords) {
  Var diffs = tape.constant(pairwise_differences(coords));
  Var encoded = dense(tape, store, "prior.fc2", num::relu(dense(tape, store, "prior.fc1", diffs)));
  return num::mean_over_axis(encoded, 2);
}

/// Inter-point attention over the M points of each group: [G, M, d] -> [G, M, d].
/// With `use_prior`, the structural prior is added to the keys before the
/// scaled dot product.
inline Var interpoint_attention(Tape& tape, ParamStore& store, const HiFANetConfig& cfg, Var features,
                                const Tensor& coords, bool use_prior = true, ForwardTrace* trace = nullptr) {
  const Shape& s = features.shape();
  if (s.size() != 3 || s[2] != cfg.d || coords.rank() != 3 || coords.dim(0) != s[0] || coords.dim(1) != s[1])
    throw ShapeMismatch("interpoint_attention: features " + num::to_string(s) + " vs coords " +
                        num::to_string(coords.shape()));
  Var query = dense(tape, store, "interpoint.query", features);
  Var key = dense(tape, store, "interpoint.key", features);
  if (use_prior) key = num::add(key, structural_prior(tape, store, cfg, coords));
  Var value = dense(tape, store, "interpoint.value", features);
  Tensor weights;
  Var attended = num::multihead_attention(query, key, value, cfg.heads, 1.0 / std::sqrt(double(cfg.d2)),
                                          trace ? &weights : nullptr);
  detail::keep_weights(trace, "interpoint", std::move(weights));
  return feed_forward(tape, store, "interpoint", attended);
}

/// [..., d] -> [..., class_count]
inline Var classify(Tape& tape, ParamStore& store, const HiFANetConfig& cfg, Var features) {
  if (features.shape().empty() || features.shape().back() != cfg.d)
    throw ShapeMismatch("classify: expected trailing width " + std::to_string(cfg.d) + ", got " +
                        num::to_string(features.shape()));
  Var h = num::relu(dense(tape, store, "head.fc1", features));
  h = num::relu(dense(tape, store, "head.fc2", h));
  return dense(tape, store, "head.fc3", h);
}

struct ForwardOptions {
  bool patch_stage = true;       // false: principal pixel passes straight through
  bool structural_prior = true;  // false: plain self-attention across points
};

/// Full pipeline on a batch: patch -> instance -> inter-point -> classify.
/// Returns logits of shape [G*M, class_count].
inline Var hifanet_forward(Tape& tape, ParamStore& store, const HiFANetConfig& cfg, const Batch& batch,
                           ForwardOptions opts = {}, ForwardTrace* trace = nullptr) {
  const Shape& s = batch.features.shape();
  if (s.size() != 5 || s[1] != cfg.m || s[2] != cfg.n || s[4] != cfg.d)
    throw ShapeMismatch("batch features " + num::to_string(s) + " do not match the model config");
  const std::size_t G = s[0], M = s[1], N = s[2], P = s[3], D = s[4];
  Var input = tape.constant(batch.features);

  Var per_instance;
  if (opts.patch_stage) {
    if (P != cfg.patch_pixels())
      throw ShapeMismatch("batch patch size does not match k=" + std::to_string(cfg.k));
    per_instance = patch_attention(tape, store, cfg, num::reshape(input, Shape{G * M * N, P, D}), trace);
  } else {
    // Reduce any patch to its principal pixel (patch size 1).
    const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(double(P))));
    per_instance = num::select(num::reshape(input, Shape{G * M * N, P, D}), 1, (side / 2) * side + side / 2);
  }
  if (trace) trace->patch_out = per_instance.value();

  Var per_point = instance_attention(tape, store, cfg, num::reshape(per_instance, Shape{G * M, N, D}), trace);
  if (trace) trace->instance_out = per_point.value();

  Var mixed = interpoint_attention(tape, store, cfg, num::reshape(per_point, Shape{G, M, D}), batch.coords,
                                   opts.structural_prior, trace);
  if (trace) trace->interpoint_out = mixed.value();

  return classify(tape, store, cfg, num::reshape(mixed, Shape{G * M, D}));
}

/// Parameters of the complete network.
inline ParamStore make_hifanet_params(const HiFANetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore store;
  add_patch_attention(store, cfg);
  add_instance_attention(store, cfg);
  add_interpoint_attention(store, cfg);
  add_structural_prior(store, cfg);
  add_classifier(store, cfg);
  initialize(store, seed);
  return store;
}

}  // namespace hifanet::model
