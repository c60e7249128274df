#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hifanet/attention.hpp"
#include "hifanet/observation.hpp"

namespace hifanet {

/// Per-pixel 2D label predictions for M points x N frames x k x k pixels.
struct VoteInput {
  std::size_t m = 0, n = 0, k = 0;
  std::span<const std::uint16_t> labels;

  static VoteInput from(const ObservationTensor& obs) { return {obs.m, obs.n, obs.k, obs.patch_labels}; }
};

/// Most frequent label inside the central patch_size x patch_size window of
/// the first `bof` frames of each point. Ties go to the smallest label id.
inline std::vector<int> majority_vote(const VoteInput& votes, std::size_t patch_size, std::size_t bof,
                                      std::size_t class_count) {
  if (patch_size == 0 || patch_size % 2 == 0 || patch_size > votes.k)
    throw ConfigInvalid("vote patch size must be odd and at most k=" + std::to_string(votes.k));
  if (bof == 0 || bof > votes.n) throw ConfigInvalid("vote frame count must be in [1, N]");
  if (votes.labels.size() != votes.m * votes.n * votes.k * votes.k)
    throw ShapeMismatch("vote labels have the wrong length");
  const std::size_t k = votes.k, lo = k / 2 - patch_size / 2, hi = lo + patch_size;
  std::vector<int> out(votes.m);
  std::vector<std::size_t> hist(class_count);
  for (std::size_t p = 0; p < votes.m; ++p) {
    std::fill(hist.begin(), hist.end(), 0);
    for (std::size_t f = 0; f < bof; ++f) {
      const std::uint16_t* patch = votes.labels.data() + (p * votes.n + f) * k * k;
      for (std::size_t r = lo; r < hi; ++r)
        for (std::size_t c = lo; c < hi; ++c) {
          const std::uint16_t l = patch[r * k + c];
          if (l >= class_count) throw LabelOutOfRange("vote label " + std::to_string(l) + " out of range");
          ++hist[l];
        }
    }
    // max_element returns the first maximum, i.e. the smallest id on ties
    out[p] = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  }
  return out;
}

namespace model {

inline constexpr std::size_t kAvgPoolHidden1 = 256;
inline constexpr std::size_t kAvgPoolHidden2 = 128;

inline void add_avgpool_fc(ParamStore& store, const HiFANetConfig& cfg) {
  add_dense(store, "avgfc.fc1", cfg.d, kAvgPoolHidden1);
  add_dense(store, "avgfc.fc2", kAvgPoolHidden1, kAvgPoolHidden2);
  add_dense(store, "avgfc.fc3", kAvgPoolHidden2, cfg.class_count);
}

/// Mean over frames and patch pixels, then fc 256 -> relu -> fc 128 -> relu
/// -> fc class_count. Returns [G*M, class_count].
inline Var avgpool_fc_forward(Tape& tape, ParamStore& store, const HiFANetConfig& cfg, const Batch& batch) {
  const Shape& s = batch.features.shape();
  if (s.size() != 5 || s[4] != cfg.d)
    throw ShapeMismatch("avgpool_fc: batch features " + num::to_string(s) + " do not match d=" +
                        std::to_string(cfg.d));
  const std::size_t rows = s[0] * s[1];
  Var pooled = num::mean_over_axis(num::reshape(tape.constant(batch.features), Shape{rows, s[2] * s[3], s[4]}), 1);
  Var h = num::relu(dense(tape, store, "avgfc.fc1", pooled));
  h = num::relu(dense(tape, store, "avgfc.fc2", h));
  return dense(tape, store, "avgfc.fc3", h);
}

}  // namespace model

enum class Variant { hifanet, hifanet_noPA, hifanet_noSP, avgpool_fc };

inline Variant parse_variant(std::string_view name) {
  if (name == "hifanet") return Variant::hifanet;
  if (name == "hifanet_noPA") return Variant::hifanet_noPA;
  if (name == "hifanet_noSP") return Variant::hifanet_noSP;
  if (name == "avgpool_fc") return Variant::avgpool_fc;
  throw UnknownVariant("unknown model variant: " + std::string(name));
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::hifanet: return "hifanet";
    case Variant::hifanet_noPA: return "hifanet_noPA";
    case Variant::hifanet_noSP: return "hifanet_noSP";
    case Variant::avgpool_fc: return "avgpool_fc";
  }
  return "?";
}

/// A trainable network: which variant, its sizes and its weights.
///
/// hifanet_noPA carries no patch-attention weights and reads only the
/// principal pixel of each patch. hifanet_noSP carries no structural-prior
/// encoder, so its keys are never shifted.
struct Model {
  Variant variant = Variant::hifanet;
  HiFANetConfig config;
  num::ParamStore params;

  num::Var forward(num::Tape& tape, const Batch& batch, model::ForwardTrace* trace = nullptr) {
    switch (variant) {
      case Variant::avgpool_fc: return model::avgpool_fc_forward(tape, params, config, batch);
      case Variant::hifanet_noPA: return model::hifanet_forward(tape, params, config, batch, {false, true}, trace);
      case Variant::hifanet_noSP: return model::hifanet_forward(tape, params, config, batch, {true, false}, trace);
      case Variant::hifanet: break;
    }
    return model::hifanet_forward(tape, params, config, batch, {}, trace);
  }
};

inline Model build_variant(Variant variant, const HiFANetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m{variant, cfg, {}};
  auto& store = m.params;
  switch (variant) {
    case Variant::avgpool_fc:
      model::add_avgpool_fc(store, cfg);
      break;
    case Variant::hifanet_noPA:
      model::add_instance_attention(store, cfg);
      model::add_interpoint_attention(store, cfg);
      model::add_structural_prior(store, cfg);
      model::add_classifier(store, cfg);
      break;
    case Variant::hifanet_noSP:
      model::add_patch_attention(store, cfg);
      model::add_instance_attention(store, cfg);
      model::add_interpoint_attention(store, cfg);
      model::add_classifier(store, cfg);
      break;
    case Variant::hifanet:
      model::add_patch_attention(store, cfg);
      model::add_instance_attention(store, cfg);
      model::add_interpoint_attention(store, cfg);
      model::add_structural_prior(store, cfg);
      model::add_classifier(store, cfg);
      break;
  }
  model::initialize(store, seed);
  return m;
}

inline Model build_variant(std::string_view name, const HiFANetConfig& cfg, std::uint64_t seed) {
  return build_variant(parse_variant(name), cfg, seed);
}

}  // namespace hifanet
