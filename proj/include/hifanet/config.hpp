#pragma once

#include <cstddef>
#include <string>

#include "hifanet/errors.hpp"
#include "json.hpp"

namespace hifanet {

/// Architecture sizes. Defaults follow the reference network: 10 points per
/// group, 5 frames per point, 5x5 patches of 256-d features, 4 heads of width
/// 64 on every key/query projection.
struct HiFANetConfig {
  std::size_t m = 10;            // points per group
  std::size_t n = 5;             // bag-of-frames size
  std::size_t k = 5;             // patch side
  std::size_t d = 256;           // feature width
  std::size_t d1 = 64;           // per-head key/query width, patch + instance blocks
  std::size_t heads = 4;
  std::size_t d2 = 64;           // per-head key/query width, inter-point block
  std::size_t class_count = 13;
  std::size_t ffn_width = 256;
  std::size_t prior_width = 128;  // hidden width of the structural-prior encoder
  std::size_t head_width = 512;   // hidden width of the classification head

  std::size_t patch_pixels() const { return k * k; }
  std::size_t principal_pixel() const { return (k / 2) * k + k / 2; }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw ConfigInvalid(std::string("model config: ") + name + " must be positive");
    };
    positive(m, "m");
    positive(n, "n");
    positive(k, "k");
    positive(d, "d");
    positive(d1, "d1");
    positive(heads, "heads");
    positive(d2, "d2");
    positive(class_count, "class_count");
    positive(ffn_width, "ffn_width");
    positive(prior_width, "prior_width");
    positive(head_width, "head_width");
    if (k % 2 == 0) throw ConfigInvalid("model config: k must be odd");
    if (heads * d1 > d) throw ConfigInvalid("model config: heads * d1 must not exceed d");
    if (heads * d2 > d) throw ConfigInvalid("model config: heads * d2 must not exceed d");
    if (d % heads != 0) throw ConfigInvalid("model config: d must be divisible by heads");
  }

  bool operator==(const HiFANetConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HiFANetConfig, m, n, k, d, d1, heads, d2, class_count,
                                                ffn_width, prior_width, head_width)

}  // namespace hifanet
