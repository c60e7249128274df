#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hifanet/hifanet.hpp"
#include "reference_model.hpp"
#include "test_util.hpp"

using namespace hifanet;
using hifanet::num::Tape;
using hifanet::num::Tensor;

namespace {

VoteInput votes_of(std::size_t m, std::size_t n, std::size_t k, const std::vector<std::uint16_t>& labels) {
  return {m, n, k, labels};
}

std::vector<double> logits_of(Model& model, const ObservationTensor& obs) {
  Tape tape;
  const Tensor t = model.forward(tape, make_batch(std::span<const ObservationTensor>(&obs, 1))).value();
  return {t.values().begin(), t.values().end()};
}

void randomize(num::ParamStore& store, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& [_, t] : store)
    for (double& v : t.values()) v = u(rng);
}

}  // namespace

TEST(MajorityVote, UnanimousVote) {
  const std::vector<std::uint16_t> labels(2 * 3 * 9, 4);
  EXPECT_EQ(majority_vote(votes_of(2, 3, 3, labels), 3, 3, 13), (std::vector<int>{4, 4}));
}

TEST(MajorityVote, TieGoesToSmallestId) {
  // one point, two frames, 1x1 patches: votes {7, 3, 3, 7} over 4 frames
  const std::vector<std::uint16_t> labels{7, 3, 3, 7};
  EXPECT_EQ(majority_vote(votes_of(1, 4, 1, labels), 1, 4, 13), (std::vector<int>{3}));
}

TEST(MajorityVote, UsesCentralWindowAndLeadingFrames) {
  // 3x3 patch with center 2, ring 1; second frame all 5.
  std::vector<std::uint16_t> labels(2 * 9, 1);
  labels[4] = 2;
  std::fill(labels.begin() + 9, labels.end(), 5);
  const auto v = votes_of(1, 2, 3, labels);
  EXPECT_EQ(majority_vote(v, 1, 1, 8), (std::vector<int>{2}));
  EXPECT_EQ(majority_vote(v, 3, 1, 8), (std::vector<int>{1}));
  EXPECT_EQ(majority_vote(v, 3, 2, 8), (std::vector<int>{5}));
}

TEST(MajorityVote, MatchesHistogramOracle) {
  std::mt19937_64 rng(8);
  const std::size_t m = 50, n = 5, k = 5, C = 6;
  std::uniform_int_distribution<int> lab(0, C - 1);
  std::vector<std::uint16_t> labels(m * n * k * k);
  for (auto& l : labels) l = static_cast<std::uint16_t>(lab(rng));
  for (std::size_t ps : {1u, 3u, 5u})
    for (std::size_t bof : {1u, 3u, 5u}) {
      const auto got = majority_vote(votes_of(m, n, k, labels), ps, bof, C);
      for (std::size_t p = 0; p < m; ++p) {
        std::vector<int> count(C, 0);
        const std::size_t off = (k - ps) / 2;
        for (std::size_t f = 0; f < bof; ++f)
          for (std::size_t r = off; r < off + ps; ++r)
            for (std::size_t c = off; c < off + ps; ++c) ++count[labels[((p * n + f) * k + r) * k + c]];
        // largest count; scanning downward so that ">=" leaves the smallest id
        int best = C - 1;
        for (int c = int(C) - 1; c >= 0; --c)
          if (count[c] >= count[best]) best = c;
        EXPECT_EQ(got[p], best) << "point " << p << " ps " << ps << " bof " << bof;
      }
    }
}

TEST(MajorityVote, InvariantToVoteOrder) {
  std::mt19937_64 rng(12);
  const std::size_t n = 4, k = 3, C = 5;
  std::uniform_int_distribution<int> lab(0, C - 1);
  std::vector<std::uint16_t> labels(n * k * k);
  for (auto& l : labels) l = static_cast<std::uint16_t>(lab(rng));
  const int want = majority_vote(votes_of(1, n, k, labels), k, n, C)[0];
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(labels.begin(), labels.end(), rng);
    EXPECT_EQ(majority_vote(votes_of(1, n, k, labels), k, n, C)[0], want);
  }
}

TEST(MajorityVote, RejectsBadArguments) {
  const std::vector<std::uint16_t> labels(9, 0);
  const auto v = votes_of(1, 1, 3, labels);
  EXPECT_THROW(majority_vote(v, 2, 1, 4), ConfigInvalid);
  EXPECT_THROW(majority_vote(v, 5, 1, 4), ConfigInvalid);
  EXPECT_THROW(majority_vote(v, 3, 2, 4), ConfigInvalid);
  EXPECT_THROW(majority_vote(v, 3, 0, 4), ConfigInvalid);
  const std::vector<std::uint16_t> bad(9, 7);
  EXPECT_THROW(majority_vote(votes_of(1, 1, 3, bad), 3, 1, 4), LabelOutOfRange);
  EXPECT_THROW(majority_vote(votes_of(1, 1, 3, std::vector<std::uint16_t>(8, 0)), 3, 1, 4), ShapeMismatch);
}

TEST(AvgPoolFC, ZeroParamsGiveZeroLogits) {
  const HiFANetConfig c = testutil::tiny_config();
  Model m = build_variant(Variant::avgpool_fc, c, 1);
  for (auto& [_, t] : m.params) std::fill(t.values().begin(), t.values().end(), 0.0);
  std::mt19937_64 rng(1);
  for (double v : logits_of(m, testutil::random_observation(c, rng))) EXPECT_EQ(v, 0.0);
}

TEST(AvgPoolFC, ConstantFeaturesPoolToTheConstant) {
  const HiFANetConfig c = testutil::tiny_config();
  Model m = build_variant(Variant::avgpool_fc, c, 2);
  randomize(m.params, 2);
  ObservationTensor obs(c.m, c.n, c.k, c.d);
  std::vector<double> point(c.d);
  for (std::size_t i = 0; i < c.d; ++i) point[i] = 0.125 * double(i % 5) - 0.25;
  for (std::size_t cell = 0; cell < obs.features.size() / c.d; ++cell)
    for (std::size_t i = 0; i < c.d; ++i) obs.features[cell * c.d + i] = static_cast<float>(point[i]);
  // Feeding the constant straight into the head must reproduce the logits.
  std::vector<double> x;
  for (std::size_t p = 0; p < c.m; ++p) x.insert(x.end(), point.begin(), point.end());
  auto h = testutil::ref_relu(reference::dense(m.params, "avgfc.fc1", x, c.d));
  h = testutil::ref_relu(reference::dense(m.params, "avgfc.fc2", h, model::kAvgPoolHidden1));
  const auto want = reference::dense(m.params, "avgfc.fc3", h, model::kAvgPoolHidden2);
  const auto got = logits_of(m, obs);
  EXPECT_LT(testutil::max_abs_diff(got, want), 1e-12);
}

TEST(AvgPoolFC, MatchesNaiveLoop) {
  const HiFANetConfig c = testutil::tiny_config();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Model m = build_variant(Variant::avgpool_fc, c, seed);
    randomize(m.params, seed);
    std::mt19937_64 rng(seed);
    const auto obs = testutil::random_observation(c, rng);
    EXPECT_LT(testutil::max_abs_diff(logits_of(m, obs), reference::avgpool_fc(m.params, c, obs)), 1e-12);
  }
}

TEST(AvgPoolFC, InvariantToFrameAndPixelOrder) {
  const HiFANetConfig c = testutil::tiny_config();
  Model m = build_variant(Variant::avgpool_fc, c, 4);
  randomize(m.params, 4);
  std::mt19937_64 rng(4);
  const auto obs = testutil::random_observation(c, rng);
  const auto base = logits_of(m, obs);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> perm(c.n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ObservationTensor moved = testutil::permute_frames(obs, perm);
    std::vector<std::size_t> pix(c.k * c.k);
    std::iota(pix.begin(), pix.end(), 0);
    std::shuffle(pix.begin(), pix.end(), rng);
    for (std::size_t p = 0; p < c.m; ++p)
      for (std::size_t f = 0; f < c.n; ++f) {
        const float* src = obs.patch_features(p, perm[f]);
        float* dst = moved.patch_features(p, f);
        for (std::size_t q = 0; q < pix.size(); ++q) std::copy_n(src + pix[q] * c.d, c.d, dst + q * c.d);
      }
    EXPECT_LT(testutil::max_abs_diff(logits_of(m, moved), base), 1e-12);
  }
}

TEST(AvgPoolFC, WrongFeatureWidthThrows) {
  HiFANetConfig c = testutil::tiny_config();
  Model m = build_variant(Variant::avgpool_fc, c, 1);
  c.d = 8;
  std::mt19937_64 rng(1);
  const auto obs = testutil::random_observation(c, rng);
  Tape tape;
  EXPECT_THROW(m.forward(tape, make_batch(std::span<const ObservationTensor>(&obs, 1))), ShapeMismatch);
}

TEST(Variants, NamesRoundTrip) {
  for (auto v : {Variant::hifanet, Variant::hifanet_noPA, Variant::hifanet_noSP, Variant::avgpool_fc})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("hifanet_noXY"), UnknownVariant);
  EXPECT_THROW(build_variant("pointnet", testutil::tiny_config(), 0), UnknownVariant);
}

TEST(Variants, ParameterCounts) {
  const HiFANetConfig c = testutil::tiny_config();
  const auto full = model::count_parameters(build_variant(Variant::hifanet, c, 0).params);
  const auto no_pa = model::count_parameters(build_variant(Variant::hifanet_noPA, c, 0).params);
  const auto no_sp = model::count_parameters(build_variant(Variant::hifanet_noSP, c, 0).params);
  num::ParamStore prior;
  model::add_structural_prior(prior, c);
  EXPECT_LT(no_pa, full);
  EXPECT_EQ(no_sp, full - model::count_parameters(prior));
  // prior: 3 -> prior_width (with bias) -> heads*d2 (no bias)
  EXPECT_EQ(model::count_parameters(prior), 3 * 12 + 12 + 12 * 8);
}

TEST(Variants, NoStructuralPriorIsPlainAttention) {
  const HiFANetConfig c = testutil::tiny_config();
  Model m = build_variant(Variant::hifanet_noSP, c, 6);
  randomize(m.params, 6);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const auto obs = testutil::random_observation(c, rng);
    EXPECT_LT(testutil::max_abs_diff(logits_of(m, obs), reference::forward(m.params, c, obs, true, false)), 1e-11);
  }
}

TEST(Variants, NoPatchAttentionReadsPrincipalPixel) {
  for (std::size_t k : {1u, 3u}) {
    HiFANetConfig c = testutil::tiny_config();
    c.k = k;
    Model m = build_variant(Variant::hifanet_noPA, c, 7);
    randomize(m.params, 7);
    std::mt19937_64 rng(7);
    const auto obs = testutil::random_observation(c, rng);
    EXPECT_LT(testutil::max_abs_diff(logits_of(m, obs), reference::forward(m.params, c, obs, false, true)), 1e-11)
        << "k=" << k;
  }
}

TEST(Variants, FullModelMatchesReference) {
  const HiFANetConfig c = testutil::tiny_config();
  Model m = build_variant(Variant::hifanet, c, 9);
  randomize(m.params, 9);
  std::mt19937_64 rng(9);
  const auto obs = testutil::random_observation(c, rng);
  EXPECT_LT(testutil::max_abs_diff(logits_of(m, obs), reference::forward(m.params, c, obs)), 1e-11);
}

TEST(Variants, SameSeedSameWeights) {
  const HiFANetConfig c = testutil::tiny_config();
  for (auto v : {Variant::hifanet, Variant::hifanet_noPA, Variant::hifanet_noSP, Variant::avgpool_fc}) {
    const Model a = build_variant(v, c, 3), b = build_variant(v, c, 3);
    for (const auto& [name, t] : a.params) EXPECT_EQ(t.values()[0], b.params.at(name).values()[0]) << name;
  }
}
