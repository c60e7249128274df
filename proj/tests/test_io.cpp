#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "hifanet/hifanet.hpp"
#include "test_util.hpp"

using namespace hifanet;
using namespace hifanet::io;
using Bytes = std::vector<std::uint8_t>;

namespace {

void append(Bytes& b, std::initializer_list<int> raw) {
  for (int v : raw) b.push_back(static_cast<std::uint8_t>(v));
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hifanet_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(DatasetFile, RoundTripIsBitExact) {
  std::mt19937_64 rng(100);
  const HiFANetConfig c = testutil::tiny_config();
  const auto groups = testutil::random_groups(c, 100, rng);
  const auto decoded = decode_dataset(encode_dataset(groups, c.class_count));
  EXPECT_EQ(decoded.header.groups, 100u);
  EXPECT_EQ(decoded.header.class_count, c.class_count);
  ASSERT_EQ(decoded.groups.size(), groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    EXPECT_EQ(std::memcmp(decoded.groups[i].features.data(), groups[i].features.data(),
                          groups[i].features.size() * sizeof(float)),
              0);
    EXPECT_EQ(std::memcmp(decoded.groups[i].coords.data(), groups[i].coords.data(),
                          groups[i].coords.size() * sizeof(double)),
              0);
    EXPECT_TRUE(decoded.groups[i] == groups[i]);
  }
}

TEST(DatasetFile, RoundTripThroughDisk) {
  std::mt19937_64 rng(3);
  const HiFANetConfig c = testutil::tiny_config();
  const auto groups = testutil::random_groups(c, 4, rng);
  const auto path = temp_file("roundtrip.hifa").string();
  export_dataset(groups, c.class_count, path);
  const auto back = import_dataset(path);
  EXPECT_TRUE(back.groups == groups);
}

TEST(DatasetFile, HandAssembledFileParses) {
  Bytes b;
  append(b, {'H', 'I', 'F', 'A'});
  append(b, {1, 0, 0, 0});  // version
  append(b, {1, 0, 0, 0});  // groups
  append(b, {2, 0, 0, 0});  // M
  append(b, {1, 0, 0, 0});  // N
  append(b, {1, 0, 0, 0});  // k
  append(b, {2, 0, 0, 0});  // d
  append(b, {3, 0, 0, 0});  // class_count
  // coords: (1.5, 0, -3) and (2, 0, 0)
  append(b, {0, 0, 0, 0, 0, 0, 0xF8, 0x3F});
  append(b, {0, 0, 0, 0, 0, 0, 0, 0});
  append(b, {0, 0, 0, 0, 0, 0, 0x08, 0xC0});
  append(b, {0, 0, 0, 0, 0, 0, 0x00, 0x40});
  append(b, {0, 0, 0, 0, 0, 0, 0, 0});
  append(b, {0, 0, 0, 0, 0, 0, 0, 0});
  append(b, {2, 0, 1, 0});              // labels 2, 1
  append(b, {7, 0, 0, 0, 0, 1, 0, 0});  // frame ids 7, 256
  // features: point 0 (0.5, -2), point 1 (1, 0)
  append(b, {0, 0, 0, 0x3F, 0, 0, 0, 0xC0, 0, 0, 0x80, 0x3F, 0, 0, 0, 0});
  append(b, {0, 0, 2, 0});  // patch labels 0, 2
  const auto d = decode_dataset(b);
  ASSERT_EQ(d.groups.size(), 1u);
  const auto& g = d.groups[0];
  EXPECT_EQ(g.m, 2u);
  EXPECT_EQ(g.d, 2u);
  EXPECT_EQ(g.coords, (std::vector<double>{1.5, 0, -3, 2, 0, 0}));
  EXPECT_EQ(g.labels, (std::vector<std::uint16_t>{2, 1}));
  EXPECT_EQ(g.frame_ids, (std::vector<std::uint32_t>{7, 256}));
  EXPECT_EQ(g.features, (std::vector<float>{0.5f, -2.0f, 1.0f, 0.0f}));
  EXPECT_EQ(g.patch_labels, (std::vector<std::uint16_t>{0, 2}));
  // the encoder writes exactly the same bytes
  EXPECT_EQ(encode_dataset(d.groups, 3), b);
}

TEST(DatasetFile, TruncationIsCorrupt) {
  std::mt19937_64 rng(1);
  const HiFANetConfig c = testutil::tiny_config();
  const Bytes full = encode_dataset(testutil::random_groups(c, 3, rng), c.class_count);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, std::size_t{31}, full.size() - 1}) {
    const Bytes part(full.begin(), full.begin() + static_cast<long>(cut));
    EXPECT_THROW(decode_dataset(part), CorruptFile) << "cut at " << cut;
  }
  Bytes longer = full;
  longer.push_back(0);
  EXPECT_THROW(decode_dataset(longer), CorruptFile);
}

TEST(DatasetFile, WrongMagicOrVersion) {
  std::mt19937_64 rng(1);
  const HiFANetConfig c = testutil::tiny_config();
  Bytes b = encode_dataset(testutil::random_groups(c, 1, rng), c.class_count);
  Bytes bad_magic = b;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_dataset(bad_magic), CorruptFile);
  b[4] = 2;
  EXPECT_THROW(decode_dataset(b), VersionMismatch);
}

TEST(DatasetFile, LabelOutsideClassCountIsCorrupt) {
  std::mt19937_64 rng(1);
  HiFANetConfig c = testutil::tiny_config();
  auto groups = testutil::random_groups(c, 1, rng);
  groups[0].labels[0] = 9;
  EXPECT_THROW(decode_dataset(encode_dataset(groups, c.class_count)), CorruptFile);
}

TEST(DatasetFile, MixedDimensionsRejected) {
  std::mt19937_64 rng(1);
  HiFANetConfig a = testutil::tiny_config(), b = a;
  b.n = 1;
  std::vector<ObservationTensor> groups{testutil::random_observation(a, rng), testutil::random_observation(b, rng)};
  EXPECT_THROW(encode_dataset(groups, a.class_count), ShapeMismatch);
}

TEST(DatasetFile, MissingFileIsCorrupt) {
  EXPECT_THROW(import_dataset("/nonexistent/dir/data.hifa"), CorruptFile);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Model m = build_variant(Variant::hifanet, testutil::tiny_config(), 12);
  const auto back = decode_checkpoint(encode_checkpoint(m.params));
  ASSERT_EQ(back.names(), m.params.names());
  for (const auto& [name, t] : m.params) {
    EXPECT_EQ(back.at(name).shape(), t.shape());
    EXPECT_EQ(std::memcmp(back.at(name).data(), t.data(), t.size() * sizeof(double)), 0) << name;
  }
}

TEST(Checkpoint, HandAssembledFileParses) {
  Bytes b;
  append(b, {'H', 'F', 'C', 'K'});
  append(b, {1, 0, 0, 0});             // version
  append(b, {1, 0, 0, 0});             // one tensor
  append(b, {1, 0, 0, 0, 'w'});        // name "w"
  append(b, {1, 0, 0, 0});             // rank 1
  append(b, {2, 0, 0, 0, 0, 0, 0, 0});  // dim 2
  append(b, {0, 0, 0, 0, 0, 0, 0, 0});  // offset 0
  append(b, {0, 0, 0, 0, 0, 0, 0xF0, 0x3F});  // 1.0
  append(b, {0, 0, 0, 0, 0, 0, 0x00, 0xC0});  // -2.0
  const auto store = decode_checkpoint(b);
  EXPECT_EQ(store.at("w")[0], 1.0);
  EXPECT_EQ(store.at("w")[1], -2.0);
  EXPECT_EQ(encode_checkpoint(store), b);
}

TEST(Checkpoint, DamagedFilesRejected) {
  num::ParamStore s;
  s.add("a", num::Tensor(num::Shape{2, 2}, 1.0));
  const Bytes b = encode_checkpoint(s);
  EXPECT_THROW(decode_checkpoint(Bytes(b.begin(), b.end() - 1)), CorruptFile);
  Bytes bad = b;
  bad[1] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), CorruptFile);
  bad = b;
  bad[4] = 9;
  EXPECT_THROW(decode_checkpoint(bad), VersionMismatch);
}

TEST(Checkpoint, SaveAndLoadThroughDisk) {
  Model m = build_variant(Variant::avgpool_fc, testutil::tiny_config(), 5);
  const auto path = temp_file("model.ckpt").string();
  save_checkpoint(m.params, path);
  const auto back = load_checkpoint(path);
  for (const auto& [name, t] : m.params)
    EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), back.at(name).values().begin()));
}
