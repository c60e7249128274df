#pragma once

// Observation dataset container (".hifa"). All integers and floats are
// little-endian.
//
//   magic        4 bytes  "HIFA"
//   version      u32      kDatasetVersion
//   groups       u32
//   M, N, k, d   u32 x 4
//   class_count  u32
//   then for each group:
//     coords       M*3      f64   (x, y, z per point, meters)
//     labels       M        u16
//     frame ids    M*N      u32
//     features     M*N*k*k*d f32  (point, frame, row, col, channel)
//     patch labels M*N*k*k  u16   (point, frame, row, col)
//
// Anything after the last group is an error.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hifanet/binary_io.hpp"
#include "hifanet/observation.hpp"

namespace hifanet::io {

inline constexpr char kDatasetMagic[4] = {'H', 'I', 'F', 'A'};
inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
  std::uint32_t groups = 0, m = 0, n = 0, k = 0, d = 0, class_count = 0;
};

inline std::vector<std::uint8_t> encode_dataset(std::span<const ObservationTensor> groups, std::size_t class_count) {
  ByteWriter w;
  w.put_bytes(kDatasetMagic, 4);
  w.put<std::uint32_t>(kDatasetVersion);
  const ObservationTensor proto = groups.empty() ? ObservationTensor{} : groups.front();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(groups.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(proto.m));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(proto.n));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(proto.k));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(proto.d));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(class_count));
  for (const auto& g : groups) {
    if (g.m != proto.m || g.n != proto.n || g.k != proto.k || g.d != proto.d || !g.consistent())
      throw ShapeMismatch("all groups in a dataset file must share dimensions");
    for (double c : g.coords) w.put(c);
    for (auto l : g.labels) w.put(l);
    for (auto f : g.frame_ids) w.put(f);
    for (float f : g.features) w.put(f);
    for (auto l : g.patch_labels) w.put(l);
  }
  return std::move(w.bytes());
}

struct DecodedDataset {
  DatasetHeader header;
  std::vector<ObservationTensor> groups;
};

inline DecodedDataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw CorruptFile("not a dataset file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kDatasetVersion)
    throw VersionMismatch("dataset version " + std::to_string(version) + ", expected " +
                          std::to_string(kDatasetVersion));
  DecodedDataset out;
  auto& h = out.header;
  h.groups = r.get<std::uint32_t>();
  h.m = r.get<std::uint32_t>();
  h.n = r.get<std::uint32_t>();
  h.k = r.get<std::uint32_t>();
  h.d = r.get<std::uint32_t>();
  h.class_count = r.get<std::uint32_t>();
  if (h.groups > 0 && (h.m == 0 || h.n == 0 || h.k == 0 || h.d == 0))
    throw CorruptFile("dataset header has zero dimensions");
  const std::uint64_t per_group = std::uint64_t{h.m} * 3 * 8 + std::uint64_t{h.m} * 2 + std::uint64_t{h.m} * h.n * 4 +
                                  std::uint64_t{h.m} * h.n * h.k * h.k * h.d * 4 +
                                  std::uint64_t{h.m} * h.n * h.k * h.k * 2;
  if (per_group * h.groups != r.remaining())
    throw CorruptFile("dataset payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                      std::to_string(per_group * h.groups));
  out.groups.reserve(h.groups);
  for (std::uint32_t gi = 0; gi < h.groups; ++gi) {
    ObservationTensor g(h.m, h.n, h.k, h.d);
    for (double& c : g.coords) c = r.get<double>();
    for (auto& l : g.labels) {
      l = r.get<std::uint16_t>();
      if (l >= h.class_count) throw CorruptFile("point label " + std::to_string(l) + " out of range");
    }
    for (auto& f : g.frame_ids) f = r.get<std::uint32_t>();
    for (float& f : g.features) f = r.get<float>();
    for (auto& l : g.patch_labels) {
      l = r.get<std::uint16_t>();
      if (l >= h.class_count) throw CorruptFile("patch label " + std::to_string(l) + " out of range");
    }
    out.groups.push_back(std::move(g));
  }
  return out;
}

inline void export_dataset(std::span<const ObservationTensor> groups, std::size_t class_count,
                           const std::string& path) {
  write_file(path, encode_dataset(groups, class_count));
}

inline DecodedDataset import_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

}  // namespace hifanet::io
