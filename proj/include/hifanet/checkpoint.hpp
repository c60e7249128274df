#pragma once

// Parameter checkpoint (".ckpt"), little-endian:
//
//   magic    4 bytes "HFCK"
//   version  u32     kCheckpointVersion
//   count    u32     number of tensors
//   manifest, `count` entries in name order:
//     name_length u32, name bytes (UTF-8, no terminator)
//     rank u32, dims u64 x rank
//     offset u64   byte offset of the tensor inside the payload
//   payload  f64 values of every tensor, row-major, concatenated

#include <cstdint>
#include <string>
#include <vector>

#include "hifanet/binary_io.hpp"
#include "hifanet/tensor.hpp"

namespace hifanet::io {

inline constexpr char kCheckpointMagic[4] = {'H', 'F', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::vector<std::uint8_t> encode_checkpoint(const num::ParamStore& params) {
  ByteWriter w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(offset);
    offset += t.size() * 8;
  }
  for (const auto& [_, t] : params)
    for (double v : t.values()) w.put(v);
  return std::move(w.bytes());
}

inline num::ParamStore decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CorruptFile("not a checkpoint file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  const auto count = r.get<std::uint32_t>();
  struct Entry {
    std::string name;
    num::Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name.resize(r.get<std::uint32_t>());
    r.get_bytes(e.name.data(), e.name.size());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 16) throw CorruptFile("implausible tensor rank in checkpoint");
    for (std::uint32_t j = 0; j < rank; ++j) e.shape.push_back(r.get<std::uint64_t>());
    for (std::size_t dim : e.shape)
      if (dim == 0) throw CorruptFile("zero-sized dimension in checkpoint tensor " + e.name);
    e.offset = r.get<std::uint64_t>();
    entries.push_back(std::move(e));
  }
  const std::size_t payload = r.position();
  num::ParamStore store;
  for (const Entry& e : entries) {
    const std::uint64_t n = num::shape_size(e.shape);
    if (e.offset % 8 != 0 || payload + e.offset + n * 8 > bytes.size())
      throw CorruptFile("tensor " + e.name + " lies outside the payload");
    std::vector<double> values(n);
    std::vector<std::uint8_t> slice(bytes.begin() + static_cast<std::ptrdiff_t>(payload + e.offset),
                                    bytes.begin() + static_cast<std::ptrdiff_t>(payload + e.offset + n * 8));
    ByteReader sr(slice);
    for (double& v : values) v = sr.get<double>();
    if (store.contains(e.name)) throw CorruptFile("duplicate tensor " + e.name + " in checkpoint");
    store.add(e.name, num::Tensor(e.shape, std::move(values)));
  }
  return store;
}

inline void save_checkpoint(const num::ParamStore& params, const std::string& path) {
  write_file(path, encode_checkpoint(params));
}

inline num::ParamStore load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace hifanet::io
