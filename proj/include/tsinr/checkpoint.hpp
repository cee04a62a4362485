#pragma once

// Binary checkpoint format (little-endian):
//
//   "TSNR" u32 version u32 entry_count
//   entry: u32 name_len, name bytes, u32 rank, rank x u64 extents, f64 payload
//
// Entries hold the training configuration (config.*), normalization
// statistics (norm.*), metadata (meta.*) and every hypernetwork array (param.*).

#include <cstdint>
#include <string>
#include <vector>

#include "tsinr/pipeline.hpp"
#include "tsinr/tensor.hpp"

namespace tsinr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Tensor value;
};

std::string encode_arrays(const std::vector<NamedArray>& arrays, std::uint32_t version = kCheckpointVersion);
/// Throws CheckpointError on bad magic, version mismatch, truncation or trailing bytes.
std::vector<NamedArray> decode_arrays(const std::string& bytes);

std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& bytes);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace tsinr
