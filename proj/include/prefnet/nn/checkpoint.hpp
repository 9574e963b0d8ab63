#pragma once

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "prefnet/nn/model.hpp"

namespace prefnet::nn {

// Versioned parameter container. Layout (all integers little-endian):
//
//   magic      8 bytes  "PREFNET\0"
//   version    u32      kCheckpointVersion
//   meta_len   u64      then meta_len bytes of UTF-8 JSON metadata
//   count      u32      number of tensors
//   per tensor:
//     name_len u32, name bytes
//     ndims    u32, then ndims x u64 dimensions
//     values   prod(dims) x f64 (IEEE-754 binary64, little-endian)
//
// See docs/checkpoint.md.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json metadata;
  NamedTensors tensors;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace prefnet::nn
