#pragma once

// Checkpoint layout (version 1), all integers little-endian:
//
//   bytes 0..3   magic "P2G1"
//   u32          format version
//   u64          header length L
//   L bytes      JSON header: model_config, optimizer, seed, category_names,
//                tensors [{name, shape, dtype "float32", offset, trainable}], payload_bytes
//   payload      float32 values, tensors back to back at their offsets

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "model.hpp"
#include "optim.hpp"
#include "tensor.hpp"

namespace p2g {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  nn::AdamHyper optimizer;
  std::uint64_t seed = 0;
  std::vector<std::string> category_names;
  nn::ParamStore params;
};

std::string checkpoint_bytes(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws ConfigMismatch listing every differing field.
void require_same_config(const ModelConfig& expected, const ModelConfig& found);

}  // namespace p2g
