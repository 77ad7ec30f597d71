#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rxn/nn/model.hpp"

namespace rxn::nn {

// Binary layout, little-endian:
//   "RXNR" | u32 version | u32 embed_dim | u32 recurrent_hidden |
//   u32 attention_heads | u32 n_labels | u32 max_len | u64 seed |
//   u64 parameter count | f32 parameters (Params::visit order) |
//   u64 FNV-1a of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Model<float>& model);
Model<float> deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace rxn::nn
