#pragma once

#include "grasp/autodiff/nn.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace grasp::ad {

// Binary container: "GRSP", u32 version, then per tensor a u32 name length,
// the UTF-8 name, u32 rank, u64 dims and little-endian f64 data. Records run
// to end of file.
inline constexpr std::uint32_t checkpoint_version = 1;

using NamedTensors = std::map<std::string, Tensor>;

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

NamedTensors snapshot(const ParamList& params);
// Copies every listed parameter from the map; throws if one is missing or
// has the wrong shape.
void restore(const NamedTensors& tensors, const ParamList& params);

}  // namespace grasp::ad
