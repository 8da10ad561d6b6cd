#pragma once

#include <filesystem>
#include <iosfwd>

#include "aecl/nn/network.h"

namespace aecl::nn {

inline constexpr char kCheckpointMagic[4] = {'A', 'E', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "AENN" | u32 version | u32 rank | i32 dims[rank] | u32 layer count
//   per layer: u32 record bytes | u8 tag | i32 fields...
//   parameter tensors in declaration order as f32.
void save_network(std::ostream& os, const Network<float>& net);
Network<float> load_network(std::istream& is);

void save_network_file(const std::filesystem::path& path, const Network<float>& net);
Network<float> load_network_file(const std::filesystem::path& path);

}  // namespace aecl::nn
