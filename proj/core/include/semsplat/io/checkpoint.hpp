#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semsplat/scene.hpp"

namespace semsplat::io {

inline constexpr char kCheckpointMagic[9] = {'S', 'E', 'M', 'S', 'P', 'L', 'A', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Scene<float>& scene);
Scene<float> decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& file);
/// Writes to a temporary sibling and renames it over `path`.
void save_checkpoint(const Scene<float>& scene, const std::string& path);
Scene<float> load_checkpoint(const std::string& path);

}  // namespace semsplat::io
