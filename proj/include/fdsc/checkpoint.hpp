#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fdsc/autonet.hpp"

namespace fdsc {

// Binary layout (all integers little-endian):
//   "FDSC" | u16 version | repeated { u32 name_len | name | u32 rank |
//   u32 dims[rank] | f32 payload[prod(dims)] } until end of file.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<float> values;
};

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const NetParams& net);
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& encoder);

// Fills tensors of an already-shaped `net` (built from the run's
// architecture); names and dims must match. Values come back f32-rounded.
void load_checkpoint(const std::filesystem::path& path, NetParams& net);
void load_checkpoint(const std::filesystem::path& path, EncoderParams& encoder);

}  // namespace fdsc
