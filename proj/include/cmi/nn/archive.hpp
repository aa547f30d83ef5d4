#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace cmi::nn {

// Weight archive layout (all integers little-endian):
//   bytes 0..7   magic "CMIWGT01"
//   u64          header length H
//   H bytes      UTF-8 JSON header (model config, tags, parameter layout)
//   u64          parameter count P
//   P x f32      IEEE-754 parameter values in layout order
struct WeightArchive {
  nlohmann::json header;
  std::vector<float> values;
};

void WriteArchive(const std::filesystem::path& path, const nlohmann::json& header,
                  std::span<const float> values);
WeightArchive ReadArchive(const std::filesystem::path& path);

}  // namespace cmi::nn
