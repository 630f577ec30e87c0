#pragma once

// Directory format shared by the encoder, decoder and CLI:
//
//   manifest.json   {stride, num_classes, width, height, image_w, image_h,
//                    class_names[], tensors[], n_objects, image_id, config}
//   hm_b1.f32 ...   raw little-endian float32, row-major [channel][row][col]
//
// Tensors: hm_b1, hm_b2 (C channels), reg_b1, reg_b2 (8 channels),
// mask_b1, mask_b2 (1 channel, 0.0 / 1.0).

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "midline/target_encoder.hpp"

namespace midline {

struct MapContainer {
  TargetMaps maps;  // regions are not persisted
  std::vector<std::string> class_names;
  std::string image_id;
  nlohmann::json config;
};

/// Creates dir if needed. Throws Error(Io) on write failure.
void write_map_container(const std::filesystem::path& dir, const MapContainer& container);

/// Throws Error(Io) for missing or short files, Error(Format) for a bad
/// manifest and Error(ShapeMismatch) when a tensor disagrees with it.
MapContainer read_map_container(const std::filesystem::path& dir);

bool is_map_container(const std::filesystem::path& dir);

void write_f32_le(const std::filesystem::path& file, std::span<const double> values);
std::vector<double> read_f32_le(const std::filesystem::path& file);

}  // namespace midline
