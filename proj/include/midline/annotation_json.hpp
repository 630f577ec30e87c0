#pragma once

// Normalized ground truth:
//   [{image_id, width, height, objects: [{class, corners: [x0,y0,...,x3,y3], difficult}]}]
// Detections:
//   [{class, score, corners: [x0,y0,...,x3,y3], branch: 1|2, image_id?}]

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "midline/dataset.hpp"
#include "midline/detection.hpp"
#include "midline/evaluation.hpp"

namespace midline {

/// Throws Error(Io) if unreadable and Error(Format) on a parse error.
nlohmann::json read_json_file(const std::filesystem::path& file);
void write_json_file(const std::filesystem::path& file, const nlohmann::json& value);

/// "dota", "text", a comma separated list, or "auto": DOTA when every class
/// in `gt` is a DOTA category, otherwise classes in order of first use.
std::vector<std::string> resolve_vocabulary(std::string_view spec, const nlohmann::json& gt);

nlohmann::json ground_truth_to_json(std::span<const AnnotatedImage> images);

/// Throws Error(UnknownClass) listing every class outside `vocabulary`.
std::vector<AnnotatedImage> ground_truth_from_json(const nlohmann::json& value,
                                                   std::span<const std::string> vocabulary);

nlohmann::json detections_to_json(std::span<const Detection> dets,
                                  std::span<const std::string> class_names,
                                  const std::string& image_id = {});

/// Groups by image_id in order of first appearance; detections without one
/// go to `default_image_id`. Throws Error(UnknownClass) listing offenders.
std::vector<ImageDetections> detections_from_json(const nlohmann::json& value,
                                                  std::span<const std::string> vocabulary,
                                                  const std::string& default_image_id = {});

nlohmann::json corners_to_json(const OrientedBox& box);
Quad corners_from_json(const nlohmann::json& value);

}  // namespace midline
