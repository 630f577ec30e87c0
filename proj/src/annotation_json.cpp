#include "midline/annotation_json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include "midline/error.hpp"

namespace midline {

namespace fs = std::filesystem;

nlohmann::json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, file.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& file, const nlohmann::json& value) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

namespace {

std::vector<std::string> classes_in_order(const nlohmann::json& gt) {
  std::vector<std::string> seen;
  if (!gt.is_array()) return seen;
  for (const auto& img : gt) {
    if (!img.is_object() || !img.contains("objects")) continue;
    for (const auto& obj : img["objects"]) {
      if (!obj.is_object() || !obj.contains("class") || !obj["class"].is_string()) continue;
      const auto name = obj["class"].get<std::string>();
      if (std::find(seen.begin(), seen.end(), name) == seen.end()) seen.push_back(name);
    }
  }
  return seen;
}

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

int class_index(std::span<const std::string> vocabulary, const std::string& name) {
  const auto it = std::find(vocabulary.begin(), vocabulary.end(), name);
  return it == vocabulary.end() ? -1 : static_cast<int>(it - vocabulary.begin());
}

}  // namespace

std::vector<std::string> resolve_vocabulary(std::string_view spec, const nlohmann::json& gt) {
  if (spec == "dota") return dota_classes();
  if (spec == "text") return {"text"};
  if (spec == "auto") {
    const auto used = classes_in_order(gt);
    const auto& dota = dota_classes();
    const bool all_dota = std::all_of(used.begin(), used.end(), [&](const std::string& n) {
      return std::find(dota.begin(), dota.end(), n) != dota.end();
    });
    if (all_dota && !used.empty()) return dota;
    return used;
  }
  std::vector<std::string> out;
  std::string_view rest = spec;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto token = rest.substr(0, comma);
    if (!token.empty()) out.emplace_back(token);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty class vocabulary");
  return out;
}

nlohmann::json corners_to_json(const OrientedBox& box) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Point2 p : box.corners()) {
    arr.push_back(p.x);
    arr.push_back(p.y);
  }
  return arr;
}

Quad corners_from_json(const nlohmann::json& value) {
  if (!value.is_array() || value.size() != 8) {
    throw Error(ErrorCode::Format, "corners must be an array of 8 numbers");
  }
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!value[2 * i].is_number() || !value[2 * i + 1].is_number()) {
      throw Error(ErrorCode::Format, "corners must be numeric");
    }
    q[i] = {value[2 * i].get<double>(), value[2 * i + 1].get<double>()};
  }
  return q;
}

nlohmann::json ground_truth_to_json(std::span<const AnnotatedImage> images) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& img : images) {
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& box : img.objects) {
      objects.push_back({{"class", img.class_names.at(box.class_id())},
                         {"corners", corners_to_json(box)},
                         {"difficult", box.difficult()}});
    }
    out.push_back({{"image_id", img.image_id},
                   {"width", img.width},
                   {"height", img.height},
                   {"objects", objects}});
  }
  return out;
}

std::vector<AnnotatedImage> ground_truth_from_json(const nlohmann::json& value,
                                                   std::span<const std::string> vocabulary) {
  if (!value.is_array()) throw Error(ErrorCode::Format, "ground truth must be a JSON array");
  std::vector<AnnotatedImage> out;
  std::set<std::string> unknown;
  try {
    for (const auto& img : value) {
      AnnotatedImage a;
      a.image_id = img.at("image_id").get<std::string>();
      a.width = img.at("width").get<int>();
      a.height = img.at("height").get<int>();
      a.class_names.assign(vocabulary.begin(), vocabulary.end());
      for (const auto& obj : img.at("objects")) {
        const auto name = obj.at("class").get<std::string>();
        const int id = class_index(vocabulary, name);
        if (id < 0) {
          unknown.insert(name);
          continue;
        }
        a.objects.emplace_back(corners_from_json(obj.at("corners")), id, 1.0,
                               obj.value("difficult", false));
      }
      out.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("ground truth: ") + e.what());
  }
  if (!unknown.empty()) throw Error(ErrorCode::UnknownClass, "classes outside vocabulary: " + join(unknown));
  return out;
}

nlohmann::json detections_to_json(std::span<const Detection> dets,
                                  std::span<const std::string> class_names,
                                  const std::string& image_id) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& det : dets) {
    nlohmann::json d = {{"class", class_names[det.box.class_id()]},
                        {"score", det.box.score()},
                        {"corners", corners_to_json(det.box)},
                        {"branch", static_cast<int>(det.branch)}};
    if (!image_id.empty()) d["image_id"] = image_id;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<ImageDetections> detections_from_json(const nlohmann::json& value,
                                                  std::span<const std::string> vocabulary,
                                                  const std::string& default_image_id) {
  if (!value.is_array()) throw Error(ErrorCode::Format, "detections must be a JSON array");
  std::vector<ImageDetections> out;
  std::unordered_map<std::string, std::size_t> index;
  std::set<std::string> unknown;
  try {
    for (const auto& d : value) {
      const auto name = d.at("class").get<std::string>();
      const int id = class_index(vocabulary, name);
      if (id < 0) {
        unknown.insert(name);
        continue;
      }
      const int branch = d.value("branch", 2);
      if (branch != 1 && branch != 2) throw Error(ErrorCode::Format, "branch must be 1 or 2");
      const std::string image_id = d.value("image_id", default_image_id);
      auto [it, inserted] = index.emplace(image_id, out.size());
      if (inserted) out.push_back({image_id, {}});
      out[it->second].detections.push_back(
          {OrientedBox(corners_from_json(d.at("corners")), id, d.at("score").get<double>()),
           branch == 1 ? BranchId::Horizontal : BranchId::Oriented});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("detections: ") + e.what());
  }
  if (!unknown.empty()) throw Error(ErrorCode::UnknownClass, "classes outside vocabulary: " + join(unknown));
  return out;
}

}  // namespace midline
