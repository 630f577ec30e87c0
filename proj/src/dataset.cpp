#include "midline/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

#include "midline/error.hpp"

namespace midline {

namespace {

std::string_view strip_bom(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  return text;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

bool parse_number(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string line_tag(std::size_t index) { return "line " + std::to_string(index + 1) + ": "; }

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

const std::vector<std::string>& dota_classes() {
  static const std::vector<std::string> names{
      "plane",          "baseball-diamond", "bridge",       "ground-track-field",
      "small-vehicle",  "large-vehicle",    "ship",         "tennis-court",
      "basketball-court", "storage-tank",   "soccer-ball-field", "roundabout",
      "harbor",         "swimming-pool",    "helicopter"};
  return names;
}

ParsedAnnotations parse_dota(std::string_view text, const ParseOptions& options) {
  text = strip_bom(text);
  ParsedAnnotations out;
  out.class_names = dota_classes();
  std::size_t content_lines = 0;
  std::size_t object_lines = 0;

  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    ++content_lines;
    if (starts_with(line, "imagesource") || starts_with(line, "gsd")) continue;
    ++object_lines;

    std::vector<std::string> tokens;
    std::istringstream ss{std::string(line)};
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (tokens.size() != 10) {
      out.warnings.push_back(line_tag(i) + "expected 10 fields, got " + std::to_string(tokens.size()));
      continue;
    }
    Quad corners;
    bool ok = true;
    for (std::size_t k = 0; k < 4 && ok; ++k) {
      ok = parse_number(tokens[2 * k], corners[k].x) && parse_number(tokens[2 * k + 1], corners[k].y);
    }
    if (!ok) {
      out.warnings.push_back(line_tag(i) + "non-numeric coordinate");
      continue;
    }
    const auto& names = out.class_names;
    const auto it = std::find(names.begin(), names.end(), tokens[8]);
    if (it == names.end()) {
      out.warnings.push_back(line_tag(i) + "unknown category '" + tokens[8] + "'");
      continue;
    }
    if (tokens[9] != "0" && tokens[9] != "1") {
      out.warnings.push_back(line_tag(i) + "difficult flag must be 0 or 1");
      continue;
    }
    try {
      out.objects.emplace_back(corners, static_cast<int>(it - names.begin()), 1.0, tokens[9] == "1");
    } catch (const Error& e) {
      out.warnings.push_back(line_tag(i) + e.what());
    }
  }

  if (content_lines == 0 && options.strict) throw Error(ErrorCode::EmptyFile, "no annotation lines");
  if (object_lines > 0 && out.objects.empty()) {
    throw Error(ErrorCode::AllLinesMalformed, std::to_string(object_lines) + " object lines, none valid");
  }
  return out;
}

ParsedAnnotations parse_icdar(std::string_view text, const ParseOptions& options) {
  text = strip_bom(text);
  ParsedAnnotations out;
  out.class_names = {"text"};
  std::size_t object_lines = 0;

  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    if (i == 0) line = trim(strip_bom(line));
    ++object_lines;

    Quad corners;
    bool ok = true;
    for (std::size_t k = 0; k < 8 && ok; ++k) {
      const auto comma = line.find(',');
      if (comma == std::string_view::npos) {
        ok = false;
        break;
      }
      double& v = (k % 2 == 0) ? corners[k / 2].x : corners[k / 2].y;
      ok = parse_number(line.substr(0, comma), v);
      line.remove_prefix(comma + 1);
    }
    if (!ok) {
      out.warnings.push_back(line_tag(i) + "expected 8 numeric coordinates and a transcription");
      continue;
    }
    const bool difficult = trim(line) == "###";
    try {
      OrientedBox box(corners, 0, 1.0, difficult);
      if (!box.is_convex()) {
        out.warnings.push_back(line_tag(i) + "non-convex quadrilateral");
        continue;
      }
      out.objects.push_back(box);
    } catch (const Error& e) {
      out.warnings.push_back(line_tag(i) + e.what());
    }
  }

  if (object_lines == 0 && options.strict) throw Error(ErrorCode::EmptyFile, "no annotation lines");
  if (object_lines > 0 && out.objects.empty()) {
    throw Error(ErrorCode::AllLinesMalformed, std::to_string(object_lines) + " object lines, none valid");
  }
  return out;
}

namespace {

// Translates and clamps a box into a w x h frame; nullopt if it collapses.
std::optional<OrientedBox> place_box(const OrientedBox& box, Point2 offset, int w, int h,
                                     std::string& why) {
  Quad corners = box.corners();
  for (auto& p : corners) {
    p = p - offset;
    p.x = std::clamp(p.x, 0.0, static_cast<double>(w));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(h));
  }
  try {
    return OrientedBox(corners, box.class_id(), box.score(), box.difficult());
  } catch (const Error& e) {
    why = e.what();
    return std::nullopt;
  }
}

}  // namespace

AnnotatedImage make_annotated_image(std::string image_id, int width, int height,
                                    ParsedAnnotations parsed, std::vector<std::string>* warnings) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  AnnotatedImage img;
  img.image_id = std::move(image_id);
  img.width = width;
  img.height = height;
  img.class_names = std::move(parsed.class_names);
  for (std::size_t i = 0; i < parsed.objects.size(); ++i) {
    std::string why;
    if (auto box = place_box(parsed.objects[i], {0.0, 0.0}, width, height, why)) {
      img.objects.push_back(*box);
    } else if (warnings) {
      warnings->push_back(img.image_id + " object " + std::to_string(i) + " dropped: " + why);
    }
  }
  return img;
}

int TileSpec::step() const {
  return std::max(1, static_cast<int>(std::floor(window * (1.0 - overlap_fraction) + 1e-9)));
}

void TileSpec::validate() const {
  if (window < 1) throw Error(ErrorCode::InvalidArgument, "tile window must be >= 1");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "overlap fraction must lie in [0, 1)");
  }
}

std::vector<int> tile_origins(int extent, const TileSpec& spec) {
  spec.validate();
  std::vector<int> origins;
  const int step = spec.step();
  for (int o = 0; o + spec.window < extent; o += step) origins.push_back(o);
  const int last = std::max(0, extent - spec.window);
  if (origins.empty() || origins.back() != last) origins.push_back(last);
  std::sort(origins.begin(), origins.end());
  origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
  return origins;
}

std::vector<Tile> tile_image(const AnnotatedImage& image, const TileSpec& spec) {
  spec.validate();
  std::vector<Tile> tiles;
  for (const int oy : tile_origins(image.height, spec)) {
    for (const int ox : tile_origins(image.width, spec)) {
      Tile tile;
      tile.origin_x = ox;
      tile.origin_y = oy;
      tile.image.image_id = image.image_id + "__" + std::to_string(ox) + "_" + std::to_string(oy);
      tile.image.width = std::min(spec.window, image.width - ox);
      tile.image.height = std::min(spec.window, image.height - oy);
      tile.image.class_names = image.class_names;
      for (std::size_t i = 0; i < image.objects.size(); ++i) {
        const Point2 c = image.objects[i].centroid();
        if (c.x < ox || c.x >= ox + spec.window || c.y < oy || c.y >= oy + spec.window) continue;
        std::string why;
        const Point2 offset{static_cast<double>(ox), static_cast<double>(oy)};
        if (auto box = place_box(image.objects[i], offset, tile.image.width, tile.image.height, why)) {
          tile.image.objects.push_back(*box);
        } else {
          tile.warnings.push_back(tile.image.image_id + " object " + std::to_string(i) +
                                  " dropped: " + why);
        }
      }
      tiles.push_back(std::move(tile));
    }
  }
  return tiles;
}

}  // namespace midline
