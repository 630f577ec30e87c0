#pragma once

// DOTA / ICDAR annotation parsing and overlapping-window tiling.

#include <string>
#include <string_view>
#include <vector>

#include "midline/geometry.hpp"

namespace midline {

struct AnnotatedImage {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<OrientedBox> objects;
  std::vector<std::string> class_names;
};

/// The 15 DOTA v1.0 category tokens.
const std::vector<std::string>& dota_classes();

struct ParseOptions {
  bool strict = false;  // empty input raises EmptyFile
};

struct ParsedAnnotations {
  std::vector<OrientedBox> objects;
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;
};

/// Lines: "x1 y1 x2 y2 x3 y3 x4 y4 category difficult". Header lines
/// starting with "imagesource" or "gsd" are skipped. Malformed lines become
/// warnings; throws Error(AllLinesMalformed) if no object line survives.
ParsedAnnotations parse_dota(std::string_view text, const ParseOptions& options = {});

/// Lines: "x1,y1,...,x4,y4,transcription"; "###" marks a difficult box.
/// Non-convex quadrilaterals are reported and skipped.
ParsedAnnotations parse_icdar(std::string_view text, const ParseOptions& options = {});

/// Clamps every corner into [0, width] x [0, height]; boxes that collapse are
/// dropped and reported in `warnings`.
AnnotatedImage make_annotated_image(std::string image_id, int width, int height,
                                    ParsedAnnotations parsed, std::vector<std::string>* warnings = nullptr);

struct TileSpec {
  int window = 800;
  double overlap_fraction = 0.25;

  int step() const;
  /// Throws Error(InvalidArgument) unless window >= 1 and 0 <= overlap < 1.
  void validate() const;
};

/// Window origins along one axis; the last window is pulled back to end at
/// the image edge.
std::vector<int> tile_origins(int extent, const TileSpec& spec);

struct Tile {
  int origin_x = 0;
  int origin_y = 0;
  AnnotatedImage image;  // image_id = parent + "__ox_oy"
  std::vector<std::string> warnings;
};

/// An object goes to every tile whose half-open window contains its corner
/// centroid; its corners are translated by -origin and clamped to the tile.
std::vector<Tile> tile_image(const AnnotatedImage& image, const TileSpec& spec);

}  // namespace midline
