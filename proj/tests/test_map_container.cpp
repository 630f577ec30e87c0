#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "midline/error.hpp"
#include "midline/map_container.hpp"

using namespace midline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("midline_maps_" + name);
  fs::remove_all(dir);
  return dir;
}

MapContainer sample() {
  const std::vector<OrientedBox> boxes{make_rotated_rect({60, 40}, 40, 24, 0.3, 1)};
  MapContainer c;
  c.maps = encode_image(boxes, 120, 90, 2);
  c.class_names = {"a", "b"};
  c.image_id = "img";
  c.config = {{"stride", 4}};
  return c;
}

ErrorCode code_of(const fs::path& dir) {
  try {
    read_map_container(dir);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(MapContainer, RoundTripPreservesTensors) {
  const fs::path dir = scratch("rt");
  const MapContainer c = sample();
  write_map_container(dir, c);
  EXPECT_TRUE(is_map_container(dir));
  const MapContainer back = read_map_container(dir);
  EXPECT_EQ(back.class_names, c.class_names);
  EXPECT_EQ(back.image_id, "img");
  EXPECT_EQ(back.maps.width, c.maps.width);
  EXPECT_EQ(back.maps.height, 23);
  EXPECT_EQ(back.maps.n_objects, 1);
  for (int b = 0; b < kNumBranches; ++b) {
    EXPECT_EQ(back.maps.heatmap[b], c.maps.heatmap[b]);
    EXPECT_EQ(back.maps.reg_mask[b], c.maps.reg_mask[b]);
    for (std::size_t i = 0; i < c.maps.regression[b].size(); ++i) {
      EXPECT_NEAR(back.maps.regression[b].data()[i], c.maps.regression[b].data()[i], 1e-4);
    }
  }
}

TEST(MapContainer, LittleEndianFloat32) {
  const fs::path dir = scratch("le");
  fs::create_directories(dir);
  const std::vector<double> values{1.0, -2.5};
  write_f32_le(dir / "t.f32", values);
  std::ifstream in(dir / "t.f32", std::ios::binary);
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  EXPECT_EQ(fs::file_size(dir / "t.f32"), 8u);
  EXPECT_EQ(bytes[0], 0x00);
  EXPECT_EQ(bytes[3], 0x3F);  // 1.0f = 0x3F800000
  EXPECT_EQ(bytes[2], 0x80);
  EXPECT_EQ(read_f32_le(dir / "t.f32"), values);
}

TEST(MapContainer, MissingTensorIsIoError) {
  const fs::path dir = scratch("missing");
  write_map_container(dir, sample());
  fs::remove(dir / "reg_b2.f32");
  EXPECT_EQ(code_of(dir), ErrorCode::Io);
}

TEST(MapContainer, TruncatedTensorIsShapeMismatch) {
  const fs::path dir = scratch("short");
  write_map_container(dir, sample());
  fs::resize_file(dir / "hm_b1.f32", 40);
  EXPECT_EQ(code_of(dir), ErrorCode::ShapeMismatch);
}

TEST(MapContainer, CorruptManifestIsFormatError) {
  const fs::path dir = scratch("corrupt");
  write_map_container(dir, sample());
  std::ofstream(dir / "manifest.json") << "{not json";
  EXPECT_EQ(code_of(dir), ErrorCode::Format);
}
