#include "midline/map_container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "midline/error.hpp"

namespace midline {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

struct TensorSpec {
  std::string name;
  int channels;
};

std::vector<TensorSpec> tensor_specs(int num_classes) {
  return {{"hm_b1", num_classes}, {"hm_b2", num_classes}, {"reg_b1", kRegressionChannels},
          {"reg_b2", kRegressionChannels}, {"mask_b1", 1}, {"mask_b2", 1}};
}

template <typename T>
std::vector<double> as_doubles(const Grid<T>& g) {
  return {g.data().begin(), g.data().end()};
}

}  // namespace

void write_f32_le(const fs::path& file, std::span<const double> values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + file.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

std::vector<double> read_f32_le(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::ShapeMismatch, file.string() + " is not f32 data");
  std::vector<double> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    values[i] = std::bit_cast<float>(to_little_endian(bits));
  }
  return values;
}

bool is_map_container(const fs::path& dir) { return fs::is_regular_file(dir / kManifest); }

void write_map_container(const fs::path& dir, const MapContainer& container) {
  const TargetMaps& maps = container.maps;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& spec : tensor_specs(maps.num_classes)) {
    tensors.push_back({{"name", spec.name},
                       {"file", spec.name + ".f32"},
                       {"dtype", "float32-le"},
                       {"shape", {spec.channels, maps.height, maps.width}}});
  }

  nlohmann::json manifest = {
      {"stride", maps.stride},       {"num_classes", maps.num_classes},
      {"width", maps.width},         {"height", maps.height},
      {"image_w", maps.image_w},     {"image_h", maps.image_h},
      {"class_names", container.class_names},
      {"tensors", tensors},          {"n_objects", maps.n_objects},
      {"image_id", container.image_id},
      {"config", container.config.is_null() ? nlohmann::json::object() : container.config}};

  {
    std::ofstream out(dir / kManifest, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
  }

  for (int b = 0; b < kNumBranches; ++b) {
    const std::string suffix = "_b" + std::to_string(b + 1) + ".f32";
    write_f32_le(dir / ("hm" + suffix), as_doubles(maps.heatmap[b]));
    write_f32_le(dir / ("reg" + suffix), as_doubles(maps.regression[b]));
    write_f32_le(dir / ("mask" + suffix), as_doubles(maps.reg_mask[b]));
  }
}

MapContainer read_map_container(const fs::path& dir) {
  std::ifstream in(dir / kManifest);
  if (!in) throw Error(ErrorCode::Io, "missing manifest.json in " + dir.string());

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, "bad manifest in " + dir.string() + ": " + e.what());
  }

  MapContainer out;
  TargetMaps& maps = out.maps;
  try {
    const int stride = manifest.at("stride").get<int>();
    const int num_classes = manifest.at("num_classes").get<int>();
    maps = TargetMaps::zeros(manifest.at("image_w").get<int>(), manifest.at("image_h").get<int>(),
                             stride, num_classes);
    if (manifest.at("width").get<int>() != maps.width ||
        manifest.at("height").get<int>() != maps.height) {
      throw Error(ErrorCode::ShapeMismatch, "manifest map size disagrees with image size / stride");
    }
    maps.n_objects = manifest.value("n_objects", 0);
    out.class_names = manifest.at("class_names").get<std::vector<std::string>>();
    out.image_id = manifest.value("image_id", std::string{});
    out.config = manifest.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, "bad manifest in " + dir.string() + ": " + e.what());
  }
  if (static_cast<int>(out.class_names.size()) != maps.num_classes) {
    throw Error(ErrorCode::ShapeMismatch, "class_names length differs from num_classes");
  }

  auto load = [&](const std::string& name, auto& grid) {
    const auto values = read_f32_le(dir / (name + ".f32"));
    if (values.size() != grid.size()) {
      throw Error(ErrorCode::ShapeMismatch, name + " has " + std::to_string(values.size()) +
                                                " values, manifest implies " +
                                                std::to_string(grid.size()));
    }
    auto data = grid.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      using V = std::remove_reference_t<decltype(data[i])>;
      if constexpr (std::is_same_v<V, std::uint8_t>) {
        data[i] = values[i] > 0.5 ? 1 : 0;
      } else {
        data[i] = values[i];
      }
    }
  };
  for (int b = 0; b < kNumBranches; ++b) {
    const std::string suffix = "_b" + std::to_string(b + 1);
    load("hm" + suffix, maps.heatmap[b]);
    load("reg" + suffix, maps.regression[b]);
    load("mask" + suffix, maps.reg_mask[b]);
  }
  return out;
}

}  // namespace midline
