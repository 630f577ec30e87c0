#pragma once

// Subcommand implementations behind the `midline` executable. Each returns
// its exit code together with key=value log lines and any table output.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "midline/evaluation.hpp"
#include "midline/loss.hpp"

namespace midline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> messages;
  std::string output;

  void log(std::string line) { messages.push_back(std::move(line)); }
  void fail(int code, std::string line) {
    exit_code = std::max(exit_code, code);
    messages.push_back(std::move(line));
  }
};

struct RunConfig {
  int stride = 4;
  double drift_r = 16.0;
  double threshold = 0.3;
  double branch_low = 88.0;
  double branch_high = 92.0;
  double merge_iou = 0.7;
  LossWeights weights;
  ApMode ap_mode = ApMode::AllPoint;
  std::uint64_t seed = 0;
  int jobs = 1;

  /// Throws Error(InvalidArgument) on an out-of-range setting.
  void validate() const;
  nlohmann::json to_json() const;
};

struct TileOptions {
  int window = 800;
  double overlap = 0.25;
  std::string format = "auto";  // auto | dota | icdar
  std::optional<std::pair<int, int>> image_size;
  int jobs = 1;
};

/// Reads every *.txt label file in input_dir and writes one normalized
/// ground-truth JSON per tile. Image sizes come from `image_size`, then from
/// an optional sizes.csv (image_id,width,height), then from the extent of
/// the annotations.
CommandResult cmd_tile(const std::filesystem::path& input_dir, const std::filesystem::path& out_dir,
                       const TileOptions& options);

/// `gt` may be a JSON file or a directory of JSON files.
CommandResult cmd_encode(const std::filesystem::path& gt, const std::filesystem::path& out_dir,
                         const RunConfig& config, const std::string& vocabulary = "auto");

/// `maps_dir` is one map container or a directory of containers.
CommandResult cmd_decode(const std::filesystem::path& maps_dir, double threshold,
                         const std::filesystem::path& out_json, double merge_iou = 0.7);

struct RoundtripOptions {
  double iou_bar = 0.99;       // per-object IoU counted as recovered
  double pass_fraction = 0.99; // required recovered fraction of resolved objects
  std::string vocabulary = "auto";
};

/// Encodes then decodes each image and reports per-object IoU statistics.
/// Objects whose shortest side is below 4 * stride are reported separately.
CommandResult cmd_roundtrip(const std::filesystem::path& gt, const RunConfig& config,
                            const RoundtripOptions& options = {});

/// `gradient_bias` perturbs every analytic gradient (negative control).
CommandResult cmd_gradcheck(std::uint64_t seed, int samples, double gradient_bias = 0.0,
                            double tolerance = 1e-4, double step = 1e-4);

/// `dets` may be a JSON file or a directory of JSON files.
CommandResult cmd_eval(const std::filesystem::path& gt, const std::filesystem::path& dets,
                       const EvalConfig& config, const std::optional<std::filesystem::path>& out_json,
                       const std::string& vocabulary = "auto");

/// Concatenates the top-level arrays of a JSON file or of every *.json file
/// in a directory (sorted by name).
nlohmann::json load_json_array(const std::filesystem::path& path);

}  // namespace midline
