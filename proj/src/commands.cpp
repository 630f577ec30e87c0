#include "midline/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "midline/annotation_json.hpp"
#include "midline/decoder.hpp"
#include "midline/error.hpp"
#include "midline/grad_check.hpp"
#include "midline/map_container.hpp"
#include "midline/rotated_iou.hpp"
#include "midline/target_encoder.hpp"

namespace midline {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Io:
    case ErrorCode::Format:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
}

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double shortest_side(const OrientedBox& box) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) m = std::min(m, distance(box.corners()[i], box.corners()[(i + 1) % 4]));
  return m;
}

EncoderConfig encoder_config(const RunConfig& config) {
  EncoderConfig enc;
  enc.stride = config.stride;
  enc.drift_r = config.drift_r;
  enc.branches = {config.branch_low, config.branch_high};
  return enc;
}

}  // namespace

void RunConfig::validate() const {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (!(drift_r > 0.0)) throw Error(ErrorCode::InvalidArgument, "drift r must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  if (!(branch_low < branch_high)) throw Error(ErrorCode::InvalidArgument, "branch_low must be below branch_high");
  if (!(merge_iou > 0.0 && merge_iou < 1.0)) throw Error(ErrorCode::InvalidArgument, "merge IoU must lie in (0, 1)");
  weights.validate();
}

nlohmann::json RunConfig::to_json() const {
  return {{"stride", stride},
          {"drift_r", drift_r},
          {"threshold", threshold},
          {"branch_low", branch_low},
          {"branch_high", branch_high},
          {"merge_iou", merge_iou},
          {"alpha_focal", weights.alpha_focal},
          {"alpha", weights.alpha},
          {"beta", weights.beta},
          {"gamma", weights.gamma},
          {"text_mode", weights.text_mode},
          {"ap_mode", ap_mode == ApMode::AllPoint ? "all-point" : "11-point"},
          {"seed", seed}};
}

nlohmann::json load_json_array(const fs::path& path) {
  if (fs::is_directory(path)) {
    nlohmann::json merged = nlohmann::json::array();
    for (const auto& file : sorted_files(path, ".json")) {
      const auto part = read_json_file(file);
      if (!part.is_array()) throw Error(ErrorCode::Format, file.string() + " is not a JSON array");
      for (const auto& item : part) merged.push_back(item);
    }
    return merged;
  }
  auto value = read_json_file(path);
  if (!value.is_array()) throw Error(ErrorCode::Format, path.string() + " is not a JSON array");
  return value;
}

// --- tile -------------------------------------------------------------------

namespace {

struct FileOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> messages;
  int tiles = 0;
  int objects = 0;
};

std::map<std::string, std::pair<int, int>> read_sizes(const fs::path& dir) {
  std::map<std::string, std::pair<int, int>> sizes;
  const fs::path file = dir / "sizes.csv";
  if (!fs::is_regular_file(file)) return sizes;
  std::istringstream in(read_text(file));
  for (std::string line; std::getline(in, line);) {
    std::istringstream row(line);
    std::string id, w, h;
    if (!std::getline(row, id, ',') || !std::getline(row, w, ',') || !std::getline(row, h)) continue;
    try {
      sizes[id] = {std::stoi(w), std::stoi(h)};
    } catch (const std::exception&) {
      // header or malformed row
    }
  }
  return sizes;
}

bool looks_like_icdar(const std::string& text) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.rfind("imagesource", 0) == 0 || line.rfind("gsd", 0) == 0) continue;
    return line.find(',') != std::string::npos;
  }
  return false;
}

}  // namespace

CommandResult cmd_tile(const fs::path& input_dir, const fs::path& out_dir, const TileOptions& options) {
  CommandResult result;
  const TileSpec spec{options.window, options.overlap};
  try {
    spec.validate();
  } catch (const Error& e) {
    result.fail(kExitValidation, std::string("event=error command=tile reason=\"") + e.what() + "\"");
    return result;
  }

  std::vector<fs::path> files;
  std::map<std::string, std::pair<int, int>> sizes;
  try {
    if (!fs::is_directory(input_dir)) throw Error(ErrorCode::Io, input_dir.string() + " is not a directory");
    files = sorted_files(input_dir, ".txt");
    sizes = read_sizes(input_dir);
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    result.fail(kExitIo, std::string("event=error command=tile reason=\"") + e.what() + "\"");
    return result;
  }

  std::vector<FileOutcome> outcomes(files.size());
  parallel_for(files.size(), options.jobs, [&](std::size_t i) {
    FileOutcome& out = outcomes[i];
    const fs::path& file = files[i];
    try {
      const std::string text = read_text(file);
      const bool icdar = options.format == "icdar" || (options.format == "auto" && looks_like_icdar(text));
      std::string image_id = file.stem().string();
      if (icdar && image_id.rfind("gt_", 0) == 0) image_id = image_id.substr(3);

      ParsedAnnotations parsed = icdar ? parse_icdar(text) : parse_dota(text);
      for (const auto& w : parsed.warnings) out.messages.push_back("event=warning file=" + file.filename().string() + " detail=\"" + w + "\"");

      int width = 0, height = 0;
      if (options.image_size) {
        std::tie(width, height) = *options.image_size;
      } else if (auto it = sizes.find(image_id); it != sizes.end()) {
        std::tie(width, height) = it->second;
      } else {
        double mx = 1.0, my = 1.0;
        for (const auto& box : parsed.objects) {
          for (const Point2 p : box.corners()) {
            mx = std::max(mx, p.x);
            my = std::max(my, p.y);
          }
        }
        width = static_cast<int>(std::ceil(mx));
        height = static_cast<int>(std::ceil(my));
      }

      std::vector<std::string> warnings;
      const AnnotatedImage image = make_annotated_image(image_id, width, height, std::move(parsed), &warnings);
      for (const auto& tile : tile_image(image, spec)) {
        warnings.insert(warnings.end(), tile.warnings.begin(), tile.warnings.end());
        const AnnotatedImage one[] = {tile.image};
        write_json_file(out_dir / (tile.image.image_id + ".json"), ground_truth_to_json(one));
        ++out.tiles;
        out.objects += static_cast<int>(tile.image.objects.size());
      }
      for (const auto& w : warnings) out.messages.push_back("event=warning detail=\"" + w + "\"");
    } catch (const Error& e) {
      out.exit_code = exit_code_for(e);
      out.messages.push_back("event=error file=" + file.filename().string() + " reason=\"" + e.what() + "\"");
    } catch (const std::exception& e) {
      out.exit_code = kExitIo;
      out.messages.push_back("event=error file=" + file.filename().string() + " reason=\"" + e.what() + "\"");
    }
  });

  int tiles = 0, objects = 0;
  for (const auto& out : outcomes) {
    result.exit_code = std::max(result.exit_code, out.exit_code);
    result.messages.insert(result.messages.end(), out.messages.begin(), out.messages.end());
    tiles += out.tiles;
    objects += out.objects;
  }
  result.log("event=summary command=tile images=" + std::to_string(files.size()) + " tiles=" +
             std::to_string(tiles) + " objects=" + std::to_string(objects) + " window=" +
             std::to_string(spec.window) + " overlap=" + num(spec.overlap_fraction));
  return result;
}

// --- encode -----------------------------------------------------------------

CommandResult cmd_encode(const fs::path& gt, const fs::path& out_dir, const RunConfig& config,
                         const std::string& vocabulary) {
  CommandResult result;
  nlohmann::json raw;
  std::vector<AnnotatedImage> images;
  std::vector<std::string> vocab;
  try {
    config.validate();
    raw = load_json_array(gt);
    vocab = resolve_vocabulary(vocabulary, raw);
    images = ground_truth_from_json(raw, vocab);
  } catch (const Error& e) {
    result.fail(exit_code_for(e), std::string("event=error command=encode reason=\"") + e.what() + "\"");
    return result;
  }

  const EncoderConfig enc = encoder_config(config);
  std::vector<FileOutcome> outcomes(images.size());
  parallel_for(images.size(), config.jobs, [&](std::size_t i) {
    const AnnotatedImage& img = images[i];
    FileOutcome& out = outcomes[i];
    try {
      MapContainer container;
      container.maps = encode_image(img.objects, img.width, img.height, static_cast<int>(vocab.size()), enc);
      container.class_names = vocab;
      container.image_id = img.image_id;
      container.config = config.to_json();
      write_map_container(out_dir / img.image_id, container);
      out.objects = container.maps.n_objects;
    } catch (const Error& e) {
      out.exit_code = exit_code_for(e);
      out.messages.push_back("event=error image=" + img.image_id + " reason=\"" + e.what() + "\"");
    }
  });

  int objects = 0;
  for (const auto& out : outcomes) {
    result.exit_code = std::max(result.exit_code, out.exit_code);
    result.messages.insert(result.messages.end(), out.messages.begin(), out.messages.end());
    objects += out.objects;
  }
  result.log("event=summary command=encode images=" + std::to_string(images.size()) +
             " objects=" + std::to_string(objects) + " stride=" + std::to_string(config.stride) +
             " drift_r=" + num(config.drift_r) + " classes=" + std::to_string(vocab.size()));
  return result;
}

// --- decode -----------------------------------------------------------------

CommandResult cmd_decode(const fs::path& maps_dir, double threshold, const fs::path& out_json,
                         double merge_iou) {
  CommandResult result;
  if (!(threshold > 0.0 && threshold < 1.0) || !(merge_iou > 0.0 && merge_iou < 1.0)) {
    result.fail(kExitValidation, "event=error command=decode reason=\"threshold and merge IoU must lie in (0, 1)\"");
    return result;
  }

  std::vector<fs::path> containers;
  if (is_map_container(maps_dir)) {
    containers.push_back(maps_dir);
  } else if (fs::is_directory(maps_dir)) {
    for (const auto& entry : fs::directory_iterator(maps_dir)) {
      if (entry.is_directory() && is_map_container(entry.path())) containers.push_back(entry.path());
    }
    std::sort(containers.begin(), containers.end());
  }
  if (containers.empty()) {
    result.fail(kExitIo, "event=error command=decode reason=\"no map container at " + maps_dir.string() + "\"");
    return result;
  }

  nlohmann::json all = nlohmann::json::array();
  int components = 0, dropped = 0;
  for (const auto& dir : containers) {
    try {
      const MapContainer container = read_map_container(dir);
      const DecodeResult decoded = decode(container.maps, {threshold, merge_iou});
      const std::string image_id = container.image_id.empty() ? dir.filename().string() : container.image_id;
      for (auto& d : detections_to_json(decoded.detections, container.class_names, image_id)) all.push_back(d);
      components += decoded.components;
      dropped += decoded.dropped_degenerate;
    } catch (const Error& e) {
      const int code = e.code() == ErrorCode::ShapeMismatch ? kExitIo : exit_code_for(e);
      result.fail(code, "event=error container=" + dir.string() + " reason=\"" + e.what() + "\"");
    }
  }
  if (result.exit_code == kExitIo) return result;

  try {
    write_json_file(out_json, all);
  } catch (const Error& e) {
    result.fail(kExitIo, std::string("event=error command=decode reason=\"") + e.what() + "\"");
    return result;
  }
  result.log("event=summary command=decode containers=" + std::to_string(containers.size()) +
             " components=" + std::to_string(components) + " detections=" + std::to_string(all.size()) +
             " dropped_degenerate=" + std::to_string(dropped) + " threshold=" + num(threshold));
  return result;
}

// --- roundtrip ----------------------------------------------------------------

CommandResult cmd_roundtrip(const fs::path& gt, const RunConfig& config, const RoundtripOptions& options) {
  CommandResult result;
  std::vector<AnnotatedImage> images;
  try {
    config.validate();
    const auto raw = load_json_array(gt);
    images = ground_truth_from_json(raw, resolve_vocabulary(options.vocabulary, raw));
  } catch (const Error& e) {
    result.fail(exit_code_for(e), std::string("event=error command=roundtrip reason=\"") + e.what() + "\"");
    return result;
  }

  const EncoderConfig enc = encoder_config(config);
  const double resolved_side = 4.0 * config.stride;
  struct Stats {
    int n = 0;
    int recovered = 0;
    double min_iou = 1.0;
    double sum_iou = 0.0;
  } resolved, sub;

  for (const auto& img : images) {
    if (img.objects.empty()) continue;
    DecodeResult decoded;
    try {
      const TargetMaps maps = encode_image(img.objects, img.width, img.height,
                                           static_cast<int>(img.class_names.size()), enc);
      decoded = decode(maps, {config.threshold, config.merge_iou});
    } catch (const Error& e) {
      result.fail(exit_code_for(e), "event=error image=" + img.image_id + " reason=\"" + e.what() + "\"");
      continue;
    }
    for (const auto& box : img.objects) {
      double best = 0.0;
      for (const auto& det : decoded.detections) {
        if (det.box.class_id() == box.class_id() && box.is_convex()) best = std::max(best, rotated_iou(box, det.box));
      }
      Stats& s = shortest_side(box) >= resolved_side ? resolved : sub;
      ++s.n;
      s.sum_iou += best;
      s.min_iou = std::min(s.min_iou, best);
      if (best >= options.iou_bar) ++s.recovered;
    }
  }

  auto describe = [&](const char* group, const Stats& s) {
    const double frac = s.n > 0 ? static_cast<double>(s.recovered) / s.n : 1.0;
    result.log(std::string("event=roundtrip group=") + group + " objects=" + std::to_string(s.n) +
               " min_iou=" + num(s.n ? s.min_iou : 0.0) + " mean_iou=" + num(s.n ? s.sum_iou / s.n : 0.0) +
               " fraction_ge_" + num(options.iou_bar) + "=" + num(frac));
    return frac;
  };
  const double frac = describe("resolved", resolved);
  describe("sub_resolution", sub);

  if (resolved.n == 0) {
    result.log("event=summary command=roundtrip status=pass vacuous=true");
  } else if (frac < options.pass_fraction) {
    result.fail(kExitValidation, "event=summary command=roundtrip status=fail required=" + num(options.pass_fraction));
  } else {
    result.log("event=summary command=roundtrip status=pass required=" + num(options.pass_fraction));
  }
  return result;
}

// --- gradcheck ----------------------------------------------------------------

CommandResult cmd_gradcheck(std::uint64_t seed, int samples, double gradient_bias, double tolerance,
                            double step) {
  CommandResult result;
  if (samples < 1) {
    result.fail(kExitValidation, "event=error command=gradcheck reason=\"samples must be >= 1\"");
    return result;
  }
  try {
    for (const auto& s : run_grad_checks(seed, samples, step, tolerance, gradient_bias)) {
      std::string line = "event=gradcheck loss=" + std::string(loss_name(s.kind)) + " samples=" +
                         std::to_string(s.samples) + " max_rel_error=" + num(s.max_rel_error) +
                         " tolerance=" + num(tolerance) + " status=" + (s.passed ? "pass" : "fail");
      if (s.passed) {
        result.log(std::move(line));
      } else {
        result.fail(kExitValidation, std::move(line));
      }
    }
  } catch (const Error& e) {
    result.fail(kExitValidation, std::string("event=error command=gradcheck reason=\"") + e.what() + "\"");
  }
  result.log("event=summary command=gradcheck seed=" + std::to_string(seed) +
             " status=" + (result.exit_code == kExitOk ? "pass" : "fail"));
  return result;
}

// --- eval -----------------------------------------------------------------------

CommandResult cmd_eval(const fs::path& gt, const fs::path& dets, const EvalConfig& config,
                       const std::optional<fs::path>& out_json, const std::string& vocabulary) {
  CommandResult result;
  if (!(config.iou_threshold > 0.0 && config.iou_threshold <= 1.0)) {
    result.fail(kExitValidation, "event=error command=eval reason=\"IoU threshold must lie in (0, 1]\"");
    return result;
  }
  nlohmann::json raw_gt, raw_det;
  try {
    raw_gt = load_json_array(gt);
    raw_det = load_json_array(dets);
  } catch (const Error& e) {
    result.fail(kExitIo, std::string("event=error command=eval reason=\"") + e.what() + "\"");
    return result;
  }

  try {
    const auto vocab = resolve_vocabulary(vocabulary, raw_gt);
    const auto images = ground_truth_from_json(raw_gt, vocab);
    const std::string default_id = images.size() == 1 ? images.front().image_id : std::string{};
    const auto detections = detections_from_json(raw_det, vocab, default_id);
    const EvalReport report = evaluate(images, detections, vocab, config);
    result.output = format_table(report);
    if (out_json) write_json_file(*out_json, to_json(report));
    std::string line = "event=summary command=eval mode=" + std::string(config.mode == EvalMode::Map ? "map" : "text") +
                       " map=" + num(report.map_score);
    if (report.f1) {
      line += " precision=" + num(*report.precision) + " recall=" + num(*report.recall) + " f1=" + num(*report.f1);
    }
    result.log(std::move(line));
  } catch (const Error& e) {
    result.fail(exit_code_for(e), std::string("event=error command=eval reason=\"") + e.what() + "\"");
  }
  return result;
}

}  // namespace midline
