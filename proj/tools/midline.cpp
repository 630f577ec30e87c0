#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "midline/commands.hpp"

namespace {

int emit(const midline::CommandResult& result) {
  for (const auto& line : result.messages) std::cerr << line << '\n';
  if (!result.output.empty()) std::cout << result.output;
  return result.exit_code;
}

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("O2_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "event=warning reason=\"O2_SEED is not an unsigned integer, ignored\"\n";
    }
  }
  return flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Middle-line oriented object toolkit"};
  app.require_subcommand(1);

  midline::RunConfig cfg;
  std::string ap_mode = "all-point";
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--stride", cfg.stride, "Feature map stride")->capture_default_str();
    cmd->add_option("--drift-r", cfg.drift_r, "Drift region radius in pixels")->capture_default_str();
    cmd->add_option("--threshold", cfg.threshold, "Heatmap binarization threshold")->capture_default_str();
    cmd->add_option("--branch-low", cfg.branch_low, "Lower bound of the horizontal branch angle range")
        ->capture_default_str();
    cmd->add_option("--branch-high", cfg.branch_high, "Upper bound of the horizontal branch angle range")
        ->capture_default_str();
    cmd->add_option("--merge-iou", cfg.merge_iou, "Cross-branch merge IoU")->capture_default_str();
    cmd->add_option("--alpha", cfg.weights.alpha)->capture_default_str();
    cmd->add_option("--beta", cfg.weights.beta)->capture_default_str();
    cmd->add_option("--gamma", cfg.weights.gamma)->capture_default_str();
    cmd->add_flag("--text-mode", cfg.weights.text_mode, "Disable the perpendicularity term");
    cmd->add_option("--seed", cfg.seed)->capture_default_str();
    cmd->add_option("--jobs,-j", cfg.jobs, "Files processed in parallel")->capture_default_str();
  };

  // tile
  auto* tile = app.add_subcommand("tile", "Split DOTA/ICDAR label files into tiles of normalized JSON");
  std::string tile_in, tile_out;
  midline::TileOptions tile_opts;
  std::vector<int> image_size;
  tile->add_option("input_dir", tile_in)->required();
  tile->add_option("out_dir", tile_out)->required();
  tile->add_option("--window", tile_opts.window)->capture_default_str();
  tile->add_option("--overlap", tile_opts.overlap)->capture_default_str();
  tile->add_option("--format", tile_opts.format)
      ->check(CLI::IsMember({"auto", "dota", "icdar"}))
      ->capture_default_str();
  tile->add_option("--image-size", image_size, "WIDTH HEIGHT for every image")->expected(2);
  tile->add_option("--jobs,-j", tile_opts.jobs)->capture_default_str();

  // encode
  auto* encode = app.add_subcommand("encode", "Ground truth JSON to target map containers");
  std::string enc_gt, enc_out, vocab = "auto";
  encode->add_option("gt", enc_gt)->required();
  encode->add_option("out_dir", enc_out)->required();
  encode->add_option("--vocab", vocab, "auto | dota | text | comma separated classes")->capture_default_str();
  add_run_flags(encode);

  // decode
  auto* decode = app.add_subcommand("decode", "Map containers to detections JSON");
  std::string dec_in, dec_out;
  decode->add_option("maps_dir", dec_in)->required();
  decode->add_option("--out,-o", dec_out)->required();
  add_run_flags(decode);

  // roundtrip
  auto* roundtrip = app.add_subcommand("roundtrip", "Encode then decode and report per-object IoU");
  std::string rt_gt;
  midline::RoundtripOptions rt_opts;
  roundtrip->add_option("gt", rt_gt)->required();
  roundtrip->add_option("--iou-bar", rt_opts.iou_bar)->capture_default_str();
  roundtrip->add_option("--pass-fraction", rt_opts.pass_fraction)->capture_default_str();
  roundtrip->add_option("--vocab", rt_opts.vocabulary)->capture_default_str();
  add_run_flags(roundtrip);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  int samples = 100;
  double tolerance = 1e-4, step = 1e-4, bias = 0.0;
  gradcheck->add_option("--samples", samples)->capture_default_str();
  gradcheck->add_option("--tol", tolerance)->capture_default_str();
  gradcheck->add_option("--step", step)->capture_default_str();
  gradcheck->add_option("--seed", cfg.seed)->capture_default_str();
  gradcheck->add_option("--perturb-gradient", bias)->group("");

  // eval
  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  std::string ev_gt, ev_det, ev_out, mode = "map";
  midline::EvalConfig ev_cfg;
  eval->add_option("gt", ev_gt)->required();
  eval->add_option("dets", ev_det)->required();
  eval->add_option("--mode", mode)->check(CLI::IsMember({"map", "text"}))->capture_default_str();
  eval->add_option("--iou", ev_cfg.iou_threshold)->capture_default_str();
  eval->add_option("--ap-mode", ap_mode)->check(CLI::IsMember({"all-point", "11-point"}))->capture_default_str();
  eval->add_option("--out,-o", ev_out, "Write the report as JSON");
  eval->add_option("--vocab", vocab)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : midline::kExitValidation;
  }
  cfg.seed = effective_seed(cfg.seed);
  cfg.ap_mode = ap_mode == "11-point" ? midline::ApMode::ElevenPoint : midline::ApMode::AllPoint;

  if (*tile) {
    if (image_size.size() == 2) tile_opts.image_size = std::pair{image_size[0], image_size[1]};
    return emit(midline::cmd_tile(tile_in, tile_out, tile_opts));
  }
  if (*encode) return emit(midline::cmd_encode(enc_gt, enc_out, cfg, vocab));
  if (*decode) return emit(midline::cmd_decode(dec_in, cfg.threshold, dec_out, cfg.merge_iou));
  if (*roundtrip) return emit(midline::cmd_roundtrip(rt_gt, cfg, rt_opts));
  if (*gradcheck) return emit(midline::cmd_gradcheck(cfg.seed, samples, bias, tolerance, step));
  ev_cfg.mode = mode == "text" ? midline::EvalMode::Text : midline::EvalMode::Map;
  ev_cfg.ap_mode = cfg.ap_mode;
  std::optional<std::filesystem::path> out;
  if (!ev_out.empty()) out = ev_out;
  return emit(midline::cmd_eval(ev_gt, ev_det, ev_cfg, out, vocab));
}
