#include "trajcraft/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "trajcraft/clip_io.hpp"
#include "trajcraft/curation.hpp"
#include "trajcraft/diffusion/checkpoint.hpp"
#include "trajcraft/diffusion/dataset.hpp"
#include "trajcraft/diffusion/sampler.hpp"
#include "trajcraft/diffusion/training.hpp"
#include "trajcraft/errors.hpp"
#include "trajcraft/metrics.hpp"
#include "trajcraft/server.hpp"
#include "trajcraft/synthscene.hpp"

namespace trajcraft {

namespace {

using nlohmann::json;
namespace dm = diffusion;

std::string indexed(const char* prefix, size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%05zu", prefix, i);
  return buf;
}

// --- synth -----------------------------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string out;
  int count = 1;
  int frames = 8;
  int width = 16;
  int height = 16;
  int layers = 3;
  bool static_scene = false;
  std::string camera = "static";
  double camera_amount = 0.0;
};

Trajectory camera_path(const SynthArgs& a, const SceneDescription& scene) {
  if (a.camera == "orbit") {
    const auto [color, depth] = render_scene(scene, PoseSE3::identity(), scene.intrinsics(), 0);
    return generate(OrbitParams{Eigen::Vector3d::UnitY(), a.camera_amount, median_depth(depth)},
                    a.frames);
  }
  if (a.camera == "pan") return generate(PanParams{Eigen::Vector3d::UnitY(), a.camera_amount}, a.frames);
  if (a.camera == "dolly") {
    return generate(DollyParams{Eigen::Vector3d(0.0, 0.0, -a.camera_amount)}, a.frames);
  }
  throw ValidationError("unknown camera path \"" + a.camera + "\"");
}

void run_synth(const SynthArgs& a, std::ostream& out) {
  SceneConfig cfg;
  cfg.n = a.frames;
  cfg.width = a.width;
  cfg.height = a.height;
  cfg.n_layers = a.layers;
  cfg.static_scene = a.static_scene;
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    const fs::path dir = a.count == 1 ? fs::path(a.out) : fs::path(a.out) / indexed("clip", i);
    const SceneDescription scene = make_scene(seed, cfg);
    const Clip clip = a.camera == "static" ? render_clip(scene) : render_clip(scene, camera_path(a, scene));
    write_clip(clip, dir);
    write_json(scene_to_json(scene), dir / "scene.json");
  }
  out << "wrote " << a.count << " clip(s) to " << a.out << "\n";
}

// --- lift ------------------------------------------------------------------------------------

void write_ply(const PointCloudFrame& frame, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "ply\nformat ascii 1.0\nelement vertex " << frame.points.size()
    << "\nproperty float x\nproperty float y\nproperty float z\n"
       "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (const CloudPoint& p : frame.points) {
    f << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
      << int(quantize_unit(p.color.r)) << ' ' << int(quantize_unit(p.color.g)) << ' '
      << int(quantize_unit(p.color.b)) << '\n';
  }
  if (!f) throw IoError("cannot write " + path.string());
}

void run_lift(const std::string& clip_dir, const std::string& out_dir, std::ostream& out) {
  const Clip clip = read_clip(clip_dir);
  const DynamicPointCloud cloud = lift_video(clip.colors, clip.depths, clip.intrinsics);
  fs::create_directories(out_dir);
  size_t total = 0;
  for (size_t i = 0; i < cloud.frames.size(); ++i) {
    write_ply(cloud.frames[i], fs::path(out_dir) / (indexed("cloud", i) + ".ply"));
    total += cloud.frames[i].points.size();
  }
  write_json(intrinsics_to_json(cloud.intrinsics), fs::path(out_dir) / "intrinsics.json");
  out << "lifted " << total << " points over " << cloud.frames.size() << " frames\n";
}

// --- render ----------------------------------------------------------------------------------

// Accepts a Trajectory JSON {n, poses} or a parametric spec {kind, params}.
Trajectory load_trajectory(const fs::path& path, const Clip& clip) {
  const json j = read_json(path);
  if (j.is_object() && j.contains("kind")) {
    TrajectorySpec spec = spec_from_json(j);
    if (auto* orbit = std::get_if<OrbitParams>(&spec); orbit && !orbit->pivot_depth) {
      orbit->pivot_depth = median_depth(clip.depths.front());
    }
    return generate(spec, static_cast<int>(clip.frame_count()));
  }
  return trajectory_from_json(j);
}

void run_render(const std::string& clip_dir, const std::string& traj_path,
                const std::string& out_dir, int splat_radius, std::ostream& out) {
  const Clip clip = read_clip(clip_dir);
  const Trajectory traj = load_trajectory(traj_path, clip);
  const DynamicPointCloud cloud = lift_video(clip.colors, clip.depths, clip.intrinsics);
  const std::vector<RenderOutput> renders =
      render_trajectory(cloud, traj, clip.intrinsics, splat_radius);
  Video colors;
  MaskVideo masks;
  DepthVideo depths;
  for (const RenderOutput& r : renders) {
    colors.push_back(r.color);
    masks.push_back(r.mask);
    depths.push_back(r.depth);
  }
  write_video(colors, out_dir);
  write_masks(masks, out_dir);
  write_depths(depths, out_dir);
  write_json(trajectory_to_json(traj), fs::path(out_dir) / "trajectory.json");
  out << "rendered " << renders.size() << " frames, coverage " << coverage(masks) << "\n";
}

// --- curation --------------------------------------------------------------------------------

std::vector<fs::path> clip_dirs(const std::vector<std::string>& clips, const std::string& root) {
  std::vector<fs::path> dirs(clips.begin(), clips.end());
  if (!root.empty()) {
    if (!fs::is_directory(root)) throw IoError(root + " is not a directory");
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && fs::exists(e.path() / "meta.json")) found.push_back(e.path());
    }
    std::sort(found.begin(), found.end());
    dirs.insert(dirs.end(), found.begin(), found.end());
  }
  if (dirs.empty()) throw ValidationError("no clips given (use --clip or --clips)");
  return dirs;
}

struct CurateArgs {
  std::vector<std::string> clips;
  std::string clips_root;
  std::string out;
  std::uint64_t seed = 0;
  /// Items to write; 0 means one per clip.
  int count = 0;
  int splat_radius = 1;
  double max_rotation = 15.0;
  double translation_fraction = 0.15;
  int length = 8;
};

// Item i uses clip i % clip_count and seed + i.
void run_curate_mono(const CurateArgs& a, std::ostream& out) {
  const std::vector<fs::path> dirs = clip_dirs(a.clips, a.clips_root);
  std::vector<Clip> clips;
  for (const fs::path& dir : dirs) {
    try {
      clips.push_back(read_clip(dir));
    } catch (const ValidationError& e) {
      throw FormatError(dir.string() + ": " + e.what());
    }
  }
  const int count = a.count > 0 ? a.count : static_cast<int>(clips.size());
  DatasetWriter writer(a.out);
  for (int i = 0; i < count; ++i) {
    const Clip& clip = clips[static_cast<size_t>(i) % clips.size()];
    TransformRanges ranges;
    ranges.max_rotation_degrees = a.max_rotation;
    ranges.max_translation =
        Eigen::Vector3d::Constant(a.translation_fraction * median_depth(clip.depths.front()));
    writer.append(make_monocular_pair(clip, a.seed + static_cast<std::uint64_t>(i), ranges,
                                      a.splat_radius));
  }
  const json manifest = writer.finish();
  out << "wrote " << manifest.at("count") << " pairs to " << a.out << "\n";
}

// Item i draws its windows from clip i % clip_count with seed + i; draws whose windows do not
// overlap enough are skipped.
void run_curate_mv(const CurateArgs& a, std::ostream& out) {
  std::vector<Clip> clips;
  for (const fs::path& dir : clip_dirs(a.clips, a.clips_root)) clips.push_back(read_clip(dir));
  const int count = a.count > 0 ? a.count : static_cast<int>(clips.size());
  DatasetWriter writer(a.out);
  size_t skipped = 0;
  for (int i = 0; i < count; ++i) {
    const Clip& clip = clips[static_cast<size_t>(i) % clips.size()];
    try {
      writer.append(make_random_triplet(clip, a.length, a.seed + static_cast<std::uint64_t>(i),
                                        a.splat_radius));
    } catch (const OverlapError&) {
      ++skipped;
    }
  }
  const json manifest = writer.finish();
  out << "wrote " << manifest.at("count") << " triplets to " << a.out;
  if (skipped) out << " (" << skipped << " draws without enough overlap skipped)";
  out << "\n";
}

// --- train / sample / eval -------------------------------------------------------------------

struct TrainArgs {
  int stage = 1;
  std::string config;
  std::string data;
  std::string out;
  std::string init;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
};

void run_train(const TrainArgs& a, std::ostream& out) {
  json cfg_json = json::object();
  if (!a.config.empty()) cfg_json = read_json(a.config);
  dm::TrainOptions opts = dm::options_from_json(cfg_json);
  if (a.stage == 2 && !cfg_json.contains("lr")) opts.lr = dm::kStage2DefaultLr;
  if (a.seed) opts.seed = *a.seed;
  if (a.steps) opts.steps = *a.steps;
  opts.validate();

  dm::ModelParams<float> params;
  if (!a.init.empty()) {
    params = dm::load_checkpoint(a.init).params;
  } else if (a.stage == 2) {
    throw ValidationError("stage 2 starts from a stage-1 checkpoint (--init)");
  } else {
    params = dm::init_params<float>(dm::config_from_json(cfg_json), opts.seed);
  }

  const std::vector<dm::DiffusionExample> data = dm::to_examples(read_dataset(a.data));
  const auto t0 = std::chrono::steady_clock::now();
  double last_loss = 0.0;
  const dm::StepCallback log = [&](int step, double loss, const dm::ModelParams<float>&) {
    last_loss = loss;
    if (opts.log_every > 0 && (step % opts.log_every == 0 || step == opts.steps)) {
      out << "step " << step << " loss " << loss << "\n";
    }
  };
  params = a.stage == 1 ? dm::train_stage1(std::move(params), data, opts, log)
                        : dm::train_stage2(std::move(params), data, opts, log);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  dm::save_checkpoint(params, a.out,
                      {{"stage", a.stage}, {"options", dm::options_to_json(opts)},
                       {"final_batch_loss", last_loss}});
  out << "stage " << a.stage << ": " << opts.steps << " steps in " << secs
      << " s, last batch loss " << last_loss << ", saved " << a.out << "\n";
}

struct SampleArgs {
  std::string ckpt;
  std::string render;
  std::string mask;
  std::string ref;
  std::string out;
  int steps = 20;
  std::uint64_t seed = 0;
};

void run_sample(const SampleArgs& a, std::ostream& out) {
  const dm::Checkpoint ck = dm::load_checkpoint(a.ckpt);
  const auto render = dm::to_tensor<float>(read_video(a.render));
  const auto mask = dm::to_tensor<float>(read_masks(a.mask.empty() ? a.render : a.mask));
  std::optional<dm::VideoTensor<float>> ref;
  if (!a.ref.empty()) ref = dm::to_tensor<float>(read_video(a.ref));
  const auto video = dm::sample(ck.params, render, mask, ref ? &*ref : nullptr, a.steps, a.seed);
  write_video(dm::to_video(video), a.out);
  out << "sampled " << video.frames << " frames to " << a.out << "\n";
}

void run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& mask_dir,
              const std::string& report_path, std::ostream& out) {
  const Video pred = read_video(pred_dir);
  const Video gt = read_video(gt_dir);
  std::optional<MaskVideo> mask;
  if (!mask_dir.empty()) mask = read_masks(mask_dir);
  const VideoReport report = video_report(pred, gt, mask ? &*mask : nullptr);
  const json j = report.to_json();
  if (!report_path.empty()) write_json(j, report_path);
  out << j.dump(2) << "\n";
}

void run_serve(const std::string& clip_dir, const ServerOptions& opts, std::ostream& out) {
  PreviewServer server(read_clip(clip_dir), opts);
  out << "serving " << clip_dir << " on http://" << opts.host << ":" << opts.port << std::endl;
  server.listen();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"trajcraft: point-cloud trajectory rendering, data curation and a toy video "
               "diffusion model"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render synthetic layered RGB-D clips");
  c_synth->add_option("--seed", synth.seed, "Scene seed (clip i uses seed + i)");
  c_synth->add_option("--out", synth.out, "Output clip directory")->required();
  c_synth->add_option("--count", synth.count, "Number of clips")->check(CLI::PositiveNumber);
  c_synth->add_option("--frames", synth.frames)->check(CLI::PositiveNumber);
  c_synth->add_option("--width", synth.width)->check(CLI::PositiveNumber);
  c_synth->add_option("--height", synth.height)->check(CLI::PositiveNumber);
  c_synth->add_option("--layers", synth.layers, "Layers including the background")
      ->check(CLI::Range(2, 16));
  c_synth->add_flag("--static", synth.static_scene, "No layer motion");
  c_synth->add_option("--camera", synth.camera, "Camera path: static, orbit, pan or dolly")
      ->check(CLI::IsMember({"static", "orbit", "pan", "dolly"}));
  c_synth->add_option("--camera-amount", synth.camera_amount,
                      "Orbit/pan degrees or dolly distance over the clip");

  std::string lift_clip, lift_out;
  auto* c_lift = app.add_subcommand("lift", "Lift a clip to per-frame PLY point clouds");
  c_lift->add_option("--clip", lift_clip)->required();
  c_lift->add_option("--out", lift_out)->required();

  std::string render_clip_dir, render_traj, render_out;
  int render_radius = 0;
  auto* c_render = app.add_subcommand("render", "Render a clip's point cloud along a trajectory");
  c_render->add_option("--clip", render_clip_dir)->required();
  c_render->add_option("--traj", render_traj, "Trajectory JSON or trajectory spec")->required();
  c_render->add_option("--out", render_out)->required();
  c_render->add_option("--splat-radius", render_radius)->check(CLI::Range(0, 8));

  CurateArgs mono;
  auto* c_mono = app.add_subcommand("curate-mono", "Double-reprojection training pairs");
  c_mono->add_option("--clip", mono.clips, "Clip directory (repeatable)");
  c_mono->add_option("--clips", mono.clips_root, "Directory whose subdirectories are clips");
  c_mono->add_option("--out", mono.out)->required();
  c_mono->add_option("--seed", mono.seed, "Seed of the first sampled transform");
  c_mono->add_option("--count", mono.count, "Pairs to write, cycling over the clips")
      ->check(CLI::NonNegativeNumber);
  c_mono->add_option("--splat-radius", mono.splat_radius)->check(CLI::Range(0, 8));
  c_mono->add_option("--max-rot", mono.max_rotation, "Max rotation in degrees")
      ->check(CLI::NonNegativeNumber);
  c_mono->add_option("--max-trans", mono.translation_fraction,
                     "Max translation per axis as a fraction of the median depth")
      ->check(CLI::NonNegativeNumber);

  CurateArgs mv;
  mv.splat_radius = 1;
  auto* c_mv = app.add_subcommand("curate-mv", "Multi-view triplets from posed clips");
  c_mv->add_option("--clip", mv.clips, "Posed clip directory (repeatable)");
  c_mv->add_option("--clips", mv.clips_root, "Directory whose subdirectories are clips");
  c_mv->add_option("--out", mv.out)->required();
  c_mv->add_option("--seed", mv.seed, "Seed of the first window draw");
  c_mv->add_option("--count", mv.count, "Triplet draws, cycling over the clips")
      ->check(CLI::NonNegativeNumber);
  c_mv->add_option("--length", mv.length, "Window length in frames")->check(CLI::PositiveNumber);
  c_mv->add_option("--splat-radius", mv.splat_radius)->check(CLI::Range(0, 8));

  TrainArgs train;
  std::uint64_t train_seed = 0;
  int train_steps = 0;
  auto* c_train = app.add_subcommand("train", "Train the toy diffusion model");
  c_train->add_option("--stage", train.stage)->check(CLI::IsMember({1, 2}))->required();
  c_train->add_option("--config", train.config, "Model and optimizer JSON");
  c_train->add_option("--data", train.data, "Dataset directory")->required();
  c_train->add_option("--out", train.out, "Checkpoint path")->required();
  c_train->add_option("--init", train.init, "Starting checkpoint (required for stage 2)");
  auto* o_seed = c_train->add_option("--seed", train_seed, "Overrides the config seed");
  auto* o_steps = c_train->add_option("--steps", train_steps, "Overrides the config steps")
                      ->check(CLI::NonNegativeNumber);

  SampleArgs smp;
  auto* c_sample = app.add_subcommand("sample", "Generate a video from a render and its mask");
  c_sample->add_option("--ckpt", smp.ckpt)->required();
  c_sample->add_option("--render", smp.render, "Directory of frame_*.png")->required();
  c_sample->add_option("--mask", smp.mask, "Directory of mask_*.png (default: --render)");
  c_sample->add_option("--ref", smp.ref, "Reference video directory for Ref-DiT injection");
  c_sample->add_option("--out", smp.out)->required();
  c_sample->add_option("--steps", smp.steps)->check(CLI::PositiveNumber);
  c_sample->add_option("--seed", smp.seed);

  std::string eval_pred, eval_gt, eval_mask, eval_report;
  auto* c_eval = app.add_subcommand("eval", "PSNR / SSIM report of a video against ground truth");
  c_eval->add_option("--pred", eval_pred)->required();
  c_eval->add_option("--gt", eval_gt)->required();
  c_eval->add_option("--mask", eval_mask, "Directory of mask_*.png restricting PSNR");
  c_eval->add_option("--out", eval_report, "Write the report JSON here");

  std::string serve_clip;
  ServerOptions serve_opts;
  auto* c_serve = app.add_subcommand("serve", "HTTP preview service for the trajectory UI");
  c_serve->add_option("--clip", serve_clip)->required();
  c_serve->add_option("--port", serve_opts.port)->check(CLI::Range(0, 65535));
  c_serve->add_option("--host", serve_opts.host);
  c_serve->add_option("--resolution", serve_opts.downscale, "Preview downscale factor")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("trajcraft");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitValidation;
  }

  try {
    if (c_synth->parsed()) {
      run_synth(synth, out);
    } else if (c_lift->parsed()) {
      run_lift(lift_clip, lift_out, out);
    } else if (c_render->parsed()) {
      run_render(render_clip_dir, render_traj, render_out, render_radius, out);
    } else if (c_mono->parsed()) {
      run_curate_mono(mono, out);
    } else if (c_mv->parsed()) {
      run_curate_mv(mv, out);
    } else if (c_train->parsed()) {
      if (o_seed->count()) train.seed = train_seed;
      if (o_steps->count()) train.steps = train_steps;
      run_train(train, out);
    } else if (c_sample->parsed()) {
      run_sample(smp, out);
    } else if (c_eval->parsed()) {
      run_eval(eval_pred, eval_gt, eval_mask, eval_report, out);
    } else if (c_serve->parsed()) {
      run_serve(serve_clip, serve_opts, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace trajcraft
