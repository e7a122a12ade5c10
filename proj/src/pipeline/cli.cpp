// Copyright 2026 The bevnext Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bevnext/pipeline/cli.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"
#include "bevnext/common/rng.hpp"
#include "bevnext/nn/tensor_io.hpp"
#include "bevnext/pipeline/model.hpp"
#include "bevnext/pipeline/pipeline.hpp"
#include "bevnext/pipeline/scene.hpp"
#include "bevnext/pipeline/weights.hpp"

namespace bevnext::pipeline
{
namespace
{

namespace fs = std::filesystem;

RgbImage heatmap_image(const nn::Tensor & heatmap)
{
  const std::size_t g = heatmap.dim(1);
  RgbImage img(g, heatmap.dim(2));
  for (std::size_t y = 0; y < g; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      float best = 0.0f;
      for (std::size_t c = 0; c < heatmap.dim(0); ++c) {
        best = std::max(best, heatmap.at(c, y, x));
      }
      const auto rgb = colormap(best);
      for (std::size_t k = 0; k < 3; ++k) {
        img.at(y, x, k) = rgb[k];
      }
    }
  }
  quantize_to_8bit(img);
  return img;
}

void write_detection_file(const fs::path & path, const std::vector<object_decoder::Detection> & detections)
{
  std::ofstream out(path);
  object_decoder::write_detections(out, detections);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
}

int cmd_generate(const fs::path & config, const fs::path & out_dir, std::ostream & out)
{
  const auto cfg = load_config(config);
  set_num_threads(cfg.threads);
  const auto scene = gen_scene(cfg);
  save_scene(scene, cfg, out_dir);
  out << fmt::format(
    "generated {} frames x {} cameras, {} objects -> {}\n", scene.frames.size(), cfg.cameras,
    scene.frames.front().boxes.size(), out_dir.string());
  return 0;
}

int cmd_init_weights(const fs::path & config, const fs::path & out_path, std::ostream & out)
{
  const auto cfg = load_config(config);
  const auto bundle = model_to_bundle(default_model(cfg), cfg);
  save_weights(bundle, out_path);
  out << fmt::format("wrote {} tensors -> {}\n", bundle.tensors.size(), out_path.string());
  return 0;
}

struct RunArgs
{
  fs::path config;
  fs::path weights;
  fs::path scene;
  fs::path out;
  bool dump_depth = false;
  bool dump_heatmap = false;
  int threads = 0;
};

int cmd_run(const RunArgs & args, std::ostream & out)
{
  auto cfg = load_config(args.config);
  if (args.threads > 0) {
    cfg.threads = args.threads;
  }
  set_num_threads(cfg.threads);
  const auto model = model_from_bundle(load_weights(args.weights), cfg);
  const auto scene = load_scene(args.scene, cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_pipeline(scene, cfg, model);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(args.out);
  write_detection_file(args.out / "detections.txt", result.detections);
  {
    std::ofstream cov(args.out / "coverage.txt");
    for (std::size_t c = 0; c < result.coverage.size(); ++c) {
      cov << fmt::format("{} {:.6f}\n", c, result.coverage[c]);
    }
  }
  if (args.dump_depth) {
    for (std::size_t c = 0; c < result.depth.size(); ++c) {
      write_ppm(
        args.out / fmt::format("depth_cam_{}.ppm", c),
        depth_crf::render_labels(depth_crf::map_labeling(result.depth[c]), cfg.depth_bins));
    }
  }
  if (args.dump_heatmap) {
    write_ppm(args.out / "heatmap.ppm", heatmap_image(result.heatmap));
  }
  out << fmt::format(
    "{} detections from {} frames x {} cameras in {:.1f} ms ({} threads)\n", result.detections.size(),
    scene.frames.size(), cfg.cameras, ms, cfg.threads);
  return 0;
}

struct CrfDemoArgs
{
  fs::path image;
  fs::path logits;
  fs::path out;
  std::size_t iterations = 5;
  std::size_t stride = 8;
  std::size_t bins = 8;
  double depth_min = 1.0;
  double depth_max = 9.0;
  std::uint64_t seed = 7;
};

int cmd_crf_demo(const CrfDemoArgs & args, std::ostream & out)
{
  const auto image = read_ppm(args.image);
  if (image.height % args.stride != 0 || image.width % args.stride != 0) {
    throw ShapeError(fmt::format(
      "crf-demo: image {}x{} is not divisible by stride {}", image.height, image.width, args.stride));
  }
  const auto bins = depth_crf::DepthBins::uniform(args.bins, args.depth_min, args.depth_max);
  nn::Tensor logits;
  if (!args.logits.empty()) {
    logits = nn::load_tensor(args.logits);
  } else {
    Rng rng(args.seed);
    logits = nn::Tensor({args.bins, image.height / args.stride, image.width / args.stride});
    for (auto & v : logits.data()) {
      v = static_cast<float>(rng.uniform(-2.0, 2.0));
    }
  }
  auto params = depth_crf::CrfParams::defaults();
  fs::create_directories(args.out);
  for (std::size_t t : {std::size_t{0}, args.iterations}) {
    params.iterations = t;
    const auto q = depth_crf::modulate(logits, image, bins, params);
    write_ppm(args.out / fmt::format("labels_t{}.ppm", t), depth_crf::render_labels(depth_crf::map_labeling(q), args.bins));
    double entropy = 0.0;
    for (std::size_t i = 0; i < q.pixels(); ++i) {
      for (double p : q.pixel(i)) {
        entropy -= p > 0.0 ? p * std::log(p) : 0.0;
      }
    }
    out << fmt::format("T={} mean entropy {:.6f}\n", t, entropy / static_cast<double>(q.pixels()));
  }
  return 0;
}

int cmd_bench(const fs::path & config, const std::string & which, std::size_t repeat, std::ostream & out)
{
  SceneConfig cfg;
  if (!config.empty()) {
    cfg = load_config(config);
  }
  set_num_threads(cfg.threads);
  const auto scene = gen_scene(cfg);
  const auto model = default_model(cfg);
  const auto base = run_pipeline(scene, cfg, model);
  const auto rig = cfg.rig();
  const auto bins = cfg.bins();
  const auto bev = cfg.bev();
  const std::size_t n = cfg.feature_stride();

  std::function<void()> body;
  std::vector<view_transform::FrustumGrid> frusta;
  for (const auto & cam : rig) {
    frusta.push_back(view_transform::build_frustum(cam, cfg.feature_height(), cfg.feature_width(), n, bins));
  }
  const auto index = view_transform::precompute_pool_index(frusta, bev);
  std::vector<nn::Tensor> lifted;
  for (std::size_t c = 0; c < rig.size(); ++c) {
    lifted.push_back(view_transform::lift(nn::conv2d(base.features[c], model.context_head), base.depth[c]));
  }
  std::vector<nn::Tensor> logits;
  for (const auto & f : base.features) {
    logits.push_back(nn::conv2d(f, model.depth_head));
  }
  res2fusion::FusionStack stack{base.bev_frames};

  if (which == "crf") {
    body = [&] {
      for (std::size_t c = 0; c < rig.size(); ++c) {
        depth_crf::modulate(logits[c], scene.frames.back().images[c], bins, cfg.crf(), c);
      }
    };
  } else if (which == "pool") {
    body = [&] { view_transform::pool(lifted, index, bev); };
  } else if (which == "fusion") {
    body = [&] { res2fusion::encode_neck(res2fusion::fuse(stack, model.fusion), model.neck); };
  } else if (which == "decoder") {
    body = [&] {
      const auto heat = object_decoder::compute_heatmap(base.encoded, model.heatmap);
      const auto centers = object_decoder::select_centers(heat, cfg.threshold, cfg.top_n);
      const auto rois = object_decoder::expand_roi(base.encoded, centers, model.queries);
      const auto refs = object_decoder::lift_references(rois, bev, cfg.ref_heights, rig);
      const auto refined =
        object_decoder::spatial_cross_attention(rois, refs, base.features, {}, n, model.attention);
      object_decoder::regress(refined, model.heads, bev);
    };
  } else {
    throw ConfigError("bench: --stage must be one of crf, pool, fusion, decoder");
  }

  std::vector<double> times;
  for (std::size_t r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  double total = 0.0;
  for (double t : times) {
    total += t;
  }
  out << fmt::format(
    "stage {}: mean {:.3f} ms, median {:.3f} ms over {} runs\n", which, total / static_cast<double>(repeat),
    times[times.size() / 2], repeat);
  return 0;
}

}  // namespace

int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Desk-scale camera-only BEV 3D detection pipeline"};
  app.require_subcommand(1);

  fs::path gen_config;
  fs::path gen_out;
  auto * gen = app.add_subcommand("generate", "Render a synthetic multi-camera scene");
  gen->add_option("--config", gen_config, "Config file")->required();
  gen->add_option("--out", gen_out, "Output scene directory")->required();

  fs::path init_config;
  fs::path init_out;
  auto * init = app.add_subcommand("init-weights", "Write the seeded default weight bundle");
  init->add_option("--config", init_config, "Config file")->required();
  init->add_option("--out", init_out, "Output .bvnx path")->required();

  RunArgs run_args;
  auto * run = app.add_subcommand("run", "Run the pipeline on a scene directory");
  run->add_option("--config", run_args.config, "Config file")->required();
  run->add_option("--weights", run_args.weights, "Weight bundle (.bvnx)")->required();
  run->add_option("--scene", run_args.scene, "Scene directory")->required();
  run->add_option("--out", run_args.out, "Output directory")->required();
  run->add_flag("--dump-depth", run_args.dump_depth, "Write per-camera depth argmax PPMs");
  run->add_flag("--dump-heatmap", run_args.dump_heatmap, "Write the BEV heatmap PPM");
  run->add_option("--threads", run_args.threads, "Worker threads (overrides runtime.threads)")
    ->check(CLI::Range(1, 256));

  CrfDemoArgs demo_args;
  auto * demo = app.add_subcommand("crf-demo", "Compare depth argmax before and after CRF modulation");
  demo->add_option("--image", demo_args.image, "P6 PPM image")->required();
  demo->add_option("--logits", demo_args.logits, "Depth logits tensor [K, H/n, W/n] (.bvnx); seeded random if absent");
  demo->add_option("--out", demo_args.out, "Output directory")->required();
  demo->add_option("--iters", demo_args.iterations, "Mean-field iterations")->check(CLI::Range(0, 100));
  demo->add_option("--stride", demo_args.stride, "Feature stride")->check(CLI::IsMember({1, 2, 4, 8, 16}));
  demo->add_option("--bins", demo_args.bins, "Depth bins")->check(CLI::Range(1, 256));
  demo->add_option("--depth-min", demo_args.depth_min, "Nearest bin edge (m)");
  demo->add_option("--depth-max", demo_args.depth_max, "Farthest bin edge (m)");
  demo->add_option("--seed", demo_args.seed, "Seed for random logits");

  fs::path bench_config;
  std::string bench_stage;
  std::size_t bench_repeat = 10;
  auto * bench = app.add_subcommand("bench", "Time one pipeline stage");
  bench->add_option("--config", bench_config, "Config file (built-in desk defaults if absent)");
  bench->add_option("--stage", bench_stage, "crf, pool, fusion or decoder")
    ->required()
    ->check(CLI::IsMember({"crf", "pool", "fusion", "decoder"}));
  bench->add_option("--repeat", bench_repeat, "Repetitions")->check(CLI::Range(1, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError & e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) {
      return cmd_generate(gen_config, gen_out, out);
    }
    if (*init) {
      return cmd_init_weights(init_config, init_out, out);
    }
    if (*run) {
      return cmd_run(run_args, out);
    }
    if (*demo) {
      return cmd_crf_demo(demo_args, out);
    }
    return cmd_bench(bench_config, bench_stage, bench_repeat, out);
  } catch (const ConfigError & e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError & e) {
    err << "shape error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bevnext::pipeline
