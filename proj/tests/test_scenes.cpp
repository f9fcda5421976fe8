#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cooccur/data.hpp"
#include "cooccur/errors.hpp"
#include "cooccur/scenes.hpp"

using namespace cooccur;
using namespace cooccur::scenes;

namespace {

std::vector<Tensor> constant_frames(std::size_t n, double v) {
  std::vector<Tensor> frames(n, Tensor({33, 33, 3}));
  for (auto& f : frames)
    for (double& x : f.data) x = v;
  return frames;
}

std::vector<double> times_1hz(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = double(i);
  return t;
}

}  // namespace

TEST_CASE("frame graph: 10 s window arithmetic at 1 Hz") {
  const auto frames = constant_frames(60, 0.4);
  const auto times = times_1hz(60);
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);
  const auto g = build_frame_graph(times, frames, m);

  std::size_t deg30 = 0;
  for (const auto& e : g.edges)
    if (e.i == 30 || e.j == 30) ++deg30;
  CHECK(deg30 == 20);  // neighbors at t in [20,40] minus itself

  // Constant measure: every weight equals exp(c / alpha^2) with c = 0 here.
  for (const auto& e : g.edges) CHECK(e.w == doctest::Approx(1.0));
}

TEST_CASE("frame graph: inclusive 10 s boundary") {
  const auto frames = constant_frames(2, 0.2);
  const std::vector<double> times = {0.0, 10.0};
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);
  const auto g = build_frame_graph(times, frames, m);
  CHECK(g.edges.size() == 1);

  const std::vector<double> apart = {0.0, 10.5};
  const auto g2 = build_frame_graph(apart, frames, m);
  CHECK(g2.edges.empty());
}

TEST_CASE("frame graph: unsorted times are rejected") {
  const auto frames = constant_frames(3, 0.2);
  const std::vector<double> times = {0.0, 5.0, 2.0};
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);
  CHECK_THROWS_AS(build_frame_graph(times, frames, m), Error);
}

TEST_CASE("frame graph: power scaling requires the learned measure") {
  const auto frames = constant_frames(3, 0.2);
  const auto times = times_1hz(3);
  FrameGraphSpec spec;
  spec.scaling = EdgeScaling::Power;
  spec.alpha = 20.0;
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);
  CHECK_THROWS_AS(build_frame_graph(times, frames, m, spec), Error);
}

TEST_CASE("boundary PR: trivial matchings") {
  SUBCASE("identical sets") {
    const auto pr = boundary_pr({10, 20, 30}, {10, 20, 30}, 5.0);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("one hit one miss") {
    const auto pr = boundary_pr({28, 60}, {30}, 5.0);
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("one-to-one matching only") {
    const auto pr = boundary_pr({29, 31}, {30}, 5.0);
    CHECK(pr.matched == 1);
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("empty predictions and empty ground truth") {
    const auto pr = boundary_pr({}, {}, 5.0);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("closest-first greedy matching") {
    // gt 30 must pair with 29 (gap 1), leaving 26 unmatched even though 26
    // is also within tolerance.
    const auto pr = boundary_pr({26, 29}, {30}, 5.0);
    CHECK(pr.matched == 1);
  }
  SUBCASE("matched count bounded by both sides") {
    const auto pr = boundary_pr({10, 11, 12}, {10.5, 11.5}, 2.0);
    CHECK(pr.matched <= 2);
  }
}

TEST_CASE("segment_movie on a two-scene synthetic video") {
  data::SceneVideoConfig cfg;
  cfg.scene_count = 2;
  cfg.scene_len_mean = 30.0;
  cfg.scene_len_jitter = 0.0;
  cfg.color_repeat_prob = 0.0;
  // Find a seed whose two scenes use different palette colors so the
  // mean-color baseline can see the boundary.
  uint64_t seed = 0;
  data::SceneVideo video;
  for (seed = 1; seed < 50; ++seed) {
    video = data::gen_scene_video(cfg, seed);
    if (video.scene_styles[0].color != video.scene_styles[1].color) break;
  }
  REQUIRE(video.scene_styles[0].color != video.scene_styles[1].color);

  std::vector<Tensor> frames;
  for (const auto& img : video.frames)
    frames.push_back(crop_downsample(img, 33));

  FrameGraphSpec spec;
  spec.alpha = 0.5;
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);
  const auto g = build_frame_graph(video.times, frames, m, spec);
  const SceneSegmentation seg = segment_movie(g, video.times, 2, 8, 3);
  REQUIRE(seg.boundaries.size() == 1);
  CHECK(std::abs(seg.boundaries[0] - 30.0) <= 2.0);
}

TEST_CASE("segment_movie with k=2 on identical frames still splits") {
  const auto frames = constant_frames(40, 0.3);
  const auto times = times_1hz(40);
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);
  const auto g = build_frame_graph(times, frames, m);
  const SceneSegmentation seg = segment_movie(g, times, 2, 4, 5);
  CHECK(seg.boundaries.size() >= 1);  // over-segmentation is permitted
  const SceneSegmentation again = segment_movie(g, times, 2, 4, 5);
  CHECK(seg.boundaries == again.boundaries);  // deterministic given seed
}

TEST_CASE("alpha sweep basics") {
  data::SceneVideoConfig cfg;
  cfg.scene_count = 2;
  cfg.scene_len_mean = 25.0;
  cfg.scene_len_jitter = 0.0;
  cfg.color_repeat_prob = 0.0;
  uint64_t seed;
  data::SceneVideo video;
  for (seed = 1; seed < 50; ++seed) {
    video = data::gen_scene_video(cfg, seed);
    if (video.scene_styles[0].color != video.scene_styles[1].color) break;
  }
  std::vector<Tensor> frames;
  for (const auto& img : video.frames)
    frames.push_back(crop_downsample(img, 33));
  const auto m = affinity::Measure::of(affinity::MeasureKind::MeanColor);

  SUBCASE("single alpha returns that alpha") {
    const auto res = alpha_sweep(video.times, frames, m, video.gt_boundaries,
                                 {0.7}, 2, 5.0);
    CHECK(res.best_alpha == 0.7);
    CHECK(res.rows.size() == 1);
  }
  SUBCASE("best alpha maximizes F1; ties pick the smallest alpha") {
    const auto res = alpha_sweep(video.times, frames, m, video.gt_boundaries,
                                 {2.0, 0.5, 1.0}, 2, 5.0);
    double best_f1 = -1.0;
    for (const auto& row : res.rows) best_f1 = std::max(best_f1, row.f1);
    double smallest_at_best = 1e300;
    for (const auto& row : res.rows)
      if (row.f1 == best_f1) smallest_at_best = std::min(smallest_at_best, row.alpha);
    CHECK(res.best_alpha == smallest_at_best);
  }
}

TEST_CASE("barcode geometry and content") {
  data::SceneVideoConfig cfg;
  cfg.scene_count = 1;
  cfg.scene_len_mean = 12.0;
  cfg.scene_len_jitter = 0.0;
  cfg.noise = 0.0;
  cfg.wobble_amp = 0.0;

  // Uniform red movie: make one directly.
  std::vector<Tensor> frames(12, Tensor({33, 33, 3}));
  for (auto& f : frames)
    for (std::size_t i = 0; i < f.numel(); i += 3) {
      f.data[i] = 0.9;
      f.data[i + 1] = 0.05;
      f.data[i + 2] = 0.05;
    }
  const auto times = times_1hz(12);
  const ImageBuffer bc = render_barcode(frames, times, {5.0}, {6.0});
  CHECK(bc.width == 12);
  // Body rows (between the tick strips) are the per-row frame averages: red.
  for (std::size_t x = 0; x < bc.width; ++x) {
    CHECK(bc.at(10, x, 0) == doctest::Approx(0.9));
    CHECK(bc.at(10, x, 1) == doctest::Approx(0.05));
  }
  // Ticks: ground truth on top rows at column 6, prediction at bottom at 5.
  CHECK(bc.at(0, 6, 0) == 0.0);
  CHECK(bc.at(0, 5, 0) == 1.0);
  CHECK(bc.at(bc.height - 1, 5, 0) == 0.0);
  CHECK(bc.at(bc.height - 1, 6, 0) == 1.0);
}
