#include "cooccur/scenes.hpp"

#include <algorithm>
#include <cmath>

#include "cooccur/errors.hpp"
#include "cooccur/parallel.hpp"

namespace cooccur::scenes {

namespace {

double scale_weight(double w, EdgeScaling scaling, double alpha,
                    bool learned) {
  if (scaling == EdgeScaling::Power) {
    if (!learned)
      fail(ErrorCategory::Input,
           "power edge scaling applies to the learned measure only");
    return std::pow(w, alpha);
  }
  return std::exp(w / (alpha * alpha));
}

}  // namespace

spectral::AffinityGraph build_frame_graph(const std::vector<double>& times,
                                          const std::vector<Tensor>& frames,
                                          const affinity::Measure& m,
                                          const FrameGraphSpec& spec) {
  if (times.size() != frames.size())
    fail(ErrorCategory::Input, "build_frame_graph: times/frames mismatch");
  if (spec.window_s <= 0.0 || spec.alpha <= 0.0)
    fail(ErrorCategory::Input, "build_frame_graph: bad window or alpha");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] < times[i - 1])
      fail(ErrorCategory::Input, "build_frame_graph: frames must be time-sorted");

  spectral::AffinityGraph g;
  g.node_count = times.size();
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      const double dt = times[j] - times[i];
      if (dt > spec.window_s) break;
      if (dt > 0.0) g.edges.push_back({uint32_t(i), uint32_t(j), 0.0});
    }
  }

  const bool learned = m.kind == affinity::MeasureKind::Learned;
  if (learned) {
    std::vector<Tensor> feats(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) {
      feats[i] = nnet::branch_forward(*m.net, frames[i]);
    });
    parallel_for(g.edges.size(), [&](std::size_t e) {
      auto& edge = g.edges[e];
      const double pij =
          nnet::sigmoid(nnet::head_forward(*m.net, feats[edge.i], feats[edge.j]));
      const double pji =
          nnet::sigmoid(nnet::head_forward(*m.net, feats[edge.j], feats[edge.i]));
      edge.w = scale_weight((pij + pji) / 2.0, spec.scaling, spec.alpha, true);
    });
  } else {
    parallel_for(g.edges.size(), [&](std::size_t e) {
      auto& edge = g.edges[e];
      edge.w = scale_weight(affinity::affinity(m, frames[edge.i], frames[edge.j]),
                            spec.scaling, spec.alpha, false);
    });
  }
  return g;
}

SceneSegmentation segment_movie(const spectral::AffinityGraph& g,
                                const std::vector<double>& times, uint32_t k,
                                std::size_t restarts, uint64_t seed) {
  if (k < 2) fail(ErrorCategory::Input, "segment_movie: k must be >= 2");
  if (g.node_count != times.size())
    fail(ErrorCategory::Input, "segment_movie: graph/times mismatch");
  SceneSegmentation seg;
  seg.k = k;
  const spectral::ClusterAssignment asg =
      spectral::spectral_cluster(g, k, restarts, seed);
  seg.labels = asg.labels;
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (asg.labels[i] != asg.labels[i + 1])
      seg.boundaries.push_back((times[i] + times[i + 1]) / 2.0);
  return seg;
}

BoundaryPR boundary_pr(const std::vector<double>& predicted,
                       const std::vector<double>& ground_truth,
                       double tolerance) {
  if (tolerance < 0.0) fail(ErrorCategory::Input, "boundary_pr: bad tolerance");
  struct Cand {
    double gap;
    std::size_t p, g;
  };
  std::vector<Cand> cands;
  for (std::size_t p = 0; p < predicted.size(); ++p)
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const double gap = std::abs(predicted[p] - ground_truth[g]);
      if (gap <= tolerance) cands.push_back({gap, p, g});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.gap != b.gap) return a.gap < b.gap;
    if (a.p != b.p) return a.p < b.p;
    return a.g < b.g;
  });
  std::vector<bool> used_p(predicted.size(), false);
  std::vector<bool> used_g(ground_truth.size(), false);
  std::size_t matched = 0;
  for (const Cand& c : cands) {
    if (used_p[c.p] || used_g[c.g]) continue;
    used_p[c.p] = used_g[c.g] = true;
    ++matched;
  }
  BoundaryPR pr;
  pr.matched = matched;
  pr.precision =
      predicted.empty() ? 1.0 : double(matched) / double(predicted.size());
  pr.recall = ground_truth.empty() ? 1.0
                                   : double(matched) / double(ground_truth.size());
  return pr;
}

AlphaSweepResult alpha_sweep(const std::vector<double>& times,
                             const std::vector<Tensor>& frames,
                             const affinity::Measure& m,
                             const std::vector<double>& gt_boundaries,
                             const std::vector<double>& alphas, uint32_t k,
                             double tolerance, EdgeScaling scaling,
                             std::size_t restarts, uint64_t seed) {
  if (alphas.empty()) fail(ErrorCategory::Input, "alpha_sweep: no alphas");
  AlphaSweepResult res;
  bool have_best = false;
  double best_f1 = -1.0;
  for (double alpha : alphas) {
    FrameGraphSpec spec;
    spec.scaling = scaling;
    spec.alpha = alpha;
    const auto g = build_frame_graph(times, frames, m, spec);
    SceneSegmentation seg = segment_movie(g, times, k, restarts, seed);
    const BoundaryPR pr = boundary_pr(seg.boundaries, gt_boundaries, tolerance);
    const double f1 = pr.f1();
    res.rows.push_back({alpha, pr.precision, pr.recall, f1});
    if (!have_best || f1 > best_f1 ||
        (f1 == best_f1 && alpha < res.best_alpha)) {
      res.best_alpha = alpha;
      res.best_segmentation = std::move(seg);
      best_f1 = f1;
      have_best = true;
    }
  }
  return res;
}

ImageBuffer render_barcode(const std::vector<Tensor>& frames,
                           const std::vector<double>& times,
                           const std::vector<double>& predicted,
                           const std::vector<double>& ground_truth) {
  if (frames.empty()) fail(ErrorCategory::Input, "render_barcode: no frames");
  const std::size_t fh = frames[0].shape[0];
  const std::size_t fw = frames[0].shape[1];
  const std::size_t tick_h = 4, gap = 1;
  const std::size_t height = tick_h + gap + fh + gap + tick_h;
  ImageBuffer out(height, frames.size());
  for (double& v : out.pixels) v = 1.0;  // white background

  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t y = 0; y < fh; ++y) {
      double acc[3] = {0, 0, 0};
      for (std::size_t x = 0; x < fw; ++x)
        for (std::size_t c = 0; c < 3; ++c) acc[c] += frames[i].at3(y, x, c);
      for (std::size_t c = 0; c < 3; ++c)
        out.at(tick_h + gap + y, i, c) = acc[c] / double(fw);
    }
  }

  auto nearest_column = [&](double t) {
    std::size_t best = 0;
    double best_gap = std::abs(times[0] - t);
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double gapv = std::abs(times[i] - t);
      if (gapv < best_gap) {
        best_gap = gapv;
        best = i;
      }
    }
    return best;
  };
  for (double b : ground_truth) {
    const std::size_t col = nearest_column(b);
    for (std::size_t y = 0; y < tick_h; ++y)
      for (std::size_t c = 0; c < 3; ++c) out.at(y, col, c) = 0.0;
  }
  for (double b : predicted) {
    const std::size_t col = nearest_column(b);
    for (std::size_t y = height - tick_h; y < height; ++y)
      for (std::size_t c = 0; c < 3; ++c) out.at(y, col, c) = 0.0;
  }
  return out;
}

}  // namespace cooccur::scenes
