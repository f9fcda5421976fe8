#pragma once

#include <cstdint>
#include <vector>

#include "cooccur/affinity.hpp"
#include "cooccur/image.hpp"
#include "cooccur/spectral.hpp"

namespace cooccur::scenes {

enum class EdgeScaling { Exponential, Power };

struct FrameGraphSpec {
  double window_s = 10.0;
  EdgeScaling scaling = EdgeScaling::Exponential;
  double alpha = 1.0;
};

// Frames within the temporal window are connected; edge weight is
// exp(w/alpha^2) (any measure) or w^alpha (learned only). Times must be
// sorted ascending.
spectral::AffinityGraph build_frame_graph(const std::vector<double>& times,
                                          const std::vector<Tensor>& frames,
                                          const affinity::Measure& m,
                                          const FrameGraphSpec& spec = {});

struct SceneSegmentation {
  std::vector<double> boundaries;  // seconds, strictly increasing
  uint32_t k = 0;
  std::vector<uint32_t> labels;  // cluster per frame
};

// Spectral partition; a boundary is emitted at the midpoint between
// consecutive frames whose cluster labels differ.
SceneSegmentation segment_movie(const spectral::AffinityGraph& g,
                                const std::vector<double>& times, uint32_t k,
                                std::size_t restarts = 8, uint64_t seed = 0);

struct BoundaryPR {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t matched = 0;

  double f1() const {
    return precision + recall > 0.0
               ? 2.0 * precision * recall / (precision + recall)
               : 0.0;
  }
};

// Greedy closest-first one-to-one matching within +/- tolerance seconds.
BoundaryPR boundary_pr(const std::vector<double>& predicted,
                       const std::vector<double>& ground_truth,
                       double tolerance);

struct AlphaSweepRow {
  double alpha = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct AlphaSweepResult {
  double best_alpha = 0.0;
  std::vector<AlphaSweepRow> rows;
  SceneSegmentation best_segmentation;
};

// Segments once per alpha, reports PR/F1 per row; best alpha maximizes F1
// (ties: smallest alpha).
AlphaSweepResult alpha_sweep(const std::vector<double>& times,
                             const std::vector<Tensor>& frames,
                             const affinity::Measure& m,
                             const std::vector<double>& gt_boundaries,
                             const std::vector<double>& alphas, uint32_t k,
                             double tolerance = 5.0,
                             EdgeScaling scaling = EdgeScaling::Exponential,
                             std::size_t restarts = 8, uint64_t seed = 0);

// Movie barcode: one averaged column per frame, ground-truth boundary ticks
// above the strip, predicted ticks below.
ImageBuffer render_barcode(const std::vector<Tensor>& frames,
                           const std::vector<double>& times,
                           const std::vector<double>& predicted,
                           const std::vector<double>& ground_truth);

}  // namespace cooccur::scenes
