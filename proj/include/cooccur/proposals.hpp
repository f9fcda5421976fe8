#pragma once

#include <cstdint>
#include <vector>

#include "cooccur/image.hpp"
#include "cooccur/nnet.hpp"
#include "cooccur/spectral.hpp"

namespace cooccur::proposals {

struct PatchGraphSpec {
  std::size_t patch_side = 17;
  std::size_t stride = 8;
  double band_lo = 17.0;  // center distance band, inclusive
  double band_hi = 33.0;
  double alpha = 20.0;  // edge weight = affinity^alpha
};

// Pixel mask as sorted row-major runs (start, length) plus inclusive bbox.
struct Mask {
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<std::pair<uint32_t, uint32_t>> runs;

  std::size_t area() const;
};

struct Box {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty if x1 < x0
};

double mask_iou(const Mask& a, const Mask& b);
double box_iou(const Box& a, const Box& b);

struct Proposal {
  Mask mask;
  Box bbox;
  uint32_t k = 0;
  uint32_t restart = 0;
  uint32_t cluster = 0;
};

struct ProposalSet {
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<Proposal> ranked;
};

struct PatchGraphResult {
  spectral::AffinityGraph graph;
  std::vector<std::pair<uint32_t, uint32_t>> centers;  // (cy, cx) per node
};

// Nodes: all full patches on the stride grid; edges between centers whose
// distance lies in the band (so connected patches never share a pixel);
// weight = w(A_i, A_j)^alpha with branch features computed once per node.
PatchGraphResult build_patch_graph(const ImageBuffer& img,
                                   const nnet::SiameseNet& net,
                                   const PatchGraphSpec& spec = {});

// Union of patch_side x patch_side square footprints at the member centers,
// clipped to the image; bbox tight over the mask.
Proposal cluster_to_proposal(
    const std::vector<std::pair<uint32_t, uint32_t>>& member_centers,
    std::size_t patch_side, uint32_t img_h, uint32_t img_w);

// Orders proposals round-robin across k within each restart (restart 0's
// clusters come first), then drops any proposal with mask IoU > dup_iou
// against an earlier-kept one.
std::vector<Proposal> prune_and_rank(std::vector<Proposal> raw,
                                     double dup_iou = 0.9);

// One eigenmap per image, reused for every (k, restart) k-means run.
ProposalSet generate_proposals(const ImageBuffer& img,
                               const nnet::SiameseNet& net,
                               const PatchGraphSpec& spec = {},
                               uint32_t k_min = 5, uint32_t k_max = 16,
                               std::size_t restarts = 8, uint64_t seed = 0);

// One mask per region id present in the map.
std::vector<Mask> gt_masks_from_regions(const RegionMap& regions);

// Mean over ground-truth objects of the best IoU within the top n proposals.
double abo(const ProposalSet& ps, const std::vector<Mask>& gt, std::size_t top_n);
// Fraction of ground-truth objects with best IoU >= threshold.
double recall_at_jaccard(const ProposalSet& ps, const std::vector<Mask>& gt,
                         double threshold = 0.5, std::size_t top_n = 100);

// Top-n proposal outlines drawn over the image.
ImageBuffer render_overlay(const ImageBuffer& img, const ProposalSet& ps,
                           std::size_t top_n = 10);

}  // namespace cooccur::proposals
