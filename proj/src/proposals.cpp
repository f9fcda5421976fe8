#include "cooccur/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cooccur/errors.hpp"
#include "cooccur/parallel.hpp"
#include "cooccur/rng.hpp"

namespace cooccur::proposals {

std::size_t Mask::area() const {
  std::size_t a = 0;
  for (const auto& [start, len] : runs) a += len;
  return a;
}

double mask_iou(const Mask& a, const Mask& b) {
  const std::size_t area_a = a.area(), area_b = b.area();
  if (area_a == 0 && area_b == 0)
    fail(ErrorCategory::UndefinedMetric, "iou: both masks empty");
  std::size_t inter = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.runs.size() && ib < b.runs.size()) {
    const uint64_t a0 = a.runs[ia].first, a1 = a0 + a.runs[ia].second;
    const uint64_t b0 = b.runs[ib].first, b1 = b0 + b.runs[ib].second;
    const uint64_t lo = std::max(a0, b0), hi = std::min(a1, b1);
    if (hi > lo) inter += hi - lo;
    if (a1 < b1)
      ++ia;
    else
      ++ib;
  }
  const std::size_t uni = area_a + area_b - inter;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

double box_iou(const Box& a, const Box& b) {
  const bool empty_a = a.x1 < a.x0 || a.y1 < a.y0;
  const bool empty_b = b.x1 < b.x0 || b.y1 < b.y0;
  if (empty_a && empty_b)
    fail(ErrorCategory::UndefinedMetric, "iou: both boxes empty");
  if (empty_a || empty_b) return 0.0;
  const long ix0 = std::max(a.x0, b.x0), ix1 = std::min(a.x1, b.x1);
  const long iy0 = std::max(a.y0, b.y0), iy1 = std::min(a.y1, b.y1);
  const long iw = ix1 - ix0 + 1, ih = iy1 - iy0 + 1;
  const long inter = (iw > 0 && ih > 0) ? iw * ih : 0;
  const long area_a = long(a.x1 - a.x0 + 1) * (a.y1 - a.y0 + 1);
  const long area_b = long(b.x1 - b.x0 + 1) * (b.y1 - b.y0 + 1);
  return double(inter) / double(area_a + area_b - inter);
}

PatchGraphResult build_patch_graph(const ImageBuffer& img,
                                   const nnet::SiameseNet& net,
                                   const PatchGraphSpec& spec) {
  if (img.height < 2 * spec.patch_side - 1 ||
      img.width < 2 * spec.patch_side - 1)
    fail(ErrorCategory::Input, "build_patch_graph: image too small");
  const std::size_t r = spec.patch_side / 2;

  PatchGraphResult out;
  for (std::size_t cy = r; cy + r < img.height; cy += spec.stride)
    for (std::size_t cx = r; cx + r < img.width; cx += spec.stride)
      out.centers.emplace_back(uint32_t(cy), uint32_t(cx));
  const std::size_t n = out.centers.size();
  out.graph.node_count = n;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dy = double(out.centers[i].first) - out.centers[j].first;
      const double dx = double(out.centers[i].second) - out.centers[j].second;
      const double dist = std::hypot(dy, dx);
      if (dist >= spec.band_lo && dist <= spec.band_hi)
        out.graph.edges.push_back({uint32_t(i), uint32_t(j), 0.0});
    }
  }

  // Branch features once per node, pair head per edge.
  std::vector<Tensor> feats(n);
  parallel_for(n, [&](std::size_t i) {
    feats[i] = nnet::branch_forward(
        net, extract_patch(img, out.centers[i].first, out.centers[i].second,
                           spec.patch_side, /*circular=*/true));
  });
  parallel_for(out.graph.edges.size(), [&](std::size_t e) {
    auto& edge = out.graph.edges[e];
    const double pij =
        nnet::sigmoid(nnet::head_forward(net, feats[edge.i], feats[edge.j]));
    const double pji =
        nnet::sigmoid(nnet::head_forward(net, feats[edge.j], feats[edge.i]));
    edge.w = std::pow((pij + pji) / 2.0, spec.alpha);
  });
  return out;
}

Proposal cluster_to_proposal(
    const std::vector<std::pair<uint32_t, uint32_t>>& member_centers,
    std::size_t patch_side, uint32_t img_h, uint32_t img_w) {
  const long r = long(patch_side / 2);
  Proposal p;
  p.mask.height = img_h;
  p.mask.width = img_w;
  if (member_centers.empty())
    fail(ErrorCategory::Input, "cluster_to_proposal: empty cluster");

  long y_lo = img_h, y_hi = -1;
  for (const auto& [cy, cx] : member_centers) {
    y_lo = std::min(y_lo, std::max(0L, long(cy) - r));
    y_hi = std::max(y_hi, std::min(long(img_h) - 1, long(cy) + r));
  }
  long x_min = img_w, x_max = -1;
  std::vector<std::pair<long, long>> intervals;
  for (long y = y_lo; y <= y_hi; ++y) {
    intervals.clear();
    for (const auto& [cy, cx] : member_centers) {
      if (std::abs(long(cy) - y) > r) continue;
      intervals.emplace_back(std::max(0L, long(cx) - r),
                             std::min(long(img_w) - 1, long(cx) + r));
    }
    if (intervals.empty()) continue;
    std::sort(intervals.begin(), intervals.end());
    long cur_lo = intervals[0].first, cur_hi = intervals[0].second;
    auto emit = [&](long lo, long hi) {
      p.mask.runs.emplace_back(uint32_t(y * img_w + lo), uint32_t(hi - lo + 1));
      x_min = std::min(x_min, lo);
      x_max = std::max(x_max, hi);
    };
    for (std::size_t i = 1; i < intervals.size(); ++i) {
      if (intervals[i].first <= cur_hi + 1) {
        cur_hi = std::max(cur_hi, intervals[i].second);
      } else {
        emit(cur_lo, cur_hi);
        cur_lo = intervals[i].first;
        cur_hi = intervals[i].second;
      }
    }
    emit(cur_lo, cur_hi);
  }
  p.bbox = {int(x_min), int(y_lo), int(x_max), int(y_hi)};
  return p;
}

std::vector<Proposal> prune_and_rank(std::vector<Proposal> raw, double dup_iou) {
  // Diversity ordering: restart-major, then cluster index, then k, so the
  // first proposals cycle through every k of restart 0 before any restart 1.
  std::stable_sort(raw.begin(), raw.end(),
                   [](const Proposal& a, const Proposal& b) {
                     if (a.restart != b.restart) return a.restart < b.restart;
                     if (a.cluster != b.cluster) return a.cluster < b.cluster;
                     return a.k < b.k;
                   });
  std::vector<Proposal> kept;
  for (Proposal& p : raw) {
    bool dup = false;
    for (const Proposal& q : kept) {
      if (mask_iou(p.mask, q.mask) > dup_iou) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(std::move(p));
  }
  return kept;
}

ProposalSet generate_proposals(const ImageBuffer& img,
                               const nnet::SiameseNet& net,
                               const PatchGraphSpec& spec, uint32_t k_min,
                               uint32_t k_max, std::size_t restarts,
                               uint64_t seed) {
  if (k_min < 1 || k_max < k_min)
    fail(ErrorCategory::Input, "generate_proposals: bad k range");
  PatchGraphResult pg = build_patch_graph(img, net, spec);
  const spectral::Eigenmap map = spectral::eigenmap(pg.graph);

  ProposalSet out;
  out.height = uint32_t(img.height);
  out.width = uint32_t(img.width);

  std::vector<Proposal> raw;
  for (std::size_t r = 0; r < restarts; ++r) {
    for (uint32_t k = k_min; k <= k_max; ++k) {
      if (map.n < k) continue;
      const spectral::ClusterAssignment asg =
          spectral::kmeans(map.coords.data(), map.n, map.d, k, 1, 100,
                           derive_seed(seed, "proposals", r, k));
      std::vector<std::vector<std::pair<uint32_t, uint32_t>>> members(k);
      for (std::size_t i = 0; i < asg.labels.size(); ++i)
        members[asg.labels[i]].push_back(pg.centers[i]);
      for (uint32_t c = 0; c < k; ++c) {
        Proposal p = cluster_to_proposal(members[c], spec.patch_side,
                                         out.height, out.width);
        p.k = k;
        p.restart = uint32_t(r);
        p.cluster = c;
        raw.push_back(std::move(p));
      }
    }
  }
  out.ranked = prune_and_rank(std::move(raw));
  return out;
}

std::vector<Mask> gt_masks_from_regions(const RegionMap& regions) {
  std::map<uint16_t, Mask> by_id;
  for (std::size_t y = 0; y < regions.height; ++y) {
    for (std::size_t x = 0; x < regions.width; ++x) {
      const uint16_t id = regions.at(y, x);
      Mask& m = by_id[id];
      m.height = uint32_t(regions.height);
      m.width = uint32_t(regions.width);
      const uint32_t pos = uint32_t(y * regions.width + x);
      if (!m.runs.empty() &&
          m.runs.back().first + m.runs.back().second == pos)
        ++m.runs.back().second;
      else
        m.runs.emplace_back(pos, 1);
    }
  }
  std::vector<Mask> out;
  out.reserve(by_id.size());
  for (auto& [id, m] : by_id) out.push_back(std::move(m));
  return out;
}

namespace {

double best_iou(const ProposalSet& ps, const Mask& gt, std::size_t top_n) {
  double best = 0.0;
  const std::size_t n = std::min(top_n, ps.ranked.size());
  for (std::size_t i = 0; i < n; ++i)
    best = std::max(best, mask_iou(ps.ranked[i].mask, gt));
  return best;
}

}  // namespace

double abo(const ProposalSet& ps, const std::vector<Mask>& gt,
           std::size_t top_n) {
  if (gt.empty())
    fail(ErrorCategory::UndefinedMetric, "abo: no ground-truth objects");
  double total = 0.0;
  for (const Mask& g : gt) total += best_iou(ps, g, top_n);
  return total / double(gt.size());
}

double recall_at_jaccard(const ProposalSet& ps, const std::vector<Mask>& gt,
                         double threshold, std::size_t top_n) {
  if (gt.empty())
    fail(ErrorCategory::UndefinedMetric, "recall: no ground-truth objects");
  std::size_t hit = 0;
  for (const Mask& g : gt)
    if (best_iou(ps, g, top_n) >= threshold) ++hit;
  return double(hit) / double(gt.size());
}

ImageBuffer render_overlay(const ImageBuffer& img, const ProposalSet& ps,
                           std::size_t top_n) {
  static const double palette[6][3] = {{1, 0, 0},    {0, 1, 0},   {0, 0.4, 1},
                                       {1, 1, 0},    {1, 0, 1},   {0, 1, 1}};
  ImageBuffer out = img;
  const std::size_t n = std::min(top_n, ps.ranked.size());
  std::vector<uint8_t> bitmap(img.height * img.width);
  for (std::size_t pi = n; pi-- > 0;) {
    std::fill(bitmap.begin(), bitmap.end(), 0);
    for (const auto& [start, len] : ps.ranked[pi].mask.runs)
      std::fill(bitmap.begin() + start, bitmap.begin() + start + len, 1);
    const double* color = palette[pi % 6];
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        if (!bitmap[y * img.width + x]) continue;
        const bool boundary =
            y == 0 || x == 0 || y + 1 == img.height || x + 1 == img.width ||
            !bitmap[(y - 1) * img.width + x] || !bitmap[(y + 1) * img.width + x] ||
            !bitmap[y * img.width + x - 1] || !bitmap[y * img.width + x + 1];
        if (boundary)
          for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = color[c];
      }
    }
  }
  return out;
}

}  // namespace cooccur::proposals
