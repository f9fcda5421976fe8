#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "cooccur/data.hpp"
#include "cooccur/errors.hpp"
#include "cooccur/proposals.hpp"
#include "cooccur/rng.hpp"

using namespace cooccur;
using namespace cooccur::proposals;

namespace {

Mask mask_from_box(uint32_t h, uint32_t w, int x0, int y0, int x1, int y1) {
  Mask m;
  m.height = h;
  m.width = w;
  for (int y = y0; y <= y1; ++y)
    m.runs.emplace_back(uint32_t(y) * w + uint32_t(x0), uint32_t(x1 - x0 + 1));
  return m;
}

ImageBuffer textured_image(std::size_t side, uint64_t seed) {
  Rng rng(seed);
  ImageBuffer img(side, side);
  for (double& v : img.pixels) v = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("patch graph: grid nodes and band edges") {
  const ImageBuffer img = textured_image(64, 1);
  const auto net = nnet::make_patch_net(2);
  const PatchGraphResult pg = build_patch_graph(img, net);

  // Direct enumeration oracle for valid centers on the stride-8 grid.
  std::size_t expected = 0;
  for (std::size_t cy = 8; cy + 8 < 64; cy += 8)
    for (std::size_t cx = 8; cx + 8 < 64; cx += 8) ++expected;
  CHECK(expected == 36);
  CHECK(pg.centers.size() == 36);
  CHECK(pg.graph.node_count == 36);

  std::set<std::pair<uint32_t, uint32_t>> edge_set;
  for (const auto& e : pg.graph.edges) edge_set.insert({e.i, e.j});
  auto node_at = [&](uint32_t cy, uint32_t cx) -> uint32_t {
    for (std::size_t i = 0; i < pg.centers.size(); ++i)
      if (pg.centers[i].first == cy && pg.centers[i].second == cx)
        return uint32_t(i);
    REQUIRE(false);
    return 0;
  };
  auto has_edge = [&](uint32_t a, uint32_t b) {
    return edge_set.count({std::min(a, b), std::max(a, b)}) == 1;
  };
  const uint32_t base = node_at(24, 16);
  CHECK(has_edge(base, node_at(32, 32)));        // offset (8,16): 17.89
  CHECK(has_edge(base, node_at(24, 40)));        // offset (0,24): 24
  CHECK(has_edge(base, node_at(40, 32)));        // offset (16,16): 22.63
  CHECK(has_edge(base, node_at(24, 48)));        // offset (0,32): 32
  CHECK_FALSE(has_edge(base, node_at(40, 48)));  // offset (16,32): 35.78
  CHECK_FALSE(has_edge(base, node_at(24, 32)));  // offset (0,16): 16

  for (const auto& e : pg.graph.edges) {
    const double dy =
        double(pg.centers[e.i].first) - double(pg.centers[e.j].first);
    const double dx =
        double(pg.centers[e.i].second) - double(pg.centers[e.j].second);
    CHECK(std::hypot(dy, dx) >= 17.0);  // connected patches never overlap
    CHECK(e.w > 0.0);
    CHECK(e.w < 1.0);
  }
}

TEST_CASE("patch graph: too-small image is rejected") {
  const auto net = nnet::make_patch_net(3);
  CHECK_THROWS_AS(build_patch_graph(ImageBuffer(32, 64), net), Error);
  CHECK_NOTHROW(build_patch_graph(textured_image(33, 4), net));
}

TEST_CASE("cluster_to_proposal footprint geometry") {
  SUBCASE("single member") {
    const Proposal p = cluster_to_proposal({{20, 20}}, 17, 100, 100);
    CHECK(p.bbox.x0 == 12);
    CHECK(p.bbox.y0 == 12);
    CHECK(p.bbox.x1 == 28);
    CHECK(p.bbox.y1 == 28);
    CHECK(p.mask.area() == 289);
  }
  SUBCASE("two members 8 px apart horizontally") {
    const Proposal p = cluster_to_proposal({{20, 20}, {20, 28}}, 17, 100, 100);
    CHECK(p.bbox.x1 - p.bbox.x0 + 1 == 25);
    CHECK(p.mask.area() == 17 * 25);
  }
  SUBCASE("clipping at the image border") {
    const Proposal p = cluster_to_proposal({{8, 8}}, 17, 20, 20);
    CHECK(p.bbox.x0 == 0);
    CHECK(p.bbox.y0 == 0);
    CHECK(p.bbox.x1 == 16);
    CHECK(p.mask.area() == 17 * 17);
  }
}

TEST_CASE("box and mask iou") {
  const Box a{0, 0, 9, 9};
  CHECK(box_iou(a, a) == 1.0);
  CHECK(box_iou(a, Box{5, 0, 14, 9}) == doctest::Approx(1.0 / 3.0));
  CHECK(box_iou(a, Box{20, 20, 29, 29}) == 0.0);

  const Mask ma = mask_from_box(40, 40, 0, 0, 9, 9);
  const Mask mb = mask_from_box(40, 40, 5, 0, 14, 9);
  CHECK(mask_iou(ma, ma) == 1.0);
  CHECK(mask_iou(ma, mb) == doctest::Approx(1.0 / 3.0));
  CHECK(mask_iou(ma, mask_from_box(40, 40, 20, 20, 29, 29)) == 0.0);
  CHECK_THROWS_AS(mask_iou(Mask{40, 40, {}}, Mask{40, 40, {}}), Error);
}

TEST_CASE("prune_and_rank: duplicates and diversity order") {
  auto make = [&](int x0, uint32_t k, uint32_t r, uint32_t c) {
    Proposal p;
    p.mask = mask_from_box(64, 64, x0, 0, x0 + 9, 9);
    p.bbox = {x0, 0, x0 + 9, 9};
    p.k = k;
    p.restart = r;
    p.cluster = c;
    return p;
  };
  SUBCASE("identical proposals collapse to one") {
    const auto kept = prune_and_rank({make(0, 5, 0, 0), make(0, 6, 0, 0)});
    CHECK(kept.size() == 1);
  }
  SUBCASE("distinct proposals all survive in round-robin order") {
    // Cells (k=5,r=0), (k=6,r=0), (k=5,r=1): every r=0 cluster interleaves
    // across k before any r=1 cluster appears.
    std::vector<Proposal> raw;
    for (uint32_t c = 0; c < 3; ++c) raw.push_back(make(int(c) * 12, 5, 0, c));
    for (uint32_t c = 0; c < 2; ++c)
      raw.push_back(make(36 + int(c) * 12, 6, 0, c));
    raw.push_back(make(52, 5, 1, 0));
    const auto kept = prune_and_rank(raw);
    REQUIRE(kept.size() == 6);
    CHECK(kept[0].k == 5);
    CHECK(kept[0].cluster == 0);
    CHECK(kept[1].k == 6);
    CHECK(kept[1].cluster == 0);
    CHECK(kept[2].k == 5);
    CHECK(kept[2].cluster == 1);
    CHECK(kept[3].k == 6);
    CHECK(kept[4].k == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(kept[i].restart == 0);
    CHECK(kept[5].restart == 1);
  }
  SUBCASE("survivors have pairwise iou at or below the duplicate threshold") {
    std::vector<Proposal> raw;
    Rng rng(9);
    for (uint32_t c = 0; c < 20; ++c) {
      const int x0 = int(rng.uniform_int(40));
      raw.push_back(make(x0, 5 + c % 3, c / 6, c % 6));
    }
    const auto kept = prune_and_rank(raw);
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        CHECK(mask_iou(kept[i].mask, kept[j].mask) <= 0.9);
  }
}

TEST_CASE("abo and recall trivials") {
  const uint32_t H = 64, W = 64;
  const Mask gt1 = mask_from_box(H, W, 0, 0, 19, 19);
  const Mask gt2 = mask_from_box(H, W, 40, 40, 59, 59);

  auto prop = [&](const Mask& m) {
    Proposal p;
    p.mask = m;
    return p;
  };

  SUBCASE("exact ground truth among proposals") {
    ProposalSet ps{H, W, {prop(gt1), prop(gt2)}};
    CHECK(abo(ps, {gt1, gt2}, 100) == 1.0);
    CHECK(recall_at_jaccard(ps, {gt1, gt2}, 0.5, 100) == 1.0);
  }
  SUBCASE("single gt with best iou 0.4") {
    // 20x20 gt vs 8x20 proposal: inter 160, union 400 -> 0.4.
    ProposalSet ps{H, W, {prop(mask_from_box(H, W, 0, 0, 7, 19))}};
    CHECK(abo(ps, {gt1}, 100) == doctest::Approx(0.4));
    CHECK(recall_at_jaccard(ps, {gt1}, 0.5, 100) == 0.0);
  }
  SUBCASE("two gts with best ious 0.6 and 0.2") {
    ProposalSet ps{H,
                   W,
                   {prop(mask_from_box(H, W, 0, 0, 11, 19)),
                    prop(mask_from_box(H, W, 40, 40, 43, 59))}};
    CHECK(abo(ps, {gt1, gt2}, 100) == doctest::Approx(0.4));
    CHECK(recall_at_jaccard(ps, {gt1, gt2}, 0.5, 100) == doctest::Approx(0.5));
  }
  SUBCASE("empty ground truth is an undefined metric") {
    ProposalSet ps{H, W, {prop(gt1)}};
    CHECK_THROWS_AS(abo(ps, {}, 10), Error);
    CHECK_THROWS_AS(recall_at_jaccard(ps, {}, 0.5, 10), Error);
  }
}

TEST_CASE("abo and recall are monotone in the proposal budget") {
  Rng rng(11);
  const uint32_t H = 64, W = 64;
  ProposalSet ps;
  ps.height = H;
  ps.width = W;
  for (int i = 0; i < 30; ++i) {
    const int x0 = int(rng.uniform_int(40)), y0 = int(rng.uniform_int(40));
    Proposal p;
    p.mask = mask_from_box(H, W, x0, y0, x0 + 15, y0 + 15);
    ps.ranked.push_back(p);
  }
  std::vector<Mask> gt;
  for (int i = 0; i < 4; ++i) {
    const int x0 = int(rng.uniform_int(40)), y0 = int(rng.uniform_int(40));
    gt.push_back(mask_from_box(H, W, x0, y0, x0 + 17, y0 + 17));
  }
  double prev_abo = 0.0, prev_rec = 0.0;
  for (std::size_t n = 1; n <= 30; ++n) {
    const double a = abo(ps, gt, n);
    const double r = recall_at_jaccard(ps, gt, 0.3, n);
    CHECK(a >= prev_abo - 1e-12);
    CHECK(r >= prev_rec - 1e-12);
    prev_abo = a;
    prev_rec = r;
  }
}

TEST_CASE("gt_masks_from_regions partitions the frame") {
  RegionMap map(10, 10);
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t x = 0; x < 10; ++x) map.at(y, x) = y < 4 ? 0 : 1;
  const auto masks = gt_masks_from_regions(map);
  REQUIRE(masks.size() == 2);
  CHECK(masks[0].area() + masks[1].area() == 100);
}

TEST_CASE("generate_proposals: provenance, count, determinism") {
  const ImageBuffer img = textured_image(64, 21);
  const auto net = nnet::make_patch_net(22);

  const ProposalSet ps = generate_proposals(img, net, {}, 5, 5, 1, 7);
  CHECK(ps.ranked.size() == 5);  // one k, one restart, five clusters
  for (const auto& p : ps.ranked) {
    CHECK(p.k == 5);
    CHECK(p.restart == 0);
    CHECK(p.mask.area() > 0);
    for (const auto& [start, len] : p.mask.runs) {
      const int y = int(start / ps.width);
      const int x0 = int(start % ps.width);
      CHECK(y >= p.bbox.y0);
      CHECK(y <= p.bbox.y1);
      CHECK(x0 >= p.bbox.x0);
      CHECK(int(x0 + len) - 1 <= p.bbox.x1);
    }
  }

  const ProposalSet again = generate_proposals(img, net, {}, 5, 5, 1, 7);
  REQUIRE(again.ranked.size() == ps.ranked.size());
  for (std::size_t i = 0; i < ps.ranked.size(); ++i) {
    CHECK(again.ranked[i].mask.runs == ps.ranked[i].mask.runs);
    CHECK(again.ranked[i].cluster == ps.ranked[i].cluster);
  }
}

TEST_CASE("generate_proposals on a uniform image tiles the frame") {
  // All patches identical, all edge weights equal: the embedding follows the
  // smooth lattice harmonics and clusters become spatial tiles that jointly
  // cover the frame.
  ImageBuffer img(64, 64);
  for (double& v : img.pixels) v = 0.5;
  const auto net = nnet::make_patch_net(30);
  const ProposalSet ps = generate_proposals(img, net, {}, 5, 8, 2, 3);
  REQUIRE(!ps.ranked.empty());
  std::vector<uint8_t> covered(64 * 64, 0);
  const std::size_t budget = std::min<std::size_t>(8, ps.ranked.size());
  for (std::size_t i = 0; i < budget; ++i)
    for (const auto& [start, len] : ps.ranked[i].mask.runs)
      std::fill(covered.begin() + start, covered.begin() + start + len, 1);
  std::size_t cover_count = 0;
  for (uint8_t c : covered) cover_count += c;
  // Centers run 8..48, so footprints can reach rows/cols 0..56 only; the
  // tiles must jointly cover nearly all of that reachable area.
  const double coverable = 57.0 * 57.0;
  CHECK(double(cover_count) >= 0.95 * coverable);
}
