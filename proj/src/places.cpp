#include "cooccur/places.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cooccur/errors.hpp"
#include "cooccur/parallel.hpp"
#include "cooccur/rng.hpp"

namespace cooccur::places {

spectral::AffinityGraph build_photo_graph(const std::vector<Tensor>& photos,
                                          const affinity::Measure& m,
                                          scenes::EdgeScaling scaling,
                                          double alpha) {
  const std::size_t n = photos.size();
  if (n < 2) fail(ErrorCategory::Input, "build_photo_graph: need >= 2 photos");
  if (n > 4000)
    fail(ErrorCategory::Input,
         "build_photo_graph: collection exceeds the 4000-photo dense limit; "
         "subsample first");
  spectral::AffinityGraph g;
  g.node_count = n;
  g.edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      g.edges.push_back({uint32_t(i), uint32_t(j), 0.0});

  const bool learned = m.kind == affinity::MeasureKind::Learned;
  auto scale = [&](double w) {
    if (scaling == scenes::EdgeScaling::Power) {
      if (!learned)
        fail(ErrorCategory::Input,
             "power edge scaling applies to the learned measure only");
      return std::pow(w, alpha);
    }
    return std::exp(w / (alpha * alpha));
  };

  if (learned) {
    std::vector<Tensor> feats(n);
    parallel_for(n, [&](std::size_t i) {
      feats[i] = nnet::branch_forward(*m.net, photos[i]);
    });
    parallel_for(g.edges.size(), [&](std::size_t e) {
      auto& edge = g.edges[e];
      const double pij =
          nnet::sigmoid(nnet::head_forward(*m.net, feats[edge.i], feats[edge.j]));
      const double pji =
          nnet::sigmoid(nnet::head_forward(*m.net, feats[edge.j], feats[edge.i]));
      edge.w = scale((pij + pji) / 2.0);
    });
  } else {
    parallel_for(g.edges.size(), [&](std::size_t e) {
      auto& edge = g.edges[e];
      edge.w = scale(affinity::affinity(m, photos[edge.i], photos[edge.j]));
    });
  }
  return g;
}

spectral::ClusterAssignment cluster_places(const spectral::AffinityGraph& g,
                                           uint32_t k, std::size_t restarts,
                                           uint64_t seed) {
  if (k < 2) fail(ErrorCategory::Input, "cluster_places: k must be >= 2");
  if (k > g.node_count)
    fail(ErrorCategory::Input, "cluster_places: k exceeds photo count");
  return spectral::spectral_cluster(g, k, restarts, seed);
}

double purity(const spectral::ClusterAssignment& assignment,
              const std::vector<int>& true_labels) {
  if (assignment.labels.size() != true_labels.size() || true_labels.empty())
    fail(ErrorCategory::Input, "purity: labels missing for some nodes");
  std::map<std::pair<uint32_t, int>, std::size_t> counts;
  for (std::size_t i = 0; i < true_labels.size(); ++i)
    ++counts[{assignment.labels[i], true_labels[i]}];
  std::map<uint32_t, std::size_t> best;
  for (const auto& [key, c] : counts) {
    auto& b = best[key.first];
    b = std::max(b, c);
  }
  std::size_t majority_total = 0;
  for (const auto& [cluster, c] : best) majority_total += c;
  return double(majority_total) / double(true_labels.size());
}

std::vector<PuritySweepRow> purity_sweep(const spectral::AffinityGraph& g,
                                         const std::vector<int>& true_labels,
                                         uint32_t k_lo, uint32_t k_hi,
                                         std::size_t restarts, uint64_t seed) {
  if (k_lo < 2 || k_hi < k_lo)
    fail(ErrorCategory::Input, "purity_sweep: bad k range");
  const spectral::Eigenmap map = spectral::eigenmap(g);
  std::vector<PuritySweepRow> rows;
  for (uint32_t k = k_lo; k <= std::min<std::size_t>(k_hi, map.n); ++k) {
    const auto asg = spectral::kmeans(map.coords.data(), map.n, map.d, k,
                                      restarts, 100,
                                      derive_seed(seed, "places.sweep", k));
    rows.push_back({k, purity(asg, true_labels)});
  }
  return rows;
}

ImageBuffer render_montage(const std::vector<Tensor>& photos,
                           const spectral::ClusterAssignment& assignment,
                           std::size_t per_cluster, uint64_t seed) {
  if (photos.empty() || assignment.labels.size() != photos.size())
    fail(ErrorCategory::Input, "render_montage: bad inputs");
  const std::size_t side = photos[0].shape[0];
  const std::size_t pad = 2;
  const std::size_t cols = per_cluster;
  const std::size_t cell = side + pad;
  ImageBuffer out(assignment.k * cell + pad, cols * cell + pad);
  for (double& v : out.pixels) v = 1.0;

  Rng rng(derive_seed(seed, "montage"));
  for (uint32_t c = 0; c < assignment.k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < photos.size(); ++i)
      if (assignment.labels[i] == c) members.push_back(i);
    rng.shuffle(members);
    const std::size_t take = std::min(per_cluster, members.size());
    for (std::size_t s = 0; s < take; ++s) {
      const Tensor& ph = photos[members[s]];
      const std::size_t oy = pad + c * cell;
      const std::size_t ox = pad + s * cell;
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < ph.shape[1]; ++x)
          for (std::size_t ch = 0; ch < 3; ++ch)
            out.at(oy + y, ox + x, ch) = ph.at3(y, x, ch);
    }
  }
  return out;
}

}  // namespace cooccur::places
