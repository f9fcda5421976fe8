#pragma once

#include <cstdint>
#include <vector>

#include "cooccur/affinity.hpp"
#include "cooccur/image.hpp"
#include "cooccur/scenes.hpp"
#include "cooccur/spectral.hpp"

namespace cooccur::places {

// Fully connected graph over the collection; weight exp(w/alpha^2) or
// w^alpha (learned only). Collections are capped at the dense-solver limit.
spectral::AffinityGraph build_photo_graph(
    const std::vector<Tensor>& photos, const affinity::Measure& m,
    scenes::EdgeScaling scaling = scenes::EdgeScaling::Exponential,
    double alpha = 0.5);

spectral::ClusterAssignment cluster_places(const spectral::AffinityGraph& g,
                                           uint32_t k, std::size_t restarts = 8,
                                           uint64_t seed = 0);

// (1/N) * sum over clusters of the majority-class count.
double purity(const spectral::ClusterAssignment& assignment,
              const std::vector<int>& true_labels);

struct PuritySweepRow {
  uint32_t k = 0;
  double purity = 0.0;
};

// One eigenmap, k-means per k in [k_lo, k_hi].
std::vector<PuritySweepRow> purity_sweep(const spectral::AffinityGraph& g,
                                         const std::vector<int>& true_labels,
                                         uint32_t k_lo = 2, uint32_t k_hi = 16,
                                         std::size_t restarts = 8,
                                         uint64_t seed = 0);

// Contact sheet: one row per cluster, up to per_cluster sampled photos.
ImageBuffer render_montage(const std::vector<Tensor>& photos,
                           const spectral::ClusterAssignment& assignment,
                           std::size_t per_cluster = 8, uint64_t seed = 0);

}  // namespace cooccur::places
