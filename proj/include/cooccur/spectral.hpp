#pragma once

#include <cstdint>
#include <vector>

namespace cooccur::spectral {

// Symmetric weighted graph; edges stored once with i < j, no self-loops.
struct AffinityGraph {
  std::size_t node_count = 0;
  struct Edge {
    uint32_t i;
    uint32_t j;
    double w;
  };
  std::vector<Edge> edges;
};

// Throws on self-loops, duplicate edges, out-of-range ids, or bad weights.
void validate_graph(const AffinityGraph& g);

struct EigResult {
  std::size_t n = 0;
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // row k = eigenvector for values[k]
};

// Dense cyclic Jacobi. Eigenvector signs fixed so the largest-magnitude
// entry is positive. Input must be symmetric within 1e-12.
EigResult symmetric_eig(const std::vector<double>& matrix, std::size_t n);

struct Eigenmap {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> coords;       // n x d, row-major
  std::vector<double> eigenvalues;  // of the retained, scaled columns
};

// Embedding from the symmetric-normalized affinity S = D^-1/2 W D^-1/2:
// eigenvectors with eigenvalue rank first..last (1-indexed, rank 1 largest),
// each scaled by lambda^-1/2. The index range clips to the node count;
// retained columns whose eigenvalue falls below the 1e-8 clamp are dropped
// (their scale would be pure noise amplification). A graph with an isolated
// node is degenerate.
Eigenmap eigenmap(const AffinityGraph& g, std::size_t first = 2,
                  std::size_t last = 16);

struct ClusterAssignment {
  std::vector<uint32_t> labels;
  uint32_t k = 0;
  double objective = 0.0;  // within-cluster sum of squared distances
};

// k-means++ seeding per restart, Lloyd to assignment fixpoint, empty clusters
// reseeded to the point farthest from its centroid. Returns the restart with
// the lowest objective (ties: lowest restart index). Deterministic given
// seed; restarts may run in parallel.
ClusterAssignment kmeans(const double* points, std::size_t n, std::size_t d,
                         uint32_t k, std::size_t restarts = 8,
                         std::size_t max_iters = 100, uint64_t seed = 0);

// eigenmap + kmeans over its rows.
ClusterAssignment spectral_cluster(const AffinityGraph& g, uint32_t k,
                                   std::size_t restarts = 8, uint64_t seed = 0);

}  // namespace cooccur::spectral
