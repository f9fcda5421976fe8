#include "cooccur/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cooccur/errors.hpp"
#include "cooccur/kernels.hpp"
#include "cooccur/parallel.hpp"
#include "cooccur/rng.hpp"

namespace cooccur::spectral {

namespace {
constexpr double kOffdiagTol = 1e-10;
constexpr std::size_t kMaxSweeps = 60;
constexpr double kLambdaClamp = 1e-8;
constexpr std::size_t kMaxDenseNodes = 4096;
}  // namespace

void validate_graph(const AffinityGraph& g) {
  std::vector<uint64_t> keys;
  keys.reserve(g.edges.size());
  for (const auto& e : g.edges) {
    if (e.i >= g.node_count || e.j >= g.node_count)
      fail(ErrorCategory::Input, "graph: edge endpoint out of range");
    if (e.i >= e.j)
      fail(ErrorCategory::Input, "graph: edges must have i < j (no self-loops)");
    if (!std::isfinite(e.w) || e.w < 0.0)
      fail(ErrorCategory::Input, "graph: weights must be finite and >= 0");
    keys.push_back(uint64_t(e.i) << 32 | e.j);
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
    fail(ErrorCategory::Input, "graph: duplicate edge");
}

EigResult symmetric_eig(const std::vector<double>& matrix, std::size_t n) {
  if (n == 0 || matrix.size() != n * n)
    fail(ErrorCategory::Input, "symmetric_eig: bad dimensions");
  if (n > kMaxDenseNodes)
    fail(ErrorCategory::Input, "symmetric_eig: matrix too large for the dense solver");
  double max_abs = 0.0;
  for (double v : matrix) max_abs = std::max(max_abs, std::abs(v));
  const double sym_tol = 1e-12 * std::max(1.0, max_abs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(matrix[i * n + j] - matrix[j * n + i]) > sym_tol)
        fail(ErrorCategory::Input, "symmetric_eig: matrix is not symmetric");

  std::vector<double> a = matrix;
  // Rows of vt are the eigenvectors being accumulated (vt = Q^T).
  std::vector<double> vt(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = 1.0;

  double norm_f = 0.0;
  for (double v : a) norm_f += v * v;
  norm_f = std::sqrt(norm_f);
  const double stop = kOffdiagTol * std::max(norm_f, 1e-300);

  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        off += 2.0 * a[i * n + j] * a[i * n + j];
    if (std::sqrt(off) <= stop) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t =
            (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // A <- J^T A J: rotate rows p and q, then mirror into columns.
        kern::rot(a.data() + p * n, a.data() + q * n, c, s, n);
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        kern::rot(vt.data() + p * n, vt.data() + q * n, c, s, n);
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a[x * n + x] > a[y * n + y];
  });

  EigResult res;
  res.n = n;
  res.values.resize(n);
  res.vectors.resize(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = order[r];
    res.values[r] = a[src * n + src];
    double* dst = res.vectors.data() + r * n;
    const double* v = vt.data() + src * n;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    const double flip = v[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) dst[i] = flip * v[i];
  }
  return res;
}

Eigenmap eigenmap(const AffinityGraph& g, std::size_t first, std::size_t last) {
  validate_graph(g);
  const std::size_t n = g.node_count;
  if (n == 0) fail(ErrorCategory::Input, "eigenmap: empty graph");
  if (first < 1 || first > last)
    fail(ErrorCategory::Input, "eigenmap: bad eigenvector range");

  std::vector<double> degree(n, 0.0);
  for (const auto& e : g.edges) {
    degree[e.i] += e.w;
    degree[e.j] += e.w;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (degree[i] <= 0.0)
      fail(ErrorCategory::DegenerateGraph,
           "eigenmap: isolated node " + std::to_string(i) + " (zero degree)");

  std::vector<double> s(n * n, 0.0);
  for (const auto& e : g.edges) {
    const double v = e.w / std::sqrt(degree[e.i] * degree[e.j]);
    s[e.i * n + e.j] = v;
    s[e.j * n + e.i] = v;
  }
  const EigResult eig = symmetric_eig(s, n);

  last = std::min(last, n);
  // Retained columns must carry smoothness signal: eigenvectors of S whose
  // eigenvalue is not positive are high-frequency modes (cliques, repeated
  // eigenvalues) and are dropped rather than amplified.
  std::vector<std::size_t> kept;
  for (std::size_t rank = first; rank <= last; ++rank) {
    if (eig.values[rank - 1] >= kLambdaClamp) kept.push_back(rank - 1);
  }

  Eigenmap map;
  map.n = n;
  if (kept.empty()) {
    // Fully degenerate spectrum past rank `first` (e.g. a single clique):
    // every node embeds at the origin.
    map.d = 1;
    map.coords.assign(n, 0.0);
    return map;
  }
  map.d = kept.size();
  map.coords.assign(n * map.d, 0.0);
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const double lambda_s = eig.values[kept[c]];
    map.eigenvalues.push_back(lambda_s);
    // lambda^-1/2 with lambda the normalized-Laplacian eigenvalue 1 - lambda_S,
    // clamped at 1e-8 so repeated unit eigenvalues (disconnected components)
    // survive: the commute-time weighting, amplifying the smoothest columns.
    const double scale =
        1.0 / std::sqrt(std::max(1.0 - lambda_s, kLambdaClamp));
    const double* v = eig.vectors.data() + kept[c] * n;
    for (std::size_t i = 0; i < n; ++i) map.coords[i * map.d + c] = scale * v[i];
  }
  return map;
}

namespace {

struct KmeansRun {
  std::vector<uint32_t> labels;
  double objective = 0.0;
};

KmeansRun kmeans_once(const double* pts, std::size_t n, std::size_t d,
                      uint32_t k, std::size_t max_iters, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> centroids(std::size_t(k) * d);
  std::vector<double> min_d2(n);

  // k-means++ seeding.
  {
    const std::size_t c0 = rng.uniform_int(n);
    std::copy(pts + c0 * d, pts + (c0 + 1) * d, centroids.begin());
    for (std::size_t i = 0; i < n; ++i)
      min_d2[i] = kern::sqdist(pts + i * d, centroids.data(), d);
    for (uint32_t c = 1; c < k; ++c) {
      const double total = kern::sum(min_d2.data(), n);
      std::size_t pick = 0;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double cum = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          cum += min_d2[i];
          if (cum >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.uniform_int(n);
      }
      double* dst = centroids.data() + std::size_t(c) * d;
      std::copy(pts + pick * d, pts + (pick + 1) * d, dst);
      for (std::size_t i = 0; i < n; ++i)
        min_d2[i] = std::min(min_d2[i], kern::sqdist(pts + i * d, dst, d));
    }
  }

  std::vector<uint32_t> labels(n, 0), prev(n, uint32_t(-1));
  std::vector<std::size_t> sizes(k, 0);
  double prev_obj = -1.0;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // Assignment (ties to the lowest cluster index).
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      uint32_t best = 0;
      double best_d = kern::sqdist(pts + i * d, centroids.data(), d);
      for (uint32_t c = 1; c < k; ++c) {
        const double dist =
            kern::sqdist(pts + i * d, centroids.data() + std::size_t(c) * d, d);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      labels[i] = best;
      ++sizes[best];
    }

    // Reseed empty clusters with the point farthest from its centroid.
    for (uint32_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t farthest = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] <= 1) continue;
        const double dist = kern::sqdist(
            pts + i * d, centroids.data() + std::size_t(labels[i]) * d, d);
        if (dist > far_d) {
          far_d = dist;
          farthest = i;
        }
      }
      if (farthest == n)
        fail(ErrorCategory::Internal, "kmeans: cannot fill empty cluster");
      --sizes[labels[farthest]];
      labels[farthest] = c;
      ++sizes[c];
    }

    // Means update.
    std::fill(centroids.begin(), centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      kern::axpy(1.0, pts + i * d,
                 centroids.data() + std::size_t(labels[i]) * d, d);
    for (uint32_t c = 0; c < k; ++c)
      kern::scale(centroids.data() + std::size_t(c) * d,
                  1.0 / double(sizes[c]), d);

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      obj += kern::sqdist(pts + i * d,
                          centroids.data() + std::size_t(labels[i]) * d, d);
    if (prev_obj >= 0.0 && obj > prev_obj + 1e-9 * std::max(1.0, prev_obj))
      fail(ErrorCategory::Internal, "kmeans: objective increased");
    prev_obj = obj;
    if (labels == prev) break;
    prev = labels;
  }
  return {std::move(labels), prev_obj};
}

}  // namespace

ClusterAssignment kmeans(const double* points, std::size_t n, std::size_t d,
                         uint32_t k, std::size_t restarts,
                         std::size_t max_iters, uint64_t seed) {
  if (k == 0 || n < k)
    fail(ErrorCategory::Input, "kmeans: need n >= k >= 1");
  if (restarts == 0) restarts = 1;
  std::vector<KmeansRun> runs(restarts);
  parallel_for(restarts, [&](std::size_t r) {
    runs[r] = kmeans_once(points, n, d, k, max_iters,
                          derive_seed(seed, "kmeans.restart", r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (runs[r].objective < runs[best].objective) best = r;
  return {std::move(runs[best].labels), k, runs[best].objective};
}

ClusterAssignment spectral_cluster(const AffinityGraph& g, uint32_t k,
                                   std::size_t restarts, uint64_t seed) {
  if (k < 2) fail(ErrorCategory::Input, "spectral_cluster: k must be >= 2");
  const Eigenmap map = eigenmap(g);
  return kmeans(map.coords.data(), map.n, map.d, k, restarts, 100,
                derive_seed(seed, "spectral.kmeans"));
}

}  // namespace cooccur::spectral
