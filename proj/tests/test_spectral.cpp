#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cooccur/errors.hpp"
#include "cooccur/parallel.hpp"
#include "cooccur/rng.hpp"
#include "cooccur/spectral.hpp"

using namespace cooccur;
using namespace cooccur::spectral;

namespace {

std::vector<double> random_symmetric(std::size_t n, Rng& rng) {
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      a[i * n + j] = v;
      a[j * n + i] = v;
    }
  return a;
}

double frob(const std::vector<double>& m) {
  double s = 0.0;
  for (double v : m) s += v * v;
  return std::sqrt(s);
}

// Complete graph on the given clique blocks: weight 1 inside a block, no
// edges across.
AffinityGraph clique_graph(const std::vector<std::size_t>& sizes) {
  AffinityGraph g;
  g.node_count = 0;
  for (std::size_t s : sizes) g.node_count += s;
  std::size_t base = 0;
  for (std::size_t s : sizes) {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j)
        g.edges.push_back({uint32_t(base + i), uint32_t(base + j), 1.0});
    base += s;
  }
  return g;
}

std::vector<double> dense_w(const AffinityGraph& g) {
  std::vector<double> w(g.node_count * g.node_count, 0.0);
  for (const auto& e : g.edges) {
    w[e.i * g.node_count + e.j] = e.w;
    w[e.j * g.node_count + e.i] = e.w;
  }
  return w;
}

// Brute-force minimum normalized cut over all bipartitions (test oracle).
double min_ncut_bruteforce(const AffinityGraph& g) {
  const std::size_t n = g.node_count;
  const auto w = dense_w(g);
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) degree[i] += w[i * n + j];
  double best = 1e300;
  for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double cut = 0.0, vol_a = 0.0, vol_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1)
        vol_a += degree[i];
      else
        vol_b += degree[i];
      for (std::size_t j = i + 1; j < n; ++j)
        if (((mask >> i) & 1) != ((mask >> j) & 1)) cut += w[i * n + j];
    }
    if (vol_a <= 0.0 || vol_b <= 0.0) continue;
    best = std::min(best, cut / vol_a + cut / vol_b);
  }
  return best;
}

double ncut_of(const AffinityGraph& g, const std::vector<uint32_t>& labels) {
  const std::size_t n = g.node_count;
  const auto w = dense_w(g);
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) degree[i] += w[i * n + j];
  double cut = 0.0, vol_a = 0.0, vol_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0)
      vol_a += degree[i];
    else
      vol_b += degree[i];
    for (std::size_t j = i + 1; j < n; ++j)
      if (labels[i] != labels[j]) cut += w[i * n + j];
  }
  if (vol_a <= 0.0 || vol_b <= 0.0) return 1e300;
  return cut / vol_a + cut / vol_b;
}

}  // namespace

TEST_CASE("eig: identity and diagonal matrices") {
  const EigResult id3 = symmetric_eig({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3);
  for (double v : id3.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

  const EigResult d = symmetric_eig({3, 0, 0, 0, 1, 0, 0, 0, 2}, 3);
  CHECK(d.values[0] == doctest::Approx(3.0));
  CHECK(d.values[1] == doctest::Approx(2.0));
  CHECK(d.values[2] == doctest::Approx(1.0));
  // Unit coordinate vectors, positive by the sign convention.
  CHECK(d.vectors[0 * 3 + 0] == doctest::Approx(1.0));
  CHECK(d.vectors[1 * 3 + 2] == doctest::Approx(1.0));
  CHECK(d.vectors[2 * 3 + 1] == doctest::Approx(1.0));
}

TEST_CASE("eig: reconstruction and orthonormality oracles") {
  Rng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 5 + rng.uniform_int(16);
    const auto a = random_symmetric(n, rng);
    const EigResult e = symmetric_eig(a, n);

    // A = V diag(lambda) V^T, rebuilt from rows of e.vectors.
    std::vector<double> recon(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          recon[i * n + j] +=
              e.values[k] * e.vectors[k * n + i] * e.vectors[k * n + j];
    std::vector<double> diff(n * n);
    for (std::size_t i = 0; i < n * n; ++i) diff[i] = recon[i] - a[i];
    CHECK(frob(diff) < 1e-8 * frob(a));

    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = k; l < n; ++l) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          dot += e.vectors[k * n + i] * e.vectors[l * n + i];
        CHECK(std::abs(dot - (k == l ? 1.0 : 0.0)) < 1e-8);
      }

    // Residual ||Av - lambda v|| <= 1e-8 ||A||.
    for (std::size_t k = 0; k < n; ++k) {
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double av = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          av += a[i * n + j] * e.vectors[k * n + j];
        const double r = av - e.values[k] * e.vectors[k * n + i];
        res += r * r;
      }
      CHECK(std::sqrt(res) <= 1e-8 * frob(a));
    }
  }
}

TEST_CASE("eig: asymmetric input is rejected") {
  std::vector<double> bad = {1, 2, 3, 4};
  CHECK_THROWS_AS(symmetric_eig(bad, 2), Error);
}

TEST_CASE("eig: deterministic output") {
  Rng rng(13);
  const auto a = random_symmetric(12, rng);
  const EigResult e1 = symmetric_eig(a, 12);
  const EigResult e2 = symmetric_eig(a, 12);
  CHECK(e1.values == e2.values);
  CHECK(e1.vectors == e2.vectors);
}

TEST_CASE("eigenmap: two cliques give a block-constant leading column") {
  const AffinityGraph g = clique_graph({5, 5});
  const Eigenmap map = eigenmap(g);
  REQUIRE(map.n == 10);
  // Disconnected pair of cliques: rank-2 eigenvalue is 1 and the only
  // retained column; constant within each clique. The unit eigenvalue is
  // twofold degenerate, so the solver may return block-indicator vectors
  // rather than a signed split; the two clique values must differ either way.
  REQUIRE(map.d == 1);
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(map.coords[i] == doctest::Approx(map.coords[0]).epsilon(1e-9));
  for (std::size_t i = 6; i < 10; ++i)
    CHECK(map.coords[i] == doctest::Approx(map.coords[5]).epsilon(1e-9));
  CHECK(std::abs(map.coords[0] - map.coords[5]) > 1.0);
}

TEST_CASE("eigenmap: a single clique embeds every node identically") {
  const AffinityGraph g = clique_graph({20});
  const Eigenmap map = eigenmap(g);
  for (std::size_t i = 0; i < map.n; ++i)
    for (std::size_t c = 0; c < map.d; ++c)
      CHECK(std::abs(map.coords[i * map.d + c] - map.coords[c]) < 1e-6);
}

TEST_CASE("eigenmap: index range clips for small graphs") {
  const AffinityGraph g = clique_graph({4, 3});
  CHECK_NOTHROW(eigenmap(g, 2, 16));  // 7 nodes, range clipped to 7
}

TEST_CASE("eigenmap: isolated node is degenerate") {
  AffinityGraph g;
  g.node_count = 3;
  g.edges.push_back({0, 1, 1.0});
  bool threw = false;
  try {
    eigenmap(g);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.category() == ErrorCategory::DegenerateGraph);
  }
  CHECK(threw);
}

TEST_CASE("graph validation rejects malformed graphs") {
  AffinityGraph g;
  g.node_count = 3;
  g.edges.push_back({1, 1, 1.0});
  CHECK_THROWS_AS(validate_graph(g), Error);
  g.edges = {{0, 1, -0.5}};
  CHECK_THROWS_AS(validate_graph(g), Error);
  g.edges = {{0, 1, 1.0}, {0, 1, 0.5}};
  CHECK_THROWS_AS(validate_graph(g), Error);
  g.edges = {{0, 1, 1.0}, {1, 2, 0.5}};
  CHECK_NOTHROW(validate_graph(g));
}

TEST_CASE("kmeans: two well-separated clouds are recovered for every seed") {
  Rng rng(14);
  std::vector<double> pts;
  std::vector<int> truth;
  for (int i = 0; i < 30; ++i) {
    pts.push_back(rng.uniform(-0.5, 0.5));
    pts.push_back(rng.uniform(-0.5, 0.5));
    truth.push_back(0);
  }
  for (int i = 0; i < 25; ++i) {
    pts.push_back(100.0 + rng.uniform(-0.5, 0.5));
    pts.push_back(100.0 + rng.uniform(-0.5, 0.5));
    truth.push_back(1);
  }
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const ClusterAssignment a = kmeans(pts.data(), 55, 2, 2, 1, 100, seed);
    for (std::size_t i = 1; i < truth.size(); ++i)
      CHECK((a.labels[i] == a.labels[0]) == (truth[i] == truth[0]));
  }
}

TEST_CASE("kmeans: k=1 objective equals total scatter") {
  Rng rng(15);
  const std::size_t n = 40, d = 3;
  std::vector<double> pts(n * d);
  for (double& v : pts) v = rng.uniform(-2.0, 2.0);
  const ClusterAssignment a = kmeans(pts.data(), n, d, 1, 1, 100, 0);
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) mean[c] += pts[i * d + c] / double(n);
  double scatter = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double e = pts[i * d + c] - mean[c];
      scatter += e * e;
    }
  CHECK(a.objective == doctest::Approx(scatter).epsilon(1e-10));
}

TEST_CASE("kmeans: k=n reaches objective 0 on distinct points") {
  std::vector<double> pts = {0, 0, 1, 0, 2, 0, 3, 0, 4, 0};
  const ClusterAssignment a = kmeans(pts.data(), 5, 2, 5, 4, 100, 3);
  CHECK(a.objective == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<bool> used(5, false);
  for (uint32_t l : a.labels) used[l] = true;
  for (bool u : used) CHECK(u);
}

TEST_CASE("kmeans: n < k is rejected") {
  std::vector<double> pts = {0, 0, 1, 1};
  CHECK_THROWS_AS(kmeans(pts.data(), 2, 2, 3, 1, 10, 0), Error);
}

TEST_CASE("kmeans: deterministic and thread-count independent") {
  Rng rng(16);
  std::vector<double> pts(200 * 4);
  for (double& v : pts) v = rng.uniform(-1.0, 1.0);
  const ClusterAssignment a = kmeans(pts.data(), 200, 4, 6, 8, 100, 9);
  set_thread_count(4);
  const ClusterAssignment b = kmeans(pts.data(), 200, 4, 6, 8, 100, 9);
  set_thread_count(1);
  CHECK(a.labels == b.labels);
  CHECK(a.objective == b.objective);
}

TEST_CASE("spectral_cluster: disconnected components are recovered exactly") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const AffinityGraph g = clique_graph({4, 6, 5});
    const ClusterAssignment a = spectral_cluster(g, 3, 4, seed);
    // Component oracle: nodes 0..3, 4..9, 10..14.
    const std::vector<std::size_t> comp = {0, 0, 0, 0, 1, 1, 1, 1,
                                           1, 1, 2, 2, 2, 2, 2};
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (std::size_t j = 0; j < comp.size(); ++j)
        CHECK((a.labels[i] == a.labels[j]) == (comp[i] == comp[j]));
  }
}

TEST_CASE("spectral_cluster: near-optimal normalized cuts on random graphs") {
  // Random clusterable graphs: a planted split of sizes 3..5 with random
  // in-group and cross-group weight draws.
  std::size_t within = 0, total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    Rng rng(derive_seed(18, "ncut.graph", rep));
    AffinityGraph g;
    g.node_count = 8;
    const std::size_t s = 3 + rng.uniform_int(3);
    std::vector<int> side(8, 1);
    for (std::size_t i = 0; i < s; ++i) side[i] = 0;
    rng.shuffle(side);
    for (uint32_t i = 0; i < 8; ++i)
      for (uint32_t j = i + 1; j < 8; ++j) {
        const double w = side[i] == side[j] ? rng.uniform(0.55, 1.0)
                                            : rng.uniform(0.05, 0.25);
        g.edges.push_back({i, j, w});
      }
    const double opt = min_ncut_bruteforce(g);
    const ClusterAssignment a = spectral_cluster(g, 2, 8, rep);
    const double got = ncut_of(g, a.labels);
    ++total;
    if (got <= 1.1 * opt + 1e-12) ++within;
  }
  CHECK(within == total);
}

TEST_CASE("spectral eigenmap coordinates are finite") {
  Rng rng(19);
  AffinityGraph g;
  g.node_count = 12;
  for (uint32_t i = 0; i < 12; ++i)
    for (uint32_t j = i + 1; j < 12; ++j)
      g.edges.push_back({i, j, rng.uniform(0.01, 1.0)});
  const Eigenmap map = eigenmap(g);
  for (double v : map.coords) CHECK(std::isfinite(v));
}
