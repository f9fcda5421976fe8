#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cooccur/affinity.hpp"
#include "cooccur/errors.hpp"
#include "cooccur/probes.hpp"
#include "cooccur/rng.hpp"

using namespace cooccur;
using namespace cooccur::probes;

namespace {

Tensor random_patch(std::size_t side, uint64_t seed) {
  Rng rng(seed);
  Tensor t({side, side, 3});
  for (double& v : t.data) v = rng.uniform();
  return t;
}

Tensor masked(const Tensor& t) {
  Tensor out = t;
  const std::size_t side = t.shape[0];
  const double mid = (side - 1) / 2.0;
  const double r2 = (side / 2.0) * (side / 2.0);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      if ((y - mid) * (y - mid) + (x - mid) * (x - mid) > r2)
        for (std::size_t c = 0; c < 3; ++c) out.at3(y, x, c) = 0.0;
  return out;
}

}  // namespace

TEST_CASE("pixel transforms") {
  Tensor t({1, 1, 3});
  t.data = {0.2, 0.4, 0.9};
  const Tensor rc = apply_transform(t, Transform::RemoveColor);
  CHECK(rc.data[0] == doctest::Approx(0.5));
  CHECK(rc.data[1] == doctest::Approx(0.5));
  CHECK(rc.data[2] == doctest::Approx(0.5));

  t.data = {0.8, 0.4, 0.2};
  const Tensor dk = apply_transform(t, Transform::Darken);
  CHECK(dk.data[0] == doctest::Approx(0.4));
  CHECK(dk.data[1] == doctest::Approx(0.2));
  CHECK(dk.data[2] == doctest::Approx(0.1));
}

TEST_CASE("rotate-90 is counter-clockwise and of order four") {
  Tensor t({3, 3, 3});
  t.at3(0, 2, 0) = 1.0;  // top-right marker
  const Tensor r = apply_transform(t, Transform::Rotate90);
  CHECK(r.at3(0, 0, 0) == 1.0);  // lands at top-left under ccw rotation

  const Tensor patch = random_patch(9, 1);
  Tensor four = patch;
  for (int i = 0; i < 4; ++i) four = apply_transform(four, Transform::Rotate90);
  CHECK(four.data == patch.data);
}

TEST_CASE("mirrors are involutions") {
  const Tensor patch = random_patch(9, 2);
  for (Transform t : {Transform::MirrorVertical, Transform::MirrorHorizontal}) {
    const Tensor twice = apply_transform(apply_transform(patch, t), t);
    CHECK(twice.data == patch.data);
  }
  // Vertical mirror flips rows; horizontal flips columns.
  Tensor marker({2, 2, 3});
  marker.at3(0, 0, 0) = 1.0;
  CHECK(apply_transform(marker, Transform::MirrorVertical).at3(1, 0, 0) == 1.0);
  CHECK(apply_transform(marker, Transform::MirrorHorizontal).at3(0, 1, 0) ==
        1.0);
}

TEST_CASE("remove-color is idempotent; darken twice is a quarter") {
  const Tensor patch = random_patch(9, 3);
  const Tensor once = apply_transform(patch, Transform::RemoveColor);
  const Tensor twice = apply_transform(once, Transform::RemoveColor);
  CHECK(once.data == twice.data);

  const Tensor d2 = apply_transform(apply_transform(patch, Transform::Darken),
                                    Transform::Darken);
  for (std::size_t i = 0; i < patch.numel(); ++i)
    CHECK(d2.data[i] == doctest::Approx(patch.data[i] * 0.25));
}

TEST_CASE("geometric transforms commute with the circular mask") {
  const Tensor patch = masked(random_patch(17, 4));
  for (Transform t : {Transform::Rotate90, Transform::MirrorVertical,
                      Transform::MirrorHorizontal}) {
    const Tensor with_mask = apply_transform(patch, t, true);
    const Tensor without = apply_transform(patch, t, false);
    // The disk is symmetric under these transforms, so re-masking a masked
    // patch changes nothing.
    CHECK(with_mask.data == without.data);
    // Corners stay zero.
    CHECK(with_mask.at3(0, 0, 0) == 0.0);
    CHECK(with_mask.at3(16, 16, 2) == 0.0);
  }
}

TEST_CASE("probe report: none column first, deterministic, shape checks") {
  const auto net = nnet::make_patch_net(50);
  std::vector<PairExample> pairs(20);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].a = masked(random_patch(17, 100 + i));
    pairs[i].b = masked(random_patch(17, 200 + i));
    pairs[i].c_label = 1;
  }
  const auto report = probe_report(net, pairs, all_transforms(), true);
  REQUIRE(report.transforms.size() == 6);
  CHECK(report.transforms[0] == Transform::None);

  // The none column equals the mean symmetric affinity directly.
  const auto m = affinity::Measure::learned(net);
  double mean = 0.0;
  for (const auto& ex : pairs)
    mean += affinity::affinity(m, ex.a, ex.b) / double(pairs.size());
  CHECK(report.mean_affinity[0] == doctest::Approx(mean).epsilon(1e-12));

  const auto again = probe_report(net, pairs, all_transforms(), true);
  CHECK(report.mean_affinity == again.mean_affinity);
}

TEST_CASE("probe report: protocol violations") {
  const auto net = nnet::make_patch_net(51);
  CHECK_THROWS_AS(probe_report(net, {}, all_transforms(), true), Error);
  std::vector<PairExample> pairs(2);
  pairs[0].a = masked(random_patch(17, 1));
  pairs[0].b = masked(random_patch(17, 2));
  pairs[0].c_label = 1;
  pairs[1] = pairs[0];
  pairs[1].c_label = 0;
  bool threw = false;
  try {
    probe_report(net, pairs, all_transforms(), true);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.category() == ErrorCategory::Protocol);
  }
  CHECK(threw);
}
