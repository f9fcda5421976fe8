#include "cooccur/probes.hpp"

#include <algorithm>

#include "cooccur/affinity.hpp"
#include "cooccur/errors.hpp"
#include "cooccur/parallel.hpp"

namespace cooccur::probes {

const char* transform_name(Transform t) {
  switch (t) {
    case Transform::None: return "none";
    case Transform::Rotate90: return "rotate-90";
    case Transform::MirrorVertical: return "mirror-vertical";
    case Transform::MirrorHorizontal: return "mirror-horizontal";
    case Transform::RemoveColor: return "remove-color";
    case Transform::Darken: return "darken";
  }
  return "?";
}

std::vector<Transform> all_transforms() {
  return {Transform::None,           Transform::Rotate90,
          Transform::MirrorVertical, Transform::MirrorHorizontal,
          Transform::RemoveColor,    Transform::Darken};
}

namespace {

void apply_circular_mask(Tensor& t) {
  const std::size_t side = t.shape[0];
  const double r = side / 2.0;
  const double mid = (side - 1) / 2.0;
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double dy = y - mid, dx = x - mid;
      if (dy * dy + dx * dx > r * r)
        for (std::size_t c = 0; c < 3; ++c) t.at3(y, x, c) = 0.0;
    }
}

}  // namespace

Tensor apply_transform(const Tensor& img, Transform t,
                       bool reapply_circular_mask) {
  if (img.shape.size() != 3 || img.shape[0] != img.shape[1] ||
      img.shape[2] != 3)
    fail(ErrorCategory::InputShape, "apply_transform: want square (s,s,3)");
  const std::size_t s = img.shape[0];
  Tensor out(img.shape);
  bool geometric = false;
  switch (t) {
    case Transform::None:
      out = img;
      break;
    case Transform::Rotate90:  // counter-clockwise
      geometric = true;
      for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
          for (std::size_t c = 0; c < 3; ++c)
            out.at3(y, x, c) = img.at3(x, s - 1 - y, c);
      break;
    case Transform::MirrorVertical:  // flip rows
      geometric = true;
      for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
          for (std::size_t c = 0; c < 3; ++c)
            out.at3(y, x, c) = img.at3(s - 1 - y, x, c);
      break;
    case Transform::MirrorHorizontal:  // flip columns
      geometric = true;
      for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
          for (std::size_t c = 0; c < 3; ++c)
            out.at3(y, x, c) = img.at3(y, s - 1 - x, c);
      break;
    case Transform::RemoveColor:
      for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x) {
          const double m = (img.at3(y, x, 0) + img.at3(y, x, 1) +
                            img.at3(y, x, 2)) /
                           3.0;
          for (std::size_t c = 0; c < 3; ++c) out.at3(y, x, c) = m;
        }
      break;
    case Transform::Darken:
      out = img;
      for (double& v : out.data) v *= 0.5;
      break;
  }
  if (geometric && reapply_circular_mask) apply_circular_mask(out);
  return out;
}

ProbeReport probe_report(const nnet::SiameseNet& net,
                         const std::vector<PairExample>& positive_pairs,
                         const std::vector<Transform>& transforms,
                         bool circular_mask) {
  if (positive_pairs.empty())
    fail(ErrorCategory::Input, "probe_report: empty pair set");
  for (const PairExample& ex : positive_pairs)
    if (ex.c_label != 1)
      fail(ErrorCategory::Protocol, "probe_report: pairs must all have C=1");

  ProbeReport report;
  report.transforms.push_back(Transform::None);
  for (Transform t : transforms)
    if (t != Transform::None) report.transforms.push_back(t);

  const affinity::Measure learned = affinity::Measure::learned(net);
  for (Transform t : report.transforms) {
    std::vector<double> w(positive_pairs.size());
    parallel_for(positive_pairs.size(), [&](std::size_t i) {
      const Tensor tb = apply_transform(positive_pairs[i].b, t, circular_mask);
      w[i] = affinity::affinity(learned, positive_pairs[i].a, tb);
    });
    // Compensated (Kahan) mean so the report is stable to summation noise.
    double sum = 0.0, comp = 0.0;
    for (double v : w) {
      const double y = v - comp;
      const double tmp = sum + y;
      comp = (tmp - sum) - y;
      sum = tmp;
    }
    report.mean_affinity.push_back(sum / double(w.size()));
  }
  return report;
}

}  // namespace cooccur::probes
