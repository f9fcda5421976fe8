#include "cooccur/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cooccur/errors.hpp"
#include "cooccur/kernels.hpp"
#include "cooccur/parallel.hpp"

namespace cooccur::affinity {

const char* measure_name(MeasureKind k) {
  switch (k) {
    case MeasureKind::Learned: return "learned";
    case MeasureKind::RawColor: return "raw-color";
    case MeasureKind::MeanColor: return "mean-color";
    case MeasureKind::ColorHist: return "color-histogram";
    case MeasureKind::Hog: return "hog";
  }
  return "?";
}

double baseline_raw_color(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    fail(ErrorCategory::InputShape, "raw-color: shape mismatch");
  return -std::sqrt(kern::sqdist(a.ptr(), b.ptr(), a.numel()));
}

double baseline_mean_color(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    fail(ErrorCategory::InputShape, "mean-color: shape mismatch");
  const std::size_t px = a.numel() / 3;
  double ma[3] = {0, 0, 0}, mb[3] = {0, 0, 0};
  for (std::size_t i = 0; i < px; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      ma[c] += a.data[3 * i + c];
      mb[c] += b.data[3 * i + c];
    }
  double d2 = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double d = (ma[c] - mb[c]) / double(px);
    d2 += d * d;
  }
  return -std::sqrt(d2);
}

namespace {

std::vector<double> joint_hist(const Tensor& t, std::size_t bins) {
  std::vector<double> h(bins * bins * bins, 0.0);
  const std::size_t px = t.numel() / 3;
  for (std::size_t i = 0; i < px; ++i) {
    std::size_t idx = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t b = static_cast<std::size_t>(t.data[3 * i + c] * bins);
      if (b >= bins) b = bins - 1;
      idx = idx * bins + b;
    }
    h[idx] += 1.0;
  }
  const double total = double(px);
  for (double& v : h) v /= total;
  return h;
}

}  // namespace

double baseline_color_hist(const Tensor& a, const Tensor& b, std::size_t bins) {
  if (!a.same_shape(b))
    fail(ErrorCategory::InputShape, "color-histogram: shape mismatch");
  const auto ha = joint_hist(a, bins);
  const auto hb = joint_hist(b, bins);
  double inter = 0.0;
  for (std::size_t i = 0; i < ha.size(); ++i) inter += std::min(ha[i], hb[i]);
  return inter;
}

std::vector<double> hog_descriptor(const Tensor& img, const HogConfig& cfg) {
  const std::size_t h = img.shape[0], w = img.shape[1];
  std::vector<double> gray(h * w);
  for (std::size_t i = 0; i < h * w; ++i)
    gray[i] =
        (img.data[3 * i] + img.data[3 * i + 1] + img.data[3 * i + 2]) / 3.0;

  const std::size_t cy = h / cfg.cell_size, cx = w / cfg.cell_size;
  if (cy == 0 || cx == 0)
    fail(ErrorCategory::InputShape, "hog: image smaller than one cell");
  const std::size_t bins = cfg.orientation_bins;
  std::vector<double> cells(cy * cx * bins, 0.0);

  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t y = 0; y < cy * cfg.cell_size; ++y) {
    for (std::size_t x = 0; x < cx * cfg.cell_size; ++x) {
      const std::size_t xm = x == 0 ? 0 : x - 1;
      const std::size_t xp = x + 1 >= w ? w - 1 : x + 1;
      const std::size_t ym = y == 0 ? 0 : y - 1;
      const std::size_t yp = y + 1 >= h ? h - 1 : y + 1;
      const double dx = gray[y * w + xp] - gray[y * w + xm];
      const double dy = gray[yp * w + x] - gray[ym * w + x];
      const double mag = std::hypot(dx, dy);
      if (mag == 0.0) continue;
      double ang = std::atan2(dy, dx);  // (-pi, pi]
      if (ang < 0.0) ang += kPi;        // unsigned orientation [0, pi)
      if (ang >= kPi) ang -= kPi;
      std::size_t bin = static_cast<std::size_t>(ang / kPi * bins);
      if (bin >= bins) bin = bins - 1;
      const std::size_t cell =
          (y / cfg.cell_size) * cx + (x / cfg.cell_size);
      cells[cell * bins + bin] += mag;
    }
  }

  if (!cfg.block_normalize || cy < 2 || cx < 2) return cells;

  // 2x2-cell blocks at stride 1, each L2-normalized.
  std::vector<double> desc;
  desc.reserve((cy - 1) * (cx - 1) * 4 * bins);
  for (std::size_t by = 0; by + 1 < cy; ++by) {
    for (std::size_t bx = 0; bx + 1 < cx; ++bx) {
      const std::size_t base = desc.size();
      for (std::size_t oy = 0; oy < 2; ++oy)
        for (std::size_t ox = 0; ox < 2; ++ox) {
          const std::size_t cell = (by + oy) * cx + (bx + ox);
          desc.insert(desc.end(), cells.begin() + cell * bins,
                      cells.begin() + (cell + 1) * bins);
        }
      double norm2 = 0.0;
      for (std::size_t i = base; i < desc.size(); ++i)
        norm2 += desc[i] * desc[i];
      if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t i = base; i < desc.size(); ++i) desc[i] *= inv;
      }
    }
  }
  return desc;
}

double baseline_hog(const Tensor& a, const Tensor& b, const HogConfig& cfg) {
  if (!a.same_shape(b)) fail(ErrorCategory::InputShape, "hog: shape mismatch");
  const auto da = hog_descriptor(a, cfg);
  const auto db = hog_descriptor(b, cfg);
  const double na = std::sqrt(kern::scalar::dot(da.data(), da.data(), da.size()));
  const double nb = std::sqrt(kern::scalar::dot(db.data(), db.data(), db.size()));
  if (na == 0.0 && nb == 0.0) return 1.0;  // identical featureless inputs
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kern::scalar::dot(da.data(), db.data(), da.size()) / (na * nb);
}

double affinity(const Measure& m, const Tensor& a, const Tensor& b) {
  switch (m.kind) {
    case MeasureKind::Learned: {
      if (!m.net) fail(ErrorCategory::Config, "learned measure without a net");
      const double pab = nnet::predict_prob(*m.net, a, b);
      const double pba = nnet::predict_prob(*m.net, b, a);
      return (pab + pba) / 2.0;
    }
    case MeasureKind::RawColor:
      return baseline_raw_color(a, b);
    case MeasureKind::MeanColor:
      return baseline_mean_color(a, b);
    case MeasureKind::ColorHist:
      return baseline_color_hist(a, b, m.hist_bins);
    case MeasureKind::Hog:
      return baseline_hog(a, b, m.hog);
  }
  fail(ErrorCategory::Internal, "unknown measure kind");
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    fail(ErrorCategory::Input, "average_precision: size mismatch");
  const std::size_t positives =
      std::count(labels.begin(), labels.end(), 1);
  if (positives == 0)
    fail(ErrorCategory::UndefinedMetric,
         "average_precision: no positive labels");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      ap += double(hits) / double(rank + 1);
    }
  }
  return ap / double(positives);
}

std::vector<double> batch_affinity(const Measure& m,
                                   const std::vector<PairExample>& pairs) {
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    scores[i] = affinity(m, pairs[i].a, pairs[i].b);
  });
  return scores;
}

double evaluate_C(const Measure& m, const std::vector<PairExample>& pairs) {
  std::vector<int> labels(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) labels[i] = pairs[i].c_label;
  return average_precision(batch_affinity(m, pairs), labels);
}

double evaluate_Q(const Measure& m, const std::vector<PairExample>& pairs) {
  std::vector<int> labels(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].c_label != 1)
      fail(ErrorCategory::Protocol,
           "evaluate_Q: every pair must have C=1 (Q is tested with C held "
           "constant)");
    if (!pairs[i].q_label)
      fail(ErrorCategory::MissingLabel, "evaluate_Q: pair without Q label");
    labels[i] = *pairs[i].q_label;
  }
  return average_precision(batch_affinity(m, pairs), labels);
}

}  // namespace cooccur::affinity
