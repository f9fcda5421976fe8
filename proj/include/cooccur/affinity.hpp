#pragma once

#include <cstdint>
#include <vector>

#include "cooccur/nnet.hpp"
#include "cooccur/pair.hpp"
#include "cooccur/tensor.hpp"

namespace cooccur::affinity {

struct HogConfig {
  std::size_t orientation_bins = 9;  // unsigned, [0, 180)
  std::size_t cell_size = 8;         // pixels
  bool block_normalize = true;       // 2x2-cell blocks, L2
};

enum class MeasureKind { Learned, RawColor, MeanColor, ColorHist, Hog };

const char* measure_name(MeasureKind k);

// A ranking measure over primitive pairs; larger always means more similar.
struct Measure {
  MeasureKind kind = MeasureKind::RawColor;
  const nnet::SiameseNet* net = nullptr;
  std::size_t hist_bins = 8;
  HogConfig hog;

  static Measure learned(const nnet::SiameseNet& net) {
    Measure m;
    m.kind = MeasureKind::Learned;
    m.net = &net;
    return m;
  }
  static Measure of(MeasureKind kind) {
    Measure m;
    m.kind = kind;
    return m;
  }
};

// Symmetrized affinity. The learned kind returns
// (P(C=1|a,b) + P(C=1|b,a)) / 2 in (0,1); baselines return similarity scores
// (negated distances or kernel values). Every kind is exactly symmetric.
double affinity(const Measure& m, const Tensor& a, const Tensor& b);

// -||a - b||_2 over the (masked) pixels.
double baseline_raw_color(const Tensor& a, const Tensor& b);
// -||mean(a) - mean(b)||_2 with per-channel means.
double baseline_mean_color(const Tensor& a, const Tensor& b);
// Intersection of L1-normalized joint RGB histograms (bins^3 cells).
double baseline_color_hist(const Tensor& a, const Tensor& b,
                           std::size_t bins = 8);
// Cosine similarity of HOG descriptors.
double baseline_hog(const Tensor& a, const Tensor& b, const HogConfig& cfg = {});

// HOG descriptor (exposed for tests): per-cell orientation histograms,
// optionally L2-normalized over 2x2-cell blocks.
std::vector<double> hog_descriptor(const Tensor& img, const HogConfig& cfg = {});

// AP over the score-descending ranking, ties broken by stable input order;
// every positive contributes delta-recall 1/P.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels);

// Scores for a pair list; parallelizable, deterministic merge.
std::vector<double> batch_affinity(const Measure& m,
                                   const std::vector<PairExample>& pairs);

// AP of the measure at predicting C over the given pairs.
double evaluate_C(const Measure& m, const std::vector<PairExample>& pairs);
// AP at predicting Q; requires every pair to have C=1 and a Q label.
double evaluate_Q(const Measure& m, const std::vector<PairExample>& pairs);

}  // namespace cooccur::affinity
