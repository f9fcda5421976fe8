#pragma once

#include <vector>

#include "cooccur/nnet.hpp"
#include "cooccur/pair.hpp"
#include "cooccur/tensor.hpp"

namespace cooccur::probes {

enum class Transform {
  None,
  Rotate90,
  MirrorVertical,
  MirrorHorizontal,
  RemoveColor,
  Darken,
};

const char* transform_name(Transform t);
std::vector<Transform> all_transforms();

// Controlled stimulus transforms; shape-preserving. Geometric transforms
// optionally re-apply the circular mask so masked-out corners stay zero.
Tensor apply_transform(const Tensor& img, Transform t,
                       bool reapply_circular_mask = false);

struct ProbeReport {
  std::vector<Transform> transforms;
  std::vector<double> mean_affinity;  // mean w(A, T(B)) per transform
};

// For each transform: mean symmetric affinity over positive pairs with A
// unaltered and B transformed. The "none" row is always included first.
ProbeReport probe_report(const nnet::SiameseNet& net,
                         const std::vector<PairExample>& positive_pairs,
                         const std::vector<Transform>& transforms,
                         bool circular_mask);

}  // namespace cooccur::probes
