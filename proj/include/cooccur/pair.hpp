#pragma once

#include <cstdint>
#include <optional>

#include "cooccur/tensor.hpp"

namespace cooccur {

// Provenance of a sampled pair, for sampler audits. Interpretation of the
// coordinate fields depends on the domain: patch centers (y,x), frame
// timestamps (t in ax/bx), or photo lat/lon.
struct PairMeta {
  int32_t src_a = -1;  // image / movie / place index
  int32_t src_b = -1;
  double ay = 0, ax = 0;
  double by = 0, bx = 0;
};

// Two primitives with the co-occurrence label C and, when ground truth
// exists, the semantic label Q.
struct PairExample {
  Tensor a;
  Tensor b;
  int c_label = 0;
  std::optional<int> q_label;
  PairMeta meta;
};

}  // namespace cooccur
