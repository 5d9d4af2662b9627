#pragma once

#include <Eigen/Core>

#include "grit/types.hpp"

namespace grit {

// Partial causal attention mask over the joint sequence: source positions
// 0..m, target positions m+1..m+n+1. Source rows attend to all of the
// source and none of the target; target rows attend to all of the source
// plus their own causal prefix (j <= i).
using AttentionMask = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

inline AttentionMask build_mask(int m, int n) {
  if (m < 1 || n < 0) throw ValidationError("build_mask requires m >= 1, n >= 0");
  const int size = m + n + 2;
  AttentionMask mask(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (i <= m)
        mask(i, j) = (j <= m) ? 1 : 0;
      else
        mask(i, j) = (j <= m || j <= i) ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace grit
