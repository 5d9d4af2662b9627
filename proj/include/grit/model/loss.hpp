#pragma once

#include <cmath>
#include <vector>

#include "grit/linearize.hpp"
#include "grit/model/transformer.hpp"

namespace grit {

// Parameter-free pointer head: logits are dot products between a decoder
// state and every source state, softmaxed into a pointing distribution.
inline Eigen::VectorXd pointer_distribution(const Mat& states, int target_row,
                                            int source_rows) {
  Eigen::VectorXd z = states.topRows(source_rows) * states.row(target_row).transpose();
  double mx = z.maxCoeff();
  Eigen::VectorXd p = (z.array() - mx).exp();
  p /= p.sum();
  return p;
}

// Teacher-forced mean cross-entropy over pointer steps. The decoder input
// is the gold sequence without its final separator; the prediction at
// step t targets the gold index at t+1. When `grads` is given, exact
// gradients for every parameter are accumulated into it.
inline double pointer_loss(const ModelParams& params, const std::vector<int>& src_ids,
                           const PointerSequence& gold, ModelParams* grads = nullptr,
                           const Dropout& dropout = {}) {
  const int m = static_cast<int>(src_ids.size()) - 1;
  if (gold.indices.size() < 2)
    throw ValidationError("gold pointer sequence has no prediction steps");
  const int n_steps = static_cast<int>(gold.indices.size()) - 1;

  std::vector<int> dec_input(gold.indices.begin(), gold.indices.end() - 1);
  JointInput in = make_joint_input(src_ids, dec_input);
  AttentionMask mask = build_mask(m, static_cast<int>(dec_input.size()) - 1);
  ForwardCache cache;
  const Mat& states = transformer_forward(params, in, mask, cache, dropout);

  const int source_rows = m + 1;
  Mat dstates;
  if (grads) dstates = Mat::Zero(states.rows(), states.cols());

  double total = 0.0;
  for (int t = 0; t < n_steps; ++t) {
    const int row = source_rows + t;
    const int target = gold.indices[t + 1];
    Eigen::VectorXd z = states.topRows(source_rows) * states.row(row).transpose();
    double mx = z.maxCoeff();
    Eigen::VectorXd ez = (z.array() - mx).exp();
    double sum = ez.sum();
    total -= z(target) - mx - std::log(sum);

    if (grads) {
      Eigen::VectorXd dz = ez / sum;
      dz(target) -= 1.0;
      dz /= static_cast<double>(n_steps);
      dstates.row(row) += dz.transpose() * states.topRows(source_rows);
      dstates.topRows(source_rows) += dz * states.row(row);
    }
  }

  if (grads) transformer_backward(params, cache, dstates, *grads);
  return total / static_cast<double>(n_steps);
}

}  // namespace grit
