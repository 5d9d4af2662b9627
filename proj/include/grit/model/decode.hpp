#pragma once

#include <optional>
#include <vector>

#include "grit/model/incremental.hpp"
#include "grit/model/loss.hpp"

namespace grit {

struct DecodeOptions {
  double sep_downweigh = 0.01;   // separator probability multiplier, applied pre-argmax
  bool offset_constraint = true; // mask end-token choices below the current begin
  int step_cap = 55;             // hard bound on decoded steps (excluding <S>)
  bool record_trace = false;
};

// Per-step record used by the decoding-constraint analyses. Separator
// ranks are 1-based positions of the separator among the legal choices,
// with and without the downweigh factor; only begin steps have them
// (the separator is not a legal end token).
struct DecodeStep {
  bool begin_step = false;
  int chosen = -1;
  int sep_rank_downweighed = -1;
  int sep_rank_plain = -1;
};

struct DecodeOutput {
  PointerSequence sequence;
  std::vector<DecodeStep> trace;
};

// Greedy constrained decoding: at each step the pointer distribution is
// adjusted (separator downweigh first, then positional masking) and the
// argmax taken. Stops at the fifth separator; hitting the step cap closes
// the remaining roles with separators and flags the sequence truncated.
// The source is encoded once and target steps run incrementally.
inline DecodeOutput decode(const ModelParams& params, const std::vector<int>& src_ids,
                           const DecodeOptions& opts = {}) {
  const int m = static_cast<int>(src_ids.size()) - 1;
  DecodeOutput out;
  out.sequence.sep_index = m;
  out.sequence.indices.push_back(0);

  IncrementalState state(params, src_ids);
  Eigen::VectorXd p = state.step(0);
  int seps = 0;
  std::optional<int> pending_begin;
  int steps = 0;

  while (seps < static_cast<int>(kNumRoles)) {
    if (steps >= opts.step_cap) {
      out.sequence.truncated = true;
      if (pending_begin) {  // a begin without an end cannot be kept
        out.sequence.indices.pop_back();
        pending_begin.reset();
      }
      while (seps < static_cast<int>(kNumRoles)) {
        out.sequence.indices.push_back(m);
        ++seps;
      }
      break;
    }
    ++steps;

    Eigen::VectorXd adjusted = p;
    adjusted(m) *= opts.sep_downweigh;

    // Legal choices: [CLS] never; the separator only when no begin is
    // pending; end tokens at or after the pending begin (unless the
    // offset constraint is ablated).
    const int lo = pending_begin && opts.offset_constraint ? *pending_begin : 1;
    auto legal = [&](int j) {
      if (j == 0) return false;
      if (j == m) return !pending_begin.has_value();
      return j >= lo;
    };

    int best = -1;
    for (int j = 0; j <= m; ++j) {
      if (!legal(j)) continue;
      if (best < 0 || adjusted(j) > adjusted(best)) best = j;
    }

    if (opts.record_trace) {
      DecodeStep step;
      step.begin_step = !pending_begin.has_value();
      step.chosen = best;
      if (step.begin_step) {
        int above_down = 0, above_plain = 0;
        for (int j = 1; j < m; ++j) {
          if (!legal(j)) continue;
          if (adjusted(j) > adjusted(m)) ++above_down;
          if (p(j) > p(m)) ++above_plain;
        }
        step.sep_rank_downweighed = 1 + above_down;
        step.sep_rank_plain = 1 + above_plain;
      }
      out.trace.push_back(step);
    }

    out.sequence.indices.push_back(best);
    if (best == m) {
      ++seps;
    } else if (!pending_begin) {
      pending_begin = best;
    } else {
      pending_begin.reset();
    }
    if (seps < static_cast<int>(kNumRoles)) p = state.step(best);
  }

  return out;
}

}  // namespace grit
