#pragma once

#include <vector>

#include "grit/model/transformer.hpp"

namespace grit {

// Incremental decoding state: the source is encoded once (its states are
// exactly target-independent under the partial causal mask), and each
// target step only pushes its own row through the stack, attending to the
// cached per-layer K/V of everything before it. Step-for-step this
// computes the same states as a full forward pass.
class IncrementalState {
 public:
  IncrementalState(const ModelParams& params, const std::vector<int>& src_ids)
      : params_(params), src_ids_(src_ids) {
    const int h = params.config.hidden_dim;
    const int src_rows = static_cast<int>(src_ids.size());
    kv_.resize(params.layers.size());

    JointInput in = make_joint_input(src_ids, {});
    LnCache ln;
    Mat x = layer_norm_forward(embedding_sum(params, in), params.emb_ln_gamma,
                               params.emb_ln_beta, ln);
    const int heads = params.config.num_heads;
    const int d = h / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      const LayerParams& ly = params.layers[l];
      Mat q = (x * ly.wq).rowwise() + ly.bq.row(0);
      kv_[l].k = (x * ly.wk).rowwise() + ly.bk.row(0);
      kv_[l].v = (x * ly.wv).rowwise() + ly.bv.row(0);

      Mat context(src_rows, h);
      for (int hd = 0; hd < heads; ++hd) {
        Mat scores =
            (q.middleCols(hd * d, d) * kv_[l].k.middleCols(hd * d, d).transpose()) * scale;
        softmax_rows_inplace(scores);
        context.middleCols(hd * d, d) = scores * kv_[l].v.middleCols(hd * d, d);
      }
      Mat attn_out = (context * ly.wo).rowwise() + ly.bo.row(0);
      LnCache ln1;
      Mat x1 = layer_norm_forward(x + attn_out, ly.ln1_gamma, ly.ln1_beta, ln1);
      Mat pre = (x1 * ly.w_ff1).rowwise() + ly.b_ff1.row(0);
      Mat act = pre.unaryExpr([](double v) { return gelu(v); });
      Mat ff_out = (act * ly.w_ff2).rowwise() + ly.b_ff2.row(0);
      LnCache ln2;
      x = layer_norm_forward(x1 + ff_out, ly.ln2_gamma, ly.ln2_beta, ln2);
    }
    src_states_ = x;
  }

  const Mat& source_states() const { return src_states_; }

  // Feeds one target pointer and returns the pointing distribution over
  // the source positions for the next prediction.
  Eigen::VectorXd step(int pointer) {
    const int h = params_.config.hidden_dim;
    const int heads = params_.config.num_heads;
    const int d = h / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    const int m = static_cast<int>(src_ids_.size()) - 1;
    if (pointer < 0 || pointer > m)
      throw ValidationError("target pointer out of source range: " + std::to_string(pointer));

    Mat x = params_.tok_emb.row(src_ids_[pointer]) + params_.pos_emb.row(pointer) +
            params_.seg_emb.row(1);
    LnCache ln;
    x = layer_norm_forward(x, params_.emb_ln_gamma, params_.emb_ln_beta, ln);

    for (std::size_t l = 0; l < params_.layers.size(); ++l) {
      const LayerParams& ly = params_.layers[l];
      Mat q = (x * ly.wq).rowwise() + ly.bq.row(0);
      Mat k = (x * ly.wk).rowwise() + ly.bk.row(0);
      Mat v = (x * ly.wv).rowwise() + ly.bv.row(0);
      kv_[l].k.conservativeResize(kv_[l].k.rows() + 1, Eigen::NoChange);
      kv_[l].k.row(kv_[l].k.rows() - 1) = k.row(0);
      kv_[l].v.conservativeResize(kv_[l].v.rows() + 1, Eigen::NoChange);
      kv_[l].v.row(kv_[l].v.rows() - 1) = v.row(0);

      Mat context(1, h);
      for (int hd = 0; hd < heads; ++hd) {
        Mat scores =
            (q.middleCols(hd * d, d) * kv_[l].k.middleCols(hd * d, d).transpose()) * scale;
        softmax_rows_inplace(scores);
        context.middleCols(hd * d, d) = scores * kv_[l].v.middleCols(hd * d, d);
      }
      Mat attn_out = (context * ly.wo).rowwise() + ly.bo.row(0);
      LnCache ln1;
      Mat x1 = layer_norm_forward(x + attn_out, ly.ln1_gamma, ly.ln1_beta, ln1);
      Mat pre = (x1 * ly.w_ff1).rowwise() + ly.b_ff1.row(0);
      Mat act = pre.unaryExpr([](double val) { return gelu(val); });
      Mat ff_out = (act * ly.w_ff2).rowwise() + ly.b_ff2.row(0);
      LnCache ln2;
      x = layer_norm_forward(x1 + ff_out, ly.ln2_gamma, ly.ln2_beta, ln2);
    }

    Eigen::VectorXd z = src_states_ * x.row(0).transpose();
    double mx = z.maxCoeff();
    Eigen::VectorXd p = (z.array() - mx).exp();
    p /= p.sum();
    return p;
  }

 private:
  struct LayerKV {
    Mat k, v;
  };

  const ModelParams& params_;
  std::vector<int> src_ids_;
  Mat src_states_;
  std::vector<LayerKV> kv_;
};

}  // namespace grit
