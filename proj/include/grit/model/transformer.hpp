#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "grit/model/mask.hpp"
#include "grit/model/params.hpp"
#include "grit/model/vocab.hpp"

namespace grit {

// A BERT-shaped stack (multi-head self-attention + feedforward, residual
// and layer norm after each, layer norm on the embedding sum) evaluated
// over the joint source+target sequence under the partial causal mask.
// Forward caches everything backward needs; backward accumulates exact
// analytic gradients into a caller-provided ModelParams of zeros.

// Per joint row: which embedding-table rows are summed. Target rows use
// the pointed-at source token's id and position (pointer embeddings) and
// the sequence-B segment.
struct JointInput {
  std::vector<int> token_ids;
  std::vector<int> pos_ids;
  std::vector<int> seg_ids;
  int source_len = 0;  // m + 1 source rows

  int rows() const { return static_cast<int>(token_ids.size()); }
};

inline JointInput make_joint_input(const std::vector<int>& src_token_ids,
                                   const std::vector<int>& target_pointers) {
  JointInput in;
  in.source_len = static_cast<int>(src_token_ids.size());
  const int m = in.source_len - 1;
  for (int i = 0; i < in.source_len; ++i) {
    in.token_ids.push_back(src_token_ids[i]);
    in.pos_ids.push_back(i);
    in.seg_ids.push_back(0);
  }
  for (int ptr : target_pointers) {
    if (ptr < 0 || ptr > m)
      throw ValidationError("target pointer out of source range: " + std::to_string(ptr));
    in.token_ids.push_back(src_token_ids[ptr]);
    in.pos_ids.push_back(ptr);
    in.seg_ids.push_back(1);
  }
  return in;
}

inline Mat embedding_sum(const ModelParams& p, const JointInput& in) {
  const int h = p.config.hidden_dim;
  if (in.source_len > p.config.max_source_len)
    throw ValidationError("source exceeds max_source_len");
  Mat e(in.rows(), h);
  for (int r = 0; r < in.rows(); ++r) {
    if (in.token_ids[r] < 0 || in.token_ids[r] >= p.config.vocab_size)
      throw ValidationError("token id outside vocabulary: " +
                            std::to_string(in.token_ids[r]));
    e.row(r) = p.tok_emb.row(in.token_ids[r]) + p.pos_emb.row(in.pos_ids[r]) +
               p.seg_emb.row(in.seg_ids[r]);
  }
  return e;
}

// x_i = token + position + sequence-A segment embedding.
inline Mat embed_source(const std::vector<int>& src_token_ids, const ModelParams& p) {
  return embedding_sum(p, make_joint_input(src_token_ids, {}));
}

// y_t = token/position embeddings of the pointed-at source token plus the
// sequence-B segment embedding; no target-side position indices exist.
inline Mat embed_target(const std::vector<int>& target_pointers,
                        const std::vector<int>& src_token_ids, const ModelParams& p) {
  JointInput joint = make_joint_input(src_token_ids, target_pointers);
  Mat all = embedding_sum(p, joint);
  return all.bottomRows(static_cast<int>(target_pointers.size()));
}

struct LnCache {
  Mat normalized;
  Eigen::VectorXd inv_std;
};

inline Mat layer_norm_forward(const Mat& x, const Mat& gamma, const Mat& beta,
                              LnCache& cache) {
  constexpr double kEps = 1e-12;
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat centered = x;
  centered.colwise() -= mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  cache.inv_std = (var.array() + kEps).rsqrt();
  cache.normalized = centered.array().colwise() * cache.inv_std.array();
  Mat out = cache.normalized.array().rowwise() * gamma.row(0).array();
  out.array().rowwise() += beta.row(0).array();
  return out;
}

inline Mat layer_norm_backward(const Mat& dy, const LnCache& cache, const Mat& gamma,
                               Mat& dgamma, Mat& dbeta) {
  dgamma += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
  Eigen::VectorXd mean_dxhat = dxhat.rowwise().mean();
  Eigen::VectorXd mean_dxhat_xhat =
      (dxhat.array() * cache.normalized.array()).rowwise().mean();
  Mat dx = dxhat;
  dx.colwise() -= mean_dxhat;
  dx -= (cache.normalized.array().colwise() * mean_dxhat_xhat.array()).matrix();
  dx = dx.array().colwise() * cache.inv_std.array();
  return dx;
}

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

inline double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct LayerCache {
  Mat input;               // X
  Mat q, k, v;             // T x H after projection
  std::vector<Mat> attn;   // per-head softmax weights, T x T
  Mat context;             // concatenated head outputs
  Mat attn_drop;           // inverted-dropout mask on the attention output
  LnCache ln1;
  Mat ffn_in;              // X1 (ln1 output)
  Mat ff_pre;              // X1 * W1 + b1
  Mat ff_act;              // gelu(ff_pre)
  Mat ff_drop;             // inverted-dropout mask on the feedforward output
  LnCache ln2;
};

// Training-time dropout. Masks are drawn deterministically from the seed,
// so a loss/gradient evaluation is a pure function of (params, input,
// dropout) and stays finite-difference checkable.
struct Dropout {
  double rate = 0.0;
  std::uint64_t seed = 0;

  bool active() const { return rate > 0.0; }
};

struct ForwardCache {
  JointInput input;
  Mat mask_bias;  // 0 where attention is allowed, -inf where masked
  LnCache emb_ln;
  Mat emb_drop;   // inverted-dropout mask on the embedding output
  std::vector<LayerCache> layers;
  Mat states;  // final contextualized representations, T x H
};

inline Mat mask_to_bias(const AttentionMask& mask) {
  const double kNegInf = -std::numeric_limits<double>::infinity();
  Mat bias(mask.rows(), mask.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      bias(i, j) = mask(i, j) ? 0.0 : kNegInf;
  return bias;
}

inline void softmax_rows_inplace(Mat& scores) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double mx = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - mx).exp();
    scores.row(i) /= scores.row(i).sum();
  }
}

inline Mat transformer_forward(const ModelParams& p, const JointInput& in,
                               const AttentionMask& mask, ForwardCache& cache,
                               const Dropout& dropout = {}) {
  const int h = p.config.hidden_dim;
  const int heads = p.config.num_heads;
  const int d = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const int t = in.rows();
  if (mask.rows() != t || mask.cols() != t)
    throw ValidationError("attention mask does not match sequence length");

  cache.input = in;
  cache.mask_bias = mask_to_bias(mask);
  cache.layers.assign(p.layers.size(), {});

  std::mt19937_64 drop_rng(dropout.seed);
  auto draw_mask = [&](Eigen::Index rows, Eigen::Index cols) {
    Mat mask_out(rows, cols);
    std::bernoulli_distribution keep(1.0 - dropout.rate);
    const double scale_up = 1.0 / (1.0 - dropout.rate);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        mask_out(i, j) = keep(drop_rng) ? scale_up : 0.0;
    return mask_out;
  };

  Mat x = layer_norm_forward(embedding_sum(p, in), p.emb_ln_gamma, p.emb_ln_beta,
                             cache.emb_ln);
  if (dropout.active()) {
    cache.emb_drop = draw_mask(t, h);
    x.array() *= cache.emb_drop.array();
  }

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& ly = p.layers[l];
    LayerCache& lc = cache.layers[l];
    lc.input = x;

    lc.q = (x * ly.wq).rowwise() + ly.bq.row(0);
    lc.k = (x * ly.wk).rowwise() + ly.bk.row(0);
    lc.v = (x * ly.wv).rowwise() + ly.bv.row(0);

    lc.attn.resize(heads);
    lc.context.resize(t, h);
    for (int hd = 0; hd < heads; ++hd) {
      Mat scores = (lc.q.middleCols(hd * d, d) * lc.k.middleCols(hd * d, d).transpose()) * scale;
      scores += cache.mask_bias;
      softmax_rows_inplace(scores);
      lc.attn[hd] = std::move(scores);
      lc.context.middleCols(hd * d, d) = lc.attn[hd] * lc.v.middleCols(hd * d, d);
    }

    Mat attn_out = (lc.context * ly.wo).rowwise() + ly.bo.row(0);
    if (dropout.active()) {
      lc.attn_drop = draw_mask(t, h);
      attn_out.array() *= lc.attn_drop.array();
    }
    lc.ffn_in = layer_norm_forward(x + attn_out, ly.ln1_gamma, ly.ln1_beta, lc.ln1);

    lc.ff_pre = (lc.ffn_in * ly.w_ff1).rowwise() + ly.b_ff1.row(0);
    lc.ff_act = lc.ff_pre.unaryExpr([](double v) { return gelu(v); });
    Mat ff_out = (lc.ff_act * ly.w_ff2).rowwise() + ly.b_ff2.row(0);
    if (dropout.active()) {
      lc.ff_drop = draw_mask(t, h);
      ff_out.array() *= lc.ff_drop.array();
    }

    x = layer_norm_forward(lc.ffn_in + ff_out, ly.ln2_gamma, ly.ln2_beta, lc.ln2);
  }

  cache.states = x;
  return cache.states;
}

inline void transformer_backward(const ModelParams& p, const ForwardCache& cache,
                                 const Mat& dstates, ModelParams& grads) {
  const int h = p.config.hidden_dim;
  const int heads = p.config.num_heads;
  const int d = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Mat dx = dstates;
  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const LayerParams& ly = p.layers[l];
    const LayerCache& lc = cache.layers[l];
    LayerParams& gl = grads.layers[l];

    // ln2 over (ffn_in + ff_out)
    Mat dres2 = layer_norm_backward(dx, lc.ln2, ly.ln2_gamma, gl.ln2_gamma, gl.ln2_beta);
    Mat dffn_in = dres2;  // residual branch

    // feedforward
    Mat dff_out = lc.ff_drop.size() ? (dres2.array() * lc.ff_drop.array()).matrix() : dres2;
    gl.w_ff2 += lc.ff_act.transpose() * dff_out;
    gl.b_ff2 += dff_out.colwise().sum();
    Mat dact = dff_out * ly.w_ff2.transpose();
    Mat dpre = dact.array() * lc.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    gl.w_ff1 += lc.ffn_in.transpose() * dpre;
    gl.b_ff1 += dpre.colwise().sum();
    dffn_in += dpre * ly.w_ff1.transpose();

    // ln1 over (input + attn_out)
    Mat dres1 = layer_norm_backward(dffn_in, lc.ln1, ly.ln1_gamma, gl.ln1_gamma, gl.ln1_beta);
    Mat dinput = dres1;  // residual branch

    // output projection
    Mat dattn_out = lc.attn_drop.size() ? (dres1.array() * lc.attn_drop.array()).matrix() : dres1;
    gl.wo += lc.context.transpose() * dattn_out;
    gl.bo += dattn_out.colwise().sum();
    Mat dcontext = dattn_out * ly.wo.transpose();

    Mat dq(lc.q.rows(), h), dk(lc.k.rows(), h), dv(lc.v.rows(), h);
    for (int hd = 0; hd < heads; ++hd) {
      auto qh = lc.q.middleCols(hd * d, d);
      auto kh = lc.k.middleCols(hd * d, d);
      auto vh = lc.v.middleCols(hd * d, d);
      const Mat& attn = lc.attn[hd];
      auto dctx = dcontext.middleCols(hd * d, d);

      Mat dattn = dctx * vh.transpose();
      dv.middleCols(hd * d, d) = attn.transpose() * dctx;

      // softmax backward: dS = A .* (dA - rowsum(dA .* A))
      Eigen::VectorXd rowdot = (dattn.array() * attn.array()).rowwise().sum();
      Mat dscores = attn.array() * (dattn.colwise() - rowdot).array();

      dq.middleCols(hd * d, d) = dscores * kh * scale;
      dk.middleCols(hd * d, d) = dscores.transpose() * qh * scale;
    }

    gl.wq += lc.input.transpose() * dq;
    gl.bq += dq.colwise().sum();
    gl.wk += lc.input.transpose() * dk;
    gl.bk += dk.colwise().sum();
    gl.wv += lc.input.transpose() * dv;
    gl.bv += dv.colwise().sum();

    dinput += dq * ly.wq.transpose() + dk * ly.wk.transpose() + dv * ly.wv.transpose();
    dx = std::move(dinput);
  }

  if (cache.emb_drop.size()) dx.array() *= cache.emb_drop.array();
  Mat demb = layer_norm_backward(dx, cache.emb_ln, p.emb_ln_gamma, grads.emb_ln_gamma,
                                 grads.emb_ln_beta);
  for (int r = 0; r < cache.input.rows(); ++r) {
    grads.tok_emb.row(cache.input.token_ids[r]) += demb.row(r);
    grads.pos_emb.row(cache.input.pos_ids[r]) += demb.row(r);
    grads.seg_emb.row(cache.input.seg_ids[r]) += demb.row(r);
  }
}

}  // namespace grit
