#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "grit/model/config.hpp"

namespace grit {

using Mat = Eigen::MatrixXd;

struct LayerParams {
  Mat wq, wk, wv, wo;  // hidden x hidden
  Mat bq, bk, bv, bo;  // 1 x hidden
  Mat ln1_gamma, ln1_beta;
  Mat w_ff1, b_ff1;  // hidden x ff, 1 x ff
  Mat w_ff2, b_ff2;  // ff x hidden, 1 x hidden
  Mat ln2_gamma, ln2_beta;
};

// The full parameter set: embedding tables plus the transformer stack.
// The pointer head is a bare dot product, so nothing else exists; the
// tensor registry below is the single source of truth for counting,
// initialization, optimizer state and checkpoints.
struct ModelParams {
  ModelConfig config;
  Mat tok_emb;  // vocab x hidden
  Mat pos_emb;  // max_source_len x hidden
  Mat seg_emb;  // 2 x hidden (sequence A = source, B = target)
  Mat emb_ln_gamma, emb_ln_beta;
  std::vector<LayerParams> layers;

  template <class Self, class Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("tok_emb", self.tok_emb);
    fn("pos_emb", self.pos_emb);
    fn("seg_emb", self.seg_emb);
    fn("emb_ln_gamma", self.emb_ln_gamma);
    fn("emb_ln_beta", self.emb_ln_beta);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& ly = self.layers[l];
      const std::string p = "layer" + std::to_string(l) + ".";
      fn(p + "wq", ly.wq); fn(p + "bq", ly.bq);
      fn(p + "wk", ly.wk); fn(p + "bk", ly.bk);
      fn(p + "wv", ly.wv); fn(p + "bv", ly.bv);
      fn(p + "wo", ly.wo); fn(p + "bo", ly.bo);
      fn(p + "ln1_gamma", ly.ln1_gamma); fn(p + "ln1_beta", ly.ln1_beta);
      fn(p + "w_ff1", ly.w_ff1); fn(p + "b_ff1", ly.b_ff1);
      fn(p + "w_ff2", ly.w_ff2); fn(p + "b_ff2", ly.b_ff2);
      fn(p + "ln2_gamma", ly.ln2_gamma); fn(p + "ln2_beta", ly.ln2_beta);
    }
  }

  std::vector<std::pair<std::string, Mat*>> tensors() {
    std::vector<std::pair<std::string, Mat*>> out;
    visit(*this, [&](const std::string& name, Mat& m) { out.emplace_back(name, &m); });
    return out;
  }

  std::vector<std::pair<std::string, const Mat*>> tensors() const {
    std::vector<std::pair<std::string, const Mat*>> out;
    visit(*this, [&](const std::string& name, const Mat& m) { out.emplace_back(name, &m); });
    return out;
  }

  long long parameter_count() const {
    long long n = 0;
    for (const auto& [name, mat] : tensors()) n += mat->size();
    return n;
  }

  static ModelParams shaped(const ModelConfig& config) {
    config.validate();
    const int h = config.hidden_dim;
    const int f = config.feedforward_dim;
    ModelParams p;
    p.config = config;
    p.tok_emb = Mat::Zero(config.vocab_size, h);
    p.pos_emb = Mat::Zero(config.max_source_len, h);
    p.seg_emb = Mat::Zero(2, h);
    p.emb_ln_gamma = Mat::Ones(1, h);
    p.emb_ln_beta = Mat::Zero(1, h);
    p.layers.resize(config.num_layers);
    for (LayerParams& ly : p.layers) {
      ly.wq = Mat::Zero(h, h); ly.bq = Mat::Zero(1, h);
      ly.wk = Mat::Zero(h, h); ly.bk = Mat::Zero(1, h);
      ly.wv = Mat::Zero(h, h); ly.bv = Mat::Zero(1, h);
      ly.wo = Mat::Zero(h, h); ly.bo = Mat::Zero(1, h);
      ly.ln1_gamma = Mat::Ones(1, h); ly.ln1_beta = Mat::Zero(1, h);
      ly.w_ff1 = Mat::Zero(h, f); ly.b_ff1 = Mat::Zero(1, f);
      ly.w_ff2 = Mat::Zero(f, h); ly.b_ff2 = Mat::Zero(1, h);
      ly.ln2_gamma = Mat::Ones(1, h); ly.ln2_beta = Mat::Zero(1, h);
    }
    return p;
  }

  // Scaled-normal init (std 0.02) for embeddings and projection weights;
  // biases zero, layer-norm gains one. Deterministic under config.seed.
  static ModelParams init(const ModelConfig& config) {
    ModelParams p = shaped(config);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> dist(0.0, 0.02);
    visit(p, [&](const std::string& name, Mat& m) {
      if (name.find("ln") != std::string::npos || name.find("gamma") != std::string::npos ||
          name.find("beta") != std::string::npos)
        return;  // layer-norm parameters keep their 1/0 init
      if (name.find(".b") != std::string::npos) return;  // biases stay zero
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    });
    return p;
  }

  static ModelParams zeros_like(const ModelParams& other) {
    ModelParams p = shaped(other.config);
    visit(p, [](const std::string&, Mat& m) { m.setZero(); });
    return p;
  }
};

}  // namespace grit
