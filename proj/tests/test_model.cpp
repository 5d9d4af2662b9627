#include <doctest.h>

#include <cmath>
#include <random>

#include "grit/model/decode.hpp"
#include "grit/model/loss.hpp"

using namespace grit;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.vocab_size = 12;
  cfg.hidden_dim = 8;
  cfg.num_layers = 1;
  cfg.num_heads = 2;
  cfg.feedforward_dim = 16;
  cfg.max_source_len = 16;
  cfg.seed = 5;
  return cfg;
}

std::vector<int> random_src_ids(std::mt19937_64& rng, const ModelConfig& cfg, int body) {
  std::vector<int> ids;
  ids.push_back(Vocabulary::kClsId);
  for (int i = 0; i < body; ++i)
    ids.push_back(std::uniform_int_distribution<int>(3, cfg.vocab_size - 1)(rng));
  ids.push_back(Vocabulary::kSepId);
  return ids;
}

PointerSequence random_gold(std::mt19937_64& rng, int m) {
  PointerSequence seq;
  seq.sep_index = m;
  seq.indices.push_back(0);
  for (std::size_t role = 0; role < kNumRoles; ++role) {
    if (std::uniform_int_distribution<int>(0, 1)(rng)) {
      int b = std::uniform_int_distribution<int>(1, m - 1)(rng);
      int e = std::min(m - 1, b + std::uniform_int_distribution<int>(0, 2)(rng));
      seq.indices.push_back(b);
      seq.indices.push_back(e);
    }
    seq.indices.push_back(m);
  }
  return seq;
}

// Literal transcription of the two piecewise mask definitions, used as
// the oracle for build_mask.
int mask_oracle(int m, int n, int i, int j) {
  if (i <= m) return (0 <= j && j <= m) ? 1 : 0;
  if (0 <= j && j <= m) return 1;
  if (j > m && j <= i) return 1;
  return 0;
}

}  // namespace

TEST_CASE("build_mask matches the worked 3x3 example") {
  AttentionMask mask = build_mask(1, 0);
  REQUIRE(mask.rows() == 3);
  CHECK(mask(0, 0) == 1);
  CHECK(mask(0, 1) == 1);
  CHECK(mask(0, 2) == 0);
  CHECK(mask(1, 0) == 1);
  CHECK(mask(1, 1) == 1);
  CHECK(mask(1, 2) == 0);
  CHECK(mask(2, 0) == 1);
  CHECK(mask(2, 1) == 1);
  CHECK(mask(2, 2) == 1);
}

TEST_CASE("build_mask conforms to the piecewise definitions") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    int m = std::uniform_int_distribution<int>(1, 64)(rng);
    int n = std::uniform_int_distribution<int>(0, 64)(rng);
    AttentionMask mask = build_mask(m, n);
    REQUIRE(mask.rows() == m + n + 2);
    for (int i = 0; i < mask.rows(); ++i)
      for (int j = 0; j < mask.cols(); ++j)
        CHECK(mask(i, j) == mask_oracle(m, n, i, j));
  }
}

TEST_CASE("the pointer head adds no parameters over the bare stack") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);

  const long long h = cfg.hidden_dim, f = cfg.feedforward_dim;
  long long bare_encoder =
      cfg.vocab_size * h + cfg.max_source_len * h + 2 * h  // embedding tables
      + 2 * h                                              // embedding layer norm
      + cfg.num_layers * (4 * h * h + 4 * h                // attention projections
                          + 2 * h                          // ln1
                          + h * f + f + f * h + h          // feedforward
                          + 2 * h);                        // ln2
  CHECK(params.parameter_count() == bare_encoder);

  // and no tensor name hints at a decoder-only or output-head weight
  for (const auto& [name, mat] : params.tensors()) {
    CAPTURE(name);
    CHECK(name.find("head") == std::string::npos);
    CHECK(name.find("output") == std::string::npos);
  }
}

TEST_CASE("embeddings decompose additively") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(9);
  std::vector<int> src = random_src_ids(rng, cfg, 5);

  Mat e = embed_source(src, params);
  CHECK((e.row(0) - (params.tok_emb.row(src[0]) + params.pos_emb.row(0) +
                     params.seg_emb.row(0)))
            .norm() < 1e-15);

  // same token at two positions differs only by the position embedding
  std::vector<int> twice = {Vocabulary::kClsId, 7, 4, 5, 7, Vocabulary::kSepId};
  Mat e2 = embed_source(twice, params);
  Mat diff = e2.row(1) - e2.row(4);
  Mat pos_diff = params.pos_emb.row(1) - params.pos_emb.row(4);
  CHECK((diff - pos_diff).norm() < 1e-15);

  ModelParams zeros = ModelParams::zeros_like(params);
  zeros.emb_ln_gamma.setOnes();
  CHECK(embed_source(src, zeros).norm() == 0.0);
}

TEST_CASE("pointer embeddings reuse the pointed-at source position") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(10);
  std::vector<int> src = random_src_ids(rng, cfg, 6);
  const int m = static_cast<int>(src.size()) - 1;

  Mat tgt = embed_target({4, m, 4}, src, params);
  Mat src_emb = embed_source(src, params);

  // same position component as source token 4; only the segment differs
  Mat seg_delta = params.seg_emb.row(1) - params.seg_emb.row(0);
  CHECK((tgt.row(0) - (src_emb.row(4) + seg_delta)).norm() < 1e-15);
  // separator step uses pos_emb(m)
  CHECK((tgt.row(1) - (src_emb.row(m) + seg_delta)).norm() < 1e-15);
  // two steps pointing at the same index embed identically
  CHECK((tgt.row(0) - tgt.row(2)).norm() == 0.0);
}

TEST_CASE("source states are exactly independent of target tokens") {
  ModelConfig cfg = tiny_config();
  cfg.num_layers = 2;
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(11);
  std::vector<int> src = random_src_ids(rng, cfg, 7);
  const int m = static_cast<int>(src.size()) - 1;

  std::vector<int> tgt_a = {0, 2, 3, m};
  std::vector<int> tgt_b = {0, 5, 5, 1};

  ForwardCache ca, cb;
  Mat sa = transformer_forward(params, make_joint_input(src, tgt_a),
                               build_mask(m, static_cast<int>(tgt_a.size()) - 1), ca);
  Mat sb = transformer_forward(params, make_joint_input(src, tgt_b),
                               build_mask(m, static_cast<int>(tgt_b.size()) - 1), cb);
  CHECK(sa.topRows(m + 1) == sb.topRows(m + 1));

  // and equal to a target-free encoder pass (up to reduction-order noise:
  // different sequence lengths take different summation paths)
  ForwardCache cs;
  AttentionMask src_only = AttentionMask::Constant(m + 1, m + 1, 1);
  Mat s_enc = transformer_forward(params, make_joint_input(src, {}), src_only, cs);
  CHECK((sa.topRows(m + 1) - s_enc).cwiseAbs().maxCoeff() < 1e-12);

  // an all-permitted mask breaks the independence
  AttentionMask full = AttentionMask::Constant(m + 2 + static_cast<int>(tgt_a.size()) - 1,
                                               m + 2 + static_cast<int>(tgt_a.size()) - 1, 1);
  ForwardCache cf;
  Mat sf = transformer_forward(params, make_joint_input(src, tgt_a), full, cf);
  CHECK(sf.topRows(m + 1) != sa.topRows(m + 1));
}

TEST_CASE("decoder states are exactly autoregressive") {
  ModelConfig cfg = tiny_config();
  cfg.num_layers = 2;
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(13);
  std::vector<int> src = random_src_ids(rng, cfg, 7);
  const int m = static_cast<int>(src.size()) - 1;

  std::vector<int> tgt_a = {0, 2, 3, 6, m};
  std::vector<int> tgt_b = tgt_a;
  tgt_b[3] = 1;  // change a future step
  tgt_b[4] = 4;

  ForwardCache ca, cb;
  Mat sa = transformer_forward(params, make_joint_input(src, tgt_a),
                               build_mask(m, 4), ca);
  Mat sb = transformer_forward(params, make_joint_input(src, tgt_b),
                               build_mask(m, 4), cb);
  // steps 0..2 share the prefix and must agree bitwise
  CHECK(sa.middleRows(m + 1, 3) == sb.middleRows(m + 1, 3));
  CHECK(sa.row(m + 1 + 3) != sb.row(m + 1 + 3));
}

TEST_CASE("pointer distributions normalize and respect shifts") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(17);
  std::vector<int> src = random_src_ids(rng, cfg, 8);
  const int m = static_cast<int>(src.size()) - 1;
  std::vector<int> tgt = {0, 3, 4};

  ForwardCache cache;
  Mat states = transformer_forward(params, make_joint_input(src, tgt),
                                   build_mask(m, 2), cache);
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd p = pointer_distribution(states, m + 1 + t, m + 1);
    CHECK(std::abs(p.sum() - 1.0) < 1e-6);
    CHECK(p.minCoeff() >= 0.0);
  }

  // equal logits give the uniform distribution
  Mat flat = Mat::Ones(m + 2, cfg.hidden_dim);
  Eigen::VectorXd uniform = pointer_distribution(flat, m + 1, m + 1);
  for (int j = 0; j <= m; ++j)
    CHECK(uniform(j) == doctest::Approx(1.0 / (m + 1)).epsilon(1e-9));

  // adding a constant to every logit leaves the distribution unchanged
  Mat states2 = states;
  Eigen::RowVectorXd y = states.row(m + 1);
  double c = 0.7 / y.squaredNorm();
  for (int j = 0; j <= m; ++j) states2.row(j) += c * y;  // z_j += 0.7
  Eigen::VectorXd p1 = pointer_distribution(states, m + 1, m + 1);
  Eigen::VectorXd p2 = pointer_distribution(states2, m + 1, m + 1);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zero-initialized stacks give the uniform-pointer loss") {
  ModelConfig cfg = tiny_config();
  ModelParams zeros = ModelParams::shaped(cfg);  // weights zero, layer norms identity
  std::mt19937_64 rng(19);
  std::vector<int> src = random_src_ids(rng, cfg, 9);
  const int m = static_cast<int>(src.size()) - 1;
  PointerSequence gold = random_gold(rng, m);
  double loss = pointer_loss(zeros, src, gold);
  CHECK(loss == doctest::Approx(std::log(static_cast<double>(m + 1))).epsilon(1e-9));
}

TEST_CASE("pointer_loss agrees with an independent recomputation") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(23);
  std::vector<int> src = random_src_ids(rng, cfg, 8);
  const int m = static_cast<int>(src.size()) - 1;
  PointerSequence gold = random_gold(rng, m);

  double loss = pointer_loss(params, src, gold);

  std::vector<int> dec_input(gold.indices.begin(), gold.indices.end() - 1);
  ForwardCache cache;
  Mat states = transformer_forward(params, make_joint_input(src, dec_input),
                                   build_mask(m, static_cast<int>(dec_input.size()) - 1),
                                   cache);
  double expected = 0.0;
  for (std::size_t t = 0; t + 1 < gold.indices.size(); ++t) {
    Eigen::VectorXd p = pointer_distribution(states, m + 1 + static_cast<int>(t), m + 1);
    expected -= std::log(p(gold.indices[t + 1]));
  }
  expected /= static_cast<double>(gold.indices.size() - 1);
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(31);
  std::vector<int> src = random_src_ids(rng, cfg, 6);
  const int m = static_cast<int>(src.size()) - 1;
  PointerSequence gold = random_gold(rng, m);

  ModelParams grads = ModelParams::zeros_like(params);
  pointer_loss(params, src, gold, &grads);

  const double h = 1e-5;
  auto pw = params.tensors();
  auto gw = grads.tensors();
  int checked = 0;
  for (std::size_t ti = 0; ti < pw.size(); ++ti) {
    Mat& w = *pw[ti].second;
    const Mat& g = *gw[ti].second;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        double keep = w(i, j);
        w(i, j) = keep + h;
        double up = pointer_loss(params, src, gold);
        w(i, j) = keep - h;
        double down = pointer_loss(params, src, gold);
        w(i, j) = keep;
        double numeric = (up - down) / (2.0 * h);
        double analytic = g(i, j);
        double rel = std::abs(analytic - numeric) /
                     std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
        bool ok = rel <= 1e-3 || std::abs(analytic - numeric) <= 1e-7;
        if (!ok) {
          CAPTURE(pw[ti].first);
          CAPTURE(i);
          CAPTURE(j);
          CAPTURE(analytic);
          CAPTURE(numeric);
        }
        CHECK(ok);
        ++checked;
      }
    }
  }
  CHECK(checked == params.parameter_count());
}

TEST_CASE("decoding always yields well-formed five-separator sequences") {
  ModelConfig cfg = tiny_config();
  cfg.max_source_len = 32;
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    cfg.seed = 100 + trial;
    ModelParams params = ModelParams::init(cfg);
    std::vector<int> src = random_src_ids(rng, cfg, 12);
    DecodeOutput out = decode(params, src, {.record_trace = true});
    CHECK_NOTHROW(validate_pointer_sequence(out.sequence));
    // downweighing can only push the separator down the ranking
    for (const DecodeStep& step : out.trace) {
      if (!step.begin_step) continue;
      CHECK(step.sep_rank_plain <= step.sep_rank_downweighed);
    }
  }
}

TEST_CASE("decoding is deterministic and respects the step cap") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(43);
  std::vector<int> src = random_src_ids(rng, cfg, 10);

  DecodeOutput a = decode(params, src);
  DecodeOutput b = decode(params, src);
  CHECK(a.sequence.indices == b.sequence.indices);

  DecodeOutput capped = decode(params, src, {.step_cap = 3});
  CHECK(capped.sequence.truncated);
  CHECK_NOTHROW(validate_pointer_sequence(capped.sequence));
}

TEST_CASE("separator downweighing never promotes the separator") {
  // If the separator wins the argmax with the factor applied, it must also
  // win without it.
  ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 5; ++trial) {
    cfg.seed = 200 + trial;
    ModelParams params = ModelParams::init(cfg);
    std::vector<int> src = random_src_ids(rng, cfg, 9);
    const int m = static_cast<int>(src.size()) - 1;

    DecodeOutput down = decode(params, src, {.sep_downweigh = 0.01, .record_trace = true});
    for (const DecodeStep& step : down.trace) {
      if (step.begin_step && step.chosen == m) CHECK(step.sep_rank_plain == 1);
    }
  }
}

TEST_CASE("incremental decoding states match the full forward pass") {
  ModelConfig cfg = tiny_config();
  cfg.num_layers = 2;
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 5; ++trial) {
    cfg.seed = 300 + trial;
    ModelParams params = ModelParams::init(cfg);
    std::vector<int> src = random_src_ids(rng, cfg, 8);
    const int m = static_cast<int>(src.size()) - 1;

    std::vector<int> ptrs = {0};
    for (int k = 0; k < 5; ++k)
      ptrs.push_back(std::uniform_int_distribution<int>(1, m)(rng));

    IncrementalState inc(params, src);
    for (std::size_t t = 0; t < ptrs.size(); ++t) {
      Eigen::VectorXd p_inc = inc.step(ptrs[t]);

      std::vector<int> prefix(ptrs.begin(), ptrs.begin() + t + 1);
      ForwardCache cache;
      Mat states = transformer_forward(params, make_joint_input(src, prefix),
                                       build_mask(m, static_cast<int>(t)), cache);
      Eigen::VectorXd p_full = pointer_distribution(states, states.rows() - 1, m + 1);
      CHECK((p_inc - p_full).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("dropout is seed-deterministic and off by default") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(67);
  std::vector<int> src = random_src_ids(rng, cfg, 7);
  PointerSequence gold = random_gold(rng, static_cast<int>(src.size()) - 1);

  double plain = pointer_loss(params, src, gold);
  double plain2 = pointer_loss(params, src, gold, nullptr, Dropout{0.0, 99});
  CHECK(plain == plain2);

  double a = pointer_loss(params, src, gold, nullptr, Dropout{0.3, 5});
  double b = pointer_loss(params, src, gold, nullptr, Dropout{0.3, 5});
  double c = pointer_loss(params, src, gold, nullptr, Dropout{0.3, 6});
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("gradients stay exact under a fixed dropout mask") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg);
  std::mt19937_64 rng(71);
  std::vector<int> src = random_src_ids(rng, cfg, 5);
  PointerSequence gold = random_gold(rng, static_cast<int>(src.size()) - 1);
  const Dropout drop{0.25, 17};

  ModelParams grads = ModelParams::zeros_like(params);
  pointer_loss(params, src, gold, &grads, drop);

  const double h = 1e-5;
  auto pw = params.tensors();
  auto gw = grads.tensors();
  std::uniform_int_distribution<std::size_t> pick_tensor(0, pw.size() - 1);
  for (int probe = 0; probe < 400; ++probe) {
    std::size_t ti = pick_tensor(rng);
    Mat& w = *pw[ti].second;
    Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, w.rows() - 1)(rng);
    Eigen::Index j = std::uniform_int_distribution<Eigen::Index>(0, w.cols() - 1)(rng);
    double keep = w(i, j);
    w(i, j) = keep + h;
    double up = pointer_loss(params, src, gold, nullptr, drop);
    w(i, j) = keep - h;
    double down = pointer_loss(params, src, gold, nullptr, drop);
    w(i, j) = keep;
    double numeric = (up - down) / (2.0 * h);
    double analytic = (*gw[ti].second)(i, j);
    double rel = std::abs(analytic - numeric) /
                 std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
    CAPTURE(pw[ti].first);
    CHECK((rel <= 1e-3 || std::abs(analytic - numeric) <= 1e-7));
  }
}

TEST_CASE("overlength sources are rejected at embedding time") {
  ModelConfig cfg = tiny_config();
  cfg.max_source_len = 6;
  ModelParams params = ModelParams::init(cfg);
  std::vector<int> src(9, 3);
  src.front() = Vocabulary::kClsId;
  src.back() = Vocabulary::kSepId;
  CHECK_THROWS_AS(embed_source(src, params), ValidationError);

  std::vector<int> bad_id = {0, 999, 1};
  CHECK_THROWS_AS(embed_source(bad_id, params), ValidationError);
}
