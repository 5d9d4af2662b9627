#pragma once

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "grit/ceaf.hpp"
#include "grit/corpus_io.hpp"
#include "grit/model/checkpoint.hpp"
#include "grit/model/decode.hpp"
#include "grit/model/loss.hpp"

namespace grit {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;          // gradient-accumulation window per Adam step
  double dropout = 0.1;        // hidden dropout during training only
  double learning_rate = 1e-3;
  int warmup_steps = 200;
  bool linear_decay = true;    // decay the rate to zero over the remaining steps
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t shuffle_seed = 7;
  int eval_every = 1;          // dev evaluations every N epochs; 0 disables
  double early_stop_f1 = 2.0;  // stop once best dev F1 reaches this; > 1 disables
  int vocab_min_freq = 1;
  DecodeOptions decode;        // used for dev evaluation
};

inline void train_config_from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("dropout")) j.at("dropout").get_to(c.dropout);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("warmup_steps")) j.at("warmup_steps").get_to(c.warmup_steps);
  if (j.contains("linear_decay")) j.at("linear_decay").get_to(c.linear_decay);
  if (j.contains("beta1")) j.at("beta1").get_to(c.beta1);
  if (j.contains("beta2")) j.at("beta2").get_to(c.beta2);
  if (j.contains("adam_eps")) j.at("adam_eps").get_to(c.adam_eps);
  if (j.contains("shuffle_seed")) j.at("shuffle_seed").get_to(c.shuffle_seed);
  if (j.contains("eval_every")) j.at("eval_every").get_to(c.eval_every);
  if (j.contains("early_stop_f1")) j.at("early_stop_f1").get_to(c.early_stop_f1);
  if (j.contains("vocab_min_freq")) j.at("vocab_min_freq").get_to(c.vocab_min_freq);
  if (j.contains("sep_downweigh")) j.at("sep_downweigh").get_to(c.decode.sep_downweigh);
  if (j.contains("step_cap")) j.at("step_cap").get_to(c.decode.step_cap);
}

inline void train_config_to_json(nlohmann::ordered_json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"dropout", c.dropout},
       {"learning_rate", c.learning_rate},
       {"warmup_steps", c.warmup_steps},
       {"linear_decay", c.linear_decay},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"adam_eps", c.adam_eps},
       {"shuffle_seed", c.shuffle_seed},
       {"eval_every", c.eval_every},
       {"early_stop_f1", c.early_stop_f1},
       {"vocab_min_freq", c.vocab_min_freq},
       {"sep_downweigh", c.decode.sep_downweigh},
       {"step_cap", c.decode.step_cap}};
}

struct TrainExample {
  std::string doc_id;
  std::vector<int> src_ids;
  PointerSequence target;
};

struct PreparedData {
  std::vector<TrainExample> examples;
  std::vector<std::string> warnings;
};

// Documents without a gold record train toward the empty template
// (five bare separators).
inline PreparedData prepare_examples(const Corpus& corpus, const Vocabulary& vocab,
                                     const ModelConfig& cfg) {
  PreparedData data;
  for (const Document& doc : corpus.documents) {
    SourceSequence src = build_source(doc, cfg.max_source_len);
    auto it = corpus.gold.find(doc.doc_id);
    Template empty(doc.doc_id);
    const Template& tmpl = it != corpus.gold.end() ? it->second : empty;
    LinearizeResult lin = linearize(tmpl, src, {.skip_unresolvable = true});
    data.warnings.insert(data.warnings.end(), lin.warnings.begin(), lin.warnings.end());
    data.examples.push_back({doc.doc_id, vocab.encode(src.tokens), std::move(lin.sequence)});
  }
  return data;
}

// Decodes every document into a predicted template. Lenient mode accepts
// sequences violating begin <= end (possible only when the offset
// constraint is ablated), dropping the offending spans and counting them.
inline std::map<std::string, Template> predict_corpus(const ModelParams& params,
                                                      const Vocabulary& vocab,
                                                      const Corpus& corpus,
                                                      const DecodeOptions& opts = {},
                                                      bool lenient = false,
                                                      long long* dropped_spans = nullptr) {
  std::map<std::string, Template> preds;
  for (const Document& doc : corpus.documents) {
    SourceSequence src = build_source(doc, params.config.max_source_len);
    DecodeOutput out = decode(params, vocab.encode(src.tokens), opts);
    DelinearizeResult res = delinearize(out.sequence, src, lenient);
    if (dropped_spans) *dropped_spans += res.dropped_spans;
    preds.emplace(doc.doc_id, std::move(res.tmpl));
  }
  return preds;
}

inline ScoreReport evaluate_model(const ModelParams& params, const Vocabulary& vocab,
                                  const Corpus& corpus, const DecodeOptions& opts = {},
                                  const MatchOptions& match = {}) {
  std::map<std::string, Template> gold;
  for (const Document& doc : corpus.documents) {
    auto it = corpus.gold.find(doc.doc_id);
    gold.emplace(doc.doc_id, it != corpus.gold.end() ? it->second : Template(doc.doc_id));
  }
  return score_corpus(gold, predict_corpus(params, vocab, corpus, opts), match);
}

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& shape, const TrainConfig& cfg, long long total_steps)
      : m_(ModelParams::zeros_like(shape)),
        v_(ModelParams::zeros_like(shape)),
        cfg_(cfg),
        total_steps_(total_steps) {}

  void step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    double lr = cfg_.learning_rate;
    if (cfg_.warmup_steps > 0)
      lr *= std::min(1.0, static_cast<double>(t_) / cfg_.warmup_steps);
    if (cfg_.linear_decay && total_steps_ > cfg_.warmup_steps && t_ > cfg_.warmup_steps)
      lr *= static_cast<double>(total_steps_ - t_) /
            static_cast<double>(total_steps_ - cfg_.warmup_steps);
    if (lr < 0.0) lr = 0.0;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    auto pw = params.tensors();
    auto gw = grads.tensors();
    auto mw = m_.tensors();
    auto vw = v_.tensors();
    for (std::size_t i = 0; i < pw.size(); ++i) {
      Mat& w = *pw[i].second;
      const Mat& g = *gw[i].second;
      Mat& m = *mw[i].second;
      Mat& v = *vw[i].second;
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.array().square().matrix();
      w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.adam_eps);
    }
  }

 private:
  ModelParams m_, v_;
  TrainConfig cfg_;
  long long total_steps_ = 0;
  long long t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  bool evaluated = false;
  double dev_p = 0.0, dev_r = 0.0, dev_f1 = 0.0;
};

struct TrainResult {
  ModelParams params;  // best dev checkpoint (final params if never evaluated)
  Vocabulary vocab;
  std::vector<EpochLog> log;
  std::vector<std::string> warnings;
  double best_dev_f1 = -1.0;
  int best_epoch = -1;
};

inline TrainResult train_model(const Corpus& train_corpus, const Corpus& dev_corpus,
                               ModelConfig model_cfg, const TrainConfig& cfg,
                               std::ostream* progress = nullptr) {
  if (train_corpus.documents.empty()) throw ValidationError("empty training corpus");

  Vocabulary vocab = Vocabulary::build(train_corpus.documents, cfg.vocab_min_freq);
  model_cfg.vocab_size = vocab.size();
  model_cfg.validate();

  TrainResult result;
  result.vocab = vocab;
  ModelParams params = ModelParams::init(model_cfg);

  PreparedData data = prepare_examples(train_corpus, vocab, model_cfg);
  result.warnings = data.warnings;
  if (progress) {
    for (const std::string& w : result.warnings) *progress << "warning: " << w << "\n";
  }

  const int batch = std::max(1, cfg.batch_size);
  const long long steps_per_epoch =
      (static_cast<long long>(data.examples.size()) + batch - 1) / batch;
  AdamOptimizer adam(params, cfg, steps_per_epoch * cfg.epochs);
  ModelParams grads = ModelParams::zeros_like(params);
  std::mt19937_64 rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), 0);

  ModelParams best = params;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      std::size_t take = std::min<std::size_t>(batch, order.size() - done);
      ModelParams::visit(grads, [](const std::string&, Mat& m) { m.setZero(); });
      for (std::size_t b = 0; b < take; ++b) {
        const TrainExample& ex = data.examples[order[done + b]];
        Dropout drop{cfg.dropout, rng()};
        loss_sum += pointer_loss(params, ex.src_ids, ex.target, &grads, drop);
      }
      if (take > 1) {
        const double inv = 1.0 / static_cast<double>(take);
        ModelParams::visit(grads, [&](const std::string&, Mat& m) { m *= inv; });
      }
      adam.step(params, grads);
      done += take;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(data.examples.size());

    if (cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) &&
        !dev_corpus.documents.empty()) {
      ScoreReport report = evaluate_model(params, vocab, dev_corpus, cfg.decode);
      log.evaluated = true;
      log.dev_p = report.micro.p;
      log.dev_r = report.micro.r;
      log.dev_f1 = report.micro.f1;
      if (log.dev_f1 > result.best_dev_f1) {
        result.best_dev_f1 = log.dev_f1;
        result.best_epoch = epoch;
        best = params;
      }
    }
    result.log.push_back(log);
    if (progress) {
      *progress << "epoch " << epoch << " loss " << log.train_loss;
      if (log.evaluated)
        *progress << " dev_p " << log.dev_p << " dev_r " << log.dev_r << " dev_f1 "
                  << log.dev_f1;
      *progress << "\n";
    }
    if (log.evaluated && result.best_dev_f1 >= cfg.early_stop_f1) break;
  }

  result.params = result.best_epoch >= 0 ? best : params;
  return result;
}

}  // namespace grit
