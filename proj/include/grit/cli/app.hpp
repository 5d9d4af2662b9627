#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grit/analysis/ablation.hpp"
#include "grit/analysis/bootstrap.hpp"
#include "grit/analysis/buckets.hpp"
#include "grit/analysis/nested.hpp"
#include "grit/ceaf.hpp"
#include "grit/corpus_io.hpp"
#include "grit/linearize.hpp"
#include "grit/model/checkpoint.hpp"
#include "grit/model/train.hpp"
#include "grit/synth.hpp"

namespace grit::cli {

// Exit codes: 0 ok, 1 usage, 2 parse, 3 validation, 4 runtime.
enum ExitCode { kOk = 0, kUsage = 1, kParse = 2, kValidation = 3, kRuntime = 4 };

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string default_out_dir() {
  const char* env = std::getenv("GRIT_OUT_DIR");
  return env && *env ? env : ".";
}

struct AppOptions {
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

namespace app_detail {

inline std::string jsonl_templates(const std::map<std::string, Template>& templates) {
  std::ostringstream os;
  for (const auto& [doc_id, tmpl] : templates) os << template_to_json(tmpl).dump() << "\n";
  return os.str();
}

inline nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed JSON config: " + path);
  return j;
}

}  // namespace app_detail

inline int run(std::vector<std::string> args, const AppOptions& io = {}) {
  CLI::App app{"Document-level role-filler entity extraction: CEAF-REE scoring, "
               "template linearization, a pointer-transformer model, and analyses"};
  app.require_subcommand(1);
  std::ostream& out = *io.out;
  std::ostream& err = *io.err;

  // ---- score ----
  auto* score = app.add_subcommand("score", "Score predicted templates with CEAF-REE");
  struct {
    std::string gold, pred, json_out;
    bool per_doc = false, spans = false, no_normalize = false;
  } sc;
  score->add_option("--gold", sc.gold, "Gold templates (JSONL)")->required();
  score->add_option("--pred", sc.pred, "Predicted templates (JSONL)")->required();
  score->add_option("--json", sc.json_out, "Write the machine-readable report here");
  score->add_flag("--per-doc", sc.per_doc, "Include per-document rows in the JSON report");
  score->add_flag("--spans", sc.spans, "Match on token spans instead of strings");
  score->add_flag("--no-normalize", sc.no_normalize, "Compare raw mention strings");

  // ---- linearize ----
  auto* lin = app.add_subcommand("linearize", "Templates to pointer-sequence dump");
  struct {
    std::string docs, templates, out_path;
    int max_source_len = 512;
  } lz;
  lin->add_option("--docs", lz.docs, "Documents (JSONL)")->required();
  lin->add_option("--templates", lz.templates, "Templates (JSONL)")->required();
  lin->add_option("--out", lz.out_path, "Output pointer dump")->required();
  lin->add_option("--max-source-len", lz.max_source_len, "Source truncation length");

  // ---- delinearize ----
  auto* delin = app.add_subcommand("delinearize", "Pointer-sequence dump to templates");
  struct {
    std::string docs, pointers, out_path;
    int max_source_len = 512;
  } dl;
  delin->add_option("--docs", dl.docs, "Documents (JSONL)")->required();
  delin->add_option("--pointers", dl.pointers, "Pointer dump file")->required();
  delin->add_option("--out", dl.out_path, "Output templates (JSONL)")->required();
  delin->add_option("--max-source-len", dl.max_source_len, "Source truncation length");

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train the pointer transformer");
  struct {
    std::string docs, templates, dev_docs, dev_templates, config, out_dir;
    std::uint64_t seed = 0;
    int max_source_len = 0, epochs = 0;
    double sep_downweigh = -1.0;
    bool quiet = false;
  } tr;
  train->add_option("--docs", tr.docs, "Training documents")->required();
  train->add_option("--templates", tr.templates, "Training templates")->required();
  auto* tr_dev_docs = train->add_option("--dev-docs", tr.dev_docs, "Dev documents");
  auto* tr_dev_tmpl = train->add_option("--dev-templates", tr.dev_templates, "Dev templates");
  tr_dev_docs->needs(tr_dev_tmpl);
  tr_dev_tmpl->needs(tr_dev_docs);
  train->add_option("--config", tr.config, "JSON config ({\"model\":{},\"train\":{}})");
  train->add_option("--out-dir", tr.out_dir, "Output directory (default $GRIT_OUT_DIR)");
  auto* tr_seed = train->add_option("--seed", tr.seed, "Model init seed");
  auto* tr_msl = train->add_option("--max-source-len", tr.max_source_len, "");
  auto* tr_epochs = train->add_option("--epochs", tr.epochs, "");
  auto* tr_sdw = train->add_option("--sep-downweigh", tr.sep_downweigh,
                                   "Separator downweigh for dev decoding");
  train->add_flag("--quiet", tr.quiet, "Suppress per-epoch progress");

  // ---- decode ----
  auto* dec = app.add_subcommand("decode", "Decode documents with a checkpoint");
  struct {
    std::string docs, checkpoint, out_path, dump;
    double sep_downweigh = -1.0;
    int step_cap = 0;
    bool no_offset_constraint = false;
  } dc;
  dec->add_option("--docs", dc.docs, "Documents (JSONL)")->required();
  dec->add_option("--checkpoint", dc.checkpoint, "Model checkpoint")->required();
  dec->add_option("--out", dc.out_path, "Output templates (JSONL)")->required();
  dec->add_option("--dump", dc.dump, "Also write the raw pointer dump here");
  auto* dc_sdw = dec->add_option("--sep-downweigh", dc.sep_downweigh,
                                 "Override the checkpoint's separator downweigh");
  auto* dc_cap = dec->add_option("--step-cap", dc.step_cap, "Decoding step cap");
  dec->add_flag("--no-offset-constraint", dc.no_offset_constraint,
                "Disable the begin<=end decoding constraint");

  // ---- analyze ----
  auto* analyze = app.add_subcommand("analyze", "Diagnostic evaluations");
  analyze->require_subcommand(1);

  auto* buckets = analyze->add_subcommand("buckets", "Scores by mentions-per-entity bucket");
  struct {
    std::string gold, pred, json_out;
  } bk;
  buckets->add_option("--gold", bk.gold)->required();
  buckets->add_option("--pred", bk.pred)->required();
  buckets->add_option("--json", bk.json_out);

  auto* nested = analyze->add_subcommand("nested", "Nested role-filler document subset");
  struct {
    std::string gold, pred, json_out, inner = "PerpOrg", outer = "PerpInd";
  } ns;
  nested->add_option("--gold", ns.gold)->required();
  nested->add_option("--pred", ns.pred, "Also score the inner role on the subset");
  nested->add_option("--inner", ns.inner, "Inner role (default PerpOrg)");
  nested->add_option("--outer", ns.outer, "Outer role (default PerpInd)");
  nested->add_option("--json", ns.json_out);

  auto* boot = analyze->add_subcommand("bootstrap", "Paired bootstrap significance");
  struct {
    std::string gold, pred_a, pred_b, json_out;
    int iterations = 10000;
    std::uint64_t seed = 1;
  } bs;
  boot->add_option("--gold", bs.gold)->required();
  boot->add_option("--pred-a", bs.pred_a)->required();
  boot->add_option("--pred-b", bs.pred_b)->required();
  boot->add_option("--iterations", bs.iterations);
  boot->add_option("--seed", bs.seed);
  boot->add_option("--json", bs.json_out);

  auto* ablate = analyze->add_subcommand("ablate", "Decoding-constraint ablation");
  struct {
    std::string docs, templates, checkpoint, json_out;
    double sep_downweigh = -1.0;
  } ab;
  ablate->add_option("--docs", ab.docs)->required();
  ablate->add_option("--templates", ab.templates, "Gold templates")->required();
  ablate->add_option("--checkpoint", ab.checkpoint)->required();
  auto* ab_sdw = ablate->add_option("--sep-downweigh", ab.sep_downweigh);
  ablate->add_option("--json", ab.json_out);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  struct {
    std::string out_dir;
    int train_docs = 1000, dev_docs = 100, min_len = 40, max_len = 80;
    std::uint64_t seed = 1;
    double alt_prob = 0.15, nested_prob = 0.35;
  } sy;
  synth->add_option("--out-dir", sy.out_dir, "Output directory (default $GRIT_OUT_DIR)");
  synth->add_option("--train", sy.train_docs, "Training documents");
  synth->add_option("--dev", sy.dev_docs, "Dev documents");
  synth->add_option("--seed", sy.seed);
  synth->add_option("--min-len", sy.min_len);
  synth->add_option("--max-len", sy.max_len);
  synth->add_option("--alt-prob", sy.alt_prob, "Alternative-mention probability");
  synth->add_option("--nested-prob", sy.nested_prob, "Nested PerpInd/PerpOrg probability");

  std::reverse(args.begin(), args.end());  // CLI11 consumes reversed argv
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help() << "\n";
      return kOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (score->parsed()) {
      MatchOptions opts{.use_spans = sc.spans, .normalize = !sc.no_normalize};
      ScoreReport report = score_corpus(load_templates(sc.gold), load_templates(sc.pred), opts);
      out << render_report(report);
      if (!sc.json_out.empty())
        write_file_atomic(sc.json_out, report_to_json(report, sc.per_doc).dump(2) + "\n");
    } else if (lin->parsed()) {
      Corpus corpus = load_corpus(lz.docs, lz.templates);
      std::ostringstream dump;
      for (const Document& doc : corpus.documents) {
        auto it = corpus.gold.find(doc.doc_id);
        if (it == corpus.gold.end()) continue;
        SourceSequence src = build_source(doc, lz.max_source_len);
        LinearizeResult res = linearize(it->second, src, {.skip_unresolvable = true});
        for (const std::string& w : res.warnings) err << "warning: " << w << "\n";
        dump << pointer_sequence_to_line(doc.doc_id, res.sequence) << "\n";
      }
      write_file_atomic(lz.out_path, dump.str());
    } else if (delin->parsed()) {
      std::vector<Document> docs = load_documents(dl.docs);
      std::map<std::string, const Document*> by_id;
      for (const Document& d : docs) by_id[d.doc_id] = &d;
      std::ifstream in(dl.pointers);
      if (!in) throw ParseError("cannot open pointer dump: " + dl.pointers);
      std::map<std::string, Template> templates;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("pointer dump line missing tab");
        auto doc_it = by_id.find(line.substr(0, tab));
        if (doc_it == by_id.end())
          throw ValidationError("dangling doc_id in pointer dump: " + line.substr(0, tab));
        SourceSequence src = build_source(*doc_it->second, dl.max_source_len);
        auto [doc_id, seq] = pointer_sequence_from_line(line, src.sep_index());
        templates.emplace(doc_id, delinearize(seq, src).tmpl);
      }
      write_file_atomic(dl.out_path, app_detail::jsonl_templates(templates));
    } else if (train->parsed()) {
      ModelConfig model_cfg;
      TrainConfig train_cfg;
      if (!tr.config.empty()) {
        nlohmann::json j = app_detail::load_config_file(tr.config);
        if (j.contains("model")) config_from_json(j["model"], model_cfg);
        if (j.contains("train")) train_config_from_json(j["train"], train_cfg);
      }
      if (tr_seed->count()) model_cfg.seed = tr.seed;
      if (tr_msl->count()) model_cfg.max_source_len = tr.max_source_len;
      if (tr_epochs->count()) train_cfg.epochs = tr.epochs;
      if (tr_sdw->count()) {
        model_cfg.sep_downweigh_factor = tr.sep_downweigh;
        train_cfg.decode.sep_downweigh = tr.sep_downweigh;
      } else {
        train_cfg.decode.sep_downweigh = model_cfg.sep_downweigh_factor;
      }

      Corpus train_corpus = load_corpus(tr.docs, tr.templates);
      Corpus dev_corpus;
      if (!tr.dev_docs.empty()) dev_corpus = load_corpus(tr.dev_docs, tr.dev_templates);

      std::string out_dir = tr.out_dir.empty() ? default_out_dir() : tr.out_dir;
      std::filesystem::create_directories(out_dir);

      TrainResult result = train_model(train_corpus, dev_corpus, model_cfg, train_cfg,
                                       tr.quiet ? nullptr : &err);

      save_checkpoint(result.params, result.vocab, out_dir + "/checkpoint.grit");
      std::ostringstream metrics;
      for (const EpochLog& log : result.log) {
        nlohmann::ordered_json j{{"epoch", log.epoch}, {"train_loss", log.train_loss}};
        if (log.evaluated) {
          j["dev_p"] = log.dev_p;
          j["dev_r"] = log.dev_r;
          j["dev_f1"] = log.dev_f1;
        }
        metrics << j.dump() << "\n";
      }
      write_file_atomic(out_dir + "/metrics.jsonl", metrics.str());

      nlohmann::ordered_json model_json = result.params.config;
      nlohmann::ordered_json train_json;
      train_config_to_json(train_json, train_cfg);
      nlohmann::ordered_json effective{{"model", model_json}, {"train", train_json}};
      write_file_atomic(out_dir + "/effective_config.json", effective.dump(2) + "\n");

      if (result.best_epoch >= 0)
        out << "best dev F1 " << std::fixed << std::setprecision(4) << result.best_dev_f1
            << " at epoch " << result.best_epoch << "\n";
      out << "checkpoint written to " << out_dir << "/checkpoint.grit\n";
    } else if (dec->parsed()) {
      Checkpoint ckpt = load_checkpoint(dc.checkpoint);
      DecodeOptions opts;
      opts.sep_downweigh = dc_sdw->count() ? dc.sep_downweigh
                                           : ckpt.params.config.sep_downweigh_factor;
      if (dc_cap->count()) opts.step_cap = dc.step_cap;
      opts.offset_constraint = !dc.no_offset_constraint;

      std::vector<Document> docs = load_documents(dc.docs);
      std::map<std::string, Template> templates;
      std::ostringstream dump;
      long long dropped = 0;
      for (const Document& doc : docs) {
        SourceSequence src = build_source(doc, ckpt.params.config.max_source_len);
        DecodeOutput res = decode(ckpt.params, ckpt.vocab.encode(src.tokens), opts);
        if (res.sequence.truncated)
          err << "warning: decoding truncated at step cap for doc " << doc.doc_id << "\n";
        DelinearizeResult d = delinearize(res.sequence, src, !opts.offset_constraint);
        dropped += d.dropped_spans;
        templates.emplace(doc.doc_id, std::move(d.tmpl));
        if (!dc.dump.empty()) dump << pointer_sequence_to_line(doc.doc_id, res.sequence) << "\n";
      }
      if (dropped > 0) err << "warning: dropped " << dropped << " invalid spans\n";
      write_file_atomic(dc.out_path, app_detail::jsonl_templates(templates));
      if (!dc.dump.empty()) write_file_atomic(dc.dump, dump.str());
    } else if (buckets->parsed()) {
      BucketReport report = bucketed_scores(load_templates(bk.gold), load_templates(bk.pred));
      out << render_bucket_report(report);
      if (!bk.json_out.empty())
        write_file_atomic(bk.json_out, bucket_report_to_json(report).dump(2) + "\n");
    } else if (nested->parsed()) {
      auto inner = parse_role(ns.inner), outer = parse_role(ns.outer);
      if (!inner || !outer) throw ValidationError("unknown role name");
      auto gold = load_templates(ns.gold);
      NestedSubset subset = nested_subset(gold, *inner, *outer);
      out << subset.doc_ids.size() << " of " << gold.size() << " documents have nested "
          << role_name(*inner) << " inside " << role_name(*outer) << "\n";
      nlohmann::ordered_json j{{"inner", std::string(role_name(*inner))},
                               {"outer", std::string(role_name(*outer))},
                               {"doc_ids", subset.doc_ids}};
      if (!ns.pred.empty()) {
        auto pred = load_templates(ns.pred);
        ScoreReport all = score_corpus(gold, pred);
        ScoreReport sub = score_corpus(restrict_to_docs(gold, subset.doc_ids),
                                       restrict_to_docs(pred, subset.doc_ids));
        out << "\n" << role_name(*inner) << " on all documents:\n"
            << format_score_row("all", all.per_role.at(*inner)) << "\n"
            << role_name(*inner) << " on the nested subset:\n"
            << format_score_row("nested", sub.per_role.at(*inner)) << "\n";
        j["all_docs"] = score_to_json(all.per_role.at(*inner));
        j["nested_docs"] = score_to_json(sub.per_role.at(*inner));
      }
      if (!ns.json_out.empty()) write_file_atomic(ns.json_out, j.dump(2) + "\n");
    } else if (boot->parsed()) {
      BootstrapResult res = paired_bootstrap(load_templates(bs.gold),
                                             load_templates(bs.pred_a),
                                             load_templates(bs.pred_b),
                                             bs.iterations, bs.seed);
      out << std::fixed << std::setprecision(4) << "delta F1 (A - B): "
          << res.observed_delta << "\n"
          << "p-value: " << res.p_value << "\n"
          << "95% CI: [" << res.ci_low << ", " << res.ci_high << "]\n";
      if (!bs.json_out.empty()) {
        nlohmann::ordered_json j{{"observed_delta", res.observed_delta},
                                 {"p_value", res.p_value},
                                 {"ci_low", res.ci_low},
                                 {"ci_high", res.ci_high},
                                 {"iterations", res.iterations}};
        write_file_atomic(bs.json_out, j.dump(2) + "\n");
      }
    } else if (ablate->parsed()) {
      Checkpoint ckpt = load_checkpoint(ab.checkpoint);
      Corpus corpus = load_corpus(ab.docs, ab.templates);
      DecodeOptions base;
      base.sep_downweigh = ab_sdw->count() ? ab.sep_downweigh
                                           : ckpt.params.config.sep_downweigh_factor;
      AblationReport report = ablation_run(ckpt.params, ckpt.vocab, corpus, {}, base);
      out << render_ablation_report(report);
      if (!ab.json_out.empty())
        write_file_atomic(ab.json_out, ablation_report_to_json(report).dump(2) + "\n");
    } else if (synth->parsed()) {
      std::string out_dir = sy.out_dir.empty() ? default_out_dir() : sy.out_dir;
      std::filesystem::create_directories(out_dir);
      SynthOptions train_opts{.num_docs = sy.train_docs, .min_len = sy.min_len,
                              .max_len = sy.max_len, .seed = sy.seed,
                              .alt_mention_prob = sy.alt_prob,
                              .nested_prob = sy.nested_prob, .id_prefix = "SYN-TRAIN"};
      SynthOptions dev_opts = train_opts;
      dev_opts.num_docs = sy.dev_docs;
      dev_opts.seed = sy.seed + 1;
      dev_opts.id_prefix = "SYN-DEV";
      Corpus train_corpus = synth_corpus(train_opts);
      Corpus dev_corpus = synth_corpus(dev_opts);
      save_corpus(train_corpus, out_dir + "/train_docs.jsonl", out_dir + "/train_templates.jsonl");
      save_corpus(dev_corpus, out_dir + "/dev_docs.jsonl", out_dir + "/dev_templates.jsonl");
      nlohmann::ordered_json effective{
          {"train", sy.train_docs}, {"dev", sy.dev_docs},   {"seed", sy.seed},
          {"min_len", sy.min_len},  {"max_len", sy.max_len}, {"alt_prob", sy.alt_prob},
          {"nested_prob", sy.nested_prob}};
      write_file_atomic(out_dir + "/effective_config.json", effective.dump(2) + "\n");
      out << "synthetic corpus written to " << out_dir << "\n";
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

inline int run_main(int argc, char** argv, const AppOptions& io = {}) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args), io);
}

}  // namespace grit::cli
