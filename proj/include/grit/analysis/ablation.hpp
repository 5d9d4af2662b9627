#pragma once

#include <string>
#include <vector>

#include "grit/model/train.hpp"

namespace grit {

struct AblationToggles {
  bool sep_downweigh = true;      // include the "- [SEP] downweigh" row
  bool offset_constraint = true;  // include the "- pointer offset constraint" row
};

struct AblationRow {
  std::string label;
  ScoreReport report;
  double delta_f1 = 0.0;         // vs the full decoder
  long long dropped_spans = 0;   // spans rejected by lenient delinearization
};

struct AblationReport {
  std::vector<AblationRow> rows;
};

// Decoding-constraint ablation on a single checkpoint: every row re-decodes
// the corpus with one constraint turned off; nothing is retrained.
inline AblationReport ablation_run(const ModelParams& params, const Vocabulary& vocab,
                                   const Corpus& corpus,
                                   const AblationToggles& toggles = {},
                                   const DecodeOptions& base = {},
                                   const MatchOptions& match = {}) {
  std::map<std::string, Template> gold;
  for (const Document& doc : corpus.documents) {
    auto it = corpus.gold.find(doc.doc_id);
    gold.emplace(doc.doc_id, it != corpus.gold.end() ? it->second : Template(doc.doc_id));
  }

  auto run_row = [&](const std::string& label, const DecodeOptions& opts, bool lenient) {
    AblationRow row;
    row.label = label;
    auto preds = predict_corpus(params, vocab, corpus, opts, lenient, &row.dropped_spans);
    row.report = score_corpus(gold, preds, match);
    return row;
  };

  AblationReport report;
  report.rows.push_back(run_row("full", base, false));
  const double full_f1 = report.rows.front().report.micro.f1;

  if (toggles.sep_downweigh) {
    DecodeOptions opts = base;
    opts.sep_downweigh = 1.0;
    AblationRow row = run_row("- [SEP] downweigh", opts, false);
    row.delta_f1 = row.report.micro.f1 - full_f1;
    report.rows.push_back(std::move(row));
  }
  if (toggles.offset_constraint) {
    DecodeOptions opts = base;
    opts.offset_constraint = false;
    AblationRow row = run_row("- pointer offset constraint", opts, true);
    row.delta_f1 = row.report.micro.f1 - full_f1;
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline std::string render_ablation_report(const AblationReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(30) << "configuration" << std::right << std::setw(6) << "P"
     << std::setw(8) << "R" << std::setw(8) << "F1" << std::setw(9) << "dF1" << "\n";
  for (const AblationRow& row : report.rows) {
    const RoleScore& s = row.report.micro;
    os << std::left << std::setw(30) << row.label << std::right << std::fixed
       << std::setprecision(2) << std::setw(6) << s.p << std::setw(8) << s.r
       << std::setw(8) << s.f1;
    if (row.label == "full")
      os << std::setw(9) << " ";
    else
      os << std::setw(9) << row.delta_f1;
    if (row.dropped_spans > 0) os << "   dropped spans: " << row.dropped_spans;
    os << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json ablation_report_to_json(const AblationReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const AblationRow& row : report.rows) {
    nlohmann::ordered_json j;
    j["configuration"] = row.label;
    j["micro"] = score_to_json(row.report.micro);
    j["delta_f1"] = row.delta_f1;
    j["dropped_spans"] = row.dropped_spans;
    rows.push_back(std::move(j));
  }
  return nlohmann::ordered_json{{"rows", std::move(rows)}};
}

}  // namespace grit
