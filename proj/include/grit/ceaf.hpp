#pragma once

#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grit/normalize.hpp"
#include "grit/types.hpp"

namespace grit {

// CEAF-REE: entity-level P/R/F1 under an optimal one-to-one alignment of
// predicted and gold entities per role per document. The similarity
// phi(r, s) is 1 iff the predicted entity's mention set is a subset of
// the gold entity's alternatives, so the optimal alignment reduces to
// maximum-cardinality bipartite matching on the 1-edges.

struct MatchOptions {
  bool use_spans = false;  // compare (begin, end) spans instead of strings
  bool normalize = true;   // normalize mention strings before comparison
};

// Key under which a mention participates in subset comparison. Span keys
// and text keys live in disjoint namespaces so a span-mode prediction can
// never collide with an offset-free gold alternative.
inline std::string mention_key(const Mention& m, const MatchOptions& opts) {
  if (opts.use_spans && m.has_span())
    return "#" + std::to_string(*m.begin) + ":" + std::to_string(*m.end);
  return "t:" + (opts.normalize ? normalize_mention(m.text) : m.text);
}

inline std::set<std::string> mention_keys(const Entity& e, const MatchOptions& opts) {
  std::set<std::string> keys;
  for (const Mention& m : e.mentions) keys.insert(mention_key(m, opts));
  return keys;
}

// phi(gold, pred) = 1 iff pred's mentions are a subset of gold's.
inline int phi(const Entity& gold, const Entity& pred,
               const MatchOptions& opts = {}) {
  if (gold.mentions.empty() || pred.mentions.empty())
    throw ValidationError("phi requires non-empty entities");
  std::set<std::string> gold_keys = mention_keys(gold, opts);
  for (const Mention& m : pred.mentions) {
    if (!gold_keys.count(mention_key(m, opts))) return 0;
  }
  return 1;
}

// Rows are gold entities of one role in one document, columns predicted.
struct SimilarityMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<char> values;  // row-major 0/1

  int value(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }

  static SimilarityMatrix build(const std::vector<Entity>& gold,
                                const std::vector<Entity>& pred,
                                const MatchOptions& opts = {}) {
    SimilarityMatrix m;
    m.rows = static_cast<int>(gold.size());
    m.cols = static_cast<int>(pred.size());
    m.values.resize(static_cast<std::size_t>(m.rows) * m.cols);
    for (int r = 0; r < m.rows; ++r)
      for (int c = 0; c < m.cols; ++c)
        m.values[static_cast<std::size_t>(r) * m.cols + c] =
            static_cast<char>(phi(gold[r], pred[c], opts));
    return m;
  }
};

// One-to-one alignment attaining the maximum total similarity. The pair
// set is one maximizing witness; only total_similarity is canonical.
struct Alignment {
  std::vector<std::pair<int, int>> pairs;  // (gold index, pred index)
  int total_similarity = 0;
};

// Kuhn's augmenting-path matching. Role-level entity counts in this task
// stay tiny (tens at most), so the O(V*E) bound is irrelevant in practice.
inline Alignment best_alignment(const SimilarityMatrix& sim) {
  std::vector<int> pred_match(sim.cols, -1);  // pred index -> gold index

  auto augment = [&](auto&& self, int row, std::vector<char>& visited) -> bool {
    for (int c = 0; c < sim.cols; ++c) {
      if (!sim.value(row, c) || visited[c]) continue;
      visited[c] = 1;
      if (pred_match[c] < 0 || self(self, pred_match[c], visited)) {
        pred_match[c] = row;
        return true;
      }
    }
    return false;
  };

  Alignment out;
  std::vector<char> visited;
  for (int r = 0; r < sim.rows; ++r) {
    visited.assign(sim.cols, 0);
    if (augment(augment, r, visited)) ++out.total_similarity;
  }
  for (int c = 0; c < sim.cols; ++c) {
    if (pred_match[c] >= 0) out.pairs.emplace_back(pred_match[c], c);
  }
  return out;
}

// Pooled counts plus the ratios derived from them. Pooling always sums
// counts first; ratios with a zero denominator are 0 (see score docs).
struct RoleScore {
  long long phi_sum = 0;
  long long num_pred = 0;
  long long num_gold = 0;
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;

  void add_counts(const RoleScore& other) {
    phi_sum += other.phi_sum;
    num_pred += other.num_pred;
    num_gold += other.num_gold;
  }

  void finalize() {
    p = num_pred > 0 ? static_cast<double>(phi_sum) / static_cast<double>(num_pred) : 0.0;
    r = num_gold > 0 ? static_cast<double>(phi_sum) / static_cast<double>(num_gold) : 0.0;
    f1 = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
};

inline RoleScore score_role(const std::vector<Entity>& gold,
                            const std::vector<Entity>& pred,
                            const MatchOptions& opts = {}) {
  RoleScore s;
  s.num_pred = static_cast<long long>(pred.size());
  s.num_gold = static_cast<long long>(gold.size());
  s.phi_sum = best_alignment(SimilarityMatrix::build(gold, pred, opts)).total_similarity;
  s.finalize();
  return s;
}

struct ScoreReport {
  std::map<RoleId, RoleScore> per_role;
  RoleScore micro;
  std::map<std::string, RoleScore> per_document;
};

// Scores a whole corpus: counts are pooled per role across documents and
// across roles for the micro row. Cells where both sides are empty are
// skipped; documents absent from `pred` count as empty predictions.
inline ScoreReport score_corpus(const std::map<std::string, Template>& gold,
                                const std::map<std::string, Template>& pred,
                                const MatchOptions& opts = {}) {
  for (const auto& [doc_id, tmpl] : pred) {
    if (!gold.count(doc_id))
      throw ValidationError("unknown doc_id in predictions: " + doc_id);
  }

  ScoreReport report;
  for (RoleId role : kAllRoles) report.per_role[role];

  static const std::vector<Entity> kNoEntities;
  for (const auto& [doc_id, gold_tmpl] : gold) {
    auto pred_it = pred.find(doc_id);
    RoleScore doc_pool;
    for (RoleId role : kAllRoles) {
      const std::vector<Entity>& g = gold_tmpl.at(role);
      const std::vector<Entity>& s =
          pred_it != pred.end() ? pred_it->second.at(role) : kNoEntities;
      if (g.empty() && s.empty()) continue;
      RoleScore cell = score_role(g, s, opts);
      report.per_role[role].add_counts(cell);
      doc_pool.add_counts(cell);
    }
    doc_pool.finalize();
    report.per_document.emplace(doc_id, doc_pool);
  }

  for (auto& [role, score] : report.per_role) {
    report.micro.add_counts(score);
    score.finalize();
  }
  report.micro.finalize();
  return report;
}

inline std::string format_score_row(const std::string& label, const RoleScore& s) {
  std::ostringstream os;
  os << std::left << std::setw(10) << label << std::right << std::fixed
     << std::setprecision(2) << std::setw(6) << s.p << std::setw(8) << s.r
     << std::setw(8) << s.f1 << "    " << s.phi_sum << "/" << s.num_pred << "/"
     << s.num_gold;
  return os.str();
}

inline std::string render_report(const ScoreReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "role" << std::right << std::setw(6) << "P"
     << std::setw(8) << "R" << std::setw(8) << "F1"
     << "    phi/pred/gold\n";
  for (const auto& [role, score] : report.per_role)
    os << format_score_row(std::string(role_name(role)), score) << "\n";
  os << format_score_row("micro", report.micro) << "\n";
  return os.str();
}

inline nlohmann::ordered_json score_to_json(const RoleScore& s) {
  return {{"phi", s.phi_sum}, {"num_pred", s.num_pred}, {"num_gold", s.num_gold},
          {"p", s.p},         {"r", s.r},               {"f1", s.f1}};
}

inline nlohmann::ordered_json report_to_json(const ScoreReport& report,
                                             bool per_document = false) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json roles = nlohmann::ordered_json::object();
  for (const auto& [role, score] : report.per_role)
    roles[std::string(role_name(role))] = score_to_json(score);
  j["per_role"] = std::move(roles);
  j["micro"] = score_to_json(report.micro);
  if (per_document) {
    nlohmann::ordered_json docs = nlohmann::ordered_json::object();
    for (const auto& [doc_id, score] : report.per_document)
      docs[doc_id] = score_to_json(score);
    j["per_document"] = std::move(docs);
  }
  return j;
}

}  // namespace grit
