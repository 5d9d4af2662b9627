#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "grit/ceaf.hpp"

namespace grit {

// Documents are grouped by k = average number of alternative mentions per
// gold role-filler entity. Kept as an exact ratio so the bucket
// boundaries (left-exclusive, right-inclusive) are decided in integer
// arithmetic.
struct KRatio {
  long long mentions = 0;
  long long entities = 0;

  double value() const { return static_cast<double>(mentions) / static_cast<double>(entities); }
};

inline std::optional<KRatio> compute_k(const Template& tmpl) {
  KRatio k;
  for (const auto& [role, entities] : tmpl.slots) {
    for (const Entity& e : entities) {
      ++k.entities;
      k.mentions += static_cast<long long>(e.mentions.size());
    }
  }
  if (k.entities == 0) return std::nullopt;
  return k;
}

inline constexpr std::size_t kNumBuckets = 5;

inline constexpr std::array<const char*, kNumBuckets> kBucketLabels = {
    "k=1", "1<k<=1.25", "1.25<k<=1.5", "1.5<k<=1.75", "k>1.75"};

inline std::size_t bucket_of(const KRatio& k) {
  // entities >= 1 and mentions >= entities, so k >= 1 always.
  if (k.mentions == k.entities) return 0;
  if (4 * k.mentions <= 5 * k.entities) return 1;
  if (2 * k.mentions <= 3 * k.entities) return 2;
  if (4 * k.mentions <= 7 * k.entities) return 3;
  return 4;
}

struct BucketRow {
  std::string label;
  long long num_docs = 0;
  RoleScore score;  // micro counts pooled over the bucket's documents
};

struct BucketReport {
  std::array<BucketRow, kNumBuckets> buckets;
  // Documents with no gold entities cannot be bucketed; their pooled
  // counts are reported separately so the partition stays additive.
  std::vector<std::string> excluded_docs;
  RoleScore excluded;
  RoleScore total;
};

inline BucketReport bucketed_scores(const std::map<std::string, Template>& gold,
                                    const std::map<std::string, Template>& pred,
                                    const MatchOptions& opts = {}) {
  ScoreReport full = score_corpus(gold, pred, opts);
  BucketReport report;
  for (std::size_t b = 0; b < kNumBuckets; ++b) report.buckets[b].label = kBucketLabels[b];

  for (const auto& [doc_id, tmpl] : gold) {
    const RoleScore& counts = full.per_document.at(doc_id);
    if (auto k = compute_k(tmpl)) {
      BucketRow& row = report.buckets[bucket_of(*k)];
      ++row.num_docs;
      row.score.add_counts(counts);
    } else {
      report.excluded_docs.push_back(doc_id);
      report.excluded.add_counts(counts);
    }
    report.total.add_counts(counts);
  }
  for (BucketRow& row : report.buckets) row.score.finalize();
  report.excluded.finalize();
  report.total.finalize();
  return report;
}

inline std::string render_bucket_report(const BucketReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "bucket" << std::right << std::setw(6) << "docs"
     << std::setw(8) << "P" << std::setw(8) << "R" << std::setw(8) << "F1" << "\n";
  auto row = [&](const std::string& label, long long docs, const RoleScore& s) {
    os << std::left << std::setw(14) << label << std::right << std::setw(6) << docs
       << std::fixed << std::setprecision(2) << std::setw(8) << s.p << std::setw(8)
       << s.r << std::setw(8) << s.f1 << "\n";
  };
  for (const BucketRow& b : report.buckets) row(b.label, b.num_docs, b.score);
  if (!report.excluded_docs.empty())
    row("(no gold)", static_cast<long long>(report.excluded_docs.size()), report.excluded);
  row("all", -1, report.total);
  return os.str();
}

inline nlohmann::ordered_json bucket_report_to_json(const BucketReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const BucketRow& b : report.buckets) {
    nlohmann::ordered_json j = score_to_json(b.score);
    j["bucket"] = b.label;
    j["num_docs"] = b.num_docs;
    rows.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["buckets"] = std::move(rows);
  out["excluded_docs"] = report.excluded_docs;
  out["excluded"] = score_to_json(report.excluded);
  out["total"] = score_to_json(report.total);
  return out;
}

}  // namespace grit
