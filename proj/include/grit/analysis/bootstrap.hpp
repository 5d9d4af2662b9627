#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grit/ceaf.hpp"

namespace grit {

struct BootstrapResult {
  double p_value = 1.0;
  double observed_delta = 0.0;  // micro-F1(A) - micro-F1(B)
  double ci_low = 0.0;          // 95% percentile interval of replicate deltas
  double ci_high = 0.0;
  int iterations = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double micro_f1(long long phi, long long npred, long long ngold) {
  double p = npred > 0 ? static_cast<double>(phi) / npred : 0.0;
  double r = ngold > 0 ? static_cast<double>(phi) / ngold : 0.0;
  return (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace detail

// Paired bootstrap over documents: resample the document set with
// replacement, re-pool the per-document counts of both systems, and
// compare micro-F1 per replicate. The p-value is the fraction of
// replicates in which the observed winner fails to win (a zero delta is
// a non-win). Replicate seeds are split off the master seed, so the
// result does not depend on evaluation order.
inline BootstrapResult paired_bootstrap(const std::map<std::string, Template>& gold,
                                        const std::map<std::string, Template>& pred_a,
                                        const std::map<std::string, Template>& pred_b,
                                        int iterations = 10000,
                                        std::uint64_t seed = 1) {
  if (iterations < 1) throw ValidationError("bootstrap needs at least one iteration");
  {
    auto keys = [](const std::map<std::string, Template>& m) {
      std::vector<std::string> k;
      for (const auto& [id, t] : m) k.push_back(id);
      return k;
    };
    if (keys(pred_a) != keys(pred_b))
      throw ValidationError("mismatched doc sets between systems A and B");
  }

  ScoreReport report_a = score_corpus(gold, pred_a);
  ScoreReport report_b = score_corpus(gold, pred_b);

  std::vector<const RoleScore*> counts_a, counts_b;
  for (const auto& [doc_id, score] : report_a.per_document) {
    counts_a.push_back(&score);
    counts_b.push_back(&report_b.per_document.at(doc_id));
  }
  const std::size_t n_docs = counts_a.size();
  if (n_docs == 0) throw ValidationError("bootstrap needs at least one document");

  BootstrapResult result;
  result.iterations = iterations;
  result.observed_delta = report_a.micro.f1 - report_b.micro.f1;
  const bool a_wins = result.observed_delta > 0.0;

  std::vector<double> deltas(iterations);
  int non_wins = 0;
  for (int it = 0; it < iterations; ++it) {
    std::mt19937_64 rng(detail::splitmix64(seed + static_cast<std::uint64_t>(it)));
    std::uniform_int_distribution<std::size_t> pick(0, n_docs - 1);
    long long phi_a = 0, pred_a_n = 0, gold_a_n = 0;
    long long phi_b = 0, pred_b_n = 0, gold_b_n = 0;
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::size_t j = pick(rng);
      phi_a += counts_a[j]->phi_sum;
      pred_a_n += counts_a[j]->num_pred;
      gold_a_n += counts_a[j]->num_gold;
      phi_b += counts_b[j]->phi_sum;
      pred_b_n += counts_b[j]->num_pred;
      gold_b_n += counts_b[j]->num_gold;
    }
    double delta = detail::micro_f1(phi_a, pred_a_n, gold_a_n) -
                   detail::micro_f1(phi_b, pred_b_n, gold_b_n);
    deltas[it] = delta;
    if (a_wins ? delta <= 0.0 : delta >= 0.0) ++non_wins;
  }

  result.p_value = static_cast<double>(non_wins) / static_cast<double>(iterations);
  std::sort(deltas.begin(), deltas.end());
  auto percentile = [&](double q) {
    double pos = q * static_cast<double>(deltas.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, deltas.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return deltas[lo] * (1.0 - frac) + deltas[hi] * frac;
  };
  result.ci_low = percentile(0.025);
  result.ci_high = percentile(0.975);
  return result;
}

}  // namespace grit
