#include <doctest.h>

#include <functional>
#include <random>

#include "grit/ceaf.hpp"

using namespace grit;

namespace {

Entity entity(std::initializer_list<std::string> mentions) {
  Entity e;
  for (const std::string& m : mentions) e.mentions.push_back(Mention{m, {}, {}});
  return e;
}

// Exhaustive maximum over all one-to-one partial maps; the independent
// oracle for best_alignment.
int brute_force_max_similarity(const SimilarityMatrix& sim) {
  int best = 0;
  std::function<void(int, unsigned, int)> rec = [&](int row, unsigned used, int acc) {
    if (row == sim.rows) {
      best = std::max(best, acc);
      return;
    }
    rec(row + 1, used, acc);  // leave this gold entity unmatched
    for (int c = 0; c < sim.cols; ++c) {
      if ((used >> c) & 1u) continue;
      if (sim.value(row, c)) rec(row + 1, used | (1u << c), acc + 1);
    }
  };
  rec(0, 0u, 0);
  return best;
}

SimilarityMatrix random_matrix(std::mt19937_64& rng) {
  SimilarityMatrix sim;
  sim.rows = std::uniform_int_distribution<int>(0, 6)(rng);
  sim.cols = std::uniform_int_distribution<int>(0, 6)(rng);
  sim.values.resize(static_cast<std::size_t>(sim.rows) * sim.cols);
  for (char& v : sim.values)
    v = static_cast<char>(std::uniform_int_distribution<int>(0, 1)(rng));
  return sim;
}

}  // namespace

TEST_CASE("phi is subset similarity over normalized mention strings") {
  Entity gold = entity({"pilmai telephone company building", "telephone company offices"});
  CHECK(phi(gold, entity({"telephone company offices"})) == 1);
  CHECK(phi(gold, gold) == 1);
  CHECK(phi(entity({"water pipes"}), entity({"telephone company offices"})) == 0);
}

TEST_CASE("phi normalizes mentions before comparing") {
  CHECK(phi(entity({"farc"}), entity({"FARC."})) == 1);
  MatchOptions raw{.use_spans = false, .normalize = false};
  CHECK(phi(entity({"farc"}), entity({"FARC."}), raw) == 0);
}

TEST_CASE("a multi-mention prediction must be entirely inside the gold entity") {
  Entity gold = entity({"the bridge", "old bridge"});
  CHECK(phi(gold, entity({"the bridge", "old bridge"})) == 1);
  CHECK(phi(gold, entity({"the bridge", "new tunnel"})) == 0);
}

TEST_CASE("phi can match on spans when requested") {
  Entity g{{Mention{"two men", 4, 5}}};
  Entity p{{Mention{"two men", 9, 10}}};
  CHECK(phi(g, p) == 1);  // same string
  MatchOptions spans{.use_spans = true};
  CHECK(phi(g, p, spans) == 0);  // different span
  Entity p2{{Mention{"two men", 4, 5}}};
  CHECK(phi(g, p2, spans) == 1);
}

TEST_CASE("best_alignment maximizes total similarity") {
  // Three gold entities; four predictions where the last duplicates the
  // coreference cluster of the third.
  std::vector<Entity> gold = {entity({"g1", "g1 alt"}), entity({"g2"}), entity({"g3"})};
  std::vector<Entity> pred = {entity({"g1"}), entity({"g2"}), entity({"g3"}),
                              entity({"g3"})};
  Alignment a = best_alignment(SimilarityMatrix::build(gold, pred));
  CHECK(a.total_similarity == 3);
  CHECK(a.pairs.size() == 3);

  Alignment empty = best_alignment(SimilarityMatrix::build(gold, {}));
  CHECK(empty.total_similarity == 0);
  CHECK(empty.pairs.empty());

  Alignment identity = best_alignment(SimilarityMatrix::build(gold, gold));
  CHECK(identity.total_similarity == 3);
}

TEST_CASE("best_alignment equals brute force on random instances") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    SimilarityMatrix sim = random_matrix(rng);
    Alignment a = best_alignment(sim);
    CHECK(a.total_similarity == brute_force_max_similarity(sim));
    // the witness is consistent: one-to-one and supported by 1-edges
    std::set<int> rows, cols;
    for (auto [r, c] : a.pairs) {
      CHECK(sim.value(r, c) == 1);
      CHECK(rows.insert(r).second);
      CHECK(cols.insert(c).second);
    }
  }
}

TEST_CASE("score_role reproduces the three appendix cases") {
  // case 1: four predictions, two of them coreferent with the same gold
  std::vector<Entity> gold = {entity({"pilmai telephone company building",
                                      "telephone company offices"}),
                              entity({"water pipes"}), entity({"public school"})};
  std::vector<Entity> pred1 = {entity({"pilmai telephone company building"}),
                               entity({"telephone company offices"}),
                               entity({"water pipes"}), entity({"public school"})};
  RoleScore c1 = score_role(gold, pred1);
  CHECK(c1.phi_sum == 3);
  CHECK(c1.p == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(c1.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c1.f1 == doctest::Approx(6.0 / 7.0).epsilon(1e-12));

  // case 2: predictions identical to gold
  std::vector<Entity> pred2 = {entity({"pilmai telephone company building"}),
                               entity({"water pipes"}), entity({"public school"})};
  RoleScore c2 = score_role(gold, pred2);
  CHECK(c2.p == doctest::Approx(1.0));
  CHECK(c2.r == doctest::Approx(1.0));
  CHECK(c2.f1 == doctest::Approx(1.0));

  // case 3: two correct predictions, one gold entity missed
  std::vector<Entity> pred3 = {entity({"water pipes"}), entity({"public school"})};
  RoleScore c3 = score_role(gold, pred3);
  CHECK(c3.p == doctest::Approx(1.0));
  CHECK(c3.r == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(c3.f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("score_role handles degenerate sides deterministically") {
  RoleScore no_pred = score_role({entity({"g"})}, {});
  CHECK(no_pred.p == 0.0);
  CHECK(no_pred.r == 0.0);
  CHECK(no_pred.f1 == 0.0);

  RoleScore no_gold = score_role({}, {entity({"s"})});
  CHECK(no_gold.p == 0.0);
  CHECK(no_gold.f1 == 0.0);
}

TEST_CASE("score_role is invariant under permutation of either side") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Entity> gold, pred;
    int ng = std::uniform_int_distribution<int>(1, 5)(rng);
    int np = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int i = 0; i < ng; ++i)
      gold.push_back(entity({"e" + std::to_string(std::uniform_int_distribution<int>(0, 6)(rng))}));
    for (int i = 0; i < np; ++i)
      pred.push_back(entity({"e" + std::to_string(std::uniform_int_distribution<int>(0, 6)(rng))}));
    RoleScore base = score_role(gold, pred);
    std::shuffle(gold.begin(), gold.end(), rng);
    std::shuffle(pred.begin(), pred.end(), rng);
    RoleScore shuffled = score_role(gold, pred);
    CHECK(base.phi_sum == shuffled.phi_sum);
    CHECK(base.p == shuffled.p);
    CHECK(base.r == shuffled.r);
  }
}

TEST_CASE("duplicating a matched prediction adds nothing to phi and lowers precision") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    // gold entities with disjoint alternative sets, as distinct referents have
    std::vector<Entity> gold;
    int ng = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < ng; ++i)
      gold.push_back(entity({"g" + std::to_string(i), "g" + std::to_string(i) + " alt"}));
    std::vector<Entity> pred;
    int correct = std::uniform_int_distribution<int>(1, ng)(rng);
    for (int i = 0; i < correct; ++i) pred.push_back(entity({"g" + std::to_string(i)}));
    int spurious = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < spurious; ++i) pred.push_back(entity({"junk" + std::to_string(i)}));

    RoleScore before = score_role(gold, pred);
    // duplicate a correct prediction with a coreferent alternative
    pred.push_back(entity({"g0 alt"}));
    RoleScore after = score_role(gold, pred);

    CHECK(after.phi_sum == before.phi_sum);  // contribution 1, not 2
    CHECK(after.p < before.p);
    CHECK(after.r == before.r);
    CHECK(after.f1 < before.f1);
  }
}

TEST_CASE("phi-sum is bounded and scores stay in [0, 1]") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 200; ++trial) {
    SimilarityMatrix sim = random_matrix(rng);
    int total = best_alignment(sim).total_similarity;
    CHECK(total <= std::min(sim.rows, sim.cols));
    RoleScore s;
    s.phi_sum = total;
    s.num_gold = sim.rows;
    s.num_pred = sim.cols;
    s.finalize();
    CHECK(s.p >= 0.0);
    CHECK(s.p <= 1.0);
    CHECK(s.r >= 0.0);
    CHECK(s.r <= 1.0);
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 1.0);
  }
}

TEST_CASE("score_corpus pools counts rather than averaging ratios") {
  std::map<std::string, Template> gold, pred;
  for (int d = 0; d < 2; ++d) {
    std::string id = "doc" + std::to_string(d);
    Template g(id), p(id);
    g[RoleId::Target] = {entity({"bridge"}), entity({"pipeline"})};
    p[RoleId::Target] = {entity({"bridge"})};
    gold.emplace(id, g);
    pred.emplace(id, p);
  }
  ScoreReport report = score_corpus(gold, pred);
  CHECK(report.micro.phi_sum == 2);
  CHECK(report.micro.num_pred == 2);
  CHECK(report.micro.num_gold == 4);
  CHECK(report.micro.p == doctest::Approx(1.0));
  CHECK(report.micro.r == doctest::Approx(0.5));
  CHECK(report.micro.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("score_corpus identity and empty predictions") {
  std::map<std::string, Template> gold;
  Template g("d");
  g[RoleId::Victim] = {entity({"garcia"})};
  g[RoleId::Weapon] = {entity({"dynamite"})};
  gold.emplace("d", g);

  ScoreReport identity = score_corpus(gold, gold);
  CHECK(identity.micro.p == doctest::Approx(1.0));
  CHECK(identity.micro.r == doctest::Approx(1.0));
  CHECK(identity.micro.f1 == doctest::Approx(1.0));

  ScoreReport empty = score_corpus(gold, {});
  CHECK(empty.micro.r == 0.0);
  CHECK(empty.micro.f1 == 0.0);
  CHECK(empty.micro.num_gold == 2);
}

TEST_CASE("score_corpus rejects predictions for unknown documents") {
  std::map<std::string, Template> gold, pred;
  gold.emplace("known", Template("known"));
  pred.emplace("unknown", Template("unknown"));
  CHECK_THROWS_AS(score_corpus(gold, pred), ValidationError);
}

TEST_CASE("cells empty on both sides contribute nothing") {
  std::map<std::string, Template> gold, pred;
  Template g("d"), p("d");
  g[RoleId::Victim] = {entity({"garcia"})};
  p[RoleId::Victim] = {entity({"garcia"})};
  gold.emplace("d", g);
  pred.emplace("d", p);
  ScoreReport report = score_corpus(gold, pred);
  // only the Victim cell is populated; the other roles stay at zero counts
  CHECK(report.per_role.at(RoleId::Weapon).num_gold == 0);
  CHECK(report.per_role.at(RoleId::Weapon).num_pred == 0);
  CHECK(report.micro.num_pred == 1);
  CHECK(report.micro.num_gold == 1);
}

TEST_CASE("report renders two-decimal rows and raw counts") {
  std::map<std::string, Template> gold, pred;
  Template g("d"), p("d");
  g[RoleId::Target] = {entity({"a"}), entity({"b"}), entity({"c"})};
  p[RoleId::Target] = {entity({"a"}), entity({"b"}), entity({"c"}), entity({"a"})};
  gold.emplace("d", g);
  pred.emplace("d", p);
  ScoreReport report = score_corpus(gold, pred);
  std::string table = render_report(report);
  CHECK(table.find("0.75") != std::string::npos);
  CHECK(table.find("0.86") != std::string::npos);
  CHECK(table.find("micro") != std::string::npos);

  auto j = report_to_json(report);
  CHECK(j["micro"]["phi"] == 3);
  CHECK(j["micro"]["num_pred"] == 4);
  CHECK(j["micro"]["num_gold"] == 3);
}
