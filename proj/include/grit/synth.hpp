#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "grit/types.hpp"

namespace grit {

// Synthetic REE corpus for desk-scale training runs. Role fillers are
// planted inside role-specific marker contexts (marker word, span, marker
// word) so the mapping from context to extraction is learnable from
// scratch; PerpInd/PerpOrg nesting uses the "two <org> members" shape.
struct SynthOptions {
  int num_docs = 1000;
  int min_len = 40;
  int max_len = 80;
  std::uint64_t seed = 1;
  double alt_mention_prob = 0.15;  // chance of planting a coreferent alternative
  double nested_prob = 0.35;       // chance of a nested PerpInd/PerpOrg pair
  std::string id_prefix = "SYN";
};

namespace synth_detail {

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the",     "a",       "in",      "on",       "at",       "report",
      "said",    "local",   "police",  "today",    "area",     "city",
      "town",    "village", "north",   "south",    "road",     "people",
      "radio",   "sources", "later",   "during",   "after",    "near",
      "also",    "quiet",   "market",  "street",   "news",     "morning",
      "again",   "calm",    ".",       "officials", "stated",  "residents",
      "evening", "night",   "week",    "region",   "province", "capital",
      "river",   "hills",   "announced", "confirmed", "patrol", "unit",
      "traffic", "crowd",   "shops",   "houses",   "farms",    "field",
      "army",    "press",   "spoke",   "heard",    "several",  "many",
      "before",  "around",  "toward",  "outside"};
  return words;
}

struct RoleGrammar {
  std::string left;
  std::string right;
  std::vector<std::vector<std::string>> spans;
};

inline const std::map<RoleId, RoleGrammar>& grammars() {
  static const std::map<RoleId, RoleGrammar> g = {
      {RoleId::PerpInd,
       {"accused", "escaped",
        {{"salazar"}, {"rodriguez"}, {"urrego"}, {"the", "bomber"},
         {"an", "extremist"}, {"armed", "raider"}, {"castellanos"},
         {"vargas"}, {"young", "militant"}}}},
      {RoleId::PerpOrg,
       {"group", "claimed",
        {{"farc"}, {"eln"}, {"shining", "path"}, {"liberation", "front"},
         {"m19"}, {"the", "cartel"}, {"zarate"}, {"mrta"}, {"patriotic", "union"}}}},
      {RoleId::Target,
       {"attacked", "site",
        {{"bridge"}, {"pipeline"}, {"embassy"}, {"telephone", "exchange"},
         {"power", "station"}, {"water", "pipes"}, {"bank"}, {"courthouse"},
         {"rail", "line"}}}},
      {RoleId::Victim,
       {"victim", "wounded",
        {{"garcia"}, {"lopez"}, {"the", "mayor"}, {"a", "judge"},
         {"fernandez"}, {"old", "farmer"}, {"romero"}, {"a", "teacher"},
         {"young", "engineer"}}}},
      {RoleId::Weapon,
       {"using", "charge",
        {{"dynamite"}, {"car", "bomb"}, {"grenades"}, {"rifle"},
         {"mortar"}, {"explosive", "package"}, {"machinegun"}, {"pistol"},
         {"incendiary", "device"}}}},
  };
  return g;
}

struct BlockSpan {
  RoleId role;
  int entity_key;
  int rel_begin;
  int rel_end;
};

struct Block {
  std::vector<std::string> tokens;
  std::vector<BlockSpan> spans;
  bool alternative = false;
};

inline Block plain_block(RoleId role, const std::vector<std::string>& span,
                         int entity_key) {
  const RoleGrammar& g = grammars().at(role);
  Block b;
  b.tokens.push_back(g.left);
  for (const std::string& t : span) b.tokens.push_back(t);
  b.tokens.push_back(g.right);
  b.spans.push_back({role, entity_key, 1, static_cast<int>(span.size())});
  return b;
}

// "accused two <org...> members escaped": the PerpInd span covers
// "two ... members", the PerpOrg span just the organization tokens.
inline Block nested_block(const std::vector<std::string>& org_span, int ind_key,
                          int org_key) {
  const RoleGrammar& g = grammars().at(RoleId::PerpInd);
  Block b;
  b.tokens.push_back(g.left);
  b.tokens.push_back("two");
  for (const std::string& t : org_span) b.tokens.push_back(t);
  b.tokens.push_back("members");
  b.tokens.push_back(g.right);
  int last = static_cast<int>(b.tokens.size()) - 2;  // "members"
  b.spans.push_back({RoleId::PerpInd, ind_key, 1, last});
  b.spans.push_back({RoleId::PerpOrg, org_key, 2, last - 1});
  return b;
}

}  // namespace synth_detail

inline Corpus synth_corpus(const SynthOptions& opts) {
  using namespace synth_detail;
  if (opts.num_docs < 0 || opts.min_len < 20 || opts.max_len < opts.min_len)
    throw ValidationError("bad synth options (need min_len >= 20, max >= min)");

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick_count = [&]() {
    double u = unit(rng);
    if (u < 0.40) return 0;
    if (u < 0.82) return 1;
    if (u < 0.97) return 2;
    return 3;
  };

  Corpus corpus;
  for (int di = 0; di < opts.num_docs; ++di) {
    std::string doc_id = opts.id_prefix + "-" + std::to_string(di + 1);
    int target_len = std::uniform_int_distribution<int>(opts.min_len, opts.max_len)(rng);

    int next_key = 0;
    std::vector<Block> blocks;

    bool nested = unit(rng) < opts.nested_prob;
    std::map<RoleId, std::vector<int>> sampled;  // span-pool indices in use per role
    auto sample_span = [&](RoleId role) -> int {
      const auto& pool = grammars().at(role).spans;
      std::vector<int> free;
      for (int i = 0; i < static_cast<int>(pool.size()); ++i)
        if (std::find(sampled[role].begin(), sampled[role].end(), i) ==
            sampled[role].end())
          free.push_back(i);
      if (free.empty()) return -1;
      int idx = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
      sampled[role].push_back(idx);
      return idx;
    };

    if (nested) {
      int org_idx = sample_span(RoleId::PerpOrg);
      blocks.push_back(nested_block(grammars().at(RoleId::PerpOrg).spans[org_idx],
                                    next_key++, next_key++));
    }
    for (RoleId role : kAllRoles) {
      int count = pick_count();
      for (int c = 0; c < count; ++c) {
        int idx = sample_span(role);
        if (idx < 0) break;
        blocks.push_back(plain_block(role, grammars().at(role).spans[idx], next_key++));
      }
    }
    {
      std::size_t planted = blocks.size();
      for (std::size_t b = 0; b < planted; ++b) {
        if (unit(rng) < opts.alt_mention_prob) {
          Block alt = blocks[b];
          alt.alternative = true;
          blocks.push_back(std::move(alt));
        }
      }
    }

    auto total_tokens = [&]() {
      std::size_t n = 0;
      for (const Block& b : blocks) n += b.tokens.size();
      return static_cast<int>(n);
    };
    while (!blocks.empty() && total_tokens() > target_len - 10) {
      auto alt = std::find_if(blocks.begin(), blocks.end(),
                              [](const Block& b) { return b.alternative; });
      blocks.erase(alt != blocks.end() ? alt : std::prev(blocks.end()));
    }

    std::shuffle(blocks.begin(), blocks.end(), rng);
    int filler_count = target_len - total_tokens();
    std::vector<int> gaps(blocks.size());
    for (int& g : gaps) g = std::uniform_int_distribution<int>(0, filler_count)(rng);
    std::sort(gaps.begin(), gaps.end());

    Document doc;
    doc.doc_id = doc_id;
    const auto& filler = filler_words();
    auto push_filler = [&](int n) {
      for (int i = 0; i < n; ++i)
        doc.tokens.push_back(
            filler[std::uniform_int_distribution<std::size_t>(0, filler.size() - 1)(rng)]);
    };

    std::map<int, std::pair<RoleId, std::vector<Mention>>> entities;
    int cursor = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      push_filler(gaps[b] - cursor);
      cursor = gaps[b];
      int offset = static_cast<int>(doc.tokens.size());
      for (const std::string& t : blocks[b].tokens) doc.tokens.push_back(t);
      for (const BlockSpan& s : blocks[b].spans) {
        Mention m;
        m.begin = offset + s.rel_begin;
        m.end = offset + s.rel_end;
        m.text = join_tokens(doc.tokens, *m.begin, *m.end);
        auto& slot = entities[s.entity_key];
        slot.first = s.role;
        slot.second.push_back(std::move(m));
      }
    }
    push_filler(filler_count - cursor);

    Template tmpl(doc_id);
    for (auto& [key, role_mentions] : entities) {
      auto& [role, mentions] = role_mentions;
      std::sort(mentions.begin(), mentions.end(),
                [](const Mention& a, const Mention& b) { return mention_before(a, b); });
      tmpl[role].push_back(Entity{std::move(mentions)});
    }
    sort_entities_canonically(tmpl);

    corpus.documents.push_back(std::move(doc));
    corpus.gold.emplace(doc_id, std::move(tmpl));
  }
  return corpus;
}

}  // namespace grit
