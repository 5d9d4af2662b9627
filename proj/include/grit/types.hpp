#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grit/normalize.hpp"
#include "grit/roles.hpp"

namespace grit {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A text span describing an entity. Gold mentions may be offset-free
// (string only); token indices are inclusive and 0-based into the
// document body.
struct Mention {
  std::string text;
  std::optional<int> begin;
  std::optional<int> end;

  bool has_span() const { return begin.has_value() && end.has_value(); }

  bool operator==(const Mention&) const = default;
};

// Sort key: offset-bearing mentions by (begin, end), offset-free ones after.
inline bool mention_before(const Mention& a, const Mention& b) {
  if (a.has_span() != b.has_span()) return a.has_span();
  if (!a.has_span()) return false;
  if (*a.begin != *b.begin) return *a.begin < *b.begin;
  return *a.end < *b.end;
}

// One role-filler entity. Gold entities list all alternative mentions;
// predictions carry exactly one.
struct Entity {
  std::vector<Mention> mentions;

  bool operator==(const Entity&) const = default;
};

inline const Mention& first_mention(const Entity& entity) {
  if (entity.mentions.empty()) throw ValidationError("entity has no mentions");
  const Mention* best = &entity.mentions.front();
  for (const Mention& m : entity.mentions) {
    if (mention_before(m, *best)) best = &m;
  }
  return *best;
}

struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;

  bool operator==(const Document&) const = default;
};

inline std::string join_tokens(const std::vector<std::string>& tokens, int begin,
                               int end) {
  std::string out;
  for (int i = begin; i <= end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

struct Template {
  std::string doc_id;
  std::map<RoleId, std::vector<Entity>> slots;

  Template() {
    for (RoleId r : kAllRoles) slots[r];
  }
  explicit Template(std::string id) : Template() { doc_id = std::move(id); }

  std::vector<Entity>& operator[](RoleId r) { return slots[r]; }
  const std::vector<Entity>& at(RoleId r) const { return slots.at(r); }

  std::size_t num_entities() const {
    std::size_t n = 0;
    for (const auto& [role, entities] : slots) n += entities.size();
    return n;
  }

  bool operator==(const Template&) const = default;
};

// Canonical within-role order: by first mention position, offset-free last.
inline void sort_entities_canonically(Template& tmpl) {
  for (auto& [role, entities] : tmpl.slots) {
    std::stable_sort(entities.begin(), entities.end(),
                     [](const Entity& a, const Entity& b) {
                       return mention_before(first_mention(a), first_mention(b));
                     });
  }
}

struct Corpus {
  std::vector<Document> documents;
  std::map<std::string, Template> gold;

  const Document* find_document(const std::string& doc_id) const {
    for (const Document& d : documents) {
      if (d.doc_id == doc_id) return &d;
    }
    return nullptr;
  }
};

}  // namespace grit
