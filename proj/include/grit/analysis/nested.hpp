#pragma once

#include <string>
#include <vector>

#include "grit/ceaf.hpp"
#include "grit/normalize.hpp"

namespace grit {

// A mention counts as nested when it is a proper sub-span of the outer
// mention (both offset-bearing) or a proper substring of the outer
// mention's normalized text otherwise.
inline bool mention_nested_in(const Mention& inner, const Mention& outer) {
  if (inner.has_span() && outer.has_span()) {
    bool contained = *outer.begin <= *inner.begin && *inner.end <= *outer.end;
    bool proper = *inner.begin > *outer.begin || *inner.end < *outer.end;
    return contained && proper;
  }
  std::string in_text = normalize_mention(inner.text);
  std::string out_text = normalize_mention(outer.text);
  return !in_text.empty() && in_text != out_text &&
         out_text.find(in_text) != std::string::npos;
}

struct NestedSubset {
  RoleId inner = RoleId::PerpOrg;
  RoleId outer = RoleId::PerpInd;
  std::vector<std::string> doc_ids;
};

// Documents where any gold inner-role mention nests inside any gold
// outer-role mention (e.g. a PerpOrg inside a PerpInd phrase).
inline NestedSubset nested_subset(const std::map<std::string, Template>& gold,
                                  RoleId inner = RoleId::PerpOrg,
                                  RoleId outer = RoleId::PerpInd) {
  if (inner == outer) throw ValidationError("nested_subset roles must be distinct");
  NestedSubset subset;
  subset.inner = inner;
  subset.outer = outer;
  for (const auto& [doc_id, tmpl] : gold) {
    bool found = false;
    for (const Entity& ie : tmpl.at(inner)) {
      for (const Mention& im : ie.mentions) {
        for (const Entity& oe : tmpl.at(outer)) {
          for (const Mention& om : oe.mentions) {
            if (mention_nested_in(im, om)) {
              found = true;
              break;
            }
          }
          if (found) break;
        }
        if (found) break;
      }
      if (found) break;
    }
    if (found) subset.doc_ids.push_back(doc_id);
  }
  return subset;
}

// Restriction of gold/pred maps to a document subset, for scoring a role
// on the nested documents only.
inline std::map<std::string, Template> restrict_to_docs(
    const std::map<std::string, Template>& templates,
    const std::vector<std::string>& doc_ids) {
  std::map<std::string, Template> out;
  for (const std::string& id : doc_ids) {
    auto it = templates.find(id);
    if (it != templates.end()) out.emplace(id, it->second);
  }
  return out;
}

}  // namespace grit
