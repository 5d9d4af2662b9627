#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grit/types.hpp"

namespace grit {

// Interchange format: UTF-8 JSON lines.
//   documents:  {"doc_id": str, "tokens": [str, ...]}
//   templates:  {"doc_id": str, "roles": {"PerpInd": [[{"text": str,
//               "begin": int?, "end": int?}, ...], ...], ...}}
// Each entity is a list of alternative mentions; begin/end are inclusive
// 0-based body-token indices and must come as a pair.

namespace detail {

inline std::string loc(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

inline nlohmann::json parse_line(const std::string& path, std::size_t line,
                                 const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(loc(path, line) + "malformed JSON record");
  return j;
}

}  // namespace detail

inline Mention parse_mention(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    throw ParseError(where + "mention must be an object with a \"text\" string");
  Mention m;
  m.text = j["text"].get<std::string>();
  bool has_begin = j.contains("begin") && !j["begin"].is_null();
  bool has_end = j.contains("end") && !j["end"].is_null();
  if (has_begin != has_end)
    throw ParseError(where + "mention must carry both begin and end, or neither");
  if (has_begin) {
    if (!j["begin"].is_number_integer() || !j["end"].is_number_integer())
      throw ParseError(where + "begin/end must be integers");
    m.begin = j["begin"].get<int>();
    m.end = j["end"].get<int>();
    if (*m.begin < 0 || *m.begin > *m.end)
      throw ValidationError(where + "mention span requires 0 <= begin <= end");
  }
  return m;
}

inline std::vector<Document> load_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open documents file: " + path);
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(path, lineno, line);
    const std::string where = detail::loc(path, lineno);
    if (!j.contains("doc_id") || !j["doc_id"].is_string())
      throw ParseError(where + "document record needs a \"doc_id\" string");
    if (!j.contains("tokens") || !j["tokens"].is_array())
      throw ParseError(where + "document record needs a \"tokens\" array");
    Document d;
    d.doc_id = j["doc_id"].get<std::string>();
    for (const auto& t : j["tokens"]) {
      if (!t.is_string() || t.get<std::string>().empty())
        throw ValidationError(where + "tokens must be non-empty strings");
      d.tokens.push_back(t.get<std::string>());
    }
    if (d.tokens.empty()) throw ValidationError(where + "document has no tokens");
    if (!seen.insert(d.doc_id).second)
      throw ValidationError(where + "duplicate doc_id: " + d.doc_id);
    docs.push_back(std::move(d));
  }
  return docs;
}

// Standalone template loading; span-vs-document checks happen in
// load_corpus where the documents are available.
inline std::map<std::string, Template> load_templates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open templates file: " + path);
  std::map<std::string, Template> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_line(path, lineno, line);
    const std::string where = detail::loc(path, lineno);
    if (!j.contains("doc_id") || !j["doc_id"].is_string())
      throw ParseError(where + "template record needs a \"doc_id\" string");
    Template tmpl(j["doc_id"].get<std::string>());
    if (out.count(tmpl.doc_id))
      throw ValidationError(where + "duplicate template for doc_id: " + tmpl.doc_id);
    if (j.contains("roles")) {
      if (!j["roles"].is_object())
        throw ParseError(where + "\"roles\" must be an object");
      for (const auto& [key, value] : j["roles"].items()) {
        auto role = parse_role(key);
        if (!role) throw ParseError(where + "unknown role name: " + key);
        if (!value.is_array())
          throw ParseError(where + "role " + key + " must hold a list of entities");
        for (const auto& ej : value) {
          if (!ej.is_array() || ej.empty())
            throw ParseError(where + "entity must be a non-empty list of mentions");
          Entity e;
          for (const auto& mj : ej) e.mentions.push_back(parse_mention(mj, where));
          tmpl[*role].push_back(std::move(e));
        }
      }
    }
    out.emplace(tmpl.doc_id, std::move(tmpl));
  }
  return out;
}

// Leftmost exact token-window match of the mention text; nullopt when the
// text does not occur as a contiguous token sequence.
inline std::optional<std::pair<int, int>> find_leftmost_span(
    const std::vector<std::string>& tokens, const std::string& text) {
  std::vector<std::string> words;
  std::istringstream iss(text);
  std::string w;
  while (iss >> w) words.push_back(w);
  if (words.empty() || words.size() > tokens.size()) return std::nullopt;
  for (std::size_t i = 0; i + words.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (tokens[i + k] != words[k]) {
        match = false;
        break;
      }
    }
    if (match) return std::make_pair(static_cast<int>(i),
                                     static_cast<int>(i + words.size() - 1));
  }
  return std::nullopt;
}

inline Corpus load_corpus(const std::string& docs_path,
                          const std::string& templates_path) {
  Corpus corpus;
  corpus.documents = load_documents(docs_path);
  std::map<std::string, const Document*> by_id;
  for (const Document& d : corpus.documents) by_id[d.doc_id] = &d;

  corpus.gold = load_templates(templates_path);
  for (auto& [doc_id, tmpl] : corpus.gold) {
    auto it = by_id.find(doc_id);
    if (it == by_id.end())
      throw ValidationError("dangling doc_id in templates file: " + doc_id);
    const std::vector<std::string>& tokens = it->second->tokens;
    for (auto& [role, entities] : tmpl.slots) {
      for (Entity& e : entities) {
        for (Mention& m : e.mentions) {
          if (m.has_span()) {
            if (*m.end >= static_cast<int>(tokens.size()))
              throw ValidationError("mention span out of range in doc " + doc_id +
                                    " role " + std::string(role_name(role)));
            if (m.text != join_tokens(tokens, *m.begin, *m.end))
              throw ValidationError("mention text does not match its span in doc " +
                                    doc_id + ": \"" + m.text + "\"");
          } else if (auto span = find_leftmost_span(tokens, m.text)) {
            m.begin = span->first;
            m.end = span->second;
          }
        }
      }
    }
    sort_entities_canonically(tmpl);
  }
  return corpus;
}

inline void save_documents(const std::vector<Document>& docs,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const Document& d : docs) {
    nlohmann::ordered_json j;
    j["doc_id"] = d.doc_id;
    j["tokens"] = d.tokens;
    out << j.dump() << "\n";
  }
}

inline nlohmann::ordered_json template_to_json(const Template& tmpl) {
  nlohmann::ordered_json j;
  j["doc_id"] = tmpl.doc_id;
  nlohmann::ordered_json roles = nlohmann::ordered_json::object();
  for (RoleId r : kAllRoles) {
    nlohmann::ordered_json entities = nlohmann::ordered_json::array();
    for (const Entity& e : tmpl.at(r)) {
      nlohmann::ordered_json mentions = nlohmann::ordered_json::array();
      for (const Mention& m : e.mentions) {
        nlohmann::ordered_json mj;
        mj["text"] = m.text;
        if (m.has_span()) {
          mj["begin"] = *m.begin;
          mj["end"] = *m.end;
        }
        mentions.push_back(std::move(mj));
      }
      entities.push_back(std::move(mentions));
    }
    roles[std::string(role_name(r))] = std::move(entities);
  }
  j["roles"] = std::move(roles);
  return j;
}

inline void save_templates(const std::map<std::string, Template>& templates,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [doc_id, tmpl] : templates) out << template_to_json(tmpl).dump() << "\n";
}

inline void save_corpus(const Corpus& corpus, const std::string& docs_path,
                        const std::string& templates_path) {
  save_documents(corpus.documents, docs_path);
  save_templates(corpus.gold, templates_path);
}

}  // namespace grit
