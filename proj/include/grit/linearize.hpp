#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grit/types.hpp"

namespace grit {

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";

// [CLS] + document body + [SEP]; symbols x_0..x_m with x_m = [SEP].
// Bodies longer than max_len - 2 are truncated at the tail.
struct SourceSequence {
  std::string doc_id;
  std::vector<std::string> tokens;

  int sep_index() const { return static_cast<int>(tokens.size()) - 1; }  // m
  int body_len() const { return static_cast<int>(tokens.size()) - 2; }
};

inline SourceSequence build_source(const Document& doc, int max_len = 512) {
  if (doc.tokens.empty()) throw ValidationError("document has no tokens: " + doc.doc_id);
  if (max_len < 3) throw ValidationError("max source length must be at least 3");
  SourceSequence src;
  src.doc_id = doc.doc_id;
  std::size_t body = std::min(doc.tokens.size(), static_cast<std::size_t>(max_len - 2));
  src.tokens.reserve(body + 2);
  src.tokens.push_back(kClsToken);
  src.tokens.insert(src.tokens.end(), doc.tokens.begin(), doc.tokens.begin() + body);
  src.tokens.push_back(kSepToken);
  return src;
}

// The linearized target: y_0 is the start symbol (realized as the [CLS]
// position 0), then per role in fixed order an even run of (begin, end)
// source indices followed by the separator index m. Ends at the fifth
// separator.
struct PointerSequence {
  std::vector<int> indices;
  int sep_index = 0;
  bool truncated = false;  // decoding hit the step cap before the fifth separator
};

inline void validate_pointer_sequence(const PointerSequence& seq) {
  const int m = seq.sep_index;
  if (seq.indices.empty() || seq.indices.front() != 0)
    throw ValidationError("pointer sequence must begin with the start symbol");
  int seps = 0;
  std::optional<int> pending_begin;
  for (std::size_t i = 1; i < seq.indices.size(); ++i) {
    int idx = seq.indices[i];
    if (seps == kNumRoles)
      throw ValidationError("pointer sequence continues past the fifth separator");
    if (idx == m) {
      if (pending_begin)
        throw ValidationError("odd-length role segment at role " +
                              std::string(role_name(kAllRoles[seps])));
      ++seps;
    } else {
      if (idx < 1 || idx > m - 1)
        throw ValidationError("pointer index out of range: " + std::to_string(idx));
      if (!pending_begin) {
        pending_begin = idx;
      } else {
        if (idx < *pending_begin)
          throw ValidationError("begin > end in role " +
                                std::string(role_name(kAllRoles[seps])));
        pending_begin.reset();
      }
    }
  }
  if (seps != kNumRoles)
    throw ValidationError("pointer sequence has " + std::to_string(seps) +
                          " separators, expected 5");
}

struct LinearizeOptions {
  // Drop entities whose first mention is offset-free or beyond the
  // (possibly truncated) source instead of failing.
  bool skip_unresolvable = false;
};

struct LinearizeResult {
  PointerSequence sequence;
  std::vector<std::string> warnings;
};

inline LinearizeResult linearize(const Template& tmpl, const SourceSequence& src,
                                 const LinearizeOptions& opts = {}) {
  const int m = src.sep_index();
  LinearizeResult result;
  result.sequence.sep_index = m;
  result.sequence.indices.push_back(0);

  for (RoleId role : kAllRoles) {
    std::vector<std::pair<int, int>> spans;
    for (const Entity& entity : tmpl.at(role)) {
      const Mention& fm = first_mention(entity);
      std::string problem;
      if (!fm.has_span()) {
        problem = "first mention has no offsets";
      } else if (*fm.end >= src.body_len()) {
        problem = "first mention outside the source range";
      }
      if (!problem.empty()) {
        if (!opts.skip_unresolvable)
          throw ValidationError("cannot linearize doc " + tmpl.doc_id + " role " +
                                std::string(role_name(role)) + ": " + problem);
        result.warnings.push_back("doc " + tmpl.doc_id + " role " +
                                  std::string(role_name(role)) +
                                  ": entity dropped (" + problem + ")");
        continue;
      }
      spans.emplace_back(*fm.begin + 1, *fm.end + 1);  // +1 for [CLS]
    }
    std::sort(spans.begin(), spans.end());
    spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
    for (auto [b, e] : spans) {
      result.sequence.indices.push_back(b);
      result.sequence.indices.push_back(e);
    }
    result.sequence.indices.push_back(m);
  }
  return result;
}

struct DelinearizeResult {
  Template tmpl;
  int dropped_spans = 0;  // lenient mode: pairs violating begin <= end
};

// Inverse of linearize: rebuilds a template whose entities each carry one
// mention recovered from the source. In strict mode malformed segments
// are errors; in lenient mode invalid spans are dropped and counted
// (used by the decoding-constraint ablation).
inline DelinearizeResult delinearize(const PointerSequence& seq,
                                     const SourceSequence& src,
                                     bool lenient = false) {
  const int m = src.sep_index();
  if (seq.sep_index != m)
    throw ValidationError("pointer sequence separator index does not match source");
  if (seq.indices.empty() || seq.indices.front() != 0)
    throw ValidationError("pointer sequence must begin with the start symbol");

  DelinearizeResult result;
  result.tmpl.doc_id = src.doc_id;
  std::size_t role_pos = 0;
  std::optional<int> pending_begin;

  auto role_here = [&]() {
    return std::string(role_name(kAllRoles[std::min(role_pos, kNumRoles - 1)]));
  };

  for (std::size_t i = 1; i < seq.indices.size(); ++i) {
    int idx = seq.indices[i];
    if (role_pos == kNumRoles)
      throw ValidationError("pointer sequence continues past the fifth separator");
    if (idx == m) {
      if (pending_begin) {
        if (!lenient)
          throw ValidationError("odd-length role segment at role " + role_here());
        ++result.dropped_spans;
        pending_begin.reset();
      }
      ++role_pos;
      continue;
    }
    if (idx < 1 || idx > m - 1)
      throw ValidationError("pointer index out of range at role " + role_here() +
                            ": " + std::to_string(idx));
    if (!pending_begin) {
      pending_begin = idx;
      continue;
    }
    int b = *pending_begin, e = idx;
    pending_begin.reset();
    if (e < b) {
      if (!lenient)
        throw ValidationError("begin > end in role " + role_here());
      ++result.dropped_spans;
      continue;
    }
    Mention mention;
    mention.begin = b - 1;
    mention.end = e - 1;
    std::string text;
    for (int t = b; t <= e; ++t) {
      if (t > b) text.push_back(' ');
      text += src.tokens[t];
    }
    mention.text = std::move(text);
    result.tmpl[kAllRoles[role_pos]].push_back(Entity{{std::move(mention)}});
  }
  if (role_pos != kNumRoles)
    throw ValidationError("pointer sequence has " + std::to_string(role_pos) +
                          " separators, expected 5");
  sort_entities_canonically(result.tmpl);
  return result;
}

// Dump format: one document per line, "doc_id<TAB>indices", with '|'
// marking each separator occurrence. The start symbol is implicit.
inline std::string pointer_sequence_to_line(const std::string& doc_id,
                                            const PointerSequence& seq) {
  std::ostringstream os;
  os << doc_id << '\t';
  for (std::size_t i = 1; i < seq.indices.size(); ++i) {
    if (i > 1) os << ' ';
    if (seq.indices[i] == seq.sep_index)
      os << '|';
    else
      os << seq.indices[i];
  }
  return os.str();
}

inline std::pair<std::string, PointerSequence> pointer_sequence_from_line(
    const std::string& line, int sep_index) {
  auto tab = line.find('\t');
  if (tab == std::string::npos)
    throw ParseError("pointer dump line is missing the doc_id tab");
  PointerSequence seq;
  seq.sep_index = sep_index;
  seq.indices.push_back(0);
  std::istringstream iss(line.substr(tab + 1));
  std::string tok;
  while (iss >> tok) {
    if (tok == "|") {
      seq.indices.push_back(sep_index);
    } else {
      try {
        seq.indices.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw ParseError("bad pointer dump token: " + tok);
      }
    }
  }
  return {line.substr(0, tab), std::move(seq)};
}

}  // namespace grit
