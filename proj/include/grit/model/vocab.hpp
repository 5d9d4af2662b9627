#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "grit/linearize.hpp"
#include "grit/types.hpp"

namespace grit {

// Whitespace-token vocabulary built from the training corpus. Ids are
// stable across runs: specials first, then tokens by descending
// frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr int kClsId = 0;
  static constexpr int kSepId = 1;
  static constexpr int kUnkId = 2;

  static Vocabulary build(const std::vector<Document>& docs, int min_freq = 1) {
    std::map<std::string, long long> freq;
    for (const Document& d : docs)
      for (const std::string& t : d.tokens) ++freq[t];

    std::vector<std::pair<std::string, long long>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });

    Vocabulary v;
    v.tokens_ = {kClsToken, kSepToken, "[UNK]"};
    for (const auto& [token, count] : entries) {
      if (count >= min_freq) v.tokens_.push_back(token);
    }
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.ids_[v.tokens_[i]] = static_cast<int>(i);
    return v;
  }

  static Vocabulary from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.ids_[v.tokens_[i]] = static_cast<int>(i);
    return v;
  }

  int id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
  }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(id_of(t));
    return ids;
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace grit
