#pragma once

// Relation name registry, distant-supervision bag records, and the token
// vocabulary.
//
// Bag files are JSON Lines, one bag per line:
//   {"pair":[head_id,tail_id],"relation":"<name>",
//    "sentences":[{"tokens":["..."],"head_idx":i,"tail_idx":j,"expressed":"<name>"}]}
// `expressed` is optional and records which relation a sentence actually
// states (known only for synthetic data).

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "prex/common.hpp"
#include "prex/io.hpp"

namespace prex {

inline constexpr const char* kNaRelation = "NA";

/// Dense relation ids; id 0 is always NA.
class RelationSet {
 public:
  RelationSet() { intern(kNaRelation); }

  explicit RelationSet(const std::vector<std::string>& names) {
    intern(kNaRelation);
    for (const auto& n : names) intern(n);
  }

  std::size_t intern(const std::string& name) {
    if (name.empty()) fail(ErrorKind::kFormat, "empty relation name");
    const auto [it, inserted] = ids_.emplace(name, names_.size());
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::size_t id(const std::string& name) const {
    const auto it = ids_.find(name);
    if (it == ids_.end()) fail(ErrorKind::kFormat, "unknown relation '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const { return ids_.count(name) != 0; }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Relations file: one name per line in id order; the first line is NA.
inline void save_relations(const std::string& path, const RelationSet& rels) {
  std::string text;
  for (const auto& n : rels.names()) text += n + "\n";
  io::open_output(path) << text;
}

inline RelationSet load_relations(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::string line;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    io::strip_cr(line);
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty() || names.front() != kNaRelation) fail(ErrorKind::kFormat, path + ": first relation must be NA");
  RelationSet rels;
  for (std::size_t k = 1; k < names.size(); ++k) {
    if (rels.contains(names[k])) fail(ErrorKind::kFormat, path + ": duplicate relation '" + names[k] + "'");
    rels.intern(names[k]);
  }
  return rels;
}

struct BagSentence {
  std::vector<std::string> tokens;
  std::size_t head_idx = 0;
  std::size_t tail_idx = 0;
  std::string expressed;

  bool operator==(const BagSentence&) const = default;
};

struct Bag {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::string relation;
  std::vector<BagSentence> sentences;

  bool operator==(const Bag&) const = default;
};

using BagDataset = std::vector<Bag>;

inline std::string bag_to_json_line(const Bag& bag) {
  nlohmann::ordered_json j;
  j["pair"] = {bag.head, bag.tail};
  j["relation"] = bag.relation;
  j["sentences"] = nlohmann::ordered_json::array();
  for (const auto& s : bag.sentences) {
    nlohmann::ordered_json js;
    js["tokens"] = s.tokens;
    js["head_idx"] = s.head_idx;
    js["tail_idx"] = s.tail_idx;
    if (!s.expressed.empty()) js["expressed"] = s.expressed;
    j["sentences"].push_back(std::move(js));
  }
  return j.dump();
}

inline void save_bags(const std::string& path, const BagDataset& bags) {
  std::string text;
  for (const auto& b : bags) {
    text += bag_to_json_line(b);
    text.push_back('\n');
  }
  io::open_output(path) << text;
}

inline BagDataset load_bags(const std::string& path) {
  std::ifstream in = io::open_input(path);
  BagDataset bags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const std::string ctx = io::where(path, line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      Bag b;
      const auto& pair = j.at("pair");
      if (!pair.is_array() || pair.size() != 2) fail(ErrorKind::kFormat, ctx + ": pair must be [head, tail]");
      b.head = pair[0].get<std::size_t>();
      b.tail = pair[1].get<std::size_t>();
      b.relation = j.at("relation").get<std::string>();
      for (const auto& js : j.at("sentences")) {
        BagSentence s;
        s.tokens = js.at("tokens").get<std::vector<std::string>>();
        s.head_idx = js.at("head_idx").get<std::size_t>();
        s.tail_idx = js.at("tail_idx").get<std::size_t>();
        if (js.contains("expressed")) s.expressed = js.at("expressed").get<std::string>();
        if (s.head_idx >= s.tokens.size() || s.tail_idx >= s.tokens.size() || s.head_idx == s.tail_idx) {
          fail(ErrorKind::kFormat, ctx + ": entity indices must be distinct and inside the sentence");
        }
        b.sentences.push_back(std::move(s));
      }
      bags.push_back(std::move(b));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kFormat, ctx + ": " + e.what());
    }
  }
  return bags;
}

/// Token ids; id 0 is the reserved unknown token.
class Vocabulary {
 public:
  static constexpr const char* kUnk = "<unk>";

  Vocabulary() { add(kUnk); }

  std::size_t add(const std::string& token) {
    const auto [it, inserted] = ids_.emplace(token, tokens_.size());
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  /// Unknown tokens map to 0.
  std::size_t id(const std::string& token) const {
    const auto it = ids_.find(token);
    return it == ids_.end() ? 0 : it->second;
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }

  /// Most frequent tokens first (ties lexicographic), capped at max_size
  /// entries including the unknown token.
  static Vocabulary build(const BagDataset& bags, std::size_t max_size) {
    std::map<std::string, std::size_t> counts;
    for (const auto& b : bags) {
      for (const auto& s : b.sentences) {
        for (const auto& t : s.tokens) ++counts[t];
      }
    }
    std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (const auto& [tok, c] : sorted) {
      if (v.size() >= max_size) break;
      if (tok != kUnk) v.add(tok);
    }
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Vocabulary file: `token<TAB>id` per line in id order.
inline void save_vocabulary(const std::string& path, const Vocabulary& v) {
  std::string text;
  for (std::size_t k = 0; k < v.size(); ++k) text += v.token(k) + "\t" + std::to_string(k) + "\n";
  io::open_output(path) << text;
}

inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in = io::open_input(path);
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const auto f = io::split(line, '\t');
    const std::string ctx = io::where(path, line_no);
    if (f.size() != 2) fail(ErrorKind::kFormat, ctx + ": expected token<TAB>id");
    const auto id = io::parse_int<std::size_t>(f[1], ctx);
    if (line_no == 1) {
      if (f[0] != Vocabulary::kUnk || id != 0) fail(ErrorKind::kFormat, ctx + ": first entry must be <unk> with id 0");
      continue;
    }
    if (id != v.size()) fail(ErrorKind::kFormat, ctx + ": ids must be dense and in order");
    v.add(std::string(f[0]));
  }
  return v;
}

/// Number of bags per relation id.
inline std::vector<std::size_t> count_bags_per_relation(const BagDataset& bags, const RelationSet& rels) {
  std::vector<std::size_t> counts(rels.size(), 0);
  for (const auto& b : bags) ++counts[rels.id(b.relation)];
  return counts;
}

}  // namespace prex
