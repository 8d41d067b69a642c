#pragma once

// Entity catalog, exact-match mention finding, and the weighted entity
// co-occurrence graph built from unlabeled sentences.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prex/common.hpp"
#include "prex/io.hpp"

namespace prex {

/// Splits on whitespace after detaching every ASCII punctuation character
/// into its own token.
inline std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char ch : raw) {
    const auto uc = static_cast<unsigned char>(ch);
    if (uc < 128 && std::isspace(uc)) {
      flush();
    } else if (uc < 128 && std::ispunct(uc)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return tokens;
}

struct CatalogEntry {
  std::size_t id = 0;
  std::string canonical;
  std::vector<std::string> surface_forms;  // canonical first

  bool operator==(const CatalogEntry&) const = default;
};

class EntityCatalog {
 public:
  EntityCatalog() = default;

  /// Entries may arrive in any order; ids must end up dense 0..n-1.
  explicit EntityCatalog(std::vector<CatalogEntry> entries, const std::string& source = "catalog") {
    std::sort(entries.begin(), entries.end(),
              [](const CatalogEntry& a, const CatalogEntry& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (entries[k].id != k) {
        fail(ErrorKind::kFormat, source + ": entity ids must be dense and unique 0..n-1 (missing or repeated id " +
                                     std::to_string(k) + ")");
      }
    }
    entries_ = std::move(entries);
    for (auto& e : entries_) {
      if (e.canonical.empty()) fail(ErrorKind::kFormat, source + ": empty canonical name for id " + std::to_string(e.id));
      std::vector<std::string> forms{e.canonical};
      for (const auto& s : e.surface_forms) {
        if (!s.empty() && std::find(forms.begin(), forms.end(), s) == forms.end()) forms.push_back(s);
      }
      e.surface_forms = std::move(forms);
    }
    index_surfaces(source);
  }

  std::size_t size() const { return entries_.size(); }
  const CatalogEntry& operator[](std::size_t id) const { return entries_.at(id); }
  const std::vector<CatalogEntry>& entries() const { return entries_; }

  /// Longest surface form, in tokens.
  std::size_t max_form_tokens() const { return max_tokens_; }

  /// Entity whose surface form tokenizes to exactly `key` (tokens joined by
  /// kJoin), or -1.
  long find(const std::string& key) const {
    const auto it = by_surface_.find(key);
    return it == by_surface_.end() ? -1 : static_cast<long>(it->second);
  }

  static constexpr char kJoin = '\x1f';

  static std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
    std::string key;
    for (std::size_t k = begin; k < end; ++k) {
      if (k > begin) key.push_back(kJoin);
      key += tokens[k];
    }
    return key;
  }

 private:
  void index_surfaces(const std::string& source) {
    for (const auto& e : entries_) {
      for (const auto& form : e.surface_forms) {
        const auto toks = tokenize(form);
        if (toks.empty()) fail(ErrorKind::kFormat, source + ": surface form of entity " + std::to_string(e.id) + " has no tokens");
        const std::string key = join_tokens(toks, 0, toks.size());
        const auto [it, inserted] = by_surface_.emplace(key, e.id);
        if (!inserted && it->second != e.id) {
          fail(ErrorKind::kFormat, source + ": ambiguous surface form '" + form + "' shared by entities " +
                                       std::to_string(it->second) + " (" + entries_[it->second].canonical + ") and " +
                                       std::to_string(e.id) + " (" + e.canonical + ")");
        }
        max_tokens_ = std::max(max_tokens_, toks.size());
      }
    }
  }

  std::vector<CatalogEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_surface_;
  std::size_t max_tokens_ = 0;
};

/// Catalog file: `id<TAB>canonical<TAB>alias...`, one entity per line.
inline EntityCatalog load_entity_catalog(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::vector<CatalogEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = io::split(line, '\t');
    if (fields.size() < 2 || fields[1].empty()) {
      fail(ErrorKind::kFormat, io::where(path, line_no) + ": expected id<TAB>canonical[<TAB>alias...]");
    }
    CatalogEntry e;
    e.id = io::parse_int<std::size_t>(fields[0], io::where(path, line_no));
    e.canonical = std::string(fields[1]);
    for (std::size_t k = 2; k < fields.size(); ++k) e.surface_forms.emplace_back(fields[k]);
    entries.push_back(std::move(e));
  }
  return EntityCatalog(std::move(entries), path);
}

inline void save_entity_catalog(const std::string& path, const EntityCatalog& catalog) {
  std::string text;
  for (const auto& e : catalog.entries()) {
    text += std::to_string(e.id);
    for (const auto& form : e.surface_forms) {
      text.push_back('\t');
      text += form;
    }
    text.push_back('\n');
  }
  io::open_output(path) << text;
}

struct Mention {
  std::size_t entity = 0;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const Mention&) const = default;
};

struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;  // sorted by start, non-overlapping
};

/// Leftmost-longest, case-sensitive exact matching of catalog surface forms
/// over the token sequence.
inline TokenizedSentence match_sentence(std::string_view raw, const EntityCatalog& catalog) {
  TokenizedSentence out;
  out.tokens = tokenize(raw);
  const std::size_t n = out.tokens.size();
  std::size_t pos = 0;
  while (pos < n) {
    const std::size_t longest = std::min(catalog.max_form_tokens(), n - pos);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      const long id = catalog.find(EntityCatalog::join_tokens(out.tokens, pos, pos + len));
      if (id >= 0) {
        out.mentions.push_back({static_cast<std::size_t>(id), pos, pos + len});
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++pos;
  }
  return out;
}

struct GraphEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  std::uint64_t count = 0;
  double weight = 0.0;

  bool operator==(const GraphEdge&) const = default;
};

struct CooccurrenceGraph {
  std::size_t n_vertices = 0;
  std::vector<GraphEdge> edges;  // sorted by (i, j)

  /// Sum of incident edge weights per vertex.
  Vec weighted_degree() const {
    Vec deg(n_vertices, 0.0);
    for (const auto& e : edges) {
      deg[e.i] += e.weight;
      deg[e.j] += e.weight;
    }
    return deg;
  }

  bool operator==(const CooccurrenceGraph&) const = default;
};

/// Per-sentence unordered pair counts. Partial counters from disjoint shards
/// merge by summation.
class CooccurrenceCounter {
 public:
  explicit CooccurrenceCounter(std::size_t n_entities) : n_(n_entities) {}

  void add(const TokenizedSentence& sentence) {
    std::vector<std::size_t> ids;
    ids.reserve(sentence.mentions.size());
    for (const auto& m : sentence.mentions) {
      if (m.entity >= n_) {
        fail(ErrorKind::kDimension, "mention entity id " + std::to_string(m.entity) + " >= n_entities " + std::to_string(n_));
      }
      ids.push_back(m.entity);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) ++counts_[key(ids[a], ids[b])];
    }
  }

  void merge(const CooccurrenceCounter& other) {
    for (const auto& [k, c] : other.counts_) counts_[k] += c;
  }

  /// Drops pairs below min_count, then weights survivors by
  /// log(count) / log(max surviving count); a max of 1 gives weight 1.
  CooccurrenceGraph finalize(std::uint64_t min_count) const {
    if (min_count < 1) fail(ErrorKind::kInvalidArgument, "min_count must be >= 1");
    CooccurrenceGraph g;
    g.n_vertices = n_;
    std::uint64_t max_count = 0;
    for (const auto& [k, c] : counts_) {
      if (c < min_count) continue;
      g.edges.push_back({static_cast<std::size_t>(k >> 32), static_cast<std::size_t>(k & 0xffffffffULL), c, 0.0});
      max_count = std::max(max_count, c);
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const GraphEdge& a, const GraphEdge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    const double denom = max_count > 1 ? std::log(static_cast<double>(max_count)) : 0.0;
    for (auto& e : g.edges) {
      e.weight = max_count > 1 ? (e.count == max_count ? 1.0 : std::log(static_cast<double>(e.count)) / denom) : 1.0;
    }
    return g;
  }

 private:
  static std::uint64_t key(std::size_t a, std::size_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
  }

  std::size_t n_;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

inline CooccurrenceGraph build_cooccurrence_graph(std::span<const TokenizedSentence> sentences,
                                                  std::size_t n_entities, std::uint64_t min_count,
                                                  std::size_t threads = 1) {
  if (n_entities >= (std::size_t{1} << 32)) fail(ErrorKind::kInvalidArgument, "too many entities");
  threads = std::max<std::size_t>(1, std::min(threads, sentences.size() / 1024 + 1));
  if (threads == 1) {
    CooccurrenceCounter counter(n_entities);
    for (const auto& s : sentences) counter.add(s);
    return counter.finalize(min_count);
  }
  std::vector<CooccurrenceCounter> partial(threads, CooccurrenceCounter(n_entities));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (sentences.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(sentences.size(), lo + chunk);
        for (std::size_t k = lo; k < hi; ++k) partial[t].add(sentences[k]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t t = 1; t < threads; ++t) partial[0].merge(partial[t]);
  return partial[0].finalize(min_count);
}

/// Matches every line of a one-sentence-per-line corpus.
inline std::vector<TokenizedSentence> match_corpus(const std::string& path, const EntityCatalog& catalog) {
  std::ifstream in = io::open_input(path);
  std::vector<TokenizedSentence> out;
  std::string line;
  while (std::getline(in, line)) {
    io::strip_cr(line);
    out.push_back(match_sentence(line, catalog));
  }
  return out;
}

/// Graph file: `#vertices=<n>` then `i<TAB>j<TAB>count<TAB>weight`.
inline void save_graph(const std::string& path, const CooccurrenceGraph& g) {
  std::string text = "#vertices=" + std::to_string(g.n_vertices) + "\n";
  for (const auto& e : g.edges) {
    text += std::to_string(e.i);
    text.push_back('\t');
    text += std::to_string(e.j);
    text.push_back('\t');
    text += std::to_string(e.count);
    text.push_back('\t');
    io::append_fixed9(text, e.weight);
    text.push_back('\n');
  }
  io::open_output(path) << text;
}

inline CooccurrenceGraph load_graph(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": empty graph file");
  io::strip_cr(line);
  const std::string prefix = "#vertices=";
  if (line.rfind(prefix, 0) != 0) fail(ErrorKind::kFormat, io::where(path, 1) + ": expected '#vertices=<n>' header");
  CooccurrenceGraph g;
  g.n_vertices = io::parse_int<std::size_t>(std::string_view(line).substr(prefix.size()), io::where(path, 1));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const auto f = io::split(line, '\t');
    const std::string ctx = io::where(path, line_no);
    if (f.size() != 4) fail(ErrorKind::kFormat, ctx + ": expected i<TAB>j<TAB>count<TAB>weight");
    GraphEdge e{io::parse_int<std::size_t>(f[0], ctx), io::parse_int<std::size_t>(f[1], ctx),
                io::parse_int<std::uint64_t>(f[2], ctx), io::parse_double(f[3], ctx)};
    if (e.i >= e.j || e.j >= g.n_vertices) fail(ErrorKind::kFormat, ctx + ": edge must satisfy i < j < n_vertices");
    if (e.count < 1 || !(e.weight >= 0.0 && e.weight <= 1.0)) fail(ErrorKind::kFormat, ctx + ": count >= 1 and weight in [0,1] required");
    g.edges.push_back(e);
  }
  return g;
}

}  // namespace prex
