#pragma once

// Seeded synthetic distant-supervision world.
//
// Entities live in clusters (fine groups nested in coarse types); each entity
// has a latent vector near its cluster centre. Every non-NA relation links a
// head cluster to a tail cluster, so its planted translation is the
// difference of the two centres; designated proximate relations share their
// partner's clusters. Relation frequencies follow a Zipf law. Text is made of
// templates: both entity names, filler words, and with some probability a
// trigger word of the relation the sentence expresses. Background sentences
// mention entities together with neighbours from their own cluster, which
// gives the co-occurrence graph its community structure.

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prex/common.hpp"
#include "prex/corpus.hpp"
#include "prex/dataset.hpp"
#include "prex/io.hpp"
#include "prex/mutrel.hpp"
#include "prex/typefeat.hpp"

namespace prex {

struct SynthConfig {
  std::size_t n_entities = 2000;
  std::size_t n_relations = 20;  // including NA
  double zipf_exponent = 1.2;
  std::size_t head_count = 400;  // triples of the most frequent relation
  double noise_rate = 0.2;
  std::size_t max_sentences_per_pair = 10;
  double pair_frequency_exponent = 1.5;  // P(n sentences) ~ n^-exponent
  std::size_t coarse_types = 4;
  std::size_t clusters_per_type = 3;
  std::size_t hierarchy_layers = 3;  // 1 = flat names
  std::size_t proximate_pairs = 2;
  std::size_t vocab_size = 300;      // filler words
  double trigger_prob = 0.6;
  double reverse_prob = 0.3;         // tail mentioned before head
  double untyped_fraction = 0.25;
  double alias_fraction = 0.1;
  double test_fraction = 0.3;
  double na_ratio = 1.0;             // NA pairs per positive pair
  std::size_t neighbors_per_entity = 10;
  std::size_t background_per_entity = 20;
  std::size_t latent_dim = 16;
  double latent_noise = 0.1;
  std::uint64_t seed = 1;

  std::size_t n_clusters() const { return coarse_types * clusters_per_type; }

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (n_relations < 2) fail(ErrorKind::kUsage, "need at least two relations (NA plus one)");
    if (!(zipf_exponent > 0.0)) fail(ErrorKind::kUsage, "zipf exponent must be positive");
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) fail(ErrorKind::kUsage, "noise rate must be in [0, 1)");
    if (!prob(trigger_prob) || !prob(reverse_prob) || !prob(untyped_fraction) || !prob(alias_fraction)) {
      fail(ErrorKind::kUsage, "probabilities must lie in [0, 1]");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorKind::kUsage, "test fraction must be in (0, 1)");
    if (na_ratio < 0.0) fail(ErrorKind::kUsage, "NA ratio must be non-negative");
    if (coarse_types == 0 || clusters_per_type == 0 || n_clusters() < 2) fail(ErrorKind::kUsage, "need at least two clusters");
    if (hierarchy_layers < 1 || hierarchy_layers > 3) fail(ErrorKind::kUsage, "hierarchy layers must be 1, 2 or 3");
    if (max_sentences_per_pair == 0 || vocab_size == 0 || latent_dim == 0 || head_count == 0) {
      fail(ErrorKind::kUsage, "sizes must be positive");
    }
    if (2 * proximate_pairs > n_relations - 1) fail(ErrorKind::kUsage, "too many proximate pairs for the relation count");
    if (n_entities < n_clusters()) fail(ErrorKind::kUsage, "fewer entities than clusters");
  }
};

struct SynthWorld {
  SynthConfig config;
  EntityCatalog catalog;
  std::vector<std::string> corpus;  // raw sentences
  RelationSet relations;
  TripleStore train_triples;
  TripleStore test_triples;
  BagDataset train_bags;
  BagDataset test_bags;
  RelationHierarchy hierarchy;
  TypeCatalog types;
  std::vector<std::size_t> entity_cluster;
  Matrix entity_latent;                              // n x latent_dim
  Matrix relation_translation;                       // m x latent_dim; NA row is zero
  std::vector<std::array<std::size_t, 2>> signature; // (head cluster, tail cluster); NA entry unused
  std::vector<std::pair<std::size_t, std::size_t>> proximate;  // relation id pairs with equal signatures
};

/// Strictly decreasing Zipf counts for ranks 1..n: round(head / r^s), raised
/// from the tail upward where rounding would tie, never below 2.
inline std::vector<std::size_t> zipf_counts(std::size_t n, std::size_t head, double s) {
  std::vector<std::size_t> c(n);
  for (std::size_t r = n; r-- > 0;) {
    const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(head) / std::pow(static_cast<double>(r + 1), s)));
    c[r] = std::max<std::size_t>(v, 2);
    if (r + 1 < n) c[r] = std::max(c[r], c[r + 1] + 1);
  }
  return c;
}

namespace detail {

inline const std::vector<std::string>& coarse_names() {
  static const std::vector<std::string> names{"agent", "place", "group", "work", "event", "item"};
  return names;
}

inline std::string coarse_name(std::size_t k) {
  return k < coarse_names().size() ? coarse_names()[k] : "kind" + std::to_string(k);
}

inline std::string cluster_name(const SynthConfig& cfg, std::size_t c) {
  return coarse_name(c / cfg.clusters_per_type) + "_" + std::string(1, static_cast<char>('a' + c % cfg.clusters_per_type));
}

inline std::string pad2(std::size_t v) { return (v < 10 ? "0" : "") + std::to_string(v); }

/// Draws n in [1, max] with P(n) proportional to n^-exponent.
inline std::size_t draw_sentence_count(Rng& rng, std::size_t max, double exponent) {
  double total = 0.0;
  for (std::size_t n = 1; n <= max; ++n) total += std::pow(static_cast<double>(n), -exponent);
  double u = rng.uniform() * total;
  for (std::size_t n = 1; n <= max; ++n) {
    u -= std::pow(static_cast<double>(n), -exponent);
    if (u < 0.0) return n;
  }
  return max;
}

class TextMaker {
 public:
  TextMaker(const SynthConfig& cfg, const EntityCatalog& catalog) : cfg_(cfg), catalog_(catalog) {}

  static std::string trigger(std::size_t relation) { return "v" + pad2(relation); }
  static std::string filler(std::size_t k) { return "w" + std::to_string(k); }

  void fillers(Rng& rng, std::size_t n, std::vector<std::string>& out) const {
    for (std::size_t k = 0; k < n; ++k) out.push_back(filler(rng.below(cfg_.vocab_size)));
  }

  std::vector<std::string> mention(Rng& rng, std::size_t entity) const {
    const auto& forms = catalog_[entity].surface_forms;
    return tokenize(forms[rng.below(forms.size())]);
  }

  /// Template sentence about (head, tail) expressing `relation` (0 = none).
  BagSentence bag_sentence(Rng& rng, std::size_t head, std::size_t tail, std::size_t relation,
                           const std::string& expressed) const {
    BagSentence s;
    const bool reversed = rng.bernoulli(cfg_.reverse_prob);
    const std::size_t first = reversed ? tail : head;
    const std::size_t second = reversed ? head : tail;
    fillers(rng, rng.below(4), s.tokens);
    const std::size_t first_idx = s.tokens.size();
    const auto a = mention(rng, first);
    s.tokens.insert(s.tokens.end(), a.begin(), a.end());
    std::vector<std::string> middle;
    fillers(rng, 1 + rng.below(4), middle);
    if (relation != 0 && rng.bernoulli(cfg_.trigger_prob)) {
      middle.insert(middle.begin() + static_cast<long>(rng.below(middle.size() + 1)), trigger(relation));
    }
    s.tokens.insert(s.tokens.end(), middle.begin(), middle.end());
    const std::size_t second_idx = s.tokens.size();
    const auto b = mention(rng, second);
    s.tokens.insert(s.tokens.end(), b.begin(), b.end());
    fillers(rng, rng.below(4), s.tokens);
    s.tokens.push_back(".");
    s.head_idx = reversed ? second_idx : first_idx;
    s.tail_idx = reversed ? first_idx : second_idx;
    s.expressed = expressed;
    return s;
  }

  /// Background sentence mentioning `entities` in order, separated by fillers.
  std::string background(Rng& rng, std::span<const std::size_t> entities) const {
    std::vector<std::string> toks;
    fillers(rng, rng.below(3), toks);
    for (std::size_t k = 0; k < entities.size(); ++k) {
      if (k) fillers(rng, 1 + rng.below(3), toks);
      const auto m = mention(rng, entities[k]);
      toks.insert(toks.end(), m.begin(), m.end());
    }
    fillers(rng, rng.below(3), toks);
    toks.push_back(".");
    return join(toks);
  }

  static std::string join(const std::vector<std::string>& toks) {
    std::string out;
    for (std::size_t k = 0; k < toks.size(); ++k) {
      if (k && toks[k] != ".") out.push_back(' ');
      out += toks[k];
    }
    return out;
  }

 private:
  const SynthConfig& cfg_;
  const EntityCatalog& catalog_;
};

}  // namespace detail

inline SynthWorld generate_world(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthWorld w;
  w.config = cfg;
  const std::size_t n = cfg.n_entities;
  const std::size_t m = cfg.n_relations;
  const std::size_t nc = cfg.n_clusters();

  // Entities, clusters, latent vectors.
  std::vector<std::size_t> perm(n);
  for (std::size_t e = 0; e < n; ++e) perm[e] = e;
  rng.shuffle(perm);
  w.entity_cluster.assign(n, 0);
  std::vector<std::vector<std::size_t>> members(nc);
  for (std::size_t k = 0; k < n; ++k) w.entity_cluster[perm[k]] = k % nc;
  for (std::size_t e = 0; e < n; ++e) members[w.entity_cluster[e]].push_back(e);

  Matrix centers(nc, cfg.latent_dim);
  for (double& v : centers.data()) v = rng.normal();
  w.entity_latent = Matrix(n, cfg.latent_dim);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t d = 0; d < cfg.latent_dim; ++d) {
      w.entity_latent(e, d) = centers(w.entity_cluster[e], d) + cfg.latent_noise * rng.normal();
    }
  }

  std::vector<CatalogEntry> entries;
  for (std::size_t e = 0; e < n; ++e) {
    CatalogEntry ce{e, "ent" + std::to_string(e), {}};
    if (rng.bernoulli(cfg.alias_fraction)) ce.surface_forms.push_back(ce.canonical + " jr");
    entries.push_back(std::move(ce));
  }
  w.catalog = EntityCatalog(std::move(entries), "synthetic catalog");

  // Relation signatures. Ids are frequency ranks: 1 is the most frequent.
  std::vector<std::array<std::size_t, 2>> all_sigs;
  for (std::size_t a = 0; a < nc; ++a) {
    for (std::size_t b = 0; b < nc; ++b) {
      if (a != b) all_sigs.push_back({a, b});
    }
  }
  rng.shuffle(all_sigs);
  w.signature.assign(m, {0, 0});
  std::vector<long> partner(m, -1);
  for (std::size_t p = 0; p < cfg.proximate_pairs; ++p) {
    const std::size_t frequent = 1 + 2 * p;
    const std::size_t rare = m - 1 - 2 * p;
    partner[rare] = static_cast<long>(frequent);
    w.proximate.emplace_back(frequent, rare);
  }
  std::size_t next_sig = 0;
  for (std::size_t r = 1; r < m; ++r) {
    if (partner[r] >= 0) continue;
    if (next_sig >= all_sigs.size()) fail(ErrorKind::kUsage, "not enough distinct cluster pairs for the relation count");
    w.signature[r] = all_sigs[next_sig++];
  }
  for (std::size_t r = 1; r < m; ++r) {
    if (partner[r] >= 0) w.signature[r] = w.signature[static_cast<std::size_t>(partner[r])];
  }
  w.relation_translation = Matrix(m, cfg.latent_dim);
  for (std::size_t r = 1; r < m; ++r) {
    for (std::size_t d = 0; d < cfg.latent_dim; ++d) {
      w.relation_translation(r, d) = centers(w.signature[r][1], d) - centers(w.signature[r][0], d);
    }
  }

  std::vector<std::string> names;
  for (std::size_t r = 1; r < m; ++r) {
    const std::size_t hc = w.signature[r][0];
    std::string name;
    if (cfg.hierarchy_layers >= 2) name += "/" + detail::coarse_name(hc / cfg.clusters_per_type);
    if (cfg.hierarchy_layers >= 3) name += "/" + detail::cluster_name(cfg, hc);
    name += "/rel" + detail::pad2(r);
    names.push_back(name);
  }
  w.relations = RelationSet(names);
  w.hierarchy = RelationHierarchy::from_relation_names(w.relations);

  // Triples per relation, split into train and test; every pair is used once.
  const auto counts = zipf_counts(m - 1, cfg.head_count, cfg.zipf_exponent);
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::vector<Triple> train, test;
  for (std::size_t r = 1; r < m; ++r) {
    const auto& hm = members[w.signature[r][0]];
    const auto& tm = members[w.signature[r][1]];
    std::size_t available = hm.size() * tm.size();
    for (const auto& [h, t] : used) {
      if (w.entity_cluster[h] == w.signature[r][0] && w.entity_cluster[t] == w.signature[r][1]) --available;
    }
    const std::size_t want = counts[r - 1];
    if (want > available) {
      fail(ErrorKind::kUsage, "infeasible configuration: relation " + w.relations.name(r) + " needs " +
                                  std::to_string(want) + " pairs but only " + std::to_string(available) + " exist");
    }
    std::vector<Triple> mine;
    while (mine.size() < want) {
      const std::size_t h = hm[rng.below(hm.size())];
      const std::size_t t = tm[rng.below(tm.size())];
      if (used.emplace(h, t).second) mine.push_back({h, r, t});
    }
    auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(want)));
    n_test = std::clamp<std::size_t>(n_test, 1, want - 1);
    for (std::size_t k = 0; k < want; ++k) (k < want - n_test ? train : test).push_back(mine[k]);
  }
  w.train_triples = TripleStore(train, m);
  w.test_triples = TripleStore(test, m);

  // NA pairs: random ordered pairs with no planted relation.
  const std::size_t positives = train.size() + test.size();
  const auto n_na = static_cast<std::size_t>(std::llround(cfg.na_ratio * static_cast<double>(positives)));
  if (n_na + positives > n * (n - 1)) fail(ErrorKind::kUsage, "infeasible configuration: too many pairs requested");
  std::vector<std::pair<std::size_t, std::size_t>> na_pairs;
  while (na_pairs.size() < n_na) {
    const std::size_t h = rng.below(n), t = rng.below(n);
    if (h != t && used.emplace(h, t).second) na_pairs.emplace_back(h, t);
  }
  const auto na_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n_na)));

  // Bags.
  detail::TextMaker text(cfg, w.catalog);
  auto make_bag = [&](std::size_t h, std::size_t t, std::size_t r) {
    Bag b{h, t, w.relations.name(r), {}};
    const std::size_t k = detail::draw_sentence_count(rng, cfg.max_sentences_per_pair, cfg.pair_frequency_exponent);
    for (std::size_t s = 0; s < k; ++s) {
      std::size_t expressed = r;
      if (rng.bernoulli(cfg.noise_rate)) {
        expressed = rng.below(m - 1);
        if (expressed >= r) ++expressed;
      }
      b.sentences.push_back(text.bag_sentence(rng, h, t, expressed, w.relations.name(expressed)));
    }
    return b;
  };
  for (const auto& tr : train) w.train_bags.push_back(make_bag(tr.head, tr.tail, tr.relation));
  for (const auto& tr : test) w.test_bags.push_back(make_bag(tr.head, tr.tail, tr.relation));
  for (std::size_t k = 0; k < na_pairs.size(); ++k) {
    (k < n_na - na_test ? w.train_bags : w.test_bags).push_back(make_bag(na_pairs[k].first, na_pairs[k].second, 0));
  }

  // Corpus: every bag sentence plus background sentences.
  for (const auto* bags : {&w.train_bags, &w.test_bags}) {
    for (const auto& b : *bags) {
      for (const auto& s : b.sentences) w.corpus.push_back(detail::TextMaker::join(s.tokens));
    }
  }
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t e = 0; e < n; ++e) {
    const auto& own = members[w.entity_cluster[e]];
    if (own.size() > 1) {
      for (std::size_t k = 0; k < cfg.neighbors_per_entity; ++k) {
        std::size_t o = own[rng.below(own.size())];
        while (o == e) o = own[rng.below(own.size())];
        neighbors[e].push_back(o);
      }
    }
    std::size_t cross = rng.below(n);
    while (w.entity_cluster[cross] == w.entity_cluster[e]) cross = rng.below(n);
    neighbors[e].push_back(cross);
  }
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t k = 0; k < cfg.background_per_entity; ++k) {
      std::vector<std::size_t> group{e};
      const std::size_t partners = 1 + rng.below(2);
      for (std::size_t p = 0; p < partners; ++p) {
        const std::size_t o = neighbors[e][rng.below(neighbors[e].size())];
        if (std::find(group.begin(), group.end(), o) == group.end()) group.push_back(o);
      }
      rng.shuffle(group);
      w.corpus.push_back(text.background(rng, group));
    }
  }
  rng.shuffle(w.corpus);

  // Types: the coarse type of the entity's cluster, or none.
  for (std::size_t k = 0; k < cfg.coarse_types; ++k) w.types.type_names.push_back(detail::coarse_name(k));
  w.types.entity_types.assign(n, {});
  for (std::size_t e = 0; e < n; ++e) {
    if (!rng.bernoulli(cfg.untyped_fraction)) w.types.entity_types[e].push_back(w.entity_cluster[e] / cfg.clusters_per_type);
  }
  return w;
}

struct WorldStats {
  std::vector<std::size_t> train_counts;  // triples per relation id
  std::vector<std::size_t> test_counts;
  std::map<std::size_t, std::size_t> sentences_per_pair;  // sentences -> number of bags
  std::size_t total_triples = 0;
  std::size_t total_bags = 0;
  std::size_t total_sentences = 0;
  std::size_t noisy_sentences = 0;  // expressed relation differs from the bag label
};

inline WorldStats world_stats(const SynthWorld& w) {
  WorldStats s;
  s.train_counts.assign(w.relations.size(), 0);
  s.test_counts.assign(w.relations.size(), 0);
  for (const auto& t : w.train_triples.triples()) ++s.train_counts[t.relation];
  for (const auto& t : w.test_triples.triples()) ++s.test_counts[t.relation];
  s.total_triples = w.train_triples.size() + w.test_triples.size();
  for (const auto* bags : {&w.train_bags, &w.test_bags}) {
    for (const auto& b : *bags) {
      ++s.total_bags;
      ++s.sentences_per_pair[b.sentences.size()];
      for (const auto& sent : b.sentences) {
        ++s.total_sentences;
        if (!sent.expressed.empty() && sent.expressed != b.relation) ++s.noisy_sentences;
      }
    }
  }
  return s;
}

inline std::string format_world_stats(const SynthWorld& w, const WorldStats& s) {
  std::string out = "relation\ttrain\ttest\n";
  for (std::size_t r = 0; r < s.train_counts.size(); ++r) {
    out += w.relations.name(r) + "\t" + std::to_string(s.train_counts[r]) + "\t" + std::to_string(s.test_counts[r]) + "\n";
  }
  out += "sentences_per_pair\tbags\n";
  for (const auto& [k, c] : s.sentences_per_pair) out += std::to_string(k) + "\t" + std::to_string(c) + "\n";
  return out;
}

/// File names written by save_world, in manifest order.
struct WorldFiles {
  static constexpr const char* kCatalog = "catalog.tsv";
  static constexpr const char* kCorpus = "corpus.txt";
  static constexpr const char* kRelations = "relations.txt";
  static constexpr const char* kTrainTriples = "triples_train.tsv";
  static constexpr const char* kTestTriples = "triples_test.tsv";
  static constexpr const char* kTrainBags = "bags_train.jsonl";
  static constexpr const char* kTestBags = "bags_test.jsonl";
  static constexpr const char* kHierarchy = "hierarchy.tsv";
  static constexpr const char* kTypes = "types.tsv";
  static constexpr const char* kPlanted = "planted.txt";
  static constexpr const char* kStats = "world-stats.tsv";
  static constexpr const char* kManifest = "world-manifest.txt";
};

inline std::string synth_config_echo(const SynthConfig& c) {
  std::string out;
  auto kv = [&](const char* k, const std::string& v) { out += std::string(k) + "=" + v + "\n"; };
  auto num = [](std::size_t v) { return std::to_string(v); };
  kv("n_entities", num(c.n_entities));
  kv("n_relations", num(c.n_relations));
  kv("zipf_exponent", io::fixed9(c.zipf_exponent));
  kv("head_count", num(c.head_count));
  kv("noise_rate", io::fixed9(c.noise_rate));
  kv("max_sentences_per_pair", num(c.max_sentences_per_pair));
  kv("pair_frequency_exponent", io::fixed9(c.pair_frequency_exponent));
  kv("coarse_types", num(c.coarse_types));
  kv("clusters_per_type", num(c.clusters_per_type));
  kv("hierarchy_layers", num(c.hierarchy_layers));
  kv("proximate_pairs", num(c.proximate_pairs));
  kv("vocab_size", num(c.vocab_size));
  kv("trigger_prob", io::fixed9(c.trigger_prob));
  kv("reverse_prob", io::fixed9(c.reverse_prob));
  kv("untyped_fraction", io::fixed9(c.untyped_fraction));
  kv("alias_fraction", io::fixed9(c.alias_fraction));
  kv("test_fraction", io::fixed9(c.test_fraction));
  kv("na_ratio", io::fixed9(c.na_ratio));
  kv("neighbors_per_entity", num(c.neighbors_per_entity));
  kv("background_per_entity", num(c.background_per_entity));
  kv("latent_dim", num(c.latent_dim));
  kv("latent_noise", io::fixed9(c.latent_noise));
  kv("seed", std::to_string(c.seed));
  return out;
}

/// Writes every artifact of the world into `dir` (which must exist) and
/// returns the written file names.
inline std::vector<std::string> save_world(const std::string& dir, const SynthWorld& w) {
  auto path = [&](const char* name) { return dir + "/" + name; };
  save_entity_catalog(path(WorldFiles::kCatalog), w.catalog);
  {
    std::string text;
    for (const auto& s : w.corpus) text += s + "\n";
    io::open_output(path(WorldFiles::kCorpus)) << text;
  }
  save_relations(path(WorldFiles::kRelations), w.relations);
  save_triples(path(WorldFiles::kTrainTriples), w.train_triples, w.relations);
  save_triples(path(WorldFiles::kTestTriples), w.test_triples, w.relations);
  save_bags(path(WorldFiles::kTrainBags), w.train_bags);
  save_bags(path(WorldFiles::kTestBags), w.test_bags);
  save_hierarchy(path(WorldFiles::kHierarchy), w.hierarchy);
  save_types(path(WorldFiles::kTypes), w.types);
  {
    std::string text = "#translations " + std::to_string(w.relation_translation.rows()) + " " +
                       std::to_string(w.relation_translation.cols()) + "\n";
    for (std::size_t r = 0; r < w.relation_translation.rows(); ++r) {
      text += w.relations.name(r) + "\t" + std::to_string(w.signature[r][0]) + "\t" + std::to_string(w.signature[r][1]);
      for (double v : w.relation_translation.row(r)) text += "\t" + io::fixed9(v);
      text += "\n";
    }
    text += "#proximate " + std::to_string(w.proximate.size()) + "\n";
    for (const auto& [a, b] : w.proximate) text += w.relations.name(a) + "\t" + w.relations.name(b) + "\n";
    text += "#latent " + std::to_string(w.entity_latent.rows()) + " " + std::to_string(w.entity_latent.cols()) + "\n";
    for (std::size_t e = 0; e < w.entity_latent.rows(); ++e) {
      text += std::to_string(e) + "\t" + std::to_string(w.entity_cluster[e]);
      for (double v : w.entity_latent.row(e)) text += "\t" + io::fixed9(v);
      text += "\n";
    }
    io::open_output(path(WorldFiles::kPlanted)) << text;
  }
  io::open_output(path(WorldFiles::kStats)) << format_world_stats(w, world_stats(w));
  std::vector<std::string> files{WorldFiles::kCatalog,     WorldFiles::kCorpus,    WorldFiles::kRelations,
                                 WorldFiles::kTrainTriples, WorldFiles::kTestTriples, WorldFiles::kTrainBags,
                                 WorldFiles::kTestBags,    WorldFiles::kHierarchy, WorldFiles::kTypes,
                                 WorldFiles::kPlanted,     WorldFiles::kStats};
  std::string manifest = "#world\n" + synth_config_echo(w.config) + "#files\n";
  for (const auto& f : files) manifest += f + "\n";
  io::open_output(path(WorldFiles::kManifest)) << manifest;
  files.emplace_back(WorldFiles::kManifest);
  return files;
}

}  // namespace prex
