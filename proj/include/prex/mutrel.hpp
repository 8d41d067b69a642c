#pragma once

// Implicit mutual relations (tail embedding minus head embedding), relation
// prototypes as centroids of training-pair mutual relations, hierarchy
// lifting, prototype-distance features, and cosine nearest-neighbour queries.

#include <algorithm>
#include <map>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include "prex/common.hpp"
#include "prex/dataset.hpp"
#include "prex/graph_embed.hpp"
#include "prex/io.hpp"

namespace prex {

struct Triple {
  std::size_t head = 0;
  std::size_t relation = 0;
  std::size_t tail = 0;

  bool operator==(const Triple&) const = default;
};

/// Deduplicated triples over dense relation ids (0 = NA).
class TripleStore {
 public:
  TripleStore() = default;

  TripleStore(std::vector<Triple> triples, std::size_t n_relations) : n_relations_(n_relations) {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, bool> seen;
    for (const auto& t : triples) {
      if (t.relation >= n_relations) {
        fail(ErrorKind::kDimension, "triple relation id " + std::to_string(t.relation) + " >= " + std::to_string(n_relations));
      }
      if (seen.emplace(std::make_tuple(t.head, t.relation, t.tail), true).second) triples_.push_back(t);
    }
  }

  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t n_relations() const { return n_relations_; }
  std::size_t size() const { return triples_.size(); }

 private:
  std::vector<Triple> triples_;
  std::size_t n_relations_ = 0;
};

/// Triple file: `head_id<TAB>relation_name<TAB>tail_id`. Unknown relation
/// names are interned into `rels`.
inline TripleStore load_triples(const std::string& path, RelationSet& rels) {
  std::ifstream in = io::open_input(path);
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const auto f = io::split(line, '\t');
    const std::string ctx = io::where(path, line_no);
    if (f.size() != 3) fail(ErrorKind::kFormat, ctx + ": expected head<TAB>relation<TAB>tail");
    triples.push_back({io::parse_int<std::size_t>(f[0], ctx), rels.intern(std::string(f[1])),
                       io::parse_int<std::size_t>(f[2], ctx)});
  }
  return TripleStore(std::move(triples), rels.size());
}

inline void save_triples(const std::string& path, const TripleStore& store, const RelationSet& rels) {
  std::string text;
  for (const auto& t : store.triples()) {
    text += std::to_string(t.head) + "\t" + rels.name(t.relation) + "\t" + std::to_string(t.tail) + "\n";
  }
  io::open_output(path) << text;
}

/// MR_{i,j} = e_j - e_i.
inline Vec mutual_relation(const EntityEmbeddings& emb, std::size_t i, std::size_t j) {
  if (i >= emb.n() || j >= emb.n()) {
    fail(ErrorKind::kInvalidArgument, "entity id out of range (" + std::to_string(std::max(i, j)) + " >= " +
                                          std::to_string(emb.n()) + ")");
  }
  Vec mr(emb.dim());
  const auto a = emb[i];
  const auto b = emb[j];
  for (std::size_t k = 0; k < mr.size(); ++k) mr[k] = b[k] - a[k];
  return mr;
}

struct HierarchyLayer {
  std::vector<std::string> names;
  std::vector<std::size_t> parent;  // index into the previous layer; empty for the top layer
};

/// Layers ordered top (coarsest) to bottom; the bottom layer is exactly the
/// relation set in id order.
class RelationHierarchy {
 public:
  RelationHierarchy() = default;
  explicit RelationHierarchy(std::vector<HierarchyLayer> layers) : layers_(std::move(layers)) {}

  /// Flat (single-layer) hierarchy.
  static RelationHierarchy flat(const RelationSet& rels) {
    return RelationHierarchy({HierarchyLayer{rels.names(), {}}});
  }

  /// Builds layers from each relation's top-down ancestor chain. All chains
  /// must have the same length.
  static RelationHierarchy from_chains(const RelationSet& rels, const std::vector<std::vector<std::string>>& chains) {
    const std::size_t depth = chains.empty() ? 0 : chains.front().size();
    for (const auto& c : chains) {
      if (c.size() != depth) fail(ErrorKind::kFormat, "hierarchy: all relations need the same number of ancestors");
    }
    std::vector<HierarchyLayer> layers(depth + 1);
    std::vector<std::unordered_map<std::string, std::size_t>> index(depth);
    std::vector<std::size_t> parent_of_leaf(rels.size(), 0);
    for (std::size_t r = 0; r < rels.size(); ++r) {
      std::size_t parent = 0;
      for (std::size_t k = 0; k < depth; ++k) {
        const std::string& node = chains[r][k];
        auto it = index[k].find(node);
        if (it == index[k].end()) {
          it = index[k].emplace(node, layers[k].names.size()).first;
          layers[k].names.push_back(node);
          if (k > 0) layers[k].parent.push_back(parent);
        } else if (k > 0 && layers[k].parent[it->second] != parent) {
          fail(ErrorKind::kFormat, "hierarchy: node '" + node + "' has more than one parent");
        }
        parent = it->second;
      }
      parent_of_leaf[r] = parent;
    }
    layers[depth].names = rels.names();
    if (depth > 0) layers[depth].parent = parent_of_leaf;
    RelationHierarchy h(std::move(layers));
    h.validate(rels.size());
    return h;
  }

  /// Derives layers from slash-separated names: "/a/b/c" sits under "/a/b",
  /// which sits under "/a". Shorter names extend downward as single-child
  /// chains; NA forms its own chain.
  static RelationHierarchy from_relation_names(const RelationSet& rels) {
    std::vector<std::vector<std::string>> parts(rels.size());
    std::size_t depth = 1;
    for (std::size_t r = 0; r < rels.size(); ++r) {
      const std::string& name = rels.name(r);
      if (r != 0 && name.size() > 1 && name.front() == '/') {
        for (auto piece : io::split(std::string_view(name).substr(1), '/')) {
          if (!piece.empty()) parts[r].emplace_back(piece);
        }
      }
      if (parts[r].empty()) parts[r].push_back(name);
      depth = std::max(depth, parts[r].size());
    }
    std::vector<std::vector<std::string>> chains(rels.size());
    for (std::size_t r = 0; r < rels.size(); ++r) {
      std::string prefix;
      for (std::size_t k = 0; k + 1 < depth; ++k) {
        if (k + 1 < parts[r].size()) {
          prefix += "/" + parts[r][k];
          chains[r].push_back(prefix);
        } else {
          chains[r].push_back(rels.name(r));
        }
      }
    }
    return from_chains(rels, chains);
  }

  std::size_t depth() const { return layers_.size(); }
  const HierarchyLayer& layer(std::size_t k) const { return layers_.at(k); }
  const std::vector<HierarchyLayer>& layers() const { return layers_; }

  std::vector<std::vector<std::size_t>> children(std::size_t k) const {
    std::vector<std::vector<std::size_t>> out(layers_.at(k).names.size());
    if (k + 1 < layers_.size()) {
      const auto& below = layers_[k + 1];
      for (std::size_t c = 0; c < below.parent.size(); ++c) out.at(below.parent[c]).push_back(c);
    }
    return out;
  }

  void validate(std::size_t n_relations) const {
    if (layers_.empty()) fail(ErrorKind::kFormat, "hierarchy has no layers");
    if (layers_.back().names.size() != n_relations) {
      fail(ErrorKind::kDimension, "hierarchy leaves (" + std::to_string(layers_.back().names.size()) +
                                      ") do not match relation count (" + std::to_string(n_relations) + ")");
    }
    for (std::size_t k = 1; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      if (l.parent.size() != l.names.size()) fail(ErrorKind::kFormat, "hierarchy layer " + std::to_string(k + 1) + ": orphan node");
      std::vector<bool> has_child(layers_[k - 1].names.size(), false);
      for (std::size_t p : l.parent) {
        if (p >= has_child.size()) fail(ErrorKind::kFormat, "hierarchy layer " + std::to_string(k + 1) + ": orphan node");
        has_child[p] = true;
      }
      for (std::size_t p = 0; p < has_child.size(); ++p) {
        if (!has_child[p]) fail(ErrorKind::kFormat, "hierarchy: internal node '" + layers_[k - 1].names[p] + "' has no children");
      }
    }
  }

 private:
  std::vector<HierarchyLayer> layers_;
};

/// Hierarchy file: `relation<TAB>ancestor_top<TAB>...` per relation.
inline void save_hierarchy(const std::string& path, const RelationHierarchy& h) {
  std::string text;
  const std::size_t leaf = h.depth() - 1;
  for (std::size_t r = 0; r < h.layer(leaf).names.size(); ++r) {
    std::vector<std::string> chain;
    std::size_t node = r;
    for (std::size_t k = leaf; k > 0; --k) {
      node = h.layer(k).parent[node];
      chain.push_back(h.layer(k - 1).names[node]);
    }
    text += h.layer(leaf).names[r];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) text += "\t" + *it;
    text += "\n";
  }
  io::open_output(path) << text;
}

inline RelationHierarchy load_hierarchy(const std::string& path, const RelationSet& rels) {
  std::ifstream in = io::open_input(path);
  std::vector<std::vector<std::string>> chains(rels.size());
  std::vector<bool> seen(rels.size(), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const auto f = io::split(line, '\t');
    const std::size_t r = rels.id(std::string(f[0]));
    for (std::size_t k = 1; k < f.size(); ++k) chains[r].emplace_back(f[k]);
    seen[r] = true;
  }
  std::size_t depth = 0;
  for (std::size_t r = 0; r < rels.size(); ++r) {
    if (seen[r]) depth = std::max(depth, chains[r].size());
  }
  for (std::size_t r = 0; r < rels.size(); ++r) {
    if (!seen[r]) {
      if (r != 0) fail(ErrorKind::kFormat, path + ": relation '" + rels.name(r) + "' missing from hierarchy");
      chains[r].assign(depth, rels.name(r));
    }
  }
  return RelationHierarchy::from_chains(rels, chains);
}

struct LeafPrototypes {
  Matrix vectors;           // m x dim
  std::vector<bool> empty;  // relation had no training triples
};

/// Row r = mean MR over the triples of relation r, summed in triple order.
inline LeafPrototypes compute_leaf_prototypes(const EntityEmbeddings& emb, const TripleStore& store) {
  LeafPrototypes out{Matrix(store.n_relations(), emb.dim()), std::vector<bool>(store.n_relations(), true)};
  std::vector<std::size_t> counts(store.n_relations(), 0);
  for (const auto& t : store.triples()) {
    const Vec mr = mutual_relation(emb, t.head, t.tail);
    auto row = out.vectors.row(t.relation);
    for (std::size_t k = 0; k < mr.size(); ++k) row[k] += mr[k];
    ++counts[t.relation];
  }
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] == 0) continue;
    out.empty[r] = false;
    for (double& v : out.vectors.row(r)) v /= static_cast<double>(counts[r]);
  }
  return out;
}

struct PrototypeSet {
  std::vector<Matrix> layers;               // top to leaf, m_k x dim each
  std::vector<std::vector<bool>> empty;     // per layer, per node

  std::size_t depth() const { return layers.size(); }
  std::size_t dim() const { return layers.empty() ? 0 : layers.front().cols(); }
  std::size_t feature_size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.rows();
    return n;
  }
  const Matrix& leaves() const { return layers.back(); }

  bool operator==(const PrototypeSet&) const = default;
};

/// Internal rows are the mean of their non-empty children, bottom-up.
inline PrototypeSet lift_prototypes(const LeafPrototypes& leaf, const RelationHierarchy& hierarchy) {
  hierarchy.validate(leaf.vectors.rows());
  const std::size_t depth = hierarchy.depth();
  PrototypeSet out;
  out.layers.resize(depth);
  out.empty.resize(depth);
  out.layers[depth - 1] = leaf.vectors;
  out.empty[depth - 1] = leaf.empty;
  for (std::size_t k = depth - 1; k > 0; --k) {
    const auto kids = hierarchy.children(k - 1);
    Matrix m(kids.size(), leaf.vectors.cols());
    std::vector<bool> empty(kids.size(), true);
    for (std::size_t p = 0; p < kids.size(); ++p) {
      std::size_t used = 0;
      for (std::size_t c : kids[p]) {
        if (out.empty[k][c]) continue;
        const auto src = out.layers[k].row(c);
        auto dst = m.row(p);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
        ++used;
      }
      if (used > 0) {
        for (double& v : m.row(p)) v /= static_cast<double>(used);
        empty[p] = false;
      }
    }
    out.layers[k - 1] = std::move(m);
    out.empty[k - 1] = std::move(empty);
  }
  return out;
}

/// Per layer: softmax over negated L2 distances from `mr` to each prototype,
/// layers concatenated top to leaf.
inline Vec prototype_features(std::span<const double> mr, const PrototypeSet& protos) {
  if (mr.size() != protos.dim()) {
    fail(ErrorKind::kDimension, "prototype_features: MR dim " + std::to_string(mr.size()) + " vs prototype dim " +
                                    std::to_string(protos.dim()));
  }
  Vec out;
  out.reserve(protos.feature_size());
  for (const auto& layer : protos.layers) {
    Vec neg(layer.rows());
    for (std::size_t i = 0; i < layer.rows(); ++i) neg[i] = -l2_distance(mr, layer.row(i));
    const Vec slice = softmax(neg);
    out.insert(out.end(), slice.begin(), slice.end());
  }
  return out;
}

struct RankedRelation {
  std::size_t relation = 0;
  double similarity = 0.0;
};

/// Non-NA leaf relations ranked by cosine(MR_{head,tail}, prototype).
inline std::vector<RankedRelation> nearest_prototypes(const EntityEmbeddings& emb, const PrototypeSet& protos,
                                                      std::size_t head, std::size_t tail, std::size_t k) {
  const Matrix& leaves = protos.leaves();
  if (k > leaves.rows()) fail(ErrorKind::kInvalidArgument, "k exceeds the number of relations");
  const Vec mr = mutual_relation(emb, head, tail);
  if (norm2(mr) == 0.0) fail(ErrorKind::kInvalidArgument, "undefined cosine: zero mutual relation");
  std::vector<RankedRelation> ranked;
  for (std::size_t r = 1; r < leaves.rows(); ++r) ranked.push_back({r, cosine(mr, leaves.row(r))});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedRelation& a, const RankedRelation& b) { return a.similarity > b.similarity; });
  ranked.resize(std::min(k, ranked.size()));
  return ranked;
}

struct EntityPair {
  std::size_t head = 0;
  std::size_t tail = 0;

  bool operator==(const EntityPair&) const = default;
};

struct RankedPair {
  EntityPair pair;
  double cosine = 0.0;
};

/// Candidate pairs ranked by cosine between their MR and the query MR. The
/// query pair itself and zero-MR candidates are skipped.
inline std::vector<RankedPair> nearest_mutual_relations(const EntityEmbeddings& emb, std::span<const EntityPair> pairs,
                                                        EntityPair query, std::size_t k) {
  const Vec q = mutual_relation(emb, query.head, query.tail);
  if (norm2(q) == 0.0) fail(ErrorKind::kInvalidArgument, "undefined cosine: zero query mutual relation");
  std::vector<RankedPair> ranked;
  for (const auto& p : pairs) {
    if (p == query) continue;
    const Vec mr = mutual_relation(emb, p.head, p.tail);
    if (norm2(mr) == 0.0) continue;
    ranked.push_back({p, cosine(q, mr)});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedPair& a, const RankedPair& b) { return a.cosine > b.cosine; });
  ranked.resize(std::min(k, ranked.size()));
  return ranked;
}

// Prototype file:
//   #prototypes <K> <dim>
//   #layer <k> <m_k>
//   #empty <comma-separated node ids or ->
//   <node> v1 ... vdim
inline void save_prototypes(const std::string& path, const PrototypeSet& protos) {
  std::string text = "#prototypes " + std::to_string(protos.depth()) + " " + std::to_string(protos.dim()) + "\n";
  for (std::size_t k = 0; k < protos.depth(); ++k) {
    text += "#layer " + std::to_string(k + 1) + " " + std::to_string(protos.layers[k].rows()) + "\n#empty ";
    std::string ids;
    for (std::size_t i = 0; i < protos.empty[k].size(); ++i) {
      if (!protos.empty[k][i]) continue;
      if (!ids.empty()) ids += ",";
      ids += std::to_string(i);
    }
    text += (ids.empty() ? "-" : ids) + "\n";
    text += format_matrix_rows(protos.layers[k]);
  }
  io::open_output(path) << text;
}

inline PrototypeSet load_prototypes(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": empty prototype file");
  io::strip_cr(line);
  auto h = io::split_ws(line);
  if (h.size() != 3 || h[0] != "#prototypes") fail(ErrorKind::kFormat, io::where(path, 1) + ": expected '#prototypes K dim'");
  const auto depth = io::parse_int<std::size_t>(h[1], io::where(path, 1));
  const auto dim = io::parse_int<std::size_t>(h[2], io::where(path, 1));
  PrototypeSet protos;
  for (std::size_t k = 0; k < depth; ++k) {
    if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": missing layer " + std::to_string(k + 1));
    ++line_no;
    io::strip_cr(line);
    h = io::split_ws(line);
    const std::string ctx = io::where(path, line_no);
    if (h.size() != 3 || h[0] != "#layer" || io::parse_int<std::size_t>(h[1], ctx) != k + 1) {
      fail(ErrorKind::kFormat, ctx + ": expected '#layer " + std::to_string(k + 1) + " m_k'");
    }
    const auto rows = io::parse_int<std::size_t>(h[2], ctx);
    if (!std::getline(in, line)) fail(ErrorKind::kFormat, ctx + ": missing #empty line");
    ++line_no;
    io::strip_cr(line);
    h = io::split_ws(line);
    if (h.size() != 2 || h[0] != "#empty") fail(ErrorKind::kFormat, io::where(path, line_no) + ": expected '#empty ids'");
    std::vector<bool> empty(rows, false);
    if (h[1] != "-") {
      for (auto id : io::split(h[1], ',')) {
        const auto i = io::parse_int<std::size_t>(id, io::where(path, line_no));
        if (i >= rows) fail(ErrorKind::kFormat, io::where(path, line_no) + ": empty id out of range");
        empty[i] = true;
      }
    }
    protos.layers.push_back(parse_matrix_rows(in, rows, dim, path, line_no));
    protos.empty.push_back(std::move(empty));
  }
  return protos;
}

}  // namespace prex
