#pragma once

// Entity-type features: each entity averages the embeddings of its types,
// a pair concatenates head and tail, and a softmax layer scores relations.

#include <string>
#include <unordered_map>
#include <vector>

#include "prex/common.hpp"
#include "prex/io.hpp"

namespace prex {

struct TypeCatalog {
  std::vector<std::string> type_names;
  std::vector<std::vector<std::size_t>> entity_types;  // per entity, possibly empty

  std::size_t n_types() const { return type_names.size(); }
  std::size_t n_entities() const { return entity_types.size(); }

  bool operator==(const TypeCatalog&) const = default;
};

/// Type file: `entity_id<TAB>type[,type...]`; type names are interned in
/// file order. Entities absent from the file are untyped.
inline TypeCatalog load_types(const std::string& path, std::size_t n_entities) {
  std::ifstream in = io::open_input(path);
  TypeCatalog cat;
  cat.entity_types.assign(n_entities, {});
  std::unordered_map<std::string, std::size_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const auto f = io::split(line, '\t');
    const std::string ctx = io::where(path, line_no);
    if (f.size() != 2) fail(ErrorKind::kFormat, ctx + ": expected entity_id<TAB>type[,type...]");
    const auto e = io::parse_int<std::size_t>(f[0], ctx);
    if (e >= n_entities) fail(ErrorKind::kDimension, ctx + ": entity id " + std::to_string(e) + " out of range");
    for (auto name : io::split(f[1], ',')) {
      if (name.empty()) continue;
      const auto [it, inserted] = ids.emplace(std::string(name), cat.type_names.size());
      if (inserted) cat.type_names.emplace_back(name);
      auto& list = cat.entity_types[e];
      if (std::find(list.begin(), list.end(), it->second) == list.end()) list.push_back(it->second);
    }
  }
  return cat;
}

inline void save_types(const std::string& path, const TypeCatalog& cat) {
  std::string text;
  for (std::size_t e = 0; e < cat.n_entities(); ++e) {
    if (cat.entity_types[e].empty()) continue;
    text += std::to_string(e) + "\t";
    for (std::size_t k = 0; k < cat.entity_types[e].size(); ++k) {
      if (k) text += ",";
      text += cat.type_names[cat.entity_types[e][k]];
    }
    text += "\n";
  }
  io::open_output(path) << text;
}

/// Mean of the rows of `type_ids`; zero vector when the list is empty.
inline Vec mean_type_vector(std::span<const std::size_t> type_ids, const Matrix& table) {
  Vec out(table.cols(), 0.0);
  if (type_ids.empty()) return out;
  for (std::size_t t : type_ids) {
    const auto row = table.row(t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k];
  }
  for (double& v : out) v /= static_cast<double>(type_ids.size());
  return out;
}

inline Vec entity_type_vector(std::size_t entity, const TypeCatalog& cat, const Matrix& table) {
  if (entity >= cat.n_entities()) fail(ErrorKind::kInvalidArgument, "entity id out of range for type catalog");
  return mean_type_vector(cat.entity_types[entity], table);
}

/// [c_head | c_tail]
inline Vec pair_type_features(std::size_t head, std::size_t tail, const TypeCatalog& cat, const Matrix& table) {
  Vec out = entity_type_vector(head, cat, table);
  const Vec t = entity_type_vector(tail, cat, table);
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

/// softmax(W_c x + b_c)
inline Vec type_score(std::span<const double> pair_features, const Matrix& w, std::span<const double> b) {
  if (w.cols() != pair_features.size() || b.size() != w.rows()) {
    fail(ErrorKind::kDimension, "type_score: W is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                                    " but features have " + std::to_string(pair_features.size()) + " entries");
  }
  return softmax(affine(w, pair_features, b));
}

/// Gradients of the type path for one pair, given dL/dC_Type.
struct TypePathGrads {
  Matrix w;      // m x 2*d2
  Vec b;         // m
  Matrix table;  // n_types x d2
};

/// Accumulates into `grads` the gradient flowing back from dL/dC_Type.
inline void type_path_backward(std::span<const std::size_t> head_types, std::span<const std::size_t> tail_types,
                               std::span<const double> features, std::span<const double> probs,
                               std::span<const double> upstream, const Matrix& w, TypePathGrads& grads) {
  const Vec dlogits = softmax_backward(probs, upstream);
  const std::size_t d2 = w.cols() / 2;
  Vec dfeat(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    grads.b[r] += dlogits[r];
    const auto wr = w.row(r);
    auto gw = grads.w.row(r);
    for (std::size_t k = 0; k < w.cols(); ++k) {
      gw[k] += dlogits[r] * features[k];
      dfeat[k] += dlogits[r] * wr[k];
    }
  }
  auto scatter = [&](std::span<const std::size_t> types, std::size_t offset) {
    if (types.empty()) return;
    const double scale = 1.0 / static_cast<double>(types.size());
    for (std::size_t t : types) {
      auto g = grads.table.row(t);
      for (std::size_t k = 0; k < d2; ++k) g[k] += scale * dfeat[offset + k];
    }
  };
  scatter(head_types, 0);
  scatter(tail_types, d2);
}

}  // namespace prex
