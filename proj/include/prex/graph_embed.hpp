#pragma once

// Entity embeddings trained on the co-occurrence graph. Two independent
// tables are learned, one preserving first-order proximity (direct edges)
// and one preserving second-order proximity (shared neighbours, via separate
// vertex and context tables); the final embedding concatenates the first
// table with the second-order vertex table.

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "prex/alias_table.hpp"
#include "prex/common.hpp"
#include "prex/corpus.hpp"
#include "prex/io.hpp"

namespace prex {

struct EmbeddingConfig {
  std::size_t dim_first = 64;
  std::size_t dim_second = 64;
  std::size_t n_negative = 5;
  std::uint64_t n_samples = 2'000'000;
  double lr_initial = 0.025;
  std::uint64_t seed = 1;
  std::size_t threads = 1;  // 1 = deterministic

  void validate() const {
    if (dim_first == 0 || dim_second == 0) fail(ErrorKind::kUsage, "embedding dims must be > 0");
    if (n_negative == 0) fail(ErrorKind::kUsage, "n_negative must be >= 1");
    if (!(lr_initial > 0.0 && lr_initial <= 1.0)) fail(ErrorKind::kUsage, "lr_initial must be in (0, 1]");
    if (threads == 0) fail(ErrorKind::kUsage, "threads must be >= 1");
  }
};

struct EntityEmbeddings {
  Matrix vectors;  // row e = [first-order half | second-order vertex half]

  std::size_t n() const { return vectors.rows(); }
  std::size_t dim() const { return vectors.cols(); }
  std::span<const double> operator[](std::size_t e) const { return vectors.row(e); }

  bool operator==(const EntityEmbeddings&) const = default;
};

/// Draws edge indices proportionally to edge weight.
inline AliasTable build_edge_sampler(const CooccurrenceGraph& graph) {
  Vec w;
  w.reserve(graph.edges.size());
  double total = 0.0;
  for (const auto& e : graph.edges) {
    w.push_back(e.weight);
    total += e.weight;
  }
  if (total <= 0.0) fail(ErrorKind::kNumeric, "graph has no sampleable edges");
  return AliasTable(w);
}

/// Draws vertices proportionally to weighted_degree^0.75.
inline AliasTable build_noise_sampler(const CooccurrenceGraph& graph) {
  Vec w = graph.weighted_degree();
  double total = 0.0;
  for (double& d : w) {
    d = std::pow(d, 0.75);
    total += d;
  }
  if (total <= 0.0) fail(ErrorKind::kNumeric, "graph has no sampleable edges");
  return AliasTable(w);
}

/// Joint probability of an entity pair under first-order proximity.
inline double p1(std::span<const double> a, std::span<const double> b) { return sigmoid(dot(a, b)); }

inline Matrix init_embedding_table(std::size_t n, std::size_t dim, Rng& rng) {
  Matrix m(n, dim);
  fill_uniform(m, rng, 0.5 / static_cast<double>(dim));
  return m;
}

/// One first-order SGD sample: a positive edge (i, j) plus noise vertices
/// for each endpoint.
struct FirstOrderSample {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<std::size_t> neg_i;
  std::vector<std::size_t> neg_j;
};

/// One second-order sample: directed edge source -> target, noise contexts.
struct SecondOrderSample {
  std::size_t source = 0;
  std::size_t target = 0;
  std::vector<std::size_t> negatives;
};

/// -log s(e_i.e_j) - sum_{n in N_i} log s(-e_i.e_n) - sum_{n in N_j} log s(-e_j.e_n)
inline double first_order_sample_loss(const Matrix& emb, const FirstOrderSample& s) {
  double loss = -log_sigmoid(dot(emb.row(s.i), emb.row(s.j)));
  for (std::size_t n : s.neg_i) loss -= log_sigmoid(-dot(emb.row(s.i), emb.row(n)));
  for (std::size_t n : s.neg_j) loss -= log_sigmoid(-dot(emb.row(s.j), emb.row(n)));
  return loss;
}

/// -log s(c_t.v_s) - sum_n log s(-c_n.v_s)
inline double second_order_sample_loss(const Matrix& vertex, const Matrix& context, const SecondOrderSample& s) {
  const auto v = vertex.row(s.source);
  double loss = -log_sigmoid(dot(context.row(s.target), v));
  for (std::size_t n : s.negatives) loss -= log_sigmoid(-dot(context.row(n), v));
  return loss;
}

/// Gradient contribution to one row of one table. Rows may repeat; the full
/// gradient is the sum of contributions.
struct RowGradient {
  int table = 0;  // 0 = first-order / vertex table, 1 = context table
  std::size_t row = 0;
  Vec grad;
};

namespace detail {

template <bool Atomic>
inline double load(const double& x) {
  if constexpr (Atomic) {
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  } else {
    return x;
  }
}

template <bool Atomic>
inline void store(double& x, double v) {
  if constexpr (Atomic) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  } else {
    x = v;
  }
}

template <bool Atomic>
inline void gather(const Matrix& m, std::size_t r, Vec& out) {
  const auto src = m.row(r);
  out.resize(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) out[k] = load<Atomic>(src[k]);
}

/// Reusable list of row gradients (avoids per-step allocation).
class GradientList {
 public:
  /// Appends a zeroed gradient row and returns its slot. References from
  /// at() are invalidated by the next push().
  std::size_t push(int table, std::size_t row, std::size_t dim) {
    if (used_ == items_.size()) items_.emplace_back();
    RowGradient& g = items_[used_];
    g.table = table;
    g.row = row;
    g.grad.assign(dim, 0.0);
    return used_++;
  }
  Vec& at(std::size_t slot) { return items_[slot].grad; }
  void clear() { used_ = 0; }
  std::span<const RowGradient> items() const { return {items_.data(), used_}; }

 private:
  std::vector<RowGradient> items_;
  std::size_t used_ = 0;
};

struct Workspace {
  Vec a, b, c;
  GradientList grads;
};

template <bool Atomic>
void first_order_gradient_into(const Matrix& emb, const FirstOrderSample& s, Workspace& ws) {
  const std::size_t dim = emb.cols();
  ws.grads.clear();
  gather<Atomic>(emb, s.i, ws.a);
  gather<Atomic>(emb, s.j, ws.b);
  const double coef = -(1.0 - sigmoid(dot(ws.a, ws.b)));
  const std::size_t slot_i = ws.grads.push(0, s.i, dim);
  const std::size_t slot_j = ws.grads.push(0, s.j, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    ws.grads.at(slot_i)[k] = coef * ws.b[k];
    ws.grads.at(slot_j)[k] = coef * ws.a[k];
  }
  auto negatives = [&](const Vec& anchor, std::size_t anchor_slot, const std::vector<std::size_t>& negs) {
    for (std::size_t n : negs) {
      gather<Atomic>(emb, n, ws.c);
      const double cn = sigmoid(dot(anchor, ws.c));
      const std::size_t slot_n = ws.grads.push(0, n, dim);
      Vec& ga = ws.grads.at(anchor_slot);
      Vec& gn = ws.grads.at(slot_n);
      for (std::size_t k = 0; k < dim; ++k) {
        ga[k] += cn * ws.c[k];
        gn[k] = cn * anchor[k];
      }
    }
  };
  negatives(ws.a, slot_i, s.neg_i);
  negatives(ws.b, slot_j, s.neg_j);
}

template <bool Atomic>
void second_order_gradient_into(const Matrix& vertex, const Matrix& context, const SecondOrderSample& s,
                                Workspace& ws) {
  const std::size_t dim = vertex.cols();
  ws.grads.clear();
  gather<Atomic>(vertex, s.source, ws.a);
  gather<Atomic>(context, s.target, ws.b);
  const double coef = -(1.0 - sigmoid(dot(ws.a, ws.b)));
  const std::size_t slot_v = ws.grads.push(0, s.source, dim);
  const std::size_t slot_t = ws.grads.push(1, s.target, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    ws.grads.at(slot_v)[k] = coef * ws.b[k];
    ws.grads.at(slot_t)[k] = coef * ws.a[k];
  }
  for (std::size_t n : s.negatives) {
    gather<Atomic>(context, n, ws.c);
    const double cn = sigmoid(dot(ws.a, ws.c));
    const std::size_t slot_n = ws.grads.push(1, n, dim);
    Vec& g_src = ws.grads.at(slot_v);
    Vec& gn = ws.grads.at(slot_n);
    for (std::size_t k = 0; k < dim; ++k) {
      g_src[k] += cn * ws.c[k];
      gn[k] = cn * ws.a[k];
    }
  }
}

template <bool Atomic>
void apply(std::span<const RowGradient> grads, Matrix& t0, Matrix* t1, double lr) {
  for (const auto& g : grads) {
    Matrix& m = g.table == 0 ? t0 : *t1;
    auto row = m.row(g.row);
    for (std::size_t k = 0; k < row.size(); ++k) store<Atomic>(row[k], load<Atomic>(row[k]) - lr * g.grad[k]);
  }
}

/// Draws `count` noise vertices, redrawing any that hit a forbidden vertex.
inline void draw_negatives(const AliasTable& noise, Rng& rng, std::size_t count, std::size_t forbid_a,
                           std::size_t forbid_b, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t k = 0; k < count; ++k) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const std::size_t v = noise.sample(rng);
      if (v != forbid_a && v != forbid_b) {
        out.push_back(v);
        break;
      }
    }
  }
}

/// Linear decay to lr_initial * 1e-4.
inline double learning_rate(const EmbeddingConfig& cfg, std::uint64_t step, std::uint64_t total) {
  const double frac = total == 0 ? 0.0 : static_cast<double>(step) / static_cast<double>(total);
  return cfg.lr_initial * std::max(1e-4, 1.0 - frac);
}

template <typename StepFn>
void run_sgd(const EmbeddingConfig& cfg, StepFn&& step) {
  if (cfg.threads <= 1) {
    Rng rng(cfg.seed ^ 0x5DEECE66DULL);
    step(rng, std::uint64_t{0}, cfg.n_samples, std::false_type{});
    return;
  }
  std::vector<std::thread> workers;
  const std::uint64_t chunk = (cfg.n_samples + cfg.threads - 1) / cfg.threads;
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    workers.emplace_back([&, t] {
      Rng rng(mix_seed(cfg.seed, t));
      const std::uint64_t lo = std::min<std::uint64_t>(cfg.n_samples, t * chunk);
      const std::uint64_t hi = std::min<std::uint64_t>(cfg.n_samples, lo + chunk);
      step(rng, lo, hi, std::true_type{});
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace detail

inline std::vector<RowGradient> first_order_gradient(const Matrix& emb, const FirstOrderSample& s) {
  detail::Workspace ws;
  detail::first_order_gradient_into<false>(emb, s, ws);
  const auto items = ws.grads.items();
  return {items.begin(), items.end()};
}

inline std::vector<RowGradient> second_order_gradient(const Matrix& vertex, const Matrix& context,
                                                      const SecondOrderSample& s) {
  detail::Workspace ws;
  detail::second_order_gradient_into<false>(vertex, context, s, ws);
  const auto items = ws.grads.items();
  return {items.begin(), items.end()};
}

/// Called every `checkpoint_interval` steps (single-threaded mode only) with
/// the number of completed steps and the current table.
using CheckpointFn = std::function<void(std::uint64_t step, const Matrix& table)>;

inline Matrix train_first_order(const CooccurrenceGraph& graph, const EmbeddingConfig& cfg,
                                const CheckpointFn& on_checkpoint = {}, std::uint64_t checkpoint_interval = 0) {
  cfg.validate();
  Rng init_rng(cfg.seed);
  Matrix emb = init_embedding_table(graph.n_vertices, cfg.dim_first, init_rng);
  if (cfg.n_samples == 0) return emb;
  const AliasTable edges = build_edge_sampler(graph);
  const AliasTable noise = build_noise_sampler(graph);

  detail::run_sgd(cfg, [&](Rng& rng, std::uint64_t lo, std::uint64_t hi, auto atomic_tag) {
    constexpr bool kAtomic = decltype(atomic_tag)::value;
    detail::Workspace ws;
    FirstOrderSample s;
    for (std::uint64_t t = lo; t < hi; ++t) {
      const GraphEdge& e = graph.edges[edges.sample(rng)];
      s.i = e.i;
      s.j = e.j;
      detail::draw_negatives(noise, rng, cfg.n_negative, s.i, s.j, s.neg_i);
      detail::draw_negatives(noise, rng, cfg.n_negative, s.i, s.j, s.neg_j);
      detail::first_order_gradient_into<kAtomic>(emb, s, ws);
      detail::apply<kAtomic>(ws.grads.items(), emb, nullptr, detail::learning_rate(cfg, t, cfg.n_samples));
      if constexpr (!kAtomic) {
        if (on_checkpoint && checkpoint_interval > 0 && (t + 1) % checkpoint_interval == 0) on_checkpoint(t + 1, emb);
      }
    }
  });
  if (!all_finite(emb.data())) fail(ErrorKind::kNumeric, "first-order training produced non-finite values");
  return emb;
}

struct SecondOrderTables {
  Matrix vertex;
  Matrix context;
};

inline SecondOrderTables train_second_order(const CooccurrenceGraph& graph, const EmbeddingConfig& cfg,
                                            const std::function<void(std::uint64_t, const SecondOrderTables&)>&
                                                on_checkpoint = {},
                                            std::uint64_t checkpoint_interval = 0) {
  cfg.validate();
  Rng init_rng(mix_seed(cfg.seed, 2));
  SecondOrderTables tables{init_embedding_table(graph.n_vertices, cfg.dim_second, init_rng),
                           init_embedding_table(graph.n_vertices, cfg.dim_second, init_rng)};
  if (cfg.n_samples == 0) return tables;
  const AliasTable edges = build_edge_sampler(graph);
  const AliasTable noise = build_noise_sampler(graph);

  detail::run_sgd(cfg, [&](Rng& rng, std::uint64_t lo, std::uint64_t hi, auto atomic_tag) {
    constexpr bool kAtomic = decltype(atomic_tag)::value;
    detail::Workspace ws;
    SecondOrderSample s;
    for (std::uint64_t t = lo; t < hi; ++t) {
      const GraphEdge& e = graph.edges[edges.sample(rng)];
      const bool flip = rng.next() & 1ULL;
      s.source = flip ? e.j : e.i;
      s.target = flip ? e.i : e.j;
      detail::draw_negatives(noise, rng, cfg.n_negative, s.source, s.target, s.negatives);
      detail::second_order_gradient_into<kAtomic>(tables.vertex, tables.context, s, ws);
      detail::apply<kAtomic>(ws.grads.items(), tables.vertex, &tables.context,
                             detail::learning_rate(cfg, t, cfg.n_samples));
      if constexpr (!kAtomic) {
        if (on_checkpoint && checkpoint_interval > 0 && (t + 1) % checkpoint_interval == 0) on_checkpoint(t + 1, tables);
      }
    }
  });
  if (!all_finite(tables.vertex.data()) || !all_finite(tables.context.data())) {
    fail(ErrorKind::kNumeric, "second-order training produced non-finite values");
  }
  return tables;
}

inline EntityEmbeddings concat_embeddings(const Matrix& first, const Matrix& second_vertex) {
  if (first.rows() != second_vertex.rows()) {
    fail(ErrorKind::kDimension, "concat_embeddings: row counts differ (" + std::to_string(first.rows()) + " vs " +
                                    std::to_string(second_vertex.rows()) + ")");
  }
  EntityEmbeddings out{Matrix(first.rows(), first.cols() + second_vertex.cols())};
  for (std::size_t r = 0; r < first.rows(); ++r) {
    auto dst = out.vectors.row(r);
    std::copy(first.row(r).begin(), first.row(r).end(), dst.begin());
    std::copy(second_vertex.row(r).begin(), second_vertex.row(r).end(), dst.begin() + first.cols());
  }
  return out;
}

/// Trains both halves and concatenates them.
inline EntityEmbeddings train_embeddings(const CooccurrenceGraph& graph, const EmbeddingConfig& cfg) {
  Matrix first = train_first_order(graph, cfg);
  SecondOrderTables second = train_second_order(graph, cfg);
  return concat_embeddings(first, second.vertex);
}

// ---- file formats ----

/// Text: header `n dim`, then `id v1 ... vdim` per row, 9 decimals.
inline std::string format_matrix_rows(const Matrix& m) {
  std::string text;
  text.reserve(m.rows() * (m.cols() * 13 + 8));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    text += std::to_string(r);
    for (double v : m.row(r)) {
      text.push_back(' ');
      io::append_fixed9(text, v);
    }
    text.push_back('\n');
  }
  return text;
}

inline void save_embeddings_text(const std::string& path, const EntityEmbeddings& emb) {
  io::open_output(path) << std::to_string(emb.n()) << ' ' << std::to_string(emb.dim()) << '\n'
                        << format_matrix_rows(emb.vectors);
}

/// Reads `rows` lines of `id v1..vdim` where id must equal the row index.
inline Matrix parse_matrix_rows(std::istream& in, std::size_t rows, std::size_t cols, const std::string& path,
                                std::size_t& line_no) {
  Matrix m(rows, cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": expected " + std::to_string(rows) + " rows");
    ++line_no;
    io::strip_cr(line);
    const auto f = io::split_ws(line);
    const std::string ctx = io::where(path, line_no);
    if (f.size() != cols + 1) {
      fail(ErrorKind::kDimension, ctx + ": expected id and " + std::to_string(cols) + " values, got " +
                                      std::to_string(f.size()) + " fields");
    }
    if (io::parse_int<std::size_t>(f[0], ctx) != r) fail(ErrorKind::kFormat, ctx + ": rows must be in id order");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = io::parse_double(f[c + 1], ctx);
  }
  return m;
}

inline EntityEmbeddings load_embeddings_text(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": empty embedding file");
  io::strip_cr(line);
  const auto h = io::split_ws(line);
  if (h.size() != 2) fail(ErrorKind::kFormat, io::where(path, 1) + ": expected header 'n dim'");
  const auto n = io::parse_int<std::size_t>(h[0], io::where(path, 1));
  const auto dim = io::parse_int<std::size_t>(h[1], io::where(path, 1));
  std::size_t line_no = 1;
  EntityEmbeddings emb{parse_matrix_rows(in, n, dim, path, line_no)};
  if (!all_finite(emb.vectors.data())) fail(ErrorKind::kNumeric, path + ": non-finite embedding value");
  return emb;
}

inline void save_embeddings_binary(const std::string& path, const EntityEmbeddings& emb) {
  std::ofstream out = io::open_output(path, true);
  io::write_matrix_binary(out, emb.vectors);
}

inline EntityEmbeddings load_embeddings_binary(const std::string& path) {
  std::ifstream in = io::open_input(path, true);
  return {io::read_matrix_binary(in, path)};
}

/// Dispatches on the leading magic bytes.
inline EntityEmbeddings load_embeddings(const std::string& path) {
  std::ifstream probe = io::open_input(path, true);
  char magic[4] = {};
  probe.read(magic, 4);
  if (probe.gcount() == 4 && std::memcmp(magic, io::kMagic, 4) == 0) return load_embeddings_binary(path);
  return load_embeddings_text(path);
}

}  // namespace prex
