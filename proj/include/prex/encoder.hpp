#pragma once

// Bag encoder: word + relative-position embeddings, same-length convolution,
// piecewise max pooling over the three segments delimited by the two entity
// mentions, tanh, inverted dropout, and selective attention over the bag's
// sentences against a relation query (bilinear form with a shared diagonal
// matrix). Forward passes keep caches; backward passes are hand-derived.

#include <string>
#include <vector>

#include "prex/common.hpp"

namespace prex {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t word_dim = 50;
  std::size_t pos_dim = 5;
  std::size_t window = 3;
  std::size_t n_filters = 230;
  std::size_t max_len = 120;
  std::size_t n_relations = 0;
  double dropout_p = 0.5;
  std::uint64_t seed = 1;

  std::size_t input_dim() const { return word_dim + 2 * pos_dim; }
  std::size_t feature_dim() const { return 3 * n_filters; }
  std::size_t pos_rows() const { return 2 * max_len + 1; }

  void validate() const {
    if (vocab_size == 0 || word_dim == 0 || pos_dim == 0 || n_filters == 0 || n_relations == 0) {
      fail(ErrorKind::kUsage, "encoder sizes must be positive");
    }
    if (window % 2 == 0) fail(ErrorKind::kUsage, "window must be odd");
    if (max_len < window) fail(ErrorKind::kUsage, "max_len must be >= window");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail(ErrorKind::kUsage, "dropout must be in [0, 1)");
  }
};

struct EncoderParams {
  Matrix word;       // vocab x word_dim; row 0 = unknown token
  Matrix pos_head;   // (2*max_len+1) x pos_dim, offset t - head_idx shifted by max_len
  Matrix pos_tail;
  Matrix conv_w;     // n_filters x (window * input_dim)
  Vec conv_b;        // n_filters
  Vec att_diag;      // 3*n_filters, diagonal of the bilinear attention matrix
  Matrix rel_query;  // m x 3*n_filters
  Matrix re_w;       // m x 3*n_filters
  Vec re_b;          // m

  static EncoderParams zeros(const EncoderConfig& cfg) {
    const std::size_t fd = cfg.feature_dim();
    return {Matrix(cfg.vocab_size, cfg.word_dim),
            Matrix(cfg.pos_rows(), cfg.pos_dim),
            Matrix(cfg.pos_rows(), cfg.pos_dim),
            Matrix(cfg.n_filters, cfg.window * cfg.input_dim()),
            Vec(cfg.n_filters, 0.0),
            Vec(fd, 0.0),
            Matrix(cfg.n_relations, fd),
            Matrix(cfg.n_relations, fd),
            Vec(cfg.n_relations, 0.0)};
  }

  static EncoderParams init(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p = zeros(cfg);
    const std::size_t fd = cfg.feature_dim();
    fill_uniform(p.word, rng, std::sqrt(3.0 / static_cast<double>(cfg.word_dim)));
    fill_uniform(p.pos_head, rng, std::sqrt(3.0 / static_cast<double>(cfg.pos_dim)));
    fill_uniform(p.pos_tail, rng, std::sqrt(3.0 / static_cast<double>(cfg.pos_dim)));
    const double fan_in = static_cast<double>(cfg.window * cfg.input_dim());
    fill_uniform(p.conv_w, rng, std::sqrt(6.0 / (fan_in + static_cast<double>(cfg.n_filters))));
    std::fill(p.att_diag.begin(), p.att_diag.end(), 1.0);
    const double head_bound = std::sqrt(6.0 / static_cast<double>(cfg.n_relations + fd));
    fill_uniform(p.rel_query, rng, head_bound);
    fill_uniform(p.re_w, rng, head_bound);
    return p;
  }
};

/// A sentence as token ids plus entity token positions.
struct EncSentence {
  std::vector<std::size_t> tokens;
  std::size_t head_idx = 0;
  std::size_t tail_idx = 0;
};

inline std::size_t clip_offset(long offset, std::size_t max_len) {
  const long m = static_cast<long>(max_len);
  return static_cast<std::size_t>(std::clamp(offset, -m, m) + m);
}

/// Row t = [word(token_t) | pos_head(t - head) | pos_tail(t - tail)], after
/// truncation to max_len tokens. Out-of-vocabulary ids map to row 0.
inline Matrix embed_sentence(const EncSentence& s, const EncoderParams& p, const EncoderConfig& cfg) {
  const std::size_t len = std::min(s.tokens.size(), cfg.max_len);
  if (len == 0) fail(ErrorKind::kInvalidArgument, "empty sentence");
  if (s.head_idx >= len || s.tail_idx >= len) {
    fail(ErrorKind::kInvalidArgument, "entity position outside the truncated sentence");
  }
  Matrix x(len, cfg.input_dim());
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t tok = s.tokens[t] < cfg.vocab_size ? s.tokens[t] : 0;
    auto row = x.row(t);
    std::copy(p.word.row(tok).begin(), p.word.row(tok).end(), row.begin());
    const auto ph = p.pos_head.row(clip_offset(static_cast<long>(t) - static_cast<long>(s.head_idx), cfg.max_len));
    const auto pt = p.pos_tail.row(clip_offset(static_cast<long>(t) - static_cast<long>(s.tail_idx), cfg.max_len));
    std::copy(ph.begin(), ph.end(), row.begin() + cfg.word_dim);
    std::copy(pt.begin(), pt.end(), row.begin() + cfg.word_dim + cfg.pos_dim);
  }
  return x;
}

struct SentenceCache {
  Matrix input;                // len x input_dim
  std::vector<long> argmax;    // 3*F; -1 for an empty segment
  Vec activated;               // tanh(pooled), before dropout
  Vec mask;                    // dropout scale per unit; empty when dropout is off
  Vec out;                     // sentence vector x
};

namespace detail {

/// Fills `win` with the zero-padded window centred at t.
inline void conv_window(const Matrix& input, std::size_t t, std::size_t window, Vec& win) {
  const std::size_t d = input.cols();
  const long half = static_cast<long>(window / 2);
  win.assign(window * d, 0.0);
  for (std::size_t o = 0; o < window; ++o) {
    const long src = static_cast<long>(t) + static_cast<long>(o) - half;
    if (src < 0 || src >= static_cast<long>(input.rows())) continue;
    const auto row = input.row(static_cast<std::size_t>(src));
    std::copy(row.begin(), row.end(), win.begin() + static_cast<long>(o * d));
  }
}

}  // namespace detail

/// Convolution + piecewise max pooling + tanh (+ inverted dropout when a
/// dropout stream is given). Segments are [0, lo], (lo, hi), [hi, len) for
/// lo/hi the smaller/larger entity position; an empty segment pools to 0.
inline SentenceCache pcnn_forward(Matrix input, std::size_t head_idx, std::size_t tail_idx, const EncoderParams& p,
                                  const EncoderConfig& cfg, Rng* dropout_rng = nullptr) {
  const std::size_t len = input.rows();
  const std::size_t nf = cfg.n_filters;
  const std::size_t lo = std::min(head_idx, tail_idx);
  const std::size_t hi = std::max(head_idx, tail_idx);
  SentenceCache c;
  c.argmax.assign(3 * nf, -1);
  Vec pooled(3 * nf, 0.0);
  Vec win;
  Vec z(nf);
  for (std::size_t t = 0; t < len; ++t) {
    detail::conv_window(input, t, cfg.window, win);
    const std::size_t seg = t <= lo ? 0 : (t < hi ? 1 : 2);
    for (std::size_t f = 0; f < nf; ++f) {
      const double v = p.conv_b[f] + dot(p.conv_w.row(f), win);
      const std::size_t slot = seg * nf + f;
      if (c.argmax[slot] < 0 || v > pooled[slot]) {
        pooled[slot] = v;
        c.argmax[slot] = static_cast<long>(t);
      }
    }
  }
  c.activated.resize(3 * nf);
  for (std::size_t k = 0; k < pooled.size(); ++k) c.activated[k] = std::tanh(pooled[k]);
  c.out = c.activated;
  if (dropout_rng != nullptr && cfg.dropout_p > 0.0) {
    c.mask.resize(c.out.size());
    const double keep = 1.0 / (1.0 - cfg.dropout_p);
    for (std::size_t k = 0; k < c.out.size(); ++k) {
      c.mask[k] = dropout_rng->uniform() < cfg.dropout_p ? 0.0 : keep;
      c.out[k] *= c.mask[k];
    }
  }
  c.input = std::move(input);
  return c;
}

struct AttentionResult {
  Vec scores;   // q_j = x_j^T diag(A) r
  Vec weights;  // softmax(q)
  Vec bag;      // sum_j weights_j x_j
};

inline AttentionResult attention_forward(std::span<const Vec> sentences, std::size_t relation, const EncoderParams& p) {
  if (sentences.empty()) fail(ErrorKind::kInvalidArgument, "attention over an empty bag");
  const auto r = p.rel_query.row(relation);
  AttentionResult a;
  a.scores.resize(sentences.size());
  for (std::size_t j = 0; j < sentences.size(); ++j) {
    double q = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) q += sentences[j][k] * p.att_diag[k] * r[k];
    a.scores[j] = q;
  }
  a.weights = softmax(a.scores);
  a.bag.assign(r.size(), 0.0);
  for (std::size_t j = 0; j < sentences.size(); ++j) {
    for (std::size_t k = 0; k < r.size(); ++k) a.bag[k] += a.weights[j] * sentences[j][k];
  }
  return a;
}

/// C_RE = softmax(W_RE x_bag + b_RE)
inline Vec re_score(std::span<const double> bag, const EncoderParams& p) { return softmax(affine(p.re_w, bag, p.re_b)); }

struct BagCache {
  std::vector<EncSentence> inputs;
  std::vector<SentenceCache> sentences;
  std::vector<Vec> vectors;  // copies of sentences[j].out, contiguous for attention
  std::size_t query = 0;
  AttentionResult attention;
  Vec probs;
  bool valid = false;
};

inline BagCache encoder_forward(std::span<const EncSentence> bag, std::size_t query, const EncoderParams& p,
                                const EncoderConfig& cfg, Rng* dropout_rng = nullptr) {
  BagCache c;
  c.inputs.assign(bag.begin(), bag.end());
  for (const auto& s : bag) {
    c.sentences.push_back(pcnn_forward(embed_sentence(s, p, cfg), s.head_idx, s.tail_idx, p, cfg, dropout_rng));
    c.vectors.push_back(c.sentences.back().out);
  }
  c.query = query;
  c.attention = attention_forward(c.vectors, query, p);
  c.probs = re_score(c.attention.bag, p);
  c.valid = true;
  return c;
}

/// Backpropagates dL/dC_RE through the whole encoder, accumulating parameter
/// gradients into `grads` (same shapes as the parameters). Returns dL/dinput
/// per sentence.
inline std::vector<Matrix> encoder_backward(const BagCache& cache, std::span<const double> upstream,
                                            const EncoderParams& p, const EncoderConfig& cfg, EncoderParams& grads) {
  if (!cache.valid) fail(ErrorKind::kInvalidArgument, "encoder_backward called without a forward cache");
  const std::size_t nf = cfg.n_filters;
  const std::size_t fd = cfg.feature_dim();
  const std::size_t n = cache.sentences.size();

  // Output layer.
  const Vec dlogits = softmax_backward(cache.probs, upstream);
  Vec dbag(fd, 0.0);
  for (std::size_t r = 0; r < p.re_w.rows(); ++r) {
    grads.re_b[r] += dlogits[r];
    if (dlogits[r] == 0.0) continue;
    const auto wr = p.re_w.row(r);
    auto gw = grads.re_w.row(r);
    for (std::size_t k = 0; k < fd; ++k) {
      gw[k] += dlogits[r] * cache.attention.bag[k];
      dbag[k] += dlogits[r] * wr[k];
    }
  }

  // Attention.
  const auto& alpha = cache.attention.weights;
  Vec dalpha(n);
  for (std::size_t j = 0; j < n; ++j) dalpha[j] = dot(cache.vectors[j], dbag);
  const Vec dq = softmax_backward(alpha, dalpha);
  const auto rq = p.rel_query.row(cache.query);
  auto grq = grads.rel_query.row(cache.query);
  std::vector<Vec> dx(n, Vec(fd, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const Vec& x = cache.vectors[j];
    for (std::size_t k = 0; k < fd; ++k) {
      dx[j][k] = alpha[j] * dbag[k] + dq[j] * p.att_diag[k] * rq[k];
      grads.att_diag[k] += dq[j] * x[k] * rq[k];
      grq[k] += dq[j] * x[k] * p.att_diag[k];
    }
  }

  // Per-sentence: dropout, tanh, max routing, convolution, embeddings.
  std::vector<Matrix> dinputs;
  Vec win;
  const std::size_t din = cfg.input_dim();
  for (std::size_t j = 0; j < n; ++j) {
    const SentenceCache& sc = cache.sentences[j];
    Matrix dinput(sc.input.rows(), din);
    for (std::size_t slot = 0; slot < fd; ++slot) {
      const long t = sc.argmax[slot];
      if (t < 0) continue;
      double g = dx[j][slot];
      if (!sc.mask.empty()) g *= sc.mask[slot];
      g *= 1.0 - sc.activated[slot] * sc.activated[slot];
      if (g == 0.0) continue;
      const std::size_t f = slot % nf;
      grads.conv_b[f] += g;
      detail::conv_window(sc.input, static_cast<std::size_t>(t), cfg.window, win);
      auto gw = grads.conv_w.row(f);
      const auto w = p.conv_w.row(f);
      const long half = static_cast<long>(cfg.window / 2);
      for (std::size_t k = 0; k < win.size(); ++k) gw[k] += g * win[k];
      for (std::size_t o = 0; o < cfg.window; ++o) {
        const long src = t + static_cast<long>(o) - half;
        if (src < 0 || src >= static_cast<long>(sc.input.rows())) continue;
        auto drow = dinput.row(static_cast<std::size_t>(src));
        for (std::size_t d = 0; d < din; ++d) drow[d] += g * w[o * din + d];
      }
    }
    const EncSentence& s = cache.inputs[j];
    for (std::size_t t = 0; t < dinput.rows(); ++t) {
      const auto drow = dinput.row(t);
      const std::size_t tok = s.tokens[t] < cfg.vocab_size ? s.tokens[t] : 0;
      auto gword = grads.word.row(tok);
      for (std::size_t d = 0; d < cfg.word_dim; ++d) gword[d] += drow[d];
      auto gph = grads.pos_head.row(clip_offset(static_cast<long>(t) - static_cast<long>(s.head_idx), cfg.max_len));
      auto gpt = grads.pos_tail.row(clip_offset(static_cast<long>(t) - static_cast<long>(s.tail_idx), cfg.max_len));
      for (std::size_t d = 0; d < cfg.pos_dim; ++d) {
        gph[d] += drow[cfg.word_dim + d];
        gpt[d] += drow[cfg.word_dim + cfg.pos_dim + d];
      }
    }
    dinputs.push_back(std::move(dinput));
  }
  return dinputs;
}

}  // namespace prex
