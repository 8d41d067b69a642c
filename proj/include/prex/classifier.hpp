#pragma once

// Fused relation classifier: prototype features, entity-type scores and the
// bag encoder's scores are scaled by learnable scalars, concatenated, and
// projected to a softmax over relations. Trained by minibatch SGD on
// cross-entropy with entity embeddings and prototypes held fixed.

#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prex/common.hpp"
#include "prex/dataset.hpp"
#include "prex/encoder.hpp"
#include "prex/graph_embed.hpp"
#include "prex/io.hpp"
#include "prex/mutrel.hpp"
#include "prex/typefeat.hpp"

namespace prex {

/// Which feature blocks feed the fusion layer.
struct FeatureMask {
  bool prototypes = true;
  bool types = true;
  bool encoder = true;

  bool operator==(const FeatureMask&) const = default;

  std::string name() const {
    std::string out;
    auto add = [&](bool on, const char* n) {
      if (!on) return;
      if (!out.empty()) out += ",";
      out += n;
    };
    add(prototypes, "prototypes");
    add(types, "types");
    add(encoder, "encoder");
    return out;
  }

  /// Comma list of `prototypes`, `types`, `encoder` (or `all`).
  static FeatureMask parse(std::string_view text) {
    if (text == "all") return {};
    FeatureMask m{false, false, false};
    for (auto part : io::split(text, ',')) {
      if (part == "prototypes") m.prototypes = true;
      else if (part == "types") m.types = true;
      else if (part == "encoder") m.encoder = true;
      else fail(ErrorKind::kUsage, "unknown feature block '" + std::string(part) + "'");
    }
    if (!m.prototypes && !m.types && !m.encoder) fail(ErrorKind::kUsage, "at least one feature block is required");
    return m;
  }
};

struct ModelConfig {
  EncoderConfig encoder;        // encoder.n_relations is m, including NA
  std::size_t n_types = 0;
  std::size_t type_dim = 20;
  std::size_t rp_features = 0;  // sum of layer sizes of the prototype hierarchy
  FeatureMask features;
  std::uint64_t seed = 1;

  std::size_t n_relations() const { return encoder.n_relations; }

  std::size_t fusion_cols() const {
    return (features.prototypes ? rp_features : 0) + (features.types ? n_relations() : 0) +
           (features.encoder ? n_relations() : 0);
  }

  void validate() const {
    encoder.validate();
    if (features.prototypes && rp_features < n_relations()) {
      fail(ErrorKind::kDimension, "prototype features must cover at least the leaf relations");
    }
    if (features.types && (n_types == 0 || type_dim == 0)) fail(ErrorKind::kUsage, "type features need types");
    if (fusion_cols() == 0) fail(ErrorKind::kUsage, "no feature blocks enabled");
  }
};

/// A named view of one parameter tensor.
struct ParamRef {
  std::string name;
  std::span<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct ModelParams {
  EncoderParams enc;
  Matrix type_table;  // n_types x type_dim
  Matrix type_w;      // m x 2*type_dim
  Vec type_b;         // m
  Vec scales;         // alpha, beta, gamma
  Matrix fuse_w;      // m x fusion_cols
  Vec fuse_b;         // m

  std::vector<ParamRef> tensors() {
    auto mat = [](const std::string& n, Matrix& m) { return ParamRef{n, m.data(), m.rows(), m.cols()}; };
    auto vec = [](const std::string& n, Vec& v) { return ParamRef{n, v, 1, v.size()}; };
    return {mat("encoder.word", enc.word),         mat("encoder.pos_head", enc.pos_head),
            mat("encoder.pos_tail", enc.pos_tail), mat("encoder.conv_w", enc.conv_w),
            vec("encoder.conv_b", enc.conv_b),     vec("encoder.att_diag", enc.att_diag),
            mat("encoder.rel_query", enc.rel_query), mat("encoder.re_w", enc.re_w),
            vec("encoder.re_b", enc.re_b),         mat("type.table", type_table),
            mat("type.w", type_w),                 vec("type.b", type_b),
            vec("fusion.scales", scales),          mat("fusion.w", fuse_w),
            vec("fusion.b", fuse_b)};
  }

  void set_zero() {
    for (auto& t : tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
  }

  static ModelParams zeros(const ModelConfig& cfg) {
    const std::size_t m = cfg.n_relations();
    return {EncoderParams::zeros(cfg.encoder),
            Matrix(cfg.n_types, cfg.type_dim),
            Matrix(m, 2 * cfg.type_dim),
            Vec(m, 0.0),
            Vec(3, 0.0),
            Matrix(m, cfg.fusion_cols()),
            Vec(m, 0.0)};
  }

  /// Random encoder and type tables; alpha = beta = gamma = 1 and the fusion
  /// matrix starts as identity on the leaf-prototype, type and encoder blocks,
  /// so the initial fused logits are the plain sum of the three scores.
  static ModelParams init(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    ModelParams p = zeros(cfg);
    p.enc = EncoderParams::init(cfg.encoder, rng);
    if (cfg.type_dim > 0) {
      fill_uniform(p.type_table, rng, 0.5 / static_cast<double>(cfg.type_dim));
      fill_uniform(p.type_w, rng, std::sqrt(6.0 / static_cast<double>(cfg.n_relations() + 2 * cfg.type_dim)));
    }
    std::fill(p.scales.begin(), p.scales.end(), 1.0);
    const std::size_t m = cfg.n_relations();
    std::size_t col = 0;
    if (cfg.features.prototypes) {
      const std::size_t leaf = cfg.rp_features - m;
      for (std::size_t r = 0; r < m; ++r) p.fuse_w(r, leaf + r) = 1.0;
      col += cfg.rp_features;
    }
    if (cfg.features.types) {
      for (std::size_t r = 0; r < m; ++r) p.fuse_w(r, col + r) = 1.0;
      col += m;
    }
    if (cfg.features.encoder) {
      for (std::size_t r = 0; r < m; ++r) p.fuse_w(r, col + r) = 1.0;
    }
    return p;
  }
};

/// softmax(W [alpha*c_rp | beta*c_type | gamma*c_re] + b); empty spans are
/// treated as disabled blocks.
inline Vec fuse(std::span<const double> c_rp, std::span<const double> c_type, std::span<const double> c_re,
                std::span<const double> scales, const Matrix& w, std::span<const double> b) {
  Vec u;
  u.reserve(c_rp.size() + c_type.size() + c_re.size());
  for (double v : c_rp) u.push_back(scales[0] * v);
  for (double v : c_type) u.push_back(scales[1] * v);
  for (double v : c_re) u.push_back(scales[2] * v);
  if (u.size() != w.cols() || b.size() != w.rows()) {
    fail(ErrorKind::kDimension, "fuse: features have " + std::to_string(u.size()) + " entries but W is " +
                                    std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
  return softmax(affine(w, u, b));
}

inline constexpr double kProbFloor = 1e-30;

struct LossValue {
  double value = 0.0;
  bool clamped = false;  // probs[gold] was below the floor
};

inline LossValue cross_entropy(std::span<const double> probs, std::size_t gold) {
  if (gold >= probs.size()) fail(ErrorKind::kDimension, "gold relation out of range");
  const double p = probs[gold];
  if (p < kProbFloor) return {-std::log(kProbFloor), true};
  return {-std::log(p), false};
}

/// A bag with everything the model needs, resolved to ids and features.
struct PreparedBag {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::size_t relation = 0;
  std::vector<EncSentence> sentences;
  std::vector<long> expressed;  // relation id per sentence, -1 when unknown
  Vec rp_features;
  std::vector<std::size_t> head_types;
  std::vector<std::size_t> tail_types;
};

/// Optional inputs: prototype features need `emb` and `protos`, type features
/// need `types`.
inline std::vector<PreparedBag> prepare_bags(const BagDataset& bags, const RelationSet& rels, const Vocabulary& vocab,
                                             const EntityEmbeddings* emb, const PrototypeSet* protos,
                                             const TypeCatalog* types) {
  std::vector<PreparedBag> out;
  out.reserve(bags.size());
  for (const auto& b : bags) {
    PreparedBag p;
    p.head = b.head;
    p.tail = b.tail;
    p.relation = rels.id(b.relation);
    for (const auto& s : b.sentences) {
      EncSentence e;
      for (const auto& t : s.tokens) e.tokens.push_back(vocab.id(t));
      e.head_idx = s.head_idx;
      e.tail_idx = s.tail_idx;
      p.sentences.push_back(std::move(e));
      p.expressed.push_back(!s.expressed.empty() && rels.contains(s.expressed) ? static_cast<long>(rels.id(s.expressed))
                                                                                : -1L);
    }
    if (emb != nullptr && protos != nullptr) p.rp_features = prototype_features(mutual_relation(*emb, b.head, b.tail), *protos);
    if (types != nullptr) {
      if (b.head >= types->n_entities() || b.tail >= types->n_entities()) {
        fail(ErrorKind::kDimension, "bag entity id outside the type catalog");
      }
      p.head_types = types->entity_types[b.head];
      p.tail_types = types->entity_types[b.tail];
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct ForwardState {
  Vec type_features;
  Vec c_type;
  BagCache encoder;
  Vec u;  // scaled, concatenated fusion input
  Vec probs;
};

struct Prediction {
  std::size_t relation = 0;
  double confidence = 0.0;
  Vec scores;  // per relation id
};

class RelationModel {
 public:
  RelationModel() = default;
  explicit RelationModel(ModelConfig cfg) : config_(std::move(cfg)), params_(ModelParams::init(config_)) {}
  RelationModel(ModelConfig cfg, ModelParams params) : config_(std::move(cfg)), params_(std::move(params)) {}

  const ModelConfig& config() const { return config_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  /// Fused distribution with the attention query set to `query`.
  ForwardState forward(const PreparedBag& bag, std::size_t query, Rng* dropout = nullptr) const {
    check_bag(bag);
    const std::size_t m = config_.n_relations();
    ForwardState st;
    st.u.reserve(config_.fusion_cols());
    const double alpha = params_.scales[0], beta = params_.scales[1], gamma = params_.scales[2];
    if (config_.features.prototypes) {
      for (double v : bag.rp_features) st.u.push_back(alpha * v);
    }
    if (config_.features.types) {
      st.type_features = type_features(bag);
      st.c_type = type_score(st.type_features, params_.type_w, params_.type_b);
      for (double v : st.c_type) st.u.push_back(beta * v);
    }
    if (config_.features.encoder) {
      st.encoder = encoder_forward(bag.sentences, query, params_.enc, config_.encoder, dropout);
      for (double v : st.encoder.probs) st.u.push_back(gamma * v);
    }
    st.probs = softmax(affine(params_.fuse_w, st.u, params_.fuse_b));
    if (st.probs.size() != m) fail(ErrorKind::kDimension, "fused distribution has the wrong size");
    return st;
  }

  /// Accumulates dL/dtheta of L = -log probs[gold] into `grads`.
  void backward(const PreparedBag& bag, const ForwardState& st, std::size_t gold, ModelParams& grads) const {
    const std::size_t m = config_.n_relations();
    Vec dlogits = st.probs;
    dlogits[gold] -= 1.0;
    Vec du(st.u.size(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      grads.fuse_b[r] += dlogits[r];
      const auto wr = params_.fuse_w.row(r);
      auto gw = grads.fuse_w.row(r);
      for (std::size_t k = 0; k < st.u.size(); ++k) {
        gw[k] += dlogits[r] * st.u[k];
        du[k] += dlogits[r] * wr[k];
      }
    }
    std::size_t col = 0;
    if (config_.features.prototypes) {
      for (std::size_t k = 0; k < bag.rp_features.size(); ++k) grads.scales[0] += du[col + k] * bag.rp_features[k];
      col += bag.rp_features.size();
    }
    if (config_.features.types) {
      Vec up(m);
      for (std::size_t r = 0; r < m; ++r) {
        grads.scales[1] += du[col + r] * st.c_type[r];
        up[r] = params_.scales[1] * du[col + r];
      }
      TypePathGrads tg{Matrix(grads.type_w.rows(), grads.type_w.cols()), Vec(m, 0.0),
                       Matrix(grads.type_table.rows(), grads.type_table.cols())};
      type_path_backward(bag.head_types, bag.tail_types, st.type_features, st.c_type, up, params_.type_w, tg);
      add_into(grads.type_w.data(), tg.w.data());
      add_into(grads.type_b, tg.b);
      add_into(grads.type_table.data(), tg.table.data());
      col += m;
    }
    if (config_.features.encoder) {
      Vec up(m);
      for (std::size_t r = 0; r < m; ++r) {
        grads.scales[2] += du[col + r] * st.encoder.probs[r];
        up[r] = params_.scales[2] * du[col + r];
      }
      encoder_backward(st.encoder, up, params_.enc, config_.encoder, grads.enc);
    }
  }

  /// Per-relation scores: the score of relation r is the fused probability of
  /// r when the attention query is r. The argmax picks the lowest id on ties.
  Prediction predict(const PreparedBag& bag) const {
    check_bag(bag);
    const std::size_t m = config_.n_relations();
    Prediction pred;
    pred.scores.assign(m, 0.0);
    Vec fixed;
    const double alpha = params_.scales[0], beta = params_.scales[1], gamma = params_.scales[2];
    if (config_.features.prototypes) {
      for (double v : bag.rp_features) fixed.push_back(alpha * v);
    }
    if (config_.features.types) {
      for (double v : type_score(type_features(bag), params_.type_w, params_.type_b)) fixed.push_back(beta * v);
    }
    if (!config_.features.encoder) {
      pred.scores = softmax(affine(params_.fuse_w, fixed, params_.fuse_b));
    } else {
      const std::vector<Vec> xs = sentence_vectors(bag);
      Vec u = fixed;
      u.resize(fixed.size() + m);
      for (std::size_t r = 0; r < m; ++r) {
        const AttentionResult att = attention_forward(xs, r, params_.enc);
        const Vec c_re = re_score(att.bag, params_.enc);
        for (std::size_t k = 0; k < m; ++k) u[fixed.size() + k] = gamma * c_re[k];
        pred.scores[r] = softmax(affine(params_.fuse_w, u, params_.fuse_b))[r];
      }
    }
    pred.relation = argmax(pred.scores);
    pred.confidence = pred.scores[pred.relation];
    return pred;
  }

  /// Attention weights over the bag's sentences for query `relation`
  /// (inference mode). A bag without encoder features gets uniform weights.
  Vec attention_weights(const PreparedBag& bag, std::size_t relation) const {
    check_bag(bag);
    if (!config_.features.encoder) return Vec(bag.sentences.size(), 1.0 / static_cast<double>(bag.sentences.size()));
    const std::vector<Vec> xs = sentence_vectors(bag);
    return attention_forward(xs, relation, params_.enc).weights;
  }

 private:
  static void add_into(std::span<double> dst, std::span<const double> src) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }

  void check_bag(const PreparedBag& bag) const {
    if (bag.sentences.empty()) fail(ErrorKind::kInvalidArgument, "empty bag");
    if (config_.features.prototypes && bag.rp_features.size() != config_.rp_features) {
      fail(ErrorKind::kDimension, "bag has " + std::to_string(bag.rp_features.size()) +
                                      " prototype features, model expects " + std::to_string(config_.rp_features));
    }
    for (std::size_t t : bag.head_types) {
      if (t >= config_.n_types) fail(ErrorKind::kDimension, "type id out of range");
    }
    for (std::size_t t : bag.tail_types) {
      if (t >= config_.n_types) fail(ErrorKind::kDimension, "type id out of range");
    }
  }

  Vec type_features(const PreparedBag& bag) const {
    Vec f = mean_type_vector(bag.head_types, params_.type_table);
    const Vec t = mean_type_vector(bag.tail_types, params_.type_table);
    f.insert(f.end(), t.begin(), t.end());
    return f;
  }

  std::vector<Vec> sentence_vectors(const PreparedBag& bag) const {
    std::vector<Vec> xs;
    xs.reserve(bag.sentences.size());
    for (const auto& s : bag.sentences) {
      xs.push_back(pcnn_forward(embed_sentence(s, params_.enc, config_.encoder), s.head_idx, s.tail_idx, params_.enc,
                                config_.encoder)
                       .out);
    }
    return xs;
  }

  ModelConfig config_;
  ModelParams params_;
};

/// Mean cross-entropy over `bags` with dropout off.
inline double dataset_loss(const RelationModel& model, std::span<const PreparedBag> bags) {
  double total = 0.0;
  for (const auto& b : bags) total += cross_entropy(model.forward(b, b.relation).probs, b.relation).value;
  return bags.empty() ? 0.0 : total / static_cast<double>(bags.size());
}

struct TrainConfig {
  double lr = 0.3;
  std::size_t batch_size = 160;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  bool shuffle = true;
  double clip_norm = 5.0;  // <= 0 disables clipping
  bool dropout = true;
  std::size_t threads = 1;

  void validate() const {
    if (!(lr > 0.0) || batch_size == 0 || threads == 0) fail(ErrorKind::kUsage, "invalid training configuration");
  }
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean loss per epoch
  std::size_t clamped = 0;         // losses that hit the probability floor
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Minibatch SGD on batch-averaged cross-entropy with the gold relation as
/// attention query. Each bag's dropout stream is seeded from (seed, epoch,
/// position), and per-thread gradients are summed in thread order, so a run
/// is reproducible for a fixed thread count.
inline TrainResult train_model(RelationModel& model, std::span<const PreparedBag> bags, const TrainConfig& cfg,
                               const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (bags.empty()) fail(ErrorKind::kInvalidArgument, "training set is empty");
  TrainResult result;
  Rng order_rng(mix_seed(cfg.seed, 0x5348554646ULL));
  std::vector<std::size_t> order(bags.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  const std::size_t n_threads = std::min(cfg.threads, cfg.batch_size);
  std::vector<ModelParams> grads(n_threads, ModelParams::zeros(model.config()));
  std::vector<double> losses(n_threads);
  std::vector<std::size_t> clamps(n_threads);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) order_rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto work = [&](std::size_t t, std::size_t lo, std::size_t hi) {
        grads[t].set_zero();
        losses[t] = 0.0;
        clamps[t] = 0;
        for (std::size_t pos = lo; pos < hi; ++pos) {
          const PreparedBag& bag = bags[order[pos]];
          Rng drop(mix_seed(cfg.seed, (static_cast<std::uint64_t>(epoch) << 32) ^ pos));
          const ForwardState st = model.forward(bag, bag.relation, cfg.dropout ? &drop : nullptr);
          const LossValue l = cross_entropy(st.probs, bag.relation);
          losses[t] += l.value;
          clamps[t] += l.clamped ? 1 : 0;
          model.backward(bag, st, bag.relation, grads[t]);
        }
      };
      const std::size_t n = end - start;
      const std::size_t used = std::min(n_threads, n);
      if (used <= 1) {
        work(0, start, end);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(used);
        for (std::size_t t = 0; t < used; ++t) {
          const std::size_t lo = start + n * t / used, hi = start + n * (t + 1) / used;
          pool.emplace_back([&, t, lo, hi] {
            try {
              work(t, lo, hi);
            } catch (...) {
              errors[t] = std::current_exception();
            }
          });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
      }
      double batch_loss = 0.0;
      for (std::size_t t = 0; t < used; ++t) {
        batch_loss += losses[t];
        result.clamped += clamps[t];
      }
      if (!std::isfinite(batch_loss)) {
        fail(ErrorKind::kNumeric, "non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting " +
                                      std::to_string(start));
      }
      epoch_total += batch_loss;

      auto total = grads[0].tensors();
      for (std::size_t t = 1; t < used; ++t) {
        auto part = grads[t].tensors();
        for (std::size_t i = 0; i < total.size(); ++i) {
          for (std::size_t k = 0; k < total[i].values.size(); ++k) total[i].values[k] += part[i].values[k];
        }
      }
      const double inv = 1.0 / static_cast<double>(n);
      double sq = 0.0;
      for (auto& g : total) {
        for (double& v : g.values) {
          v *= inv;
          sq += v * v;
        }
      }
      const double gnorm = std::sqrt(sq);
      if (!std::isfinite(gnorm)) fail(ErrorKind::kNumeric, "non-finite gradient at epoch " + std::to_string(epoch));
      const double scale = (cfg.clip_norm > 0.0 && gnorm > cfg.clip_norm) ? cfg.clip_norm / gnorm : 1.0;
      auto params = model.params().tensors();
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].values.size(); ++k) {
          params[i].values[k] -= cfg.lr * scale * total[i].values[k];
        }
      }
    }
    const double mean = epoch_total / static_cast<double>(bags.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

// Model archive:
//   PREXARCH
//   manifest <bytes>\n<key=value lines>
//   entry <name> <bytes>\n<binary matrix>      (one per parameter tensor)
inline constexpr const char* kArchiveMagic = "PREXARCH";

inline std::string model_manifest(const ModelConfig& cfg) {
  std::ostringstream out;
  const auto& e = cfg.encoder;
  out << "vocab_size=" << e.vocab_size << "\nword_dim=" << e.word_dim << "\npos_dim=" << e.pos_dim
      << "\nwindow=" << e.window << "\nn_filters=" << e.n_filters << "\nmax_len=" << e.max_len
      << "\nn_relations=" << e.n_relations << "\ndropout=" << io::fixed9(e.dropout_p) << "\nn_types=" << cfg.n_types
      << "\ntype_dim=" << cfg.type_dim << "\nrp_features=" << cfg.rp_features
      << "\nfeatures=" << cfg.features.name() << "\nseed=" << cfg.seed << "\n";
  return out.str();
}

inline ModelConfig parse_model_manifest(const std::string& text, const std::string& context) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kFormat, context + ": manifest line without '='");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorKind::kFormat, context + ": manifest is missing '" + key + "'");
    return it->second;
  };
  auto num = [&](const std::string& key) { return io::parse_int<std::size_t>(get(key), context + ": " + key); };
  ModelConfig cfg;
  cfg.encoder.vocab_size = num("vocab_size");
  cfg.encoder.word_dim = num("word_dim");
  cfg.encoder.pos_dim = num("pos_dim");
  cfg.encoder.window = num("window");
  cfg.encoder.n_filters = num("n_filters");
  cfg.encoder.max_len = num("max_len");
  cfg.encoder.n_relations = num("n_relations");
  cfg.encoder.dropout_p = io::parse_double(get("dropout"), context + ": dropout");
  cfg.n_types = num("n_types");
  cfg.type_dim = num("type_dim");
  cfg.rp_features = num("rp_features");
  cfg.features = FeatureMask::parse(get("features"));
  cfg.seed = io::parse_int<std::uint64_t>(get("seed"), context + ": seed");
  cfg.encoder.seed = cfg.seed;
  return cfg;
}

inline void save_model(const std::string& path, const RelationModel& model) {
  std::ostringstream out(std::ios::binary);
  const std::string manifest = model_manifest(model.config());
  out << kArchiveMagic << "\nmanifest " << manifest.size() << "\n" << manifest;
  ModelParams copy = model.params();
  for (const auto& t : copy.tensors()) {
    Matrix m(t.rows, t.cols);
    std::copy(t.values.begin(), t.values.end(), m.data().begin());
    std::ostringstream blob(std::ios::binary);
    io::write_matrix_binary(blob, m);
    const std::string bytes = blob.str();
    out << "entry " << t.name << " " << bytes.size() << "\n" << bytes;
  }
  io::open_output(path, true) << out.str();
}

inline RelationModel load_model(const std::string& path) {
  std::ifstream in = io::open_input(path, true);
  std::string line;
  auto header = [&](const char* what) {
    if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": truncated archive, expected " + what);
    return io::split(line, ' ');
  };
  if (!std::getline(in, line) || line != kArchiveMagic) fail(ErrorKind::kFormat, path + ": not a model archive");
  auto h = header("manifest");
  if (h.size() != 2 || h[0] != "manifest") fail(ErrorKind::kFormat, path + ": expected manifest header");
  std::string manifest(io::parse_int<std::size_t>(h[1], path), '\0');
  if (!in.read(manifest.data(), static_cast<std::streamsize>(manifest.size()))) {
    fail(ErrorKind::kFormat, path + ": truncated manifest");
  }
  ModelConfig cfg = parse_model_manifest(manifest, path);
  cfg.validate();
  ModelParams params = ModelParams::zeros(cfg);
  for (auto& t : params.tensors()) {
    h = header("tensor entry");
    if (h.size() != 3 || h[0] != "entry" || h[1] != t.name) {
      fail(ErrorKind::kFormat, path + ": expected entry '" + t.name + "'");
    }
    const Matrix m = io::read_matrix_binary(in, path + ": " + t.name);
    if (m.rows() != t.rows || m.cols() != t.cols) {
      fail(ErrorKind::kDimension, path + ": tensor " + t.name + " is " + std::to_string(m.rows()) + "x" +
                                      std::to_string(m.cols()) + ", manifest implies " + std::to_string(t.rows) + "x" +
                                      std::to_string(t.cols));
    }
    std::copy(m.data().begin(), m.data().end(), t.values.begin());
  }
  return RelationModel(std::move(cfg), std::move(params));
}

}  // namespace prex
