#pragma once

// Command-line pipeline: gen-synth, build-graph, train-embed, prototypes,
// train-re, eval, query. Every successful run writes `<output>.manifest`
// with the arguments, seed, wall-clock time and SHA-256 digests of the input
// and output files. Failures print one line
//   prex: error kind=<kind> msg="<message>"
// to stderr and exit with 2 (usage), 3 (input files) or 4 (numeric).

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prex/classifier.hpp"
#include "prex/corpus.hpp"
#include "prex/dataset.hpp"
#include "prex/eval.hpp"
#include "prex/graph_embed.hpp"
#include "prex/mutrel.hpp"
#include "prex/synth.hpp"
#include "prex/typefeat.hpp"

namespace prex {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kDataDirEnv = "PREX_DATA_DIR";

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kNumeric: return kExitNumeric;
    default: return kExitInput;
  }
}

inline std::string sha256_file(const std::string& path) {
  const std::string data = io::read_file(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::kNumeric, "SHA-256 failed for " + path);
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[md[k] >> 4]);
    out.push_back(hex[md[k] & 15]);
  }
  return out;
}

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> args;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> extra;  // key, value

  std::string render() const {
    std::string out = "subcommand=" + subcommand + "\nargs=";
    for (std::size_t k = 0; k < args.size(); ++k) out += (k ? " " : "") + args[k];
    out += "\nseed=" + std::to_string(seed) + "\nwall_clock_seconds=" + io::fixed9(wall_seconds) + "\n";
    for (const auto& [k, v] : extra) out += k + "=" + v + "\n";
    for (const auto& p : inputs) out += "input\t" + p + "\tsha256=" + sha256_file(p) + "\n";
    for (const auto& p : outputs) out += "output\t" + p + "\tsha256=" + sha256_file(p) + "\n";
    return out;
  }

  void write(const std::string& path) const { io::open_output(path) << render(); }
};

namespace cli_detail {

inline std::vector<std::size_t> parse_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  for (auto part : io::split(text, ',')) {
    if (part.empty()) continue;
    std::size_t v = 0;
    if (!io::try_parse_int(part, v)) fail(ErrorKind::kUsage, flag + ": expected a comma-separated list of integers");
    out.push_back(v);
  }
  return out;
}

inline std::string or_default(const std::string& value, const std::string& dir, const char* name) {
  return value.empty() ? dir + "/" + name : value;
}

struct Common {
  std::string dir;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool deterministic = false;

  std::size_t effective_threads() const { return deterministic ? 1 : std::max<std::size_t>(threads, 1); }
};

inline TripleStore load_known_triples(const std::string& path, const RelationSet& rels) {
  RelationSet copy = rels;
  TripleStore store = load_triples(path, copy);
  if (copy.size() != rels.size()) {
    fail(ErrorKind::kFormat, path + ": relation '" + copy.name(rels.size()) + "' is not in the relations file");
  }
  return TripleStore(store.triples(), rels.size());
}

}  // namespace cli_detail

/// Runs one command line (without the program name). Output goes to `out`,
/// diagnostics to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  const auto started = std::chrono::steady_clock::now();
  Common common;
  const char* env_dir = std::getenv(kDataDirEnv);
  common.dir = env_dir != nullptr && *env_dir != '\0' ? env_dir : ".";

  CLI::App app{"prex: distantly supervised relation extraction with entity-graph prototypes"};
  app.name("prex");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--dir", common.dir, std::string("data directory for default file names (env ") + kDataDirEnv + ")");
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--threads", common.threads, "worker threads where supported");
  app.add_flag("--deterministic", common.deterministic, "force single-threaded, reproducible execution");

  // gen-synth
  SynthConfig synth;
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic world into --dir");
  gen->add_option("--entities", synth.n_entities);
  gen->add_option("--relations", synth.n_relations, "relation count including NA");
  gen->add_option("--zipf", synth.zipf_exponent);
  gen->add_option("--head-count", synth.head_count, "triples of the most frequent relation");
  gen->add_option("--noise", synth.noise_rate, "fraction of bag sentences expressing another relation");
  gen->add_option("--max-sentences", synth.max_sentences_per_pair);
  gen->add_option("--pair-exponent", synth.pair_frequency_exponent);
  gen->add_option("--coarse-types", synth.coarse_types);
  gen->add_option("--clusters-per-type", synth.clusters_per_type);
  gen->add_option("--hierarchy-layers", synth.hierarchy_layers);
  gen->add_option("--proximate-pairs", synth.proximate_pairs);
  gen->add_option("--vocab", synth.vocab_size, "filler vocabulary size");
  gen->add_option("--trigger-prob", synth.trigger_prob);
  gen->add_option("--untyped", synth.untyped_fraction);
  gen->add_option("--test-fraction", synth.test_fraction);
  gen->add_option("--na-ratio", synth.na_ratio);
  gen->add_option("--background", synth.background_per_entity, "background sentences per entity");

  // build-graph
  std::string catalog_path, corpus_path, graph_path;
  std::uint64_t min_count = 1;
  auto* bg = app.add_subcommand("build-graph", "count entity co-occurrences in a corpus");
  bg->add_option("--catalog", catalog_path);
  bg->add_option("--corpus", corpus_path);
  bg->add_option("--min-count", min_count);
  bg->add_option("--out", graph_path);

  // train-embed
  EmbeddingConfig emb_cfg;
  std::string emb_path, emb_format = "text";
  auto* te = app.add_subcommand("train-embed", "train first- and second-order entity embeddings");
  te->add_option("--graph", graph_path);
  te->add_option("--dim-first", emb_cfg.dim_first);
  te->add_option("--dim-second", emb_cfg.dim_second);
  te->add_option("--negatives", emb_cfg.n_negative);
  te->add_option("--samples", emb_cfg.n_samples);
  te->add_option("--embed-lr", emb_cfg.lr_initial);
  te->add_option("--format", emb_format)->check(CLI::IsMember({"text", "binary"}));
  te->add_option("--out", emb_path);

  // prototypes
  std::string relations_path, triples_path, hierarchy_path, protos_path;
  std::size_t prototype_dim = 128;
  auto* pr = app.add_subcommand("prototypes", "compute hierarchical relation prototypes");
  pr->add_option("--embeddings", emb_path);
  pr->add_option("--relations", relations_path);
  pr->add_option("--triples", triples_path);
  pr->add_option("--hierarchy", hierarchy_path, "hierarchy file; derived from relation names when absent");
  pr->add_option("--prototype-dim", prototype_dim);
  pr->add_option("--out", protos_path);

  // train-re
  ModelConfig model_cfg;
  model_cfg.encoder.word_dim = 50;
  TrainConfig train_cfg;
  std::string train_bags_path, types_path, model_path, vocab_path, features = "all";
  std::size_t vocab_cap = 50000;
  auto* tr = app.add_subcommand("train-re", "train the fused relation classifier");
  tr->add_option("--train-bags", train_bags_path);
  tr->add_option("--relations", relations_path);
  tr->add_option("--embeddings", emb_path);
  tr->add_option("--prototypes", protos_path);
  tr->add_option("--catalog", catalog_path);
  tr->add_option("--types", types_path);
  tr->add_option("--features", features, "comma list of prototypes,types,encoder or all");
  tr->add_option("--window", model_cfg.encoder.window);
  tr->add_option("--filters", model_cfg.encoder.n_filters);
  tr->add_option("--word-dim", model_cfg.encoder.word_dim);
  tr->add_option("--pos-dim", model_cfg.encoder.pos_dim);
  tr->add_option("--max-len", model_cfg.encoder.max_len);
  tr->add_option("--dropout", model_cfg.encoder.dropout_p);
  tr->add_option("--type-dim", model_cfg.type_dim);
  tr->add_option("--prototype-dim", prototype_dim);
  tr->add_option("--lr", train_cfg.lr);
  tr->add_option("--batch", train_cfg.batch_size);
  tr->add_option("--epochs", train_cfg.epochs);
  tr->add_option("--clip", train_cfg.clip_norm);
  tr->add_option("--vocab-size", vocab_cap);
  tr->add_option("--out", model_path);
  tr->add_option("--vocab-out", vocab_path);

  // eval
  std::string predictions_in, predictions_out, test_bags_path, report_path, curve_path, svg_path;
  std::string p_at = "100,200,300", hits_k = "10,15,20", hits_cutoff = "100,200";
  auto* ev = app.add_subcommand("eval", "held-out evaluation of a model or a predictions file");
  ev->add_option("--predictions", predictions_in, "evaluate this predictions file instead of a model");
  ev->add_option("--model", model_path);
  ev->add_option("--vocab", vocab_path);
  ev->add_option("--test-bags", test_bags_path);
  ev->add_option("--train-bags", train_bags_path, "training bags, for long-tail relation counts");
  ev->add_option("--relations", relations_path);
  ev->add_option("--embeddings", emb_path);
  ev->add_option("--prototypes", protos_path);
  ev->add_option("--catalog", catalog_path);
  ev->add_option("--types", types_path);
  ev->add_option("--p-at", p_at);
  ev->add_option("--hits-k", hits_k);
  ev->add_option("--hits-cutoff", hits_cutoff);
  ev->add_option("--predictions-out", predictions_out);
  ev->add_option("--report", report_path);
  ev->add_option("--curve", curve_path);
  ev->add_option("--svg", svg_path);

  // query
  std::size_t q_head = 0, q_tail = 0, q_k = 10;
  std::string query_out;
  auto* q = app.add_subcommand("query", "cosine-similarity queries");
  q->require_subcommand(1);
  auto* qp = q->add_subcommand("nearest-prototypes", "relations whose prototype is closest to a pair's MR");
  auto* qm = q->add_subcommand("nearest-mr", "known pairs whose MR is closest to a pair's MR");
  for (auto* sub : {qp, qm}) {
    sub->add_option("--head", q_head)->required();
    sub->add_option("--tail", q_tail)->required();
    sub->add_option("--k", q_k);
    sub->add_option("--embeddings", emb_path);
    sub->add_option("--relations", relations_path);
    sub->add_option("--out", query_out);
  }
  qp->add_option("--prototypes", protos_path);
  qm->add_option("--pairs", triples_path, "triples whose pairs are searched");

  auto report_error = [&](const std::string& kind, const std::string& msg) {
    std::string clean;
    for (char c : msg) {
      if (c == '"' || c == '\\') clean.push_back('\\');
      clean.push_back(c == '\n' ? ' ' : c);
    }
    err << "prex: error kind=" << kind << " msg=\"" << clean << "\"\n";
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  RunManifest manifest;
  manifest.args = args;
  manifest.seed = common.seed;
  const std::string& dir = common.dir;
  const std::size_t threads = common.effective_threads();

  try {
    std::string manifest_path;
    if (gen->parsed()) {
      manifest.subcommand = "gen-synth";
      synth.seed = common.seed;
      std::filesystem::create_directories(dir);
      const SynthWorld world = generate_world(synth);
      for (const auto& f : save_world(dir, world)) manifest.outputs.push_back(dir + "/" + f);
      const WorldStats s = world_stats(world);
      out << "entities=" << world.catalog.size() << " relations=" << world.relations.size()
          << " triples=" << s.total_triples << " bags=" << s.total_bags << " sentences=" << s.total_sentences
          << " corpus_lines=" << world.corpus.size() << "\n";
      manifest_path = dir + "/gen-synth.manifest";
    } else if (bg->parsed()) {
      manifest.subcommand = "build-graph";
      catalog_path = or_default(catalog_path, dir, WorldFiles::kCatalog);
      corpus_path = or_default(corpus_path, dir, WorldFiles::kCorpus);
      graph_path = or_default(graph_path, dir, "graph.tsv");
      const EntityCatalog catalog = load_entity_catalog(catalog_path);
      const auto sentences = match_corpus(corpus_path, catalog);
      const CooccurrenceGraph g = build_cooccurrence_graph(sentences, catalog.size(), min_count, threads);
      save_graph(graph_path, g);
      out << "vertices=" << g.n_vertices << " edges=" << g.edges.size() << " sentences=" << sentences.size() << "\n";
      manifest.inputs = {catalog_path, corpus_path};
      manifest.outputs = {graph_path};
      manifest.extra = {{"min_count", std::to_string(min_count)}};
      manifest_path = graph_path + ".manifest";
    } else if (te->parsed()) {
      manifest.subcommand = "train-embed";
      graph_path = or_default(graph_path, dir, "graph.tsv");
      emb_path = or_default(emb_path, dir, emb_format == "binary" ? "embeddings.bin" : "embeddings.txt");
      emb_cfg.seed = common.seed;
      emb_cfg.threads = threads;
      emb_cfg.validate();
      const CooccurrenceGraph g = load_graph(graph_path);
      const EntityEmbeddings emb = train_embeddings(g, emb_cfg);
      if (emb_format == "binary") {
        save_embeddings_binary(emb_path, emb);
      } else {
        save_embeddings_text(emb_path, emb);
      }
      out << "entities=" << emb.n() << " dim=" << emb.dim() << " samples=" << emb_cfg.n_samples << "\n";
      manifest.inputs = {graph_path};
      manifest.outputs = {emb_path};
      manifest.extra = {{"dim_first", std::to_string(emb_cfg.dim_first)},
                        {"dim_second", std::to_string(emb_cfg.dim_second)},
                        {"negatives", std::to_string(emb_cfg.n_negative)},
                        {"samples", std::to_string(emb_cfg.n_samples)},
                        {"threads", std::to_string(threads)}};
      manifest_path = emb_path + ".manifest";
    } else if (pr->parsed()) {
      manifest.subcommand = "prototypes";
      emb_path = or_default(emb_path, dir, "embeddings.txt");
      relations_path = or_default(relations_path, dir, WorldFiles::kRelations);
      triples_path = or_default(triples_path, dir, WorldFiles::kTrainTriples);
      protos_path = or_default(protos_path, dir, "prototypes.txt");
      const EntityEmbeddings emb = load_embeddings(emb_path);
      if (emb.dim() != prototype_dim) {
        fail(ErrorKind::kDimension, emb_path + ": embedding dim " + std::to_string(emb.dim()) +
                                        " does not match --prototype-dim " + std::to_string(prototype_dim));
      }
      const RelationSet rels = load_relations(relations_path);
      const TripleStore triples = load_known_triples(triples_path, rels);
      manifest.inputs = {emb_path, relations_path, triples_path};
      const std::string default_h = dir + "/" + WorldFiles::kHierarchy;
      if (hierarchy_path.empty() && std::filesystem::exists(default_h)) hierarchy_path = default_h;
      RelationHierarchy h;
      if (hierarchy_path.empty()) {
        h = RelationHierarchy::from_relation_names(rels);
      } else {
        h = load_hierarchy(hierarchy_path, rels);
        manifest.inputs.push_back(hierarchy_path);
      }
      const PrototypeSet protos = lift_prototypes(compute_leaf_prototypes(emb, triples), h);
      save_prototypes(protos_path, protos);
      std::size_t empty = 0;
      for (bool e : protos.empty.back()) empty += e ? 1 : 0;
      out << "layers=" << protos.depth() << " leaves=" << protos.leaves().rows() << " empty_leaves=" << empty
          << " dim=" << protos.dim() << "\n";
      manifest.outputs = {protos_path};
      manifest_path = protos_path + ".manifest";
    } else if (tr->parsed()) {
      manifest.subcommand = "train-re";
      train_bags_path = or_default(train_bags_path, dir, WorldFiles::kTrainBags);
      relations_path = or_default(relations_path, dir, WorldFiles::kRelations);
      model_path = or_default(model_path, dir, "model.prex");
      vocab_path = or_default(vocab_path, dir, "vocab.tsv");
      model_cfg.features = FeatureMask::parse(features);
      const RelationSet rels = load_relations(relations_path);
      const BagDataset bags = load_bags(train_bags_path);
      manifest.inputs = {relations_path, train_bags_path};
      EntityEmbeddings emb;
      PrototypeSet protos;
      TypeCatalog types;
      if (model_cfg.features.prototypes) {
        emb_path = or_default(emb_path, dir, "embeddings.txt");
        protos_path = or_default(protos_path, dir, "prototypes.txt");
        emb = load_embeddings(emb_path);
        protos = load_prototypes(protos_path);
        if (protos.dim() != emb.dim() || emb.dim() != prototype_dim) {
          fail(ErrorKind::kDimension, "prototype dim " + std::to_string(protos.dim()) + ", embedding dim " +
                                          std::to_string(emb.dim()) + ", --prototype-dim " +
                                          std::to_string(prototype_dim) + " must agree");
        }
        if (protos.leaves().rows() != rels.size()) {
          fail(ErrorKind::kDimension, protos_path + ": prototypes cover " + std::to_string(protos.leaves().rows()) +
                                          " relations, relations file has " + std::to_string(rels.size()));
        }
        manifest.inputs.push_back(emb_path);
        manifest.inputs.push_back(protos_path);
      }
      if (model_cfg.features.types) {
        catalog_path = or_default(catalog_path, dir, WorldFiles::kCatalog);
        types_path = or_default(types_path, dir, WorldFiles::kTypes);
        types = load_types(types_path, load_entity_catalog(catalog_path).size());
        manifest.inputs.push_back(catalog_path);
        manifest.inputs.push_back(types_path);
      }
      const Vocabulary vocab = Vocabulary::build(bags, vocab_cap);
      const auto prepared = prepare_bags(bags, rels, vocab, model_cfg.features.prototypes ? &emb : nullptr,
                                         model_cfg.features.prototypes ? &protos : nullptr,
                                         model_cfg.features.types ? &types : nullptr);
      model_cfg.encoder.vocab_size = vocab.size();
      model_cfg.encoder.n_relations = rels.size();
      model_cfg.encoder.seed = common.seed;
      model_cfg.n_types = model_cfg.features.types ? types.n_types() : 0;
      model_cfg.rp_features = model_cfg.features.prototypes ? protos.feature_size() : 0;
      model_cfg.seed = common.seed;
      train_cfg.seed = common.seed;
      train_cfg.threads = threads;
      RelationModel model(model_cfg);
      const TrainResult result = train_model(model, prepared, train_cfg, [&](std::size_t epoch, double loss) {
        out << "epoch " << epoch + 1 << " loss " << io::fixed9(loss) << "\n";
      });
      save_model(model_path, model);
      save_vocabulary(vocab_path, vocab);
      const std::string loss_path = model_path + ".loss.tsv";
      {
        std::string text = "epoch\tloss\n";
        for (std::size_t k = 0; k < result.epoch_loss.size(); ++k) {
          text += std::to_string(k + 1) + "\t" + io::fixed9(result.epoch_loss[k]) + "\n";
        }
        io::open_output(loss_path) << text;
      }
      const auto& s = model.params().scales;
      const std::string ratio = io::fixed9(std::abs(s[0])) + ":" + io::fixed9(std::abs(s[1])) + ":" +
                                io::fixed9(std::abs(s[2]));
      out << "scales |alpha|:|beta|:|gamma| = " << ratio << "\n";
      if (result.clamped > 0) out << "warning: " << result.clamped << " losses hit the probability floor\n";
      manifest.outputs = {model_path, vocab_path, loss_path};
      manifest.extra = {{"features", model_cfg.features.name()}, {"scales", ratio},
                        {"epochs", std::to_string(train_cfg.epochs)}, {"threads", std::to_string(threads)}};
      manifest_path = model_path + ".manifest";
    } else if (ev->parsed()) {
      manifest.subcommand = "eval";
      report_path = or_default(report_path, dir, "eval-report.txt");
      curve_path = or_default(curve_path, dir, "pr-curve.csv");
      std::vector<PredictionRecord> records;
      std::size_t m = 0;
      if (!predictions_in.empty()) {
        records = load_predictions(predictions_in);
        m = records.empty() ? 0 : records.front().scores.size();
        manifest.inputs = {predictions_in};
      } else {
        model_path = or_default(model_path, dir, "model.prex");
        vocab_path = or_default(vocab_path, dir, "vocab.tsv");
        test_bags_path = or_default(test_bags_path, dir, WorldFiles::kTestBags);
        relations_path = or_default(relations_path, dir, WorldFiles::kRelations);
        predictions_out = or_default(predictions_out, dir, "predictions.tsv");
        const RelationModel model = load_model(model_path);
        const Vocabulary vocab = load_vocabulary(vocab_path);
        const RelationSet rels = load_relations(relations_path);
        if (rels.size() != model.config().n_relations()) {
          fail(ErrorKind::kDimension, "model has " + std::to_string(model.config().n_relations()) +
                                          " relations, relations file has " + std::to_string(rels.size()));
        }
        if (vocab.size() != model.config().encoder.vocab_size) {
          fail(ErrorKind::kDimension, "vocabulary size " + std::to_string(vocab.size()) + " does not match the model (" +
                                          std::to_string(model.config().encoder.vocab_size) + ")");
        }
        const BagDataset bags = load_bags(test_bags_path);
        manifest.inputs = {model_path, vocab_path, relations_path, test_bags_path};
        EntityEmbeddings emb;
        PrototypeSet protos;
        TypeCatalog types;
        const FeatureMask f = model.config().features;
        if (f.prototypes) {
          emb_path = or_default(emb_path, dir, "embeddings.txt");
          protos_path = or_default(protos_path, dir, "prototypes.txt");
          emb = load_embeddings(emb_path);
          protos = load_prototypes(protos_path);
          manifest.inputs.push_back(emb_path);
          manifest.inputs.push_back(protos_path);
        }
        if (f.types) {
          catalog_path = or_default(catalog_path, dir, WorldFiles::kCatalog);
          types_path = or_default(types_path, dir, WorldFiles::kTypes);
          types = load_types(types_path, load_entity_catalog(catalog_path).size());
          manifest.inputs.push_back(catalog_path);
          manifest.inputs.push_back(types_path);
        }
        const auto prepared = prepare_bags(bags, rels, vocab, f.prototypes ? &emb : nullptr,
                                           f.prototypes ? &protos : nullptr, f.types ? &types : nullptr);
        for (const auto& b : prepared) records.push_back({b.head, b.tail, b.relation, model.predict(b).scores});
        m = rels.size();
        save_predictions(predictions_out, records, m);
        manifest.outputs.push_back(predictions_out);
      }
      std::vector<std::size_t> train_counts;
      const std::string default_train = dir + "/" + WorldFiles::kTrainBags;
      if (train_bags_path.empty() && predictions_in.empty() && std::filesystem::exists(default_train)) {
        train_bags_path = default_train;
      }
      if (!train_bags_path.empty()) {
        train_counts.assign(m, 0);
        RelationSet rels;
        if (!relations_path.empty() || std::filesystem::exists(dir + "/" + WorldFiles::kRelations)) {
          relations_path = or_default(relations_path, dir, WorldFiles::kRelations);
          rels = load_relations(relations_path);
        }
        for (const auto& b : load_bags(train_bags_path)) {
          const std::size_t r = rels.id(b.relation);
          if (r >= m) fail(ErrorKind::kDimension, train_bags_path + ": relation '" + b.relation + "' outside the score range");
          ++train_counts[r];
        }
        manifest.inputs.push_back(train_bags_path);
      }
      const auto pn = parse_list(p_at, "--p-at");
      const auto hk = parse_list(hits_k, "--hits-k");
      const auto hc = train_counts.empty() ? std::vector<std::size_t>{} : parse_list(hits_cutoff, "--hits-cutoff");
      const EvalReport rep = evaluate(records, train_counts, pn, hk, hc);
      const std::string text = format_report(rep);
      io::open_output(report_path) << text;
      io::open_output(curve_path) << curve_csv(rep.curve);
      manifest.outputs.push_back(report_path);
      manifest.outputs.push_back(curve_path);
      if (!svg_path.empty()) {
        io::open_output(svg_path) << curve_svg(rep.curve);
        manifest.outputs.push_back(svg_path);
      }
      out << text;
      manifest_path = report_path + ".manifest";
    } else if (q->parsed()) {
      const bool by_proto = qp->parsed();
      manifest.subcommand = by_proto ? "query nearest-prototypes" : "query nearest-mr";
      emb_path = or_default(emb_path, dir, "embeddings.txt");
      relations_path = or_default(relations_path, dir, WorldFiles::kRelations);
      query_out = or_default(query_out, dir, by_proto ? "nearest-prototypes.tsv" : "nearest-mr.tsv");
      const EntityEmbeddings emb = load_embeddings(emb_path);
      const RelationSet rels = load_relations(relations_path);
      if (q_head >= emb.n() || q_tail >= emb.n()) fail(ErrorKind::kUsage, "query entity id out of range");
      std::string text;
      if (by_proto) {
        protos_path = or_default(protos_path, dir, "prototypes.txt");
        const PrototypeSet protos = load_prototypes(protos_path);
        if (protos.leaves().rows() != rels.size()) fail(ErrorKind::kDimension, "prototypes do not match the relations file");
        text = "rank\trelation\tcosine\n";
        const auto ranked = nearest_prototypes(emb, protos, q_head, q_tail, std::min(q_k, rels.size() - 1));
        for (std::size_t k = 0; k < ranked.size(); ++k) {
          text += std::to_string(k + 1) + "\t" + rels.name(ranked[k].relation) + "\t" +
                  io::fixed9(ranked[k].similarity) + "\n";
        }
        manifest.inputs = {emb_path, relations_path, protos_path};
      } else {
        triples_path = or_default(triples_path, dir, WorldFiles::kTrainTriples);
        const TripleStore store = load_known_triples(triples_path, rels);
        std::vector<EntityPair> pairs;
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> relation_of;
        for (const auto& t : store.triples()) {
          if (relation_of.emplace(std::make_pair(t.head, t.tail), t.relation).second) pairs.push_back({t.head, t.tail});
        }
        text = "rank\thead\ttail\trelation\tcosine\n";
        const auto ranked = nearest_mutual_relations(emb, pairs, {q_head, q_tail}, q_k);
        for (std::size_t k = 0; k < ranked.size(); ++k) {
          const auto& p = ranked[k].pair;
          text += std::to_string(k + 1) + "\t" + std::to_string(p.head) + "\t" + std::to_string(p.tail) + "\t" +
                  rels.name(relation_of[{p.head, p.tail}]) + "\t" + io::fixed9(ranked[k].cosine) + "\n";
        }
        manifest.inputs = {emb_path, relations_path, triples_path};
      }
      io::open_output(query_out) << text;
      out << text;
      manifest.outputs = {query_out};
      manifest_path = query_out + ".manifest";
    }
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest.write(manifest_path);
    return kExitOk;
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(to_string(ErrorKind::kMissingFile), e.what());
    return kExitInput;
  }
}

}  // namespace prex
