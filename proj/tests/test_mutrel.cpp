#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "prex/mutrel.hpp"
#include "test_support.hpp"

namespace prex {
namespace {

EntityEmbeddings rows(const std::vector<Vec>& vs) {
  EntityEmbeddings e{Matrix(vs.size(), vs.front().size())};
  for (std::size_t r = 0; r < vs.size(); ++r) std::copy(vs[r].begin(), vs[r].end(), e.vectors.row(r).begin());
  return e;
}

LeafPrototypes leaves(const std::vector<Vec>& vs) {
  return {rows(vs).vectors, std::vector<bool>(vs.size(), false)};
}

TEST(MutualRelation, TailMinusHead) {
  const auto e = rows({{1, 2}, {4, 6}});
  EXPECT_EQ(mutual_relation(e, 0, 1), (Vec{3, 4}));
  EXPECT_EQ(mutual_relation(e, 1, 0), (Vec{-3, -4}));
  EXPECT_EQ(mutual_relation(e, 1, 1), (Vec{0, 0}));
  EXPECT_THROW(mutual_relation(e, 0, 2), Error);
}

TEST(LeafPrototypes, MeanOfThreeMutualRelations) {
  // Head 0 at origin; tails carry MRs (1,0), (0,1), (2,2).
  const auto e = rows({{0, 0}, {1, 0}, {0, 1}, {2, 2}});
  const TripleStore store({{0, 1, 1}, {0, 1, 2}, {0, 1, 3}}, 3);
  const auto p = compute_leaf_prototypes(e, store);
  EXPECT_EQ(p.vectors.rows(), 3u);
  EXPECT_EQ(Vec(p.vectors.row(1).begin(), p.vectors.row(1).end()), (Vec{1, 1}));
  EXPECT_EQ(p.empty, (std::vector<bool>{true, false, true}));
  EXPECT_EQ(Vec(p.vectors.row(2).begin(), p.vectors.row(2).end()), (Vec{0, 0}));
}

TEST(LeafPrototypes, OppositeMutualRelationsCancel) {
  const auto e = rows({{0, 0}, {1, -2}, {-1, 2}});
  const auto p = compute_leaf_prototypes(e, TripleStore({{0, 1, 1}, {0, 1, 2}}, 2));
  EXPECT_EQ(p.vectors(1, 0), 0.0);
  EXPECT_EQ(p.vectors(1, 1), 0.0);
}

TEST(TripleStore, DuplicatesRemovedAndRangeChecked) {
  const TripleStore s({{0, 1, 2}, {0, 1, 2}, {2, 1, 0}}, 2);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_THROW(TripleStore({{0, 3, 1}}, 2), Error);
}

TEST(LeafPrototypes, MatchesBruteForceMean) {
  Rng rng(5);
  const std::size_t n = 300, dim = 7, m = 12;
  EntityEmbeddings e{Matrix(n, dim)};
  fill_uniform(e.vectors, rng, 2.0);
  std::vector<Triple> triples;
  for (int k = 0; k < 10000; ++k) triples.push_back({rng.below(n), rng.below(m - 1), rng.below(n)});
  const TripleStore store(triples, m);
  const auto got = compute_leaf_prototypes(e, store);
  // Independent oracle: group the deduplicated triples, then average.
  std::map<std::size_t, std::vector<Triple>> groups;
  for (const auto& t : store.triples()) groups[t.relation].push_back(t);
  for (std::size_t r = 0; r < m; ++r) {
    const auto it = groups.find(r);
    EXPECT_EQ(got.empty[r], it == groups.end());
    for (std::size_t c = 0; c < dim; ++c) {
      double sum = 0.0;
      if (it != groups.end()) {
        for (const auto& t : it->second) sum += e.vectors(t.tail, c) - e.vectors(t.head, c);
        sum /= static_cast<double>(it->second.size());
      }
      EXPECT_NEAR(got.vectors(r, c), sum, 1e-12);
    }
  }
}

RelationSet relation_set(const std::vector<std::string>& names) { return RelationSet(names); }

TEST(Hierarchy, FromSlashNames) {
  const auto rels = relation_set({"/location/us_state/capital", "/location/country/capital", "/people/person/born"});
  const auto h = RelationHierarchy::from_relation_names(rels);
  ASSERT_EQ(h.depth(), 3u);
  EXPECT_EQ(h.layer(0).names, (std::vector<std::string>{"NA", "/location", "/people"}));
  EXPECT_EQ(h.layer(1).names,
            (std::vector<std::string>{"NA", "/location/us_state", "/location/country", "/people/person"}));
  EXPECT_EQ(h.layer(1).parent, (std::vector<std::size_t>{0, 1, 1, 2}));
  EXPECT_EQ(h.layer(2).names, rels.names());
  EXPECT_EQ(h.layer(2).parent, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Hierarchy, FlatNamesGiveSingleLayer) {
  const auto h = RelationHierarchy::from_relation_names(relation_set({"born_in", "works_for"}));
  EXPECT_EQ(h.depth(), 1u);
}

TEST(Hierarchy, FileRoundTrip) {
  test::TempDir dir;
  const auto rels = relation_set({"/a/x/r1", "/a/y/r2", "/b/z/r3"});
  const auto h = RelationHierarchy::from_relation_names(rels);
  save_hierarchy(dir.file("h.tsv"), h);
  const auto back = load_hierarchy(dir.file("h.tsv"), rels);
  ASSERT_EQ(back.depth(), h.depth());
  for (std::size_t k = 0; k < h.depth(); ++k) {
    EXPECT_EQ(back.layer(k).names, h.layer(k).names);
    EXPECT_EQ(back.layer(k).parent, h.layer(k).parent);
  }
}

TEST(Hierarchy, OrphansAndChildlessNodesRejected) {
  EXPECT_THROW(RelationHierarchy({HierarchyLayer{{"p"}, {}}, HierarchyLayer{{"NA", "r"}, {0}}}).validate(2), Error);
  EXPECT_THROW(RelationHierarchy({HierarchyLayer{{"p", "q"}, {}}, HierarchyLayer{{"NA", "r"}, {0, 0}}}).validate(2),
               Error);
  EXPECT_THROW(RelationHierarchy({HierarchyLayer{{"p"}, {}}, HierarchyLayer{{"NA", "r"}, {0, 4}}}).validate(2), Error);
  const RelationHierarchy ok({HierarchyLayer{{"p"}, {}}, HierarchyLayer{{"NA", "r"}, {0, 0}}});
  EXPECT_NO_THROW(ok.validate(2));
  EXPECT_THROW(ok.validate(3), Error);
}

TEST(Lift, SingleChildCopiesAndTwoChildrenAverage) {
  const RelationHierarchy h({HierarchyLayer{{"p", "q"}, {}}, HierarchyLayer{{"NA", "a", "b"}, {0, 1, 1}}});
  const auto set = lift_prototypes(leaves({{5, 7}, {0, 2}, {2, 0}}), h);
  ASSERT_EQ(set.depth(), 2u);
  EXPECT_EQ(set.layers[0](0, 0), 5.0);
  EXPECT_EQ(set.layers[0](0, 1), 7.0);
  EXPECT_EQ(set.layers[0](1, 0), 1.0);
  EXPECT_EQ(set.layers[0](1, 1), 1.0);
  EXPECT_EQ(set.feature_size(), 5u);
}

TEST(Lift, FlatIsIdentity) {
  const auto rels = relation_set({"r1", "r2"});
  const auto leaf = leaves({{1, 2}, {3, 4}, {5, 6}});
  const auto set = lift_prototypes(leaf, RelationHierarchy::flat(rels));
  ASSERT_EQ(set.depth(), 1u);
  EXPECT_EQ(set.layers[0], leaf.vectors);
}

TEST(Lift, EmptyChildrenExcluded) {
  const RelationHierarchy h({HierarchyLayer{{"p", "q"}, {}}, HierarchyLayer{{"NA", "a", "b"}, {0, 1, 1}}});
  auto leaf = leaves({{0, 0}, {4, 4}, {0, 0}});
  leaf.empty = {true, false, true};
  const auto set = lift_prototypes(leaf, h);
  EXPECT_EQ(set.layers[0](1, 0), 4.0);
  EXPECT_TRUE(set.empty[0][0]);
  EXPECT_FALSE(set.empty[0][1]);
}

TEST(Lift, MatchesBruteForceAndIgnoresChildOrder) {
  Rng rng(9);
  const auto rels = relation_set([] {
    std::vector<std::string> names;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 5; ++c) names.push_back("/t" + std::to_string(a) + "/m" + std::to_string(b) + "/r" + std::to_string(c));
      }
    }
    return names;
  }());
  const auto h = RelationHierarchy::from_relation_names(rels);
  LeafPrototypes leaf{Matrix(rels.size(), 3), std::vector<bool>(rels.size(), false)};
  fill_uniform(leaf.vectors, rng, 1.0);
  const auto set = lift_prototypes(leaf, h);
  // Oracle: every internal node is the mean of its leaf descendants' per-child means,
  // computed from names directly.
  std::map<std::string, Vec> mid_sum;
  std::map<std::string, int> mid_count;
  for (std::size_t r = 1; r < rels.size(); ++r) {
    const std::string mid = rels.name(r).substr(0, rels.name(r).rfind('/'));
    auto& s = mid_sum[mid];
    s.resize(3, 0.0);
    for (int c = 0; c < 3; ++c) s[c] += leaf.vectors(r, c);
    ++mid_count[mid];
  }
  for (std::size_t node = 1; node < h.layer(1).names.size(); ++node) {
    const auto& name = h.layer(1).names[node];
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(set.layers[1](node, c), mid_sum[name][c] / mid_count[name], 1e-12);
  }
  std::map<std::string, Vec> top_sum;
  std::map<std::string, int> top_count;
  for (const auto& [mid, s] : mid_sum) {
    const std::string top = mid.substr(0, mid.rfind('/'));
    auto& t = top_sum[top];
    t.resize(3, 0.0);
    for (int c = 0; c < 3; ++c) t[c] += s[c] / mid_count[mid];
    ++top_count[top];
  }
  for (std::size_t node = 1; node < h.layer(0).names.size(); ++node) {
    const auto& name = h.layer(0).names[node];
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(set.layers[0](node, c), top_sum[name][c] / top_count[name], 1e-12);
  }
  // Lifting the lifted layer again changes nothing.
  const RelationHierarchy upper({h.layer(0), h.layer(1)});
  const auto again = lift_prototypes({set.layers[1], set.empty[1]}, upper);
  for (std::size_t k = 0; k < again.layers[0].size(); ++k) {
    EXPECT_NEAR(again.layers[0].data()[k], set.layers[0].data()[k], 1e-12);
  }
}

PrototypeSet single_layer(const std::vector<Vec>& vs) {
  return {{rows(vs).vectors}, {std::vector<bool>(vs.size(), false)}};
}

TEST(PrototypeFeatures, DistancesZeroAndLn4) {
  const auto f = prototype_features(Vec{0.0}, single_layer({{0.0}, {std::log(4.0)}}));
  EXPECT_NEAR(f[0], 0.8, 1e-12);
  EXPECT_NEAR(f[1], 0.2, 1e-12);
}

TEST(PrototypeFeatures, EquidistantIsUniform) {
  const auto f = prototype_features(Vec{0, 0}, single_layer({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
  for (double v : f) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(PrototypeFeatures, ExactMatchIsSliceMax) {
  const auto f = prototype_features(Vec{3, 3}, single_layer({{-9, 0}, {3, 3}, {9, 9}}));
  EXPECT_EQ(argmax(f), 1u);
  EXPECT_THROW(prototype_features(Vec{1, 2, 3}, single_layer({{1, 0}})), Error);
}

TEST(PrototypeFeatures, SlicesNormalizedArgmaxIsNearest) {
  Rng rng(12);
  const RelationHierarchy h({HierarchyLayer{{"p", "q", "s"}, {}}, HierarchyLayer{{"NA", "a", "b", "c", "d", "e"}, {0, 1, 1, 2, 2, 2}}});
  for (int trial = 0; trial < 200; ++trial) {
    LeafPrototypes leaf{Matrix(6, 4), std::vector<bool>(6, false)};
    fill_uniform(leaf.vectors, rng, 3.0);
    const auto set = lift_prototypes(leaf, h);
    Vec mr(4);
    for (double& v : mr) v = rng.uniform(-3, 3);
    const auto f = prototype_features(mr, set);
    ASSERT_EQ(f.size(), 9u);
    std::size_t offset = 0;
    for (const auto& layer : set.layers) {
      const std::span<const double> slice(f.data() + offset, layer.rows());
      EXPECT_NEAR(std::accumulate(slice.begin(), slice.end(), 0.0), 1.0, 1e-12);
      std::size_t nearest = 0;
      for (std::size_t i = 1; i < layer.rows(); ++i) {
        if (l2_distance(mr, layer.row(i)) < l2_distance(mr, layer.row(nearest))) nearest = i;
      }
      EXPECT_EQ(argmax(slice), nearest);
      // Shifting every distance by a constant leaves the slice unchanged.
      Vec shifted(layer.rows());
      for (std::size_t i = 0; i < layer.rows(); ++i) shifted[i] = -l2_distance(mr, layer.row(i)) - 2.5;
      const Vec s = softmax(shifted);
      for (std::size_t i = 0; i < layer.rows(); ++i) EXPECT_NEAR(s[i], slice[i], 1e-12);
      offset += layer.rows();
    }
  }
}

TEST(NearestPrototypes, ExactMatchRanksFirst) {
  // Entities 0 -> 1 has MR (0, 1); relation 2's prototype is (0, 1), others orthogonal.
  const auto e = rows({{0, 0}, {0, 1}});
  const auto set = single_layer({{1, 1}, {1, 0}, {0, 1}, {-1, 0}});
  const auto ranked = nearest_prototypes(e, set, 0, 1, 3);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].relation, 2u);
  EXPECT_NEAR(ranked[0].similarity, 1.0, 1e-12);
  // The two orthogonal prototypes tie at 0 and keep id order; NA is never listed.
  EXPECT_EQ(ranked[1].relation, 1u);
  EXPECT_EQ(ranked[2].relation, 3u);
  EXPECT_THROW(nearest_prototypes(e, set, 0, 0, 2), Error);
  EXPECT_THROW(nearest_prototypes(e, set, 0, 1, 5), Error);
}

TEST(NearestPrototypes, FullRankingDescending) {
  Rng rng(4);
  EntityEmbeddings e{Matrix(10, 5)};
  fill_uniform(e.vectors, rng, 1.0);
  PrototypeSet set{{Matrix(8, 5)}, {std::vector<bool>(8, false)}};
  fill_uniform(set.layers[0], rng, 1.0);
  const auto ranked = nearest_prototypes(e, set, 2, 7, 7);
  ASSERT_EQ(ranked.size(), 7u);
  for (std::size_t k = 1; k < ranked.size(); ++k) EXPECT_GE(ranked[k - 1].similarity, ranked[k].similarity);
}

TEST(NearestMutualRelations, ScaledCandidateFirstQueryExcluded) {
  const auto e = rows({{0, 0}, {1, 2}, {2, 4}, {5, 0}, {3, 3}});
  const std::vector<EntityPair> pairs{{0, 1}, {0, 3}, {0, 2}, {4, 4}, {1, 4}};
  const auto ranked = nearest_mutual_relations(e, pairs, {0, 1}, 10);
  ASSERT_EQ(ranked.size(), 3u);  // query and the zero-MR pair are skipped
  EXPECT_EQ(ranked[0].pair, (EntityPair{0, 2}));
  EXPECT_NEAR(ranked[0].cosine, 1.0, 1e-12);
  for (const auto& r : ranked) EXPECT_NE(r.pair, (EntityPair{0, 1}));
  EXPECT_THROW(nearest_mutual_relations(e, pairs, {4, 4}, 3), Error);
}

// Planted translation model built directly in embedding space: tail = head +
// t_r + small noise, so MR clusters around t_r.
struct PlantedSpace {
  EntityEmbeddings emb;
  std::vector<Triple> train;
  std::vector<Triple> held_out;
  std::size_t m = 0;
};

PlantedSpace planted_space(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = 11, dim = 16, per_relation = 30;
  Matrix translation(m, dim);
  fill_uniform(translation, rng, 1.0);
  PlantedSpace out;
  out.m = m;
  out.emb.vectors = Matrix(2 * (m - 1) * per_relation, dim);
  std::size_t next = 0;
  for (std::size_t r = 1; r < m; ++r) {
    for (std::size_t k = 0; k < per_relation; ++k) {
      const std::size_t h = next++, t = next++;
      for (std::size_t c = 0; c < dim; ++c) {
        out.emb.vectors(h, c) = rng.uniform(-1, 1);
        out.emb.vectors(t, c) = out.emb.vectors(h, c) + translation(r, c) + 0.15 * rng.normal();
      }
      (k < 20 ? out.train : out.held_out).push_back({h, r, t});
    }
  }
  return out;
}

TEST(NearestPrototypes, PlantedTopTwoAccuracy) {
  const auto w = planted_space(31);
  const auto set = lift_prototypes(compute_leaf_prototypes(w.emb, TripleStore(w.train, w.m)),
                                   RelationHierarchy::flat(RelationSet([&] {
                                     std::vector<std::string> n;
                                     for (std::size_t r = 1; r < w.m; ++r) n.push_back("r" + std::to_string(r));
                                     return n;
                                   }())));
  std::size_t hits = 0;
  for (const auto& t : w.held_out) {
    const auto ranked = nearest_prototypes(w.emb, set, t.head, t.tail, 2);
    if (ranked[0].relation == t.relation || ranked[1].relation == t.relation) ++hits;
  }
  EXPECT_GE(static_cast<double>(hits) / w.held_out.size(), 0.9);
}

TEST(NearestMutualRelations, PlantedNeighborsShareRelation) {
  const auto w = planted_space(32);
  std::vector<EntityPair> pairs;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> relation_of;
  for (const auto* list : {&w.train, &w.held_out}) {
    for (const auto& t : *list) {
      pairs.push_back({t.head, t.tail});
      relation_of[{t.head, t.tail}] = t.relation;
    }
  }
  std::size_t same = 0, total = 0;
  for (const auto& t : w.held_out) {
    for (const auto& r : nearest_mutual_relations(w.emb, pairs, {t.head, t.tail}, 10)) {
      same += relation_of[{r.pair.head, r.pair.tail}] == t.relation;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(same) / total, 0.8);
}

TEST(PrototypeFiles, RoundTripWithEmptyNodes) {
  test::TempDir dir;
  const RelationHierarchy h({HierarchyLayer{{"p", "q"}, {}}, HierarchyLayer{{"NA", "a", "b"}, {0, 1, 1}}});
  auto leaf = leaves({{0.5, -1.25}, {3, 4}, {0, 0}});
  leaf.empty = {false, false, true};
  const auto set = lift_prototypes(leaf, h);
  save_prototypes(dir.file("p.txt"), set);
  const auto back = load_prototypes(dir.file("p.txt"));
  EXPECT_EQ(back, set);
  save_prototypes(dir.file("q.txt"), back);
  EXPECT_EQ(test::read_text(dir.file("p.txt")), test::read_text(dir.file("q.txt")));
  EXPECT_NE(test::read_text(dir.file("p.txt")).find("#layer 2 3\n#empty 2\n"), std::string::npos);
}

TEST(TripleFiles, RoundTrip) {
  test::TempDir dir;
  test::write_text(dir.file("t.tsv"), "0\tborn_in\t3\n1\tworks_for\t2\n0\tborn_in\t3\n");
  RelationSet rels;
  const auto store = load_triples(dir.file("t.tsv"), rels);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(rels.size(), 3u);
  EXPECT_EQ(store.triples()[1], (Triple{1, 2, 2}));
  save_triples(dir.file("u.tsv"), store, rels);
  EXPECT_EQ(test::read_text(dir.file("u.tsv")), "0\tborn_in\t3\n1\tworks_for\t2\n");
  test::write_text(dir.file("bad.tsv"), "0\tborn_in\n");
  EXPECT_THROW(load_triples(dir.file("bad.tsv"), rels), Error);
}

}  // namespace
}  // namespace prex
