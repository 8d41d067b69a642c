#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "prex/eval.hpp"
#include "test_support.hpp"

namespace prex {
namespace {

// Four single-candidate records ranked correct, wrong, correct, wrong.
std::vector<PredictionRecord> hand_fixture() {
  return {{0, 1, 1, {0.0, 0.9}}, {2, 3, 0, {0.0, 0.8}}, {4, 5, 1, {0.0, 0.7}}, {6, 7, 0, {0.0, 0.6}}};
}

TEST(PrCurve, HandSweep) {
  const auto curve = pr_curve(hand_fixture());
  ASSERT_EQ(curve.size(), 4u);
  const double expect[4][2] = {{1.0, 0.5}, {0.5, 0.5}, {2.0 / 3.0, 1.0}, {0.5, 1.0}};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(curve[k].precision, expect[k][0], 1e-12);
    EXPECT_NEAR(curve[k].recall, expect[k][1], 1e-12);
  }
}

TEST(Auc, HandTrapezoid) {
  // (1,0)->(1,.5): 0.5; flat recall step: 0; (.5,.5)->(2/3,1): 0.5*(0.5+2/3)/2.
  EXPECT_NEAR(auc(pr_curve(hand_fixture())), 0.5 + 0.25 * (0.5 + 2.0 / 3.0), 1e-12);
  EXPECT_NEAR(auc(pr_curve(hand_fixture())), 0.791667, 1e-6);
}

TEST(MaxF1, HandArgmax) {
  const auto best = max_f1_point(pr_curve(hand_fixture()));
  EXPECT_NEAR(best.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(best.recall, 1.0, 1e-12);
  EXPECT_NEAR(best.f1, 0.8, 1e-12);
}

TEST(MaxF1, TiesPreferHigherRecall) {
  // f1(1, 0.5) = f1(0.5, 1) = 2/3.
  const std::vector<CurvePoint> curve{{1.0, 0.5}, {0.5, 1.0}};
  EXPECT_EQ(max_f1_point(curve).recall, 1.0);
}

TEST(PrecisionAtN, HandAndBounds) {
  const auto recs = hand_fixture();
  EXPECT_NEAR(precision_at_n(recs, 2), 0.5, 1e-12);
  EXPECT_NEAR(precision_at_n(recs, 1), 1.0, 1e-12);
  EXPECT_NEAR(precision_at_n(recs, 4), 0.5, 1e-12);
  EXPECT_THROW(precision_at_n(recs, 5), Error);
  EXPECT_THROW(precision_at_n(recs, 0), Error);
}

TEST(PrCurve, NoGoldFactsRejected) {
  std::vector<PredictionRecord> recs{{0, 1, 0, {0.0, 0.5}}};
  EXPECT_THROW(pr_curve(recs), Error);
}

TEST(PrCurve, TiesBrokenByPairThenRelation) {
  const std::vector<PredictionRecord> recs{{0, 1, 2, {0.0, 0.5, 0.5}}, {2, 3, 1, {0.0, 0.5, 0.1}}};
  const auto ranked = rank_candidates(recs);
  ASSERT_EQ(ranked.size(), 4u);
  EXPECT_EQ(std::make_pair(ranked[0].pair, ranked[0].relation), std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(std::make_pair(ranked[1].pair, ranked[1].relation), std::make_pair(std::size_t{0}, std::size_t{2}));
  EXPECT_EQ(std::make_pair(ranked[2].pair, ranked[2].relation), std::make_pair(std::size_t{1}, std::size_t{1}));
}

std::vector<PredictionRecord> perfect(std::size_t n_pos, std::size_t n_neg) {
  std::vector<PredictionRecord> recs;
  for (std::size_t k = 0; k < n_pos; ++k) recs.push_back({k, k, 1, {0.0, 10.0 - 0.001 * k}});
  for (std::size_t k = 0; k < n_neg; ++k) recs.push_back({k, k, 0, {0.0, 1.0 - 0.001 * k}});
  return recs;
}

TEST(PrCurve, PerfectAndReversedRankings) {
  const auto recs = perfect(5, 15);
  const auto curve = pr_curve(recs);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(curve[k].precision, 1.0);
  EXPECT_EQ(curve[4].recall, 1.0);
  EXPECT_NEAR(auc(curve), 1.0, 1e-12);
  const auto best = max_f1_point(curve);
  EXPECT_EQ(best.f1, 1.0);
  for (std::size_t n = 2; n <= recs.size(); ++n) EXPECT_LE(precision_at_n(recs, n), precision_at_n(recs, n - 1));

  auto reversed = recs;
  for (auto& r : reversed) r.scores[1] = -r.scores[1];
  const auto worst = pr_curve(reversed);
  EXPECT_NEAR(worst.back().precision, 5.0 / 20.0, 1e-12);
  EXPECT_EQ(worst[14].recall, 0.0);
}

std::vector<PredictionRecord> random_records(Rng& rng, std::size_t n, std::size_t m, bool coarse) {
  std::vector<PredictionRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    PredictionRecord r{i, i + 1, rng.bernoulli(0.3) ? 0 : 1 + rng.below(m - 1), Vec(m)};
    // Coarse scores create many exact ties.
    for (double& s : r.scores) s = coarse ? std::floor(rng.uniform() * 5) / 5 : rng.uniform();
    recs.push_back(r);
  }
  if (count_gold_facts(recs) == 0) recs[0].gold = 1;
  return recs;
}

// Brute-force oracles: candidates ordered with a tuple key, counts recomputed
// from scratch for every cut.
struct Oracle {
  std::vector<std::tuple<double, std::size_t, std::size_t, bool>> order;
  std::size_t gold = 0;

  explicit Oracle(const std::vector<PredictionRecord>& recs) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
      gold += recs[i].gold != 0;
      for (std::size_t r = 1; r < recs[i].scores.size(); ++r) order.emplace_back(-recs[i].scores[r], i, r, recs[i].gold == r);
    }
    std::sort(order.begin(), order.end());
  }

  std::size_t correct_in_top(std::size_t n) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) c += std::get<3>(order[k]);
    return c;
  }

  double precision(std::size_t n) const { return static_cast<double>(correct_in_top(n)) / n; }
  double recall(std::size_t n) const { return static_cast<double>(correct_in_top(n)) / gold; }

  double area() const {
    double a = 0.0;
    for (std::size_t n = 1; n <= order.size(); ++n) {
      const double p0 = n == 1 ? precision(1) : precision(n - 1);
      const double r0 = n == 1 ? 0.0 : recall(n - 1);
      a += 0.5 * (precision(n) + p0) * (recall(n) - r0);
    }
    return a;
  }

  double best_f1() const {
    double best = 0.0;
    for (std::size_t n = 1; n <= order.size(); ++n) {
      const double p = precision(n), r = recall(n);
      if (p + r > 0) best = std::max(best, 2 * p * r / (p + r));
    }
    return best;
  }
};

double hits_oracle(const std::vector<PredictionRecord>& recs, const std::vector<std::size_t>& counts, std::size_t cutoff,
                   std::size_t k) {
  std::map<std::size_t, std::vector<int>> outcomes;
  for (const auto& rec : recs) {
    if (rec.gold == 0 || counts[rec.gold] >= cutoff) continue;
    std::vector<std::size_t> ids;
    for (std::size_t r = 1; r < rec.scores.size(); ++r) ids.push_back(r);
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return rec.scores[a] > rec.scores[b]; });
    const auto pos = std::find(ids.begin(), ids.end(), rec.gold) - ids.begin();
    outcomes[rec.gold].push_back(static_cast<std::size_t>(pos) < k);
  }
  double sum = 0.0;
  for (const auto& [rel, o] : outcomes) sum += std::accumulate(o.begin(), o.end(), 0.0) / o.size();
  return sum / outcomes.size();
}

TEST(Metrics, MatchBruteForceOracles) {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.below(6);
    const auto recs = random_records(rng, 1 + rng.below(150), m, trial % 2 == 0);
    const Oracle oracle(recs);
    const auto curve = pr_curve(recs);
    ASSERT_EQ(curve.size(), oracle.order.size());
    for (std::size_t n = 1; n <= curve.size(); ++n) {
      EXPECT_NEAR(curve[n - 1].precision, oracle.precision(n), 1e-12);
      EXPECT_NEAR(curve[n - 1].recall, oracle.recall(n), 1e-12);
      if (n % 7 == 1) EXPECT_NEAR(precision_at_n(recs, n), oracle.precision(n), 1e-12);
    }
    EXPECT_NEAR(auc(curve), oracle.area(), 1e-12);
    EXPECT_NEAR(max_f1_point(curve).f1, oracle.best_f1(), 1e-12);

    std::vector<std::size_t> counts(m);
    for (auto& c : counts) c = rng.below(40);
    for (std::size_t k : {1u, 2u, 3u}) {
      for (std::size_t cutoff : {10u, 25u, 100u}) {
        double expect = 0.0;
        bool any = false;
        for (const auto& r : recs) any = any || (r.gold != 0 && counts[r.gold] < cutoff);
        if (!any) {
          EXPECT_THROW(hits_at_k(recs, counts, cutoff, k), Error);
          continue;
        }
        expect = hits_oracle(recs, counts, cutoff, k);
        EXPECT_NEAR(hits_at_k(recs, counts, cutoff, k), expect, 1e-12);
      }
    }
  }
}

TEST(Auc, BoundsAndF1Bound) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto recs = random_records(rng, 1 + rng.below(20), 2 + rng.below(4), false);
    const auto curve = pr_curve(recs);
    const double a = auc(curve);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    for (const auto& pt : curve) {
      EXPECT_LE(f1_score(pt.precision, pt.recall), std::min(1.0, 2.0 * std::min(pt.precision, pt.recall)) + 1e-15);
    }
  }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto recs = random_records(rng, 60, 4, trial % 2 == 0);
    auto transformed = recs;
    for (auto& r : transformed) {
      for (double& s : r.scores) s = std::exp(3.0 * s) - 7.0;
    }
    EXPECT_NEAR(auc(pr_curve(transformed)), auc(pr_curve(recs)), 1e-12);
  }
}

TEST(HitsAtK, HandCountsAndErrors) {
  // Relation 2 is the only tail relation (count 3 < 5); one of its two bags
  // ranks gold first.
  const std::vector<PredictionRecord> recs{{0, 1, 2, {0.5, 0.1, 0.9, 0.3}},
                                           {2, 3, 2, {0.0, 0.8, 0.2, 0.4}},
                                           {4, 5, 1, {0.0, 0.9, 0.2, 0.4}}};
  const std::vector<std::size_t> counts{100, 50, 3, 9};
  EXPECT_NEAR(hits_at_k(recs, counts, 5, 1), 0.5, 1e-12);
  EXPECT_NEAR(hits_at_k(recs, counts, 5, 3), 1.0, 1e-12);  // k = m - 1
  EXPECT_NEAR(hits_at_k(recs, counts, 100, 1), 0.75, 1e-12);
  try {
    hits_at_k(recs, counts, 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no long-tail relations selected"), std::string::npos);
  }
  EXPECT_THROW(hits_at_k(recs, counts, 0, 1), Error);
}

TEST(HitsAtK, GoldTiesResolveByRelationId) {
  const PredictionRecord rec{0, 1, 3, {0.0, 0.5, 0.5, 0.5}};
  EXPECT_FALSE(gold_in_top_k(rec, 2));
  EXPECT_TRUE(gold_in_top_k(rec, 3));
}

TEST(Evaluate, ReportAndOutputs) {
  const auto recs = hand_fixture();
  const std::vector<std::size_t> counts{10, 3};
  const std::vector<std::size_t> p_at{1, 2, 100};
  const std::vector<std::size_t> ks{1};
  const std::vector<std::size_t> cutoffs{5, 2};
  const auto rep = evaluate(recs, counts, p_at, ks, cutoffs);
  EXPECT_EQ(rep.p_at.size(), 2u);  // P@100 left out
  EXPECT_EQ(rep.hits_at.size(), 1u);
  EXPECT_NEAR(rep.auc, 0.791667, 1e-6);
  const std::string text = format_report(rep);
  EXPECT_NE(text.find("auc = 0.791666667\n"), std::string::npos);
  EXPECT_NE(text.find("max_f1.f1 = 0.800000000\n"), std::string::npos);
  EXPECT_NE(text.find("p_at.2 = 0.500000000\n"), std::string::npos);
  EXPECT_NE(text.find("hits_at.1.cutoff_5 = 1.000000000\n"), std::string::npos);

  const std::string csv = curve_csv(rep.curve);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "recall,precision");
  EXPECT_NE(csv.find("1.000000000,0.666666667\n"), std::string::npos);
  const std::string svg = curve_svg(rep.curve);
  EXPECT_NE(svg.find("viewBox=\"0 0 800 600\""), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
}

TEST(PredictionFiles, RoundTripAndErrors) {
  test::TempDir dir;
  const auto recs = hand_fixture();
  save_predictions(dir.file("p.tsv"), recs, 2);
  const auto back = load_predictions(dir.file("p.tsv"));
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].gold, recs[i].gold);
    EXPECT_EQ(back[i].head, recs[i].head);
    EXPECT_EQ(back[i].scores, recs[i].scores);
  }
  test::write_text(dir.file("dim.tsv"), "#relations 3\n0\t1\t1\t0.1 0.2\n");
  EXPECT_THROW(load_predictions(dir.file("dim.tsv")), Error);
  test::write_text(dir.file("fmt.tsv"), "relations 3\n");
  EXPECT_THROW(load_predictions(dir.file("fmt.tsv")), Error);
  test::write_text(dir.file("gold.tsv"), "#relations 2\n0\t1\t5\t0.1 0.2\n");
  EXPECT_THROW(load_predictions(dir.file("gold.tsv")), Error);
}

}  // namespace
}  // namespace prex
