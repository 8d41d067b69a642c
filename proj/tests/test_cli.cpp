#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "prex/cli.hpp"
#include "test_support.hpp"

namespace prex {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> with_dir(const test::TempDir& dir, std::vector<std::string> args) {
  args.insert(args.begin(), {"--dir", dir.str(), "--deterministic", "--seed", "5"});
  return args;
}

// Four single-candidate records ranked correct, wrong, correct, wrong.
std::vector<PredictionRecord> hand_fixture() {
  return {{0, 1, 1, {0.0, 0.9}}, {2, 3, 0, {0.0, 0.8}}, {4, 5, 1, {0.0, 0.7}}, {6, 7, 0, {0.0, 0.6}}};
}

void expect_error(const Run& r, int code, const std::string& kind) {
  EXPECT_EQ(r.code, code) << r.err;
  EXPECT_EQ(r.err.rfind("prex: error kind=" + kind + " msg=\"", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  EXPECT_EQ(r.err.back(), '\n');
}

TEST(CliEval, HandFixtureMatchesOracle) {
  test::TempDir dir;
  const auto recs = hand_fixture();
  save_predictions(dir.file("pred.tsv"), recs, 2);
  const auto r = run(with_dir(dir, {"eval", "--predictions", dir.file("pred.tsv"), "--p-at", "1,2", "--svg",
                                    dir.file("curve.svg")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::vector<std::size_t> p_at{1, 2};
  const std::string expect = format_report(evaluate(recs, {}, p_at, {}, {}));
  EXPECT_EQ(r.out, expect);
  EXPECT_EQ(test::read_text(dir.file("eval-report.txt")), expect);
  EXPECT_NE(expect.find("auc = 0.791666667\n"), std::string::npos);
  EXPECT_NE(expect.find("p_at.2 = 0.500000000\n"), std::string::npos);
  EXPECT_EQ(test::read_text(dir.file("pr-curve.csv")), curve_csv(pr_curve(recs)));
  const std::string manifest = test::read_text(dir.file("eval-report.txt.manifest"));
  EXPECT_NE(manifest.find("subcommand=eval\n"), std::string::npos);
  EXPECT_NE(manifest.find("sha256=" + sha256_file(dir.file("eval-report.txt"))), std::string::npos);
  EXPECT_NE(manifest.find(dir.file("curve.svg")), std::string::npos);
}

TEST(Sha256, KnownDigest) {
  test::TempDir dir;
  test::write_text(dir.file("abc"), "abc");
  EXPECT_EQ(sha256_file(dir.file("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CliErrors, KindsAndExitCodes) {
  test::TempDir dir;
  expect_error(run(with_dir(dir, {"eval", "--predictions", dir.file("missing.tsv")})), 3, "missing-file");
  test::write_text(dir.file("bad.tsv"), "garbage\n");
  expect_error(run(with_dir(dir, {"eval", "--predictions", dir.file("bad.tsv")})), 3, "format");
  expect_error(run(with_dir(dir, {"frobnicate"})), 2, "usage");
  expect_error(run(with_dir(dir, {"train-embed", "--format", "xml"})), 2, "usage");
  expect_error(run(with_dir(dir, {"eval", "--predictions", dir.file("bad.tsv"), "--p-at", "x"})), 3, "format");
  EXPECT_EQ(run({"--help"}).code, 0);
}

class CliPipeline : public ::testing::Test {
 protected:
  static void run_pipeline(const test::TempDir& dir) {
    const std::vector<std::vector<std::string>> steps{
        {"gen-synth", "--entities", "400", "--head-count", "60", "--background", "5"},
        {"build-graph"},
        {"train-embed", "--samples", "1000000"},
        {"prototypes"},
        {"train-re", "--epochs", "2", "--word-dim", "8", "--pos-dim", "2", "--filters", "8"},
        {"eval"},
    };
    for (const auto& step : steps) {
      const auto r = run(with_dir(dir, step));
      ASSERT_EQ(r.code, 0) << step.front() << ": " << r.err;
    }
  }

  static void SetUpTestSuite() {
    first_ = new test::TempDir;
    run_pipeline(*first_);
  }
  static void TearDownTestSuite() {
    delete first_;
    first_ = nullptr;
  }

  static test::TempDir* first_;
};

test::TempDir* CliPipeline::first_ = nullptr;

TEST_F(CliPipeline, RerunIsByteIdentical) {
  test::TempDir second;
  run_pipeline(second);
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(first_->str())) {
    const std::string name = entry.path().filename().string();
    const std::string a = test::read_text(first_->file(name));
    const std::string b = test::read_text(second.file(name));
    if (name.ends_with(".manifest")) {
      // Manifests carry wall-clock time and the directory path; digests must agree.
      auto digests = [](const std::string& text) {
        std::vector<std::string> out;
        for (std::size_t p = text.find("sha256="); p != std::string::npos; p = text.find("sha256=", p + 1)) {
          out.push_back(text.substr(p, 71));
        }
        return out;
      };
      EXPECT_EQ(digests(a), digests(b)) << name;
      EXPECT_FALSE(digests(a).empty()) << name;
    } else {
      EXPECT_EQ(a, b) << name;
    }
    ++compared;
  }
  EXPECT_GE(compared, 25u);
}

TEST_F(CliPipeline, ErrorsOnMismatchedInputs) {
  expect_error(run(with_dir(*first_, {"prototypes", "--prototype-dim", "64", "--out", first_->file("p64.txt")})), 3,
               "dimension-mismatch");
  expect_error(run(with_dir(*first_, {"train-re", "--epochs", "2", "--features", "encoder", "--lr", "1e300",
                                      "--word-dim", "4", "--pos-dim", "2", "--filters", "4", "--out",
                                      first_->file("blowup.prex"), "--vocab-out", first_->file("blowup.vocab")})),
               4, "numeric");
  expect_error(run(with_dir(*first_, {"query", "nearest-mr", "--head", "100000", "--tail", "1"})), 2, "usage");
}

TEST_F(CliPipeline, NearestMrNeighboursShareTheQueryRelation) {
  const auto rels = load_relations(first_->file(WorldFiles::kRelations));
  const auto train = cli_detail::load_known_triples(first_->file(WorldFiles::kTrainTriples), rels);
  const auto test_triples = cli_detail::load_known_triples(first_->file(WorldFiles::kTestTriples), rels);
  std::vector<std::size_t> prevalence(rels.size(), 0);
  for (const auto& t : train.triples()) ++prevalence[t.relation];

  double same = 0.0, base = 0.0;
  std::size_t queries = 0;
  for (std::size_t k = 0; k < test_triples.size(); k += 3) {
    const auto& t = test_triples.triples()[k];
    const auto r = run(with_dir(*first_, {"query", "nearest-mr", "--head", std::to_string(t.head), "--tail",
                                          std::to_string(t.tail), "--k", "10"}));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "rank\thead\ttail\trelation\tcosine");
    std::size_t rows = 0, hits = 0;
    while (std::getline(lines, line)) {
      const auto cols = io::split(line, '\t');
      ASSERT_EQ(cols.size(), 5u);
      hits += cols[3] == rels.name(t.relation);
      ++rows;
    }
    ASSERT_EQ(rows, 10u);
    same += static_cast<double>(hits) / 10.0;
    base += static_cast<double>(prevalence[t.relation]) / static_cast<double>(train.size());
    ++queries;
  }
  same /= static_cast<double>(queries);
  base /= static_cast<double>(queries);
  EXPECT_GE(same, 0.3);
  EXPECT_GE(same, 3.0 * base);
}

TEST_F(CliPipeline, NearestPrototypesRanksRelations) {
  const auto r = run(with_dir(*first_, {"query", "nearest-prototypes", "--head", "0", "--tail", "1", "--k", "5"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
  EXPECT_TRUE(std::filesystem::exists(first_->file("nearest-prototypes.tsv.manifest")));
}

}  // namespace
}  // namespace prex
