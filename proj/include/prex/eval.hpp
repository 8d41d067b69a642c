#pragma once

// Held-out evaluation: every (pair, non-NA relation) score is a candidate
// fact, ranked globally; a candidate is correct when its relation is the
// pair's gold relation.

#include <map>
#include <string>
#include <vector>

#include "prex/common.hpp"
#include "prex/io.hpp"

namespace prex {

struct PredictionRecord {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::size_t gold = 0;  // relation id; 0 = NA
  Vec scores;            // indexed by relation id; entry 0 (NA) is ignored
};

struct Candidate {
  std::size_t pair = 0;  // record index
  std::size_t relation = 0;
  double score = 0.0;
  bool correct = false;
};

struct CurvePoint {
  double precision = 0.0;
  double recall = 0.0;
};

inline std::size_t count_gold_facts(std::span<const PredictionRecord> records) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.gold != 0 ? 1 : 0;
  return n;
}

/// Candidates sorted by score descending, ties by pair then relation.
inline std::vector<Candidate> rank_candidates(std::span<const PredictionRecord> records) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!all_finite(rec.scores)) fail(ErrorKind::kNumeric, "non-finite score in record " + std::to_string(i));
    if (rec.gold >= rec.scores.size() && !rec.scores.empty()) {
      fail(ErrorKind::kDimension, "gold relation out of range in record " + std::to_string(i));
    }
    for (std::size_t r = 1; r < rec.scores.size(); ++r) out.push_back({i, r, rec.scores[r], r == rec.gold});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pair != b.pair) return a.pair < b.pair;
    return a.relation < b.relation;
  });
  return out;
}

/// One point per rank position k = 1..#candidates.
inline std::vector<CurvePoint> pr_curve(std::span<const PredictionRecord> records) {
  const std::size_t gold = count_gold_facts(records);
  if (gold == 0) fail(ErrorKind::kInvalidArgument, "no gold facts: precision-recall curve undefined");
  const auto ranked = rank_candidates(records);
  std::vector<CurvePoint> curve;
  curve.reserve(ranked.size());
  std::size_t correct = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    correct += ranked[k].correct ? 1 : 0;
    curve.push_back({static_cast<double>(correct) / static_cast<double>(k + 1),
                     static_cast<double>(correct) / static_cast<double>(gold)});
  }
  return curve;
}

/// Trapezoidal area under precision over recall, starting from
/// (precision of the first point, recall 0).
inline double auc(std::span<const CurvePoint> curve) {
  if (curve.empty()) return 0.0;
  double area = 0.0;
  double prev_p = curve.front().precision;
  double prev_r = 0.0;
  for (const auto& pt : curve) {
    area += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_p = pt.precision;
    prev_r = pt.recall;
  }
  return area;
}

struct F1Point {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// Point of maximum F1; ties prefer the higher recall.
inline F1Point max_f1_point(std::span<const CurvePoint> curve) {
  F1Point best;
  bool first = true;
  for (const auto& pt : curve) {
    const double f = f1_score(pt.precision, pt.recall);
    if (first || f > best.f1 || (f == best.f1 && pt.recall > best.recall)) {
      best = {pt.precision, pt.recall, f};
      first = false;
    }
  }
  return best;
}

inline double precision_at_n(std::span<const PredictionRecord> records, std::size_t n) {
  const auto ranked = rank_candidates(records);
  if (n == 0 || n > ranked.size()) {
    fail(ErrorKind::kInvalidArgument,
         "P@" + std::to_string(n) + " requested but there are " + std::to_string(ranked.size()) + " candidates");
  }
  std::size_t correct = 0;
  for (std::size_t k = 0; k < n; ++k) correct += ranked[k].correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(n);
}

/// True when `gold` is among the k highest non-NA scores (ties by lower id).
inline bool gold_in_top_k(const PredictionRecord& rec, std::size_t k) {
  const double g = rec.scores[rec.gold];
  std::size_t ahead = 0;
  for (std::size_t r = 1; r < rec.scores.size(); ++r) {
    if (r == rec.gold) continue;
    if (rec.scores[r] > g || (rec.scores[r] == g && r < rec.gold)) ++ahead;
  }
  return ahead < k;
}

/// Macro average over relations with training count < cutoff and at least
/// one test bag of the fraction of their test bags whose gold relation is in
/// the top k.
inline double hits_at_k(std::span<const PredictionRecord> records, std::span<const std::size_t> training_counts,
                        std::size_t cutoff, std::size_t k) {
  if (cutoff == 0) fail(ErrorKind::kInvalidArgument, "Hits@K cutoff must be positive");
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_relation;  // relation -> (hits, bags)
  for (const auto& rec : records) {
    if (rec.gold == 0) continue;
    if (rec.gold >= training_counts.size()) fail(ErrorKind::kDimension, "training counts do not cover all relations");
    if (training_counts[rec.gold] >= cutoff) continue;
    auto& [hits, bags] = per_relation[rec.gold];
    ++bags;
    hits += gold_in_top_k(rec, k) ? 1 : 0;
  }
  if (per_relation.empty()) fail(ErrorKind::kInvalidArgument, "no long-tail relations selected");
  double sum = 0.0;
  for (const auto& [rel, hb] : per_relation) sum += static_cast<double>(hb.first) / static_cast<double>(hb.second);
  return sum / static_cast<double>(per_relation.size());
}

struct EvalReport {
  double auc = 0.0;
  F1Point max_f1;
  std::map<std::size_t, double> p_at;                                   // N -> precision
  std::map<std::pair<std::size_t, std::size_t>, double> hits_at;        // (K, cutoff) -> macro accuracy
  std::vector<CurvePoint> curve;
};

/// P@N entries beyond the candidate count and Hits@K configurations that
/// select no relation are left out of the report.
inline EvalReport evaluate(std::span<const PredictionRecord> records, std::span<const std::size_t> training_counts,
                           std::span<const std::size_t> p_at_n, std::span<const std::size_t> hits_k,
                           std::span<const std::size_t> hits_cutoffs) {
  EvalReport rep;
  rep.curve = pr_curve(records);
  rep.auc = auc(rep.curve);
  rep.max_f1 = max_f1_point(rep.curve);
  for (std::size_t n : p_at_n) {
    if (n > 0 && n <= rep.curve.size()) rep.p_at[n] = precision_at_n(records, n);
  }
  for (std::size_t cutoff : hits_cutoffs) {
    for (std::size_t k : hits_k) {
      try {
        rep.hits_at[{k, cutoff}] = hits_at_k(records, training_counts, cutoff, k);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInvalidArgument) throw;
      }
    }
  }
  return rep;
}

inline std::string format_report(const EvalReport& rep) {
  std::string out;
  auto line = [&](const std::string& key, double v) { out += key + " = " + io::fixed9(v) + "\n"; };
  line("auc", rep.auc);
  line("max_f1.precision", rep.max_f1.precision);
  line("max_f1.recall", rep.max_f1.recall);
  line("max_f1.f1", rep.max_f1.f1);
  for (const auto& [n, p] : rep.p_at) line("p_at." + std::to_string(n), p);
  for (const auto& [kc, h] : rep.hits_at) {
    line("hits_at." + std::to_string(kc.first) + ".cutoff_" + std::to_string(kc.second), h);
  }
  out += "curve_points = " + std::to_string(rep.curve.size()) + "\n";
  return out;
}

inline std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "recall,precision\n";
  for (const auto& pt : curve) out += io::fixed9(pt.recall) + "," + io::fixed9(pt.precision) + "\n";
  return out;
}

/// Standalone SVG line plot, recall on x and precision on y, both 0..1.
inline std::string curve_svg(std::span<const CurvePoint> curve) {
  constexpr double kLeft = 60, kTop = 20, kWidth = 720, kHeight = 520;
  auto x = [&](double r) { return kLeft + r * kWidth; };
  auto y = [&](double p) { return kTop + (1.0 - p) * kHeight; };
  char buf[96];
  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n"
      "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", x(0), y(0),
                x(1), y(0));
  out += buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", x(0), y(0),
                x(0), y(1));
  out += buf;
  for (int t = 0; t <= 10; ++t) {
    const double v = t / 10.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">%.1f</text>\n",
                  x(v), y(0) + 18, v);
    out += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"end\">%.1f</text>\n",
                  x(0) - 6, y(v) + 4, v);
    out += buf;
  }
  out += "<text x=\"420\" y=\"590\" font-size=\"14\" text-anchor=\"middle\">recall</text>\n";
  out += "<text x=\"16\" y=\"280\" font-size=\"14\" transform=\"rotate(-90 16 280)\" text-anchor=\"middle\">precision</text>\n";
  out += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", k ? " " : "", x(curve[k].recall), y(curve[k].precision));
    out += buf;
  }
  out += "\"/>\n</svg>\n";
  return out;
}

// Predictions file:
//   #relations <m>
//   head<TAB>tail<TAB>gold_id<TAB>score_0 ... score_{m-1}   (space separated)
inline void save_predictions(const std::string& path, std::span<const PredictionRecord> records, std::size_t m) {
  std::string text = "#relations " + std::to_string(m) + "\n";
  for (const auto& r : records) {
    text += std::to_string(r.head) + "\t" + std::to_string(r.tail) + "\t" + std::to_string(r.gold) + "\t";
    for (std::size_t k = 0; k < r.scores.size(); ++k) {
      if (k) text += " ";
      io::append_fixed9(text, r.scores[k]);
    }
    text += "\n";
  }
  io::open_output(path) << text;
}

inline std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kFormat, path + ": empty predictions file");
  io::strip_cr(line);
  const auto head = io::split_ws(line);
  if (head.size() != 2 || head[0] != "#relations") fail(ErrorKind::kFormat, io::where(path, 1) + ": expected '#relations <m>'");
  const auto m = io::parse_int<std::size_t>(head[1], io::where(path, 1));
  if (m < 2) fail(ErrorKind::kFormat, io::where(path, 1) + ": need at least two relations");
  std::vector<PredictionRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    io::strip_cr(line);
    if (line.empty()) continue;
    const std::string ctx = io::where(path, line_no);
    const auto f = io::split(line, '\t');
    if (f.size() != 4) fail(ErrorKind::kFormat, ctx + ": expected head<TAB>tail<TAB>gold<TAB>scores");
    PredictionRecord r;
    r.head = io::parse_int<std::size_t>(f[0], ctx);
    r.tail = io::parse_int<std::size_t>(f[1], ctx);
    r.gold = io::parse_int<std::size_t>(f[2], ctx);
    if (r.gold >= m) fail(ErrorKind::kDimension, ctx + ": gold relation " + std::to_string(r.gold) + " out of range");
    for (auto s : io::split_ws(f[3])) r.scores.push_back(io::parse_double(s, ctx));
    if (r.scores.size() != m) {
      fail(ErrorKind::kDimension, ctx + ": " + std::to_string(r.scores.size()) + " scores, expected " + std::to_string(m));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace prex
