#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "prex/common.hpp"

namespace prex {

/// Walker/Vose alias table: O(n) build, O(1) draws from a fixed discrete
/// distribution given by non-negative weights.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::kNumeric, "alias table weights must be finite and >= 0");
      total += w;
    }
    if (n == 0 || total <= 0.0) fail(ErrorKind::kNumeric, "alias table needs positive total weight");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    Vec scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t k = 0; k < n; ++k) {
      scaled[k] = weights[k] * static_cast<double>(n) / total;
      (scaled[k] < 1.0 ? small : large).push_back(k);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding.
    for (std::size_t k : large) {
      prob_[k] = 1.0;
      alias_[k] = k;
    }
    for (std::size_t k : small) {
      prob_[k] = 1.0;
      alias_[k] = k;
    }
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t sample(Rng& rng) const {
    const std::size_t column = rng.below(prob_.size());
    return rng.uniform() < prob_[column] ? column : alias_[column];
  }

  /// Probability of drawing `k` implied by the table.
  double probability(std::size_t k) const {
    double mass = prob_[k];
    for (std::size_t c = 0; c < prob_.size(); ++c) {
      if (alias_[c] == k && c != k) mass += 1.0 - prob_[c];
    }
    return mass / static_cast<double>(prob_.size());
  }

 private:
  Vec prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace prex
