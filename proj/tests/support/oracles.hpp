#pragma once

// Independent reference computations for the classifier roster. They follow
// the textbook formulas directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "geotopic/classify.hpp"
#include "geotopic/rng.hpp"

namespace geotopic::testing {

using Row = std::vector<double>;

struct SmallDataset {
  std::vector<Row> x;
  std::vector<int> y;

  Dataset to_dataset() const {
    Dataset d;
    d.x = Matrix(x.size(), x.front().size());
    for (std::size_t r = 0; r < x.size(); ++r)
      for (std::size_t f = 0; f < x[r].size(); ++f) d.x(r, f) = x[r][f];
    d.y = y;
    return d;
  }
  std::vector<int> classes() const {
    std::vector<int> c(y.begin(), y.end());
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
  }
};

/// Smallest label whose score is within tol of the best.
inline int argmax_label(const std::map<int, long double>& scores, long double tol = 1e-9L) {
  long double best = -INFINITY;
  for (const auto& [_, s] : scores) best = std::max(best, s);
  for (const auto& [label, s] : scores)
    if (s >= best - tol * std::max(1.0L, std::fabs(best))) return label;
  return scores.begin()->first;
}

inline std::map<int, long double> bernoulli_scores(const SmallDataset& d, double thr, const Row& q) {
  std::map<int, long double> out;
  for (int c : d.classes()) {
    long double n_c = 0;
    std::vector<long double> on(q.size(), 0);
    for (std::size_t r = 0; r < d.x.size(); ++r) {
      if (d.y[r] != c) continue;
      n_c += 1;
      for (std::size_t f = 0; f < q.size(); ++f) on[f] += d.x[r][f] > thr ? 1 : 0;
    }
    long double s = std::log(n_c / static_cast<long double>(d.x.size()));
    for (std::size_t f = 0; f < q.size(); ++f) {
      const long double p = (on[f] + 1) / (n_c + 2);
      s += std::log(q[f] > thr ? p : 1 - p);
    }
    out[c] = s;
  }
  return out;
}

inline std::map<int, long double> gaussian_scores(const SmallDataset& d, const Row& q) {
  const std::size_t F = q.size();
  const long double n = static_cast<long double>(d.x.size());
  long double max_var = 0;
  for (std::size_t f = 0; f < F; ++f) {
    long double mu = 0, v = 0;
    for (const auto& row : d.x) mu += row[f];
    mu /= n;
    for (const auto& row : d.x) v += (row[f] - mu) * (row[f] - mu);
    max_var = std::max(max_var, v / n);
  }
  const long double floor = max_var > 0 ? 1e-9L * max_var : 1e-12L;
  std::map<int, long double> out;
  for (int c : d.classes()) {
    std::vector<const Row*> rows;
    for (std::size_t r = 0; r < d.x.size(); ++r)
      if (d.y[r] == c) rows.push_back(&d.x[r]);
    const long double n_c = static_cast<long double>(rows.size());
    long double s = std::log(n_c / n);
    for (std::size_t f = 0; f < F; ++f) {
      long double mu = 0, v = 0;
      for (auto* r : rows) mu += (*r)[f];
      mu /= n_c;
      for (auto* r : rows) v += ((*r)[f] - mu) * ((*r)[f] - mu);
      v = std::max(v / n_c, floor);
      const long double dev = q[f] - mu;
      s += -0.5L * std::log(2 * std::numbers::pi_v<long double> * v) - dev * dev / (2 * v);
    }
    out[c] = s;
  }
  return out;
}

inline std::map<int, long double> multinomial_scores(const SmallDataset& d, double scale, const Row& q) {
  const std::size_t F = q.size();
  std::map<int, long double> out;
  for (int c : d.classes()) {
    long double n_c = 0, total = 0;
    std::vector<long double> counts(F, 0);
    for (std::size_t r = 0; r < d.x.size(); ++r) {
      if (d.y[r] != c) continue;
      n_c += 1;
      for (std::size_t f = 0; f < F; ++f) {
        const long double k = std::round(d.x[r][f] * scale);
        counts[f] += k;
        total += k;
      }
    }
    long double s = std::log(n_c / static_cast<long double>(d.x.size()));
    for (std::size_t f = 0; f < F; ++f)
      s += std::round(q[f] * scale) * std::log((counts[f] + 1) / (total + static_cast<long double>(F)));
    out[c] = s;
  }
  return out;
}

/// Sorts every training row by (squared distance, index) and votes.
inline int knn_brute_force(const std::vector<Row>& x, const std::vector<int>& y, std::size_t k, const Row& q) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t r = 0; r < x.size(); ++r) {
    double s = 0;
    for (std::size_t f = 0; f < q.size(); ++f) s += (q[f] - x[r][f]) * (q[f] - x[r][f]);
    all.emplace_back(s, r);
  }
  std::sort(all.begin(), all.end());
  std::map<int, int> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[y[all[i].second]];
  int best = votes.begin()->first, best_n = -1;
  for (const auto& [label, n] : votes)
    if (n > best_n) best = label, best_n = n;
  return best;
}

/// Deterministic suite of small datasets: 2..8 rows, 1..3 features,
/// values on a quarter grid in [0, 1], 2 or 3 classes with >= 2 rows each.
inline std::vector<SmallDataset> small_fixture_suite(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SmallDataset> out;
  while (out.size() < count) {
    const std::size_t features = 1 + rng.index(3);
    const std::size_t classes = 2 + rng.index(2);
    const std::size_t rows = 2 * classes + rng.index(8 - 2 * classes + 1);
    SmallDataset d;
    for (std::size_t r = 0; r < rows; ++r) {
      Row row;
      for (std::size_t f = 0; f < features; ++f) row.push_back(0.25 * static_cast<double>(rng.index(5)));
      d.x.push_back(row);
      // First 2*classes rows guarantee two per class.
      d.y.push_back(static_cast<int>(r < 2 * classes ? r % classes : rng.index(classes)) * 2);
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Query points: every training row plus the full quarter grid when small.
inline std::vector<Row> query_points(const SmallDataset& d) {
  std::vector<Row> q = d.x;
  const std::size_t F = d.x.front().size();
  std::size_t total = 1;
  for (std::size_t f = 0; f < F; ++f) total *= 5;
  for (std::size_t i = 0; i < total; ++i) {
    Row row;
    for (std::size_t f = 0, v = i; f < F; ++f, v /= 5) row.push_back(0.25 * static_cast<double>(v % 5));
    q.push_back(row);
  }
  return q;
}

}  // namespace geotopic::testing
