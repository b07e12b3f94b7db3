#include "geotopic/classify.hpp"
#include "geotopic/labels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "geotopic/rng.hpp"

namespace geotopic {

using json = nlohmann::json;

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::bernoulli_nb: return "bernoulli_nb";
    case ClassifierKind::gaussian_nb: return "gaussian_nb";
    case ClassifierKind::multinomial_nb: return "multinomial_nb";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::random_forest: return "random_forest";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  for (auto k : {ClassifierKind::bernoulli_nb, ClassifierKind::gaussian_nb, ClassifierKind::multinomial_nb,
                 ClassifierKind::knn, ClassifierKind::random_forest})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown classifier '" + std::string(name) + "'");
}

void Dataset::validate() const {
  if (x.rows() != y.size()) throw DataError("dataset: " + std::to_string(x.rows()) + " rows but " +
                                            std::to_string(y.size()) + " labels");
  if (!ids.empty() && ids.size() != y.size()) throw DataError("dataset: id count differs from row count");
  for (double v : x.data())
    if (!std::isfinite(v)) throw DataError("dataset: non-finite feature value");
  for (int label : y)
    if (label < 0 || label >= kLabelCount) throw DataError("dataset: label " + std::to_string(label) + " out of range");
}

std::vector<int> Dataset::class_list() const {
  std::set<int> s;
  if (classes.empty()) s.insert(y.begin(), y.end());
  else s.insert(classes.begin(), classes.end());
  return {s.begin(), s.end()};
}

namespace {

// First index within a relative 1e-9 of the maximum, so scores that tie
// up to summation order resolve to the smallest label.
std::size_t argmax(std::span<const double> v) {
  const double best = *std::max_element(v.begin(), v.end());
  const double tol = 1e-9 * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] >= best - tol) return i;
  return 0;
}

std::vector<double> log_priors(const std::vector<std::size_t>& counts, std::size_t total) {
  std::vector<double> out;
  for (auto c : counts) out.push_back(std::log(static_cast<double>(c) / static_cast<double>(total)));
  return out;
}

// Rows per class, in class-list order; throws when a class is empty.
std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& data, const std::vector<int>& classes,
                                                    std::string_view who) {
  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < classes.size(); ++i) pos[classes[i]] = i;
  std::vector<std::vector<std::size_t>> out(classes.size());
  for (std::size_t r = 0; r < data.y.size(); ++r) {
    auto it = pos.find(data.y[r]);
    if (it == pos.end())
      throw DataError(std::string(who) + ": label " + std::to_string(data.y[r]) + " is not in the class list");
    out[it->second].push_back(r);
  }
  std::string missing;
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (out[i].empty()) missing += (missing.empty() ? "" : ", ") + std::to_string(classes[i]);
  if (!missing.empty()) throw DataError(std::string(who) + ": no training rows for classes " + missing);
  return out;
}

void check_width(std::span<const double> row, std::size_t width) {
  if (row.size() != width)
    throw DataError("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                    std::to_string(width));
}

double pseudo_count(double value, double scale) {
  if (value < 0.0) throw DataError("multinomial NB: negative feature value");
  return std::round(value * scale);
}

}  // namespace

// ------------------------------------------------------------ naive Bayes

std::vector<double> BernoulliNb::log_joint(std::span<const double> row) const {
  std::vector<double> out(log_prior);
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (std::size_t f = 0; f < row.size(); ++f) out[c] += row[f] > threshold ? log_p_on(c, f) : log_p_off(c, f);
  return out;
}

std::vector<double> GaussianNb::log_joint(std::span<const double> row) const {
  std::vector<double> out(log_prior);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t f = 0; f < row.size(); ++f) {
      const double var = variance(c, f);
      const double d = row[f] - mean(c, f);
      out[c] += -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
    }
  }
  return out;
}

std::vector<double> MultinomialNb::log_joint(std::span<const double> row) const {
  std::vector<double> out(log_prior);
  for (std::size_t f = 0; f < row.size(); ++f) {
    const double n = pseudo_count(row[f], count_scale);
    if (n == 0.0) continue;
    for (std::size_t c = 0; c < classes.size(); ++c) out[c] += n * log_prob(c, f);
  }
  return out;
}

TrainedClassifier train_bernoulli_nb(const Dataset& data, double binarize_threshold) {
  data.validate();
  if (!std::isfinite(binarize_threshold)) throw ConfigError("Bernoulli NB: threshold must be finite");
  BernoulliNb m;
  m.threshold = binarize_threshold;
  m.classes = data.class_list();
  const auto groups = rows_by_class(data, m.classes, "Bernoulli NB");
  const std::size_t F = data.x.cols();
  m.log_p_on = Matrix(m.classes.size(), F);
  m.log_p_off = Matrix(m.classes.size(), F);
  std::vector<std::size_t> counts;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    counts.push_back(groups[c].size());
    const double n = static_cast<double>(groups[c].size());
    for (std::size_t f = 0; f < F; ++f) {
      double on = 0.0;
      for (auto r : groups[c])
        if (data.x(r, f) > binarize_threshold) on += 1.0;
      const double p = (on + 1.0) / (n + 2.0);
      m.log_p_on(c, f) = std::log(p);
      m.log_p_off(c, f) = std::log(1.0 - p);
    }
  }
  m.log_prior = log_priors(counts, data.y.size());
  return TrainedClassifier(std::move(m), F);
}

TrainedClassifier train_gaussian_nb(const Dataset& data) {
  data.validate();
  GaussianNb m;
  m.classes = data.class_list();
  const auto groups = rows_by_class(data, m.classes, "Gaussian NB");
  const std::size_t F = data.x.cols();
  for (std::size_t c = 0; c < groups.size(); ++c)
    if (groups[c].size() < 2)
      throw DataError("Gaussian NB: class " + std::to_string(m.classes[c]) + " has a single training row");

  // Largest per-feature variance over the whole training set.
  double max_var = 0.0;
  const double n_all = static_cast<double>(data.x.rows());
  for (std::size_t f = 0; f < F; ++f) {
    double mu = 0.0;
    for (std::size_t r = 0; r < data.x.rows(); ++r) mu += data.x(r, f);
    mu /= n_all;
    double v = 0.0;
    for (std::size_t r = 0; r < data.x.rows(); ++r) v += (data.x(r, f) - mu) * (data.x(r, f) - mu);
    max_var = std::max(max_var, v / n_all);
  }
  // All-constant data would give a zero floor.
  const double floor = max_var > 0.0 ? 1e-9 * max_var : 1e-12;

  m.mean = Matrix(m.classes.size(), F);
  m.variance = Matrix(m.classes.size(), F);
  std::vector<std::size_t> counts;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    counts.push_back(groups[c].size());
    const double n = static_cast<double>(groups[c].size());
    for (std::size_t f = 0; f < F; ++f) {
      double mu = 0.0;
      for (auto r : groups[c]) mu += data.x(r, f);
      mu /= n;
      double v = 0.0;
      for (auto r : groups[c]) v += (data.x(r, f) - mu) * (data.x(r, f) - mu);
      m.mean(c, f) = mu;
      m.variance(c, f) = std::max(v / n, floor);
    }
  }
  m.log_prior = log_priors(counts, data.y.size());
  return TrainedClassifier(std::move(m), F);
}

TrainedClassifier train_multinomial_nb(const Dataset& data, double count_scale) {
  data.validate();
  if (!(count_scale > 0.0) || !std::isfinite(count_scale))
    throw ConfigError("multinomial NB: count_scale must be positive");
  MultinomialNb m;
  m.count_scale = count_scale;
  m.classes = data.class_list();
  const auto groups = rows_by_class(data, m.classes, "multinomial NB");
  const std::size_t F = data.x.cols();
  m.log_prob = Matrix(m.classes.size(), F);
  std::vector<std::size_t> counts;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    counts.push_back(groups[c].size());
    std::vector<double> totals(F, 0.0);
    for (auto r : groups[c])
      for (std::size_t f = 0; f < F; ++f) totals[f] += pseudo_count(data.x(r, f), count_scale);
    const double all = std::accumulate(totals.begin(), totals.end(), 0.0);
    for (std::size_t f = 0; f < F; ++f)
      m.log_prob(c, f) = std::log((totals[f] + 1.0) / (all + static_cast<double>(F)));
  }
  m.log_prior = log_priors(counts, data.y.size());
  return TrainedClassifier(std::move(m), F);
}

// ------------------------------------------------------------ KNN

TrainedClassifier train_knn(const Dataset& data, std::size_t k) {
  data.validate();
  if (k < 1 || k > data.x.rows())
    throw ConfigError("KNN: k must be in 1.." + std::to_string(data.x.rows()) + ", got " + std::to_string(k));
  return TrainedClassifier(Knn{k, data.x, data.y}, data.x.cols());
}

namespace {

int knn_predict(const Knn& m, std::span<const double> row) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(m.x.rows());
  for (std::size_t r = 0; r < m.x.rows(); ++r) {
    double d = 0.0;
    const auto train = m.x.row(r);
    for (std::size_t f = 0; f < row.size(); ++f) d += (row[f] - train[f]) * (row[f] - train[f]);
    dist.emplace_back(d, r);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m.k), dist.end());
  std::map<int, std::size_t> votes;
  for (std::size_t i = 0; i < m.k; ++i) ++votes[m.y[dist[i].second]];
  int best = votes.begin()->first;
  std::size_t best_votes = 0;
  for (const auto& [label, n] : votes)
    if (n > best_votes) {
      best = label;
      best_votes = n;
    }
  return best;
}

// ------------------------------------------------------------ forest

int majority(const std::vector<int>& labels, std::span<const std::size_t> idx) {
  std::map<int, std::size_t> votes;
  for (auto i : idx) ++votes[labels[i]];
  int best = votes.begin()->first;
  std::size_t best_n = 0;
  for (const auto& [label, n] : votes)
    if (n > best_n) {
      best = label;
      best_n = n;
    }
  return best;
}

double gini(const std::map<int, std::size_t>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 1.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    s -= p * p;
  }
  return s;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<int>& y, const ForestParams& params, std::size_t mtry, Rng& rng)
      : x_(x), y_(y), params_(params), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> idx) {
    DecisionTree tree;
    grow(tree, idx, 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<std::size_t>& idx, std::size_t depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[node_id].label = majority(y_, idx);

    std::map<int, std::size_t> counts;
    for (auto i : idx) ++counts[y_[i]];
    if (depth >= params_.max_depth || counts.size() < 2 || idx.size() < 2 * params_.min_leaf) return node_id;

    const double parent = gini(counts, idx.size());
    const std::size_t F = x_.cols();
    std::vector<std::size_t> features(F);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t i = 0; i < mtry_; ++i) std::swap(features[i], features[i + rng_.index(F - i)]);

    double best_score = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(idx);
    for (std::size_t fi = 0; fi < mtry_; ++fi) {
      const std::size_t f = features[fi];
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_(a, f) < x_(b, f) || (x_(a, f) == x_(b, f) && a < b);
      });
      std::map<int, std::size_t> left, right = counts;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const int label = y_[order[i]];
        ++left[label];
        if (--right[label] == 0) right.erase(label);
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (x_(order[i], f) == x_(order[i + 1], f)) continue;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double score = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                             static_cast<double>(order.size());
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (x_(order[i], f) + x_(order[i + 1], f));
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx) (x_(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_idx : right_idx).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int l = grow(tree, left_idx, depth + 1);
    tree.nodes[node_id].left = l;
    const int r = grow(tree, right_idx, depth + 1);
    tree.nodes[node_id].right = r;
    return node_id;
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng& rng_;
};

int forest_predict(const RandomForest& m, std::span<const double> row) {
  std::map<int, std::size_t> votes;
  for (const auto& t : m.trees) ++votes[t.predict(row)];
  int best = votes.begin()->first;
  std::size_t best_n = 0;
  for (const auto& [label, n] : votes)
    if (n > best_n) {
      best = label;
      best_n = n;
    }
  return best;
}

}  // namespace

int DecisionTree::predict(std::span<const double> row) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].label;
}

TrainedClassifier train_random_forest(const Dataset& data, const ForestParams& params) {
  data.validate();
  if (data.x.rows() == 0) throw DataError("random forest: empty training data");
  if (params.n_trees < 1) throw ConfigError("random forest: n_trees must be >= 1");
  if (params.min_leaf < 1) throw ConfigError("random forest: min_leaf must be >= 1");
  const std::size_t F = data.x.cols();
  std::size_t mtry = params.max_features;
  if (mtry == 0) mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(F))));
  mtry = std::min(mtry, F);

  RandomForest m;
  m.params = params;
  m.classes = data.class_list();
  const std::size_t n = data.x.rows();
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, "forest.tree" + std::to_string(t)));
    std::vector<std::size_t> idx(n);
    if (params.bootstrap)
      for (auto& i : idx) i = rng.index(n);
    else
      std::iota(idx.begin(), idx.end(), 0);
    if (F == 0) {
      DecisionTree leaf;
      leaf.nodes.push_back({-1, 0.0, -1, -1, majority(data.y, idx)});
      m.trees.push_back(std::move(leaf));
      continue;
    }
    TreeBuilder builder(data.x, data.y, params, mtry, rng);
    m.trees.push_back(builder.build(std::move(idx)));
  }
  return TrainedClassifier(std::move(m), F);
}

TrainedClassifier train_classifier(const ClassifierSpec& spec, const Dataset& data) {
  switch (spec.kind) {
    case ClassifierKind::bernoulli_nb: {
      const double t = spec.nb_threshold >= 0.0 ? spec.nb_threshold
                                                : 1.0 / static_cast<double>(std::max<std::size_t>(data.x.cols(), 1));
      return train_bernoulli_nb(data, t);
    }
    case ClassifierKind::gaussian_nb: return train_gaussian_nb(data);
    case ClassifierKind::multinomial_nb: return train_multinomial_nb(data, spec.mnb_count_scale);
    case ClassifierKind::knn: return train_knn(data, spec.knn_k);
    case ClassifierKind::random_forest: return train_random_forest(data, spec.forest);
  }
  throw ConfigError("unknown classifier kind");
}

// ------------------------------------------------------------ wrapper

TrainedClassifier::TrainedClassifier(Model model, std::size_t width) : model_(std::move(model)), width_(width) {}

ClassifierKind TrainedClassifier::kind() const {
  return static_cast<ClassifierKind>(model_.index());
}

int TrainedClassifier::predict(std::span<const double> row) const {
  check_width(row, width_);
  return std::visit(
      [&](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Knn>) {
          return knn_predict(m, row);
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          return forest_predict(m, row);
        } else {
          const auto lj = m.log_joint(row);
          return m.classes[argmax(lj)];
        }
      },
      model_);
}

std::vector<int> TrainedClassifier::predict(const Matrix& rows) const {
  std::vector<int> out;
  out.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out.push_back(predict(rows.row(r)));
  return out;
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols) {
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw DataError("classifier file: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

json TrainedClassifier::to_json() const {
  json j;
  j["format"] = "geotopic.classifier";
  j["version"] = 1;
  j["kind"] = std::string(to_string(kind()));
  j["width"] = width_;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BernoulliNb>) {
          j["threshold"] = m.threshold;
          j["classes"] = m.classes;
          j["log_prior"] = m.log_prior;
          j["log_p_on"] = matrix_json(m.log_p_on);
          j["log_p_off"] = matrix_json(m.log_p_off);
        } else if constexpr (std::is_same_v<T, GaussianNb>) {
          j["classes"] = m.classes;
          j["log_prior"] = m.log_prior;
          j["mean"] = matrix_json(m.mean);
          j["variance"] = matrix_json(m.variance);
        } else if constexpr (std::is_same_v<T, MultinomialNb>) {
          j["count_scale"] = m.count_scale;
          j["classes"] = m.classes;
          j["log_prior"] = m.log_prior;
          j["log_prob"] = matrix_json(m.log_prob);
        } else if constexpr (std::is_same_v<T, Knn>) {
          j["k"] = m.k;
          j["x"] = matrix_json(m.x);
          j["y"] = m.y;
        } else {
          j["n_trees"] = m.params.n_trees;
          j["max_depth"] = m.params.max_depth;
          j["min_leaf"] = m.params.min_leaf;
          j["max_features"] = m.params.max_features;
          j["bootstrap"] = m.params.bootstrap;
          j["seed"] = m.params.seed;
          j["classes"] = m.classes;
          json trees = json::array();
          for (const auto& t : m.trees) {
            json nodes = json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
            trees.push_back(std::move(nodes));
          }
          j["trees"] = std::move(trees);
        }
      },
      model_);
  return j;
}

TrainedClassifier TrainedClassifier::from_json(const json& j) {
  try {
    if (j.at("format") != "geotopic.classifier") throw DataError("not a classifier file");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported classifier file version");
    const auto kind = parse_classifier_kind(j.at("kind").get<std::string>());
    const auto width = j.at("width").get<std::size_t>();
    switch (kind) {
      case ClassifierKind::bernoulli_nb: {
        BernoulliNb m;
        m.threshold = j.at("threshold").get<double>();
        m.classes = j.at("classes").get<std::vector<int>>();
        m.log_prior = j.at("log_prior").get<std::vector<double>>();
        m.log_p_on = matrix_from_json(j.at("log_p_on"), width);
        m.log_p_off = matrix_from_json(j.at("log_p_off"), width);
        return TrainedClassifier(std::move(m), width);
      }
      case ClassifierKind::gaussian_nb: {
        GaussianNb m;
        m.classes = j.at("classes").get<std::vector<int>>();
        m.log_prior = j.at("log_prior").get<std::vector<double>>();
        m.mean = matrix_from_json(j.at("mean"), width);
        m.variance = matrix_from_json(j.at("variance"), width);
        return TrainedClassifier(std::move(m), width);
      }
      case ClassifierKind::multinomial_nb: {
        MultinomialNb m;
        m.count_scale = j.at("count_scale").get<double>();
        m.classes = j.at("classes").get<std::vector<int>>();
        m.log_prior = j.at("log_prior").get<std::vector<double>>();
        m.log_prob = matrix_from_json(j.at("log_prob"), width);
        return TrainedClassifier(std::move(m), width);
      }
      case ClassifierKind::knn: {
        Knn m;
        m.k = j.at("k").get<std::size_t>();
        m.x = matrix_from_json(j.at("x"), width);
        m.y = j.at("y").get<std::vector<int>>();
        if (m.y.size() != m.x.rows() || m.k < 1 || m.k > m.y.size()) throw DataError("inconsistent KNN model");
        return TrainedClassifier(std::move(m), width);
      }
      case ClassifierKind::random_forest: {
        RandomForest m;
        m.params.n_trees = j.at("n_trees").get<std::size_t>();
        m.params.max_depth = j.at("max_depth").get<std::size_t>();
        m.params.min_leaf = j.at("min_leaf").get<std::size_t>();
        m.params.max_features = j.at("max_features").get<std::size_t>();
        m.params.bootstrap = j.at("bootstrap").get<bool>();
        m.params.seed = j.at("seed").get<std::uint64_t>();
        m.classes = j.at("classes").get<std::vector<int>>();
        for (const auto& t : j.at("trees")) {
          DecisionTree tree;
          for (const auto& n : t)
            tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                  n.at(4).get<int>()});
          if (tree.nodes.empty()) throw DataError("empty tree in forest");
          m.trees.push_back(std::move(tree));
        }
        return TrainedClassifier(std::move(m), width);
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed classifier file: ") + e.what());
  }
  throw DataError("unknown classifier kind");
}

void TrainedClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

TrainedClassifier TrainedClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::uint64_t TrainedClassifier::fingerprint() const { return fnv1a64(to_json().dump()); }

// ------------------------------------------------------------ metrics

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw DataError("accuracy: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  if (truth.empty()) throw DataError("accuracy: no labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                           std::span<const int> truth, std::span<const int> predicted) {
  if (ids.size() != truth.size() || truth.size() != predicted.size())
    throw DataError("write_predictions_csv: length mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id,true_label,predicted_label\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << csv_escape(ids[i]) << ',' << truth[i] << ',' << predicted[i] << '\n';
}

}  // namespace geotopic
