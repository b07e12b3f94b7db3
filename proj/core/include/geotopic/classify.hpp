#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "geotopic/common.hpp"

namespace geotopic {

enum class ClassifierKind { bernoulli_nb, gaussian_nb, multinomial_nb, knn, random_forest };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

/// Labelled rows. `classes` lists the labels a model must cover; when empty
/// it is taken to be the distinct labels of y.
struct Dataset {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> ids;
  std::vector<int> classes;

  /// Throws DataError on shape mismatch, non-finite values or labels
  /// outside 0..5.
  void validate() const;
  /// Sorted class list (explicit or derived from y).
  std::vector<int> class_list() const;
};

// ------------------------------------------------------------ models

struct BernoulliNb {
  double threshold = 0.0;
  std::vector<int> classes;
  std::vector<double> log_prior;
  Matrix log_p_on;   // classes x F, log P(f = 1 | c)
  Matrix log_p_off;  // classes x F, log P(f = 0 | c)

  /// Unnormalized log posterior per class (in `classes` order).
  std::vector<double> log_joint(std::span<const double> row) const;
};

struct GaussianNb {
  std::vector<int> classes;
  std::vector<double> log_prior;
  Matrix mean;      // classes x F
  Matrix variance;  // classes x F, floored

  std::vector<double> log_joint(std::span<const double> row) const;
};

struct MultinomialNb {
  double count_scale = 1000.0;
  std::vector<int> classes;
  std::vector<double> log_prior;
  Matrix log_prob;  // classes x F, log P(feature | c)

  std::vector<double> log_joint(std::span<const double> row) const;
};

struct Knn {
  std::size_t k = 5;
  Matrix x;
  std::vector<int> y;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int predict(std::span<const double> row) const;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  std::size_t min_leaf = 1;
  /// Features sampled per split; 0 means floor(sqrt(F)), at least 1.
  std::size_t max_features = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct RandomForest {
  ForestParams params;
  std::vector<int> classes;
  std::vector<DecisionTree> trees;
};

/// A trained model of any kind; immutable and safe to share.
class TrainedClassifier {
 public:
  using Model = std::variant<BernoulliNb, GaussianNb, MultinomialNb, Knn, RandomForest>;

  explicit TrainedClassifier(Model model, std::size_t width);

  ClassifierKind kind() const;
  std::size_t width() const { return width_; }
  const Model& model() const { return model_; }

  /// Throws DataError when the row width differs from training.
  int predict(std::span<const double> row) const;
  std::vector<int> predict(const Matrix& rows) const;

  nlohmann::json to_json() const;
  static TrainedClassifier from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TrainedClassifier load(const std::filesystem::path& path);

  std::uint64_t fingerprint() const;

 private:
  Model model_;
  std::size_t width_;
};

/// The NB variants predict the class with the largest log posterior; scores
/// within a relative 1e-9 of the best count as ties and the smallest label
/// wins.

/// Features are 1 when > threshold. Add-one smoothing; empirical priors.
/// Throws DataError listing classes without training rows.
TrainedClassifier train_bernoulli_nb(const Dataset& data, double binarize_threshold);

/// Per-class mean and population variance, floored at 1e-9 * the largest
/// feature variance. Throws DataError when a class has fewer than 2 rows.
TrainedClassifier train_gaussian_nb(const Dataset& data);

/// Features scaled by count_scale and rounded to pseudo-counts; add-one
/// smoothing. Throws DataError on negative features.
TrainedClassifier train_multinomial_nb(const Dataset& data, double count_scale = 1000.0);

/// Euclidean k-nearest neighbours; distance ties go to the lower row index,
/// vote ties to the smaller label. Requires 1 <= k <= rows.
TrainedClassifier train_knn(const Dataset& data, std::size_t k);

/// Bagged CART trees with Gini splits and majority vote.
TrainedClassifier train_random_forest(const Dataset& data, const ForestParams& params);

/// Everything needed to train any roster member.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::gaussian_nb;
  /// Bernoulli NB threshold; negative means 1 / width.
  double nb_threshold = -1.0;
  double mnb_count_scale = 1000.0;
  std::size_t knn_k = 5;
  ForestParams forest;
};

TrainedClassifier train_classifier(const ClassifierSpec& spec, const Dataset& data);

/// Fraction of positions where the labels agree.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// CSV `region_id,true_label,predicted_label`.
void write_predictions_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                           std::span<const int> truth, std::span<const int> predicted);

}  // namespace geotopic
