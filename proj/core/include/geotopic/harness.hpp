#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "geotopic/classify.hpp"
#include "geotopic/corpus.hpp"
#include "geotopic/features.hpp"
#include "geotopic/geo.hpp"
#include "geotopic/labels.hpp"
#include "geotopic/topics.hpp"

namespace geotopic {

/// Feature-set selections; the four series of the multiplier plot.
enum class FeatureSet { baseline, slang, smooth, smooth_slang };
enum class SmoothingMethod { concat, weighted };

std::string_view to_string(FeatureSet fs);
FeatureSet parse_feature_set(std::string_view name);
std::string_view to_string(SmoothingMethod m);
SmoothingMethod parse_smoothing_method(std::string_view name);

/// Experiment settings. Loaded from a flat `key = value` text file; list
/// values are comma separated, `#` starts a comment line.
struct ExperimentConfig {
  std::filesystem::path records;
  std::filesystem::path regions;
  std::filesystem::path rates;
  std::filesystem::path lexicon;
  std::filesystem::path stopwords;  // empty: built-in list

  std::string outcome = "opioid";
  std::set<int> train_years{2014, 2015};
  std::set<int> test_years{2016};

  std::vector<std::size_t> k_list{5, 10, 20, 50, 100, 200};
  std::vector<double> radius_km{25.0, 50.0, 100.0};
  std::vector<double> multipliers{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<FeatureSet> feature_sets{FeatureSet::baseline, FeatureSet::smooth, FeatureSet::slang,
                                       FeatureSet::smooth_slang};
  std::vector<ClassifierKind> classifiers{ClassifierKind::gaussian_nb};
  /// Shared classifier hyperparameters; `kind` is overridden per row.
  ClassifierSpec classifier_params;

  SmoothingMethod smoothing = SmoothingMethod::concat;
  double slang_weight = 1.0;
  /// Topic count of the slang-corpus model; 0 means the row's K.
  std::size_t slang_topics = 0;

  double alpha = 0.0;  // 0: 50 / K
  double beta = 0.01;
  std::size_t train_sweeps = 500;
  std::size_t infer_sweeps = 100;
  VocabularyOptions vocabulary;
  bool assign_unlocated = true;
  std::size_t min_regions = 10;

  std::uint64_t seed = 1;
  /// Worker threads for sweeps; 0 uses the hardware concurrency.
  std::size_t threads = 0;
  /// Write measured runtimes into the report CSV. Off by default so that
  /// reports are byte-reproducible.
  bool report_runtime = false;

  /// Parses config text; relative paths resolve against base_dir. Throws
  /// ConfigError on unknown keys or bad values.
  static ExperimentConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical `key = value` text covering every setting.
  std::string to_text() const;
  std::uint64_t hash() const;
  /// Disjoint non-empty year sets, non-empty lists, valid ranges.
  void validate() const;
};

/// One point of the sweep grid.
struct RowSpec {
  FeatureSet feature_set = FeatureSet::baseline;
  std::size_t k = 10;
  double radius_km = 50.0;
  double multiplier = 0.0;
  ClassifierKind classifier = ClassifierKind::gaussian_nb;
};

struct ReportRow {
  RowSpec spec;
  double accuracy = 0.0;
  double mse = 0.0;
  std::size_t n_regions = 0;  // test regions evaluated
  double runtime_ms = 0.0;
  /// Hash over everything learned from training data (vocabulary, LDA
  /// models, label binning, classifier).
  std::uint64_t train_fingerprint = 0;
  std::optional<std::string> error;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;  // sweep order, failed rows included
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;

  bool has_failures() const;
  /// Successful rows only, header
  /// `feature_set,k,radius_km,multiplier,classifier,accuracy,mse,n_regions,runtime_ms`.
  void write_csv(const std::filesystem::path& path, bool include_runtime) const;
  /// Full config, seed, config hash and per-row failures.
  void write_json(const std::filesystem::path& path, const ExperimentConfig& config) const;
  static ExperimentReport read_csv(const std::filesystem::path& path);
};

/// Error raised inside a pipeline stage; the message names the stage.
class StageError : public DataError {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Records of one year period, after unlocated assignment.
struct PeriodRecords {
  std::vector<TokenizedRecord> located;
  std::vector<TokenizedRecord> unlocated;
};

/// Everything read from disk, split by period.
struct PipelineInputs {
  RegionRegistry registry;
  SlangLexicon lexicon;
  RateTable rates;  // suppression applied
  PeriodRecords train;
  PeriodRecords test;
  std::map<std::string, double> train_rates;
  std::map<std::string, double> test_rates;
};

PipelineInputs load_inputs(const ExperimentConfig& config);

/// Binning fitted on training-period rates, applied to both periods.
struct LabelSplit {
  LabelVector train;
  LabelVector test;
};

LabelSplit build_labels(const PipelineInputs& inputs, const ExperimentConfig& config);

/// Per-period topic outputs for one K.
struct PeriodTopics {
  ThetaMap thetas;                                     // regions with >= 1 record
  std::map<std::string, ThetaEstimate> slang_thetas;   // same regions
  std::vector<TokenizedRecord> records;                // located + assigned
  std::size_t assigned = 0;
  std::size_t unassigned = 0;
};

/// Everything that depends on K but not on radius, multiplier or classifier.
struct TopicStage {
  std::size_t k = 0;
  Vocabulary vocabulary;
  std::optional<LdaModel> model;
  Vocabulary slang_vocabulary;
  std::optional<LdaModel> slang_model;
  std::optional<std::string> slang_error;  // slang stage failure, if any
  PeriodTopics train;
  PeriodTopics test;
};

TopicStage build_topic_stage(const PipelineInputs& inputs, const ExperimentConfig& config, std::size_t k);

struct FeatureSplit {
  FeatureMatrix train;
  FeatureMatrix test;
};

/// Assembles the feature set for both periods over all regions with a theta.
FeatureSplit build_features(const TopicStage& stage, const AdjacencyGraph& adjacency, FeatureSet feature_set,
                            double multiplier, const ExperimentConfig& config);

struct Evaluation {
  std::vector<std::string> regions;
  std::vector<int> truth;
  std::vector<int> predicted;
  double accuracy = 0.0;
  double mse = 0.0;
  std::optional<TrainedClassifier> model;
};

/// Trains on labelled training regions and scores the labelled test regions.
Evaluation train_and_evaluate(const FeatureSplit& features, const LabelSplit& labels, const ClassifierSpec& spec,
                              std::size_t min_regions);

/// Runs ingest -> LDA -> unlocated assignment -> features -> labels ->
/// classifier -> evaluation for one configuration, from scratch.
ReportRow run_pipeline(const ExperimentConfig& config, const RowSpec& spec);

/// Cartesian product feature set x K x radius x multiplier x classifier.
/// Inputs, LDA models (per K), adjacency (per radius) and features (per
/// feature set, K, radius, multiplier) are computed once. Failed rows keep
/// their error and the sweep continues.
ExperimentReport sweep(const ExperimentConfig& config);

/// Every RowSpec of the sweep grid, in report order.
std::vector<RowSpec> sweep_grid(const ExperimentConfig& config);

struct PlotFiles {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

/// MSE against multiplier, one series per feature set. Points average the
/// MSE over the remaining sweep dimensions. Writes `<stem>.csv` (`series,
/// multiplier,mse`) and a standalone `<stem>.svg` line chart.
PlotFiles emit_plot(const ExperimentReport& report, const std::filesystem::path& dir,
                    const std::string& stem = "plot");

}  // namespace geotopic
