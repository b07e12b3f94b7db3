#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "geotopic/harness.hpp"

namespace geotopic {

StageError::StageError(std::string stage, const std::string& message)
    : DataError("stage " + stage + ": " + message), stage_(std::move(stage)) {}

namespace {

template <typename F>
auto in_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. fn must not throw.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

ThetaMap infer_region_thetas(const LdaModel& model, const Vocabulary& vocab, const RegionDocuments& docs,
                             const ExperimentConfig& config, const std::string& tag) {
  ThetaMap out;
  for (const auto& [region, doc] : docs) {
    const InferenceOptions opt{config.infer_sweeps, derive_seed(config.seed, tag + "/" + region)};
    out[region] = infer_theta(model, doc.encode(vocab), opt).theta;
  }
  return out;
}

PeriodTopics process_period(const PeriodRecords& period, const TopicStage& stage, const ExperimentConfig& config,
                            const std::string& period_name) {
  PeriodTopics out;
  const auto& model = *stage.model;
  const std::string tag = "k" + std::to_string(stage.k) + "/" + period_name;

  out.records = period.located;
  out.thetas = infer_region_thetas(model, stage.vocabulary, assemble_region_documents(out.records), config,
                                   "theta/" + tag);

  if (config.assign_unlocated && !out.thetas.empty() && !period.unlocated.empty()) {
    const ThetaMap located_thetas = out.thetas;
    for (const auto& record : period.unlocated) {
      const InferenceOptions opt{config.infer_sweeps, derive_seed(config.seed, "unlocated/" + tag + "/" + record.id)};
      const auto region = assign_unlocated(stage.vocabulary.encode(record.tokens), model, located_thetas, opt);
      if (!region) {
        ++out.unassigned;
        continue;
      }
      TokenizedRecord assigned = record;
      assigned.region = *region;
      out.records.push_back(std::move(assigned));
      ++out.assigned;
    }
    if (out.assigned > 0)
      out.thetas = infer_region_thetas(model, stage.vocabulary, assemble_region_documents(out.records), config,
                                       "theta/" + tag);
  } else {
    out.unassigned = period.unlocated.size();
  }

  if (stage.slang_model) {
    std::map<std::string, std::vector<std::uint32_t>> slang_docs;
    for (const auto& id : out.thetas) slang_docs[id.first];
    for (const auto& r : out.records) {
      auto& doc = slang_docs[*r.region];
      for (const auto& t : r.tokens)
        if (auto i = stage.slang_vocabulary.index(t)) doc.push_back(static_cast<std::uint32_t>(*i));
    }
    for (const auto& [region, doc] : slang_docs) {
      const InferenceOptions opt{config.infer_sweeps, derive_seed(config.seed, "slang-theta/" + tag + "/" + region)};
      out.slang_thetas[region] = infer_theta(*stage.slang_model, doc, opt);
    }
  }
  return out;
}

std::uint64_t train_fingerprint(const TopicStage& stage, const LabelSplit& labels, const TrainedClassifier& model) {
  std::string bytes = std::to_string(stage.vocabulary.hash()) + "|" + std::to_string(stage.model->fingerprint()) + "|";
  if (stage.slang_model) bytes += std::to_string(stage.slang_model->fingerprint());
  bytes += "|" + format_exact(labels.train.binning.mean) + "|" + format_exact(labels.train.binning.stddev) + "|" +
           std::to_string(model.fingerprint());
  return fnv1a64(bytes);
}

}  // namespace

// ------------------------------------------------------------ stages

PipelineInputs load_inputs(const ExperimentConfig& config) {
  config.validate();
  PipelineInputs in;
  in_stage("ingest", [&] {
    in.registry = RegionRegistry::load_csv(config.regions);
    in.lexicon = SlangLexicon::load(config.lexicon);
    TokenizerOptions options;
    if (!config.stopwords.empty()) options.stopwords = load_stopwords(config.stopwords);
    std::vector<TokenizedRecord> train, test;
    for (const auto& raw : read_records_jsonl(config.records)) {
      auto t = tokenize_record(raw, options, &in.lexicon);
      if (config.train_years.contains(t.year)) train.push_back(std::move(t));
      else if (config.test_years.contains(t.year)) test.push_back(std::move(t));
    }
    auto tp = partition_by_registry(std::move(train), in.registry);
    in.train = {std::move(tp.located), std::move(tp.unlocated)};
    auto sp = partition_by_registry(std::move(test), in.registry);
    in.test = {std::move(sp.located), std::move(sp.unlocated)};
    if (in.train.located.empty()) throw DataError("no located records in the training years");
    return 0;
  });
  in_stage("labels", [&] {
    in.rates = apply_suppression(RateTable::load_csv(config.rates));
    in.train_rates = in.rates.mean_rates(config.outcome, config.train_years);
    in.test_rates = in.rates.mean_rates(config.outcome, config.test_years);
    return 0;
  });
  return in;
}

LabelSplit build_labels(const PipelineInputs& inputs, const ExperimentConfig& config) {
  return in_stage("labels", [&] {
    std::vector<double> values;
    for (const auto& [_, r] : inputs.train_rates) values.push_back(r);
    const Binning binning = Binning::fit(values);
    return LabelSplit{make_labels(inputs.train_rates, binning, config.outcome, config.train_years),
                      make_labels(inputs.test_rates, binning, config.outcome, config.test_years)};
  });
}

TopicStage build_topic_stage(const PipelineInputs& inputs, const ExperimentConfig& config, std::size_t k) {
  TopicStage stage;
  stage.k = k;
  std::vector<TokenizedRecord> training = inputs.train.located;
  training.insert(training.end(), inputs.train.unlocated.begin(), inputs.train.unlocated.end());

  in_stage("vocabulary", [&] {
    std::vector<std::vector<std::string>> docs;
    for (const auto& r : training) docs.push_back(r.tokens);
    stage.vocabulary = Vocabulary::build(docs, config.vocabulary);
    if (stage.vocabulary.size() == 0) throw DataError("vocabulary is empty after pruning");
    return 0;
  });

  in_stage("lda", [&] {
    std::vector<TokenIds> docs;
    for (const auto& r : training) {
      auto ids = stage.vocabulary.encode(r.tokens);
      if (!ids.empty()) docs.push_back(std::move(ids));
    }
    LdaParams params{k, config.alpha, config.beta, config.train_sweeps,
                     derive_seed(config.seed, "lda/k" + std::to_string(k))};
    stage.model = train_lda(docs, stage.vocabulary, params);
    return 0;
  });

  try {
    in_stage("slang-lda", [&] {
      std::vector<std::vector<std::string>> stripped;
      for (const auto& r : training) {
        auto s = strip_to_slang(r, inputs.lexicon);
        if (!s.empty()) stripped.push_back(std::move(s));
      }
      if (stripped.empty()) throw DataError("no slang tokens in the training records");
      stage.slang_vocabulary = Vocabulary::build(stripped, VocabularyOptions{1, 1.0});
      std::vector<TokenIds> docs;
      for (const auto& s : stripped) docs.push_back(stage.slang_vocabulary.encode(s));
      const std::size_t ks = config.slang_topics > 0 ? config.slang_topics : k;
      LdaParams params{ks, config.alpha, config.beta, config.train_sweeps,
                       derive_seed(config.seed, "slang-lda/k" + std::to_string(k))};
      stage.slang_model = train_lda(docs, stage.slang_vocabulary, params);
      return 0;
    });
  } catch (const StageError& e) {
    stage.slang_error = e.what();
  }

  in_stage("topics", [&] {
    stage.train = process_period(inputs.train, stage, config, "train");
    stage.test = process_period(inputs.test, stage, config, "test");
    return 0;
  });
  return stage;
}

FeatureSplit build_features(const TopicStage& stage, const AdjacencyGraph& adjacency, FeatureSet feature_set,
                            double multiplier, const ExperimentConfig& config) {
  const bool wants_slang = feature_set == FeatureSet::slang || feature_set == FeatureSet::smooth_slang;
  if (wants_slang && !stage.slang_model)
    throw StageError("features", "slang features unavailable: " + stage.slang_error.value_or("no slang model"));
  return in_stage("features", [&] {
    auto period = [&](const PeriodTopics& p) {
      std::vector<FeatureBlock> blocks;
      std::vector<double> weights;
      if (feature_set == FeatureSet::baseline || feature_set == FeatureSet::slang) {
        blocks.push_back(baseline_block(p.thetas));
      } else if (config.smoothing == SmoothingMethod::concat) {
        blocks.push_back(smooth_concat_block(p.thetas, adjacency, multiplier));
      } else {
        blocks.push_back(smooth_weighted_block(p.thetas, adjacency, multiplier));
      }
      weights.push_back(1.0);
      if (wants_slang) {
        blocks.push_back(slang_topic_block(p.slang_thetas));
        blocks.push_back(slang_ratio_block(p.records));
        weights.push_back(config.slang_weight);
        weights.push_back(config.slang_weight);
      }
      return assemble(blocks, weights);
    };
    return FeatureSplit{period(stage.train), period(stage.test)};
  });
}

Evaluation train_and_evaluate(const FeatureSplit& features, const LabelSplit& labels, const ClassifierSpec& spec,
                              std::size_t min_regions) {
  auto labelled = [](const FeatureMatrix& m, const LabelVector& lv) {
    std::vector<std::string> out;
    for (const auto& r : m.regions())
      if (lv.labels.contains(r)) out.push_back(r);
    return out;
  };
  auto dataset = [](const FeatureMatrix& m, const LabelVector& lv, const std::vector<std::string>& regions) {
    Dataset d;
    const auto sub = m.select(regions);
    d.x = sub.values();
    d.ids = regions;
    for (const auto& r : regions) d.y.push_back(lv.labels.at(r));
    return d;
  };

  auto train_regions = labelled(features.train, labels.train);
  auto test_regions = labelled(features.test, labels.test);
  if (train_regions.size() < min_regions)
    throw StageError("train", "only " + std::to_string(train_regions.size()) +
                                  " labelled training regions after suppression (need " + std::to_string(min_regions) +
                                  ")");
  if (test_regions.size() < min_regions)
    throw StageError("eval", "only " + std::to_string(test_regions.size()) +
                                 " labelled test regions after suppression (need " + std::to_string(min_regions) + ")");

  Evaluation ev;
  in_stage("train", [&] {
    if (spec.kind == ClassifierKind::gaussian_nb) {
      // Classes with a single training region cannot be modelled.
      std::map<int, std::size_t> counts;
      for (const auto& r : train_regions) ++counts[labels.train.labels.at(r)];
      std::erase_if(train_regions, [&](const std::string& r) { return counts[labels.train.labels.at(r)] < 2; });
    }
    ev.model = train_classifier(spec, dataset(features.train, labels.train, train_regions));
    return 0;
  });
  in_stage("eval", [&] {
    const Dataset test = dataset(features.test, labels.test, test_regions);
    ev.regions = test.ids;
    ev.truth = test.y;
    ev.predicted = ev.model->predict(test.x);
    ev.accuracy = accuracy(ev.predicted, ev.truth);
    ev.mse = ordinal_mse(ev.predicted, ev.truth);
    return 0;
  });
  return ev;
}

namespace {

ClassifierSpec row_classifier(const ExperimentConfig& config, ClassifierKind kind, std::size_t k) {
  ClassifierSpec spec = config.classifier_params;
  spec.kind = kind;
  spec.forest.seed = derive_seed(config.seed, "forest/k" + std::to_string(k));
  return spec;
}

ReportRow evaluate_row(const RowSpec& spec, const TopicStage& stage, const FeatureSplit& features,
                       const LabelSplit& labels, const ExperimentConfig& config) {
  ReportRow row;
  row.spec = spec;
  const auto start = std::chrono::steady_clock::now();
  const auto ev = train_and_evaluate(features, labels, row_classifier(config, spec.classifier, spec.k),
                                     config.min_regions);
  row.accuracy = ev.accuracy;
  row.mse = ev.mse;
  row.n_regions = ev.regions.size();
  row.train_fingerprint = train_fingerprint(stage, labels, *ev.model);
  row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

bool ignores_neighbors(FeatureSet fs) { return fs == FeatureSet::baseline || fs == FeatureSet::slang; }

}  // namespace

ReportRow run_pipeline(const ExperimentConfig& config, const RowSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  const auto inputs = load_inputs(config);
  const auto labels = build_labels(inputs, config);
  const auto stage = build_topic_stage(inputs, config, spec.k);
  const auto adjacency = in_stage("geo", [&] { return build_adjacency(inputs.registry, spec.radius_km); });
  const auto features = build_features(stage, adjacency, spec.feature_set, spec.multiplier, config);
  auto row = evaluate_row(spec, stage, features, labels, config);
  row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<RowSpec> sweep_grid(const ExperimentConfig& config) {
  std::vector<RowSpec> grid;
  for (auto fs : config.feature_sets)
    for (auto k : config.k_list)
      for (double r : config.radius_km)
        for (double m : config.multipliers)
          for (auto c : config.classifiers) grid.push_back({fs, k, r, m, c});
  return grid;
}

ExperimentReport sweep(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config_hash = config.hash();
  report.seed = config.seed;

  const auto inputs = load_inputs(config);
  const auto labels = build_labels(inputs, config);
  const auto grid = sweep_grid(config);

  // Topic stages, one per K.
  std::vector<std::size_t> ks = config.k_list;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::vector<std::optional<TopicStage>> stages(ks.size());
  std::vector<std::string> stage_errors(ks.size());
  parallel_for(ks.size(), config.threads, [&](std::size_t i) {
    try {
      stages[i] = build_topic_stage(inputs, config, ks[i]);
    } catch (const std::exception& e) {
      stage_errors[i] = e.what();
    }
  });
  auto stage_index = [&](std::size_t k) {
    return static_cast<std::size_t>(std::lower_bound(ks.begin(), ks.end(), k) - ks.begin());
  };

  std::map<double, AdjacencyGraph> adjacency;
  std::map<double, std::string> adjacency_errors;
  for (double r : config.radius_km) {
    try {
      adjacency.emplace(r, build_adjacency(inputs.registry, r));
    } catch (const std::exception& e) {
      adjacency_errors.emplace(r, std::string("stage geo: ") + e.what());
    }
  }

  // Feature jobs; feature sets that ignore neighbours share one job per K.
  struct FeatureKey {
    FeatureSet fs;
    std::size_t k;
    double radius;
    double multiplier;
    auto operator<=>(const FeatureKey&) const = default;
  };
  auto key_of = [&](const RowSpec& s) {
    if (ignores_neighbors(s.feature_set)) return FeatureKey{s.feature_set, s.k, 0.0, 0.0};
    return FeatureKey{s.feature_set, s.k, s.radius_km, s.multiplier};
  };
  std::map<FeatureKey, std::size_t> job_index;
  std::vector<FeatureKey> jobs;
  std::vector<RowSpec> job_spec;
  for (const auto& s : grid) {
    const auto key = key_of(s);
    if (job_index.emplace(key, jobs.size()).second) {
      jobs.push_back(key);
      job_spec.push_back(s);
    }
  }
  std::vector<std::optional<FeatureSplit>> job_features(jobs.size());
  std::vector<std::string> job_errors(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const auto& s = job_spec[j];
    const auto si = stage_index(s.k);
    if (!stages[si]) {
      job_errors[j] = stage_errors[si];
      return;
    }
    auto adj = adjacency.find(s.radius_km);
    if (adj == adjacency.end()) {
      job_errors[j] = adjacency_errors[s.radius_km];
      return;
    }
    try {
      job_features[j] = build_features(*stages[si], adj->second, s.feature_set, s.multiplier, config);
    } catch (const std::exception& e) {
      job_errors[j] = e.what();
    }
  });

  report.rows.resize(grid.size());
  parallel_for(grid.size(), config.threads, [&](std::size_t i) {
    const auto& s = grid[i];
    const auto j = job_index.at(key_of(s));
    if (!job_features[j]) {
      report.rows[i].spec = s;
      report.rows[i].error = job_errors[j];
      return;
    }
    try {
      report.rows[i] = evaluate_row(s, *stages[stage_index(s.k)], *job_features[j], labels, config);
    } catch (const std::exception& e) {
      report.rows[i] = ReportRow{};
      report.rows[i].spec = s;
      report.rows[i].error = e.what();
    }
  });
  report.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace geotopic
