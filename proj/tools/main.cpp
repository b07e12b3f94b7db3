// geotopic command-line interface.
//
// Stages read the experiment config and write their artifacts into --out.
// train/eval/plot consume the CSVs written by earlier stages, so the
// subcommands can be run one after another or replaced by a single sweep.

#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geotopic/harness.hpp"
#include "geotopic/synth.hpp"

namespace fs = std::filesystem;
using namespace geotopic;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  fs::path out = ".";
};

struct RowOptions {
  std::optional<std::size_t> k;
  std::optional<double> radius;
  std::optional<double> multiplier;
  std::optional<std::string> feature_set;
  std::optional<std::string> classifier;
};

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  auto config = ExperimentConfig::load(g.config);
  if (g.seed) config.seed = *g.seed;
  config.validate();
  return config;
}

RowSpec row_spec(const ExperimentConfig& c, const RowOptions& o) {
  RowSpec s;
  s.k = o.k.value_or(c.k_list.front());
  s.radius_km = o.radius.value_or(c.radius_km.front());
  s.multiplier = o.multiplier.value_or(c.multipliers.front());
  s.feature_set = o.feature_set ? parse_feature_set(*o.feature_set) : c.feature_sets.front();
  s.classifier = o.classifier ? parse_classifier_kind(*o.classifier) : c.classifiers.front();
  return s;
}

void add_row_options(CLI::App* cmd, RowOptions& o, bool with_features, bool with_classifier) {
  cmd->add_option("--k", o.k, "Topic count (default: first of the config's k list)");
  if (with_features) {
    cmd->add_option("--radius", o.radius, "Neighbour radius in km");
    cmd->add_option("--multiplier", o.multiplier, "Neighbour weight");
    cmd->add_option("--feature-set", o.feature_set, "baseline | slang | smooth | smooth+slang");
  }
  if (with_classifier)
    cmd->add_option("--classifier", o.classifier,
                    "bernoulli_nb | gaussian_nb | multinomial_nb | knn | random_forest");
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void say(const std::string& line) { std::cout << line << '\n'; }

// ------------------------------------------------------------ synth

struct SynthOptions {
  WorldConfig world;
  CorpusConfig corpus;
};

int cmd_synth(const Globals& g, const SynthOptions& o) {
  const std::uint64_t seed = g.seed.value_or(1);
  fs::create_directories(g.out);
  const auto world = generate_world(o.world, derive_seed(seed, "synth/world"));
  const auto records = generate_corpus(world, o.corpus, derive_seed(seed, "synth/corpus"));
  const auto rates = generate_rates(world, o.corpus.years, derive_seed(seed, "synth/rates"));
  const auto files = write_world(g.out, world, records, rates);

  std::set<int> years(o.corpus.years.begin(), o.corpus.years.end());
  if (years.size() < 2) throw ConfigError("synth needs at least two years to split train and test");
  ExperimentConfig cfg;
  cfg.records = files.records.filename();
  cfg.regions = files.regions.filename();
  cfg.rates = files.rates.filename();
  cfg.lexicon = files.lexicon.filename();
  cfg.outcome = o.world.outcome;
  cfg.test_years = {*years.rbegin()};
  years.erase(std::prev(years.end()));
  cfg.train_years = years;
  cfg.k_list = {o.world.topics};
  cfg.radius_km = {60.0};
  cfg.multipliers = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  cfg.train_sweeps = 200;
  cfg.infer_sweeps = 50;
  cfg.seed = seed;
  std::ofstream(g.out / "experiment.cfg") << "# generated by geotopic synth\n" << cfg.to_text();
  say("wrote synthetic world (" + std::to_string(world.regions.size()) + " regions, " +
      std::to_string(records.size()) + " records) to " + g.out.string());
  return kExitOk;
}

// ------------------------------------------------------------ stages

int cmd_ingest(const Globals& g) {
  const auto config = load_config(g);
  const auto in = load_inputs(config);
  fs::create_directories(g.out);
  in.rates.write_diagnostics_csv(g.out / "rates_diagnostics.csv");
  std::size_t suppressed = 0;
  for (const auto& r : in.rates.rows()) suppressed += is_suppressed(r.count, r.population) ? 1 : 0;
  write_json(g.out / "ingest.json",
             {{"regions", in.registry.size()},
              {"lexicon_terms", in.lexicon.size()},
              {"train", {{"located", in.train.located.size()}, {"unlocated", in.train.unlocated.size()}}},
              {"test", {{"located", in.test.located.size()}, {"unlocated", in.test.unlocated.size()}}},
              {"rate_rows", in.rates.size()},
              {"suppressed_rate_rows", suppressed},
              {"train_rate_regions", in.train_rates.size()},
              {"test_rate_regions", in.test_rates.size()}});
  say("ingested " + std::to_string(in.train.located.size() + in.train.unlocated.size()) + " train and " +
      std::to_string(in.test.located.size() + in.test.unlocated.size()) + " test records");
  return kExitOk;
}

int cmd_lda(const Globals& g, const RowOptions& o) {
  const auto config = load_config(g);
  const auto spec = row_spec(config, o);
  const auto in = load_inputs(config);
  const auto stage = build_topic_stage(in, config, spec.k);
  fs::create_directories(g.out);
  const std::string k = std::to_string(spec.k);
  stage.vocabulary.write_csv(g.out / "vocabulary.csv");
  stage.model->save(g.out / ("lda_k" + k + ".json"));
  write_theta_csv(g.out / ("theta_train_k" + k + ".csv"), stage.train.thetas);
  write_theta_csv(g.out / ("theta_test_k" + k + ".csv"), stage.test.thetas);
  if (stage.slang_model) {
    stage.slang_vocabulary.write_csv(g.out / "slang_vocabulary.csv");
    stage.slang_model->save(g.out / ("slang_lda_k" + k + ".json"));
  } else {
    std::cerr << "warning: " << stage.slang_error.value_or("no slang model") << '\n';
  }
  write_json(g.out / ("topics_k" + k + ".json"),
             {{"k", spec.k},
              {"vocabulary", stage.vocabulary.size()},
              {"train_regions", stage.train.thetas.size()},
              {"test_regions", stage.test.thetas.size()},
              {"assigned_unlocated", stage.train.assigned + stage.test.assigned},
              {"unassigned_unlocated", stage.train.unassigned + stage.test.unassigned}});
  say("trained LDA with K=" + k + " over " + std::to_string(stage.vocabulary.size()) + " terms");
  return kExitOk;
}

int cmd_featurize(const Globals& g, const RowOptions& o) {
  const auto config = load_config(g);
  const auto spec = row_spec(config, o);
  const auto in = load_inputs(config);
  const auto stage = build_topic_stage(in, config, spec.k);
  const auto adjacency = build_adjacency(in.registry, spec.radius_km);
  const auto features = build_features(stage, adjacency, spec.feature_set, spec.multiplier, config);
  fs::create_directories(g.out);
  adjacency.write_csv(g.out / "adjacency.csv", in.registry);
  features.train.write_csv(g.out / "features_train.csv");
  features.test.write_csv(g.out / "features_test.csv");
  say("wrote " + std::to_string(features.train.width()) + "-column features for " +
      std::to_string(features.train.regions().size()) + " train and " +
      std::to_string(features.test.regions().size()) + " test regions");
  return kExitOk;
}

int cmd_label(const Globals& g) {
  const auto config = load_config(g);
  const auto in = load_inputs(config);
  const auto labels = build_labels(in, config);
  fs::create_directories(g.out);
  labels.train.write_csv(g.out / "labels_train.csv");
  labels.test.write_csv(g.out / "labels_test.csv");
  write_json(g.out / "binning.json",
             {{"outcome", config.outcome}, {"mean", labels.train.binning.mean},
              {"stddev", labels.train.binning.stddev}});
  say("labelled " + std::to_string(labels.train.labels.size()) + " train and " +
      std::to_string(labels.test.labels.size()) + " test regions");
  return kExitOk;
}

Dataset labelled_dataset(const FeatureMatrix& features, const LabelVector& labels) {
  std::vector<std::string> regions;
  for (const auto& r : features.regions())
    if (labels.labels.contains(r)) regions.push_back(r);
  if (regions.empty()) throw DataError("no region has both features and a label");
  Dataset d;
  d.x = features.select(regions).values();
  d.ids = regions;
  for (const auto& r : regions) d.y.push_back(labels.labels.at(r));
  return d;
}

int cmd_train(const Globals& g, const RowOptions& o) {
  const auto config = load_config(g);
  const auto spec = row_spec(config, o);
  Dataset data = labelled_dataset(FeatureMatrix::read_csv(g.out / "features_train.csv"),
                                  LabelVector::read_csv(g.out / "labels_train.csv"));
  if (data.ids.size() < config.min_regions)
    throw DataError("only " + std::to_string(data.ids.size()) + " labelled training regions");
  if (spec.classifier == ClassifierKind::gaussian_nb) {
    std::map<int, std::size_t> counts;
    for (int y : data.y) ++counts[y];
    Dataset kept;
    std::vector<std::string> ids;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.y.size(); ++i)
      if (counts[data.y[i]] >= 2) rows.push_back(i);
    kept.x = Matrix(rows.size(), data.x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy(data.x.row(rows[i]).begin(), data.x.row(rows[i]).end(), kept.x.row(i).begin());
      kept.y.push_back(data.y[rows[i]]);
      kept.ids.push_back(data.ids[rows[i]]);
    }
    data = std::move(kept);
  }
  ClassifierSpec cs = config.classifier_params;
  cs.kind = spec.classifier;
  cs.forest.seed = derive_seed(config.seed, "forest/k" + std::to_string(spec.k));
  const auto model = train_classifier(cs, data);
  model.save(g.out / "model.json");
  say("trained " + std::string(to_string(spec.classifier)) + " on " + std::to_string(data.ids.size()) + " regions");
  return kExitOk;
}

int cmd_eval(const Globals& g) {
  const auto model = TrainedClassifier::load(g.out / "model.json");
  const auto data = labelled_dataset(FeatureMatrix::read_csv(g.out / "features_test.csv"),
                                     LabelVector::read_csv(g.out / "labels_test.csv"));
  const auto predicted = model.predict(data.x);
  const double acc = accuracy(predicted, data.y);
  const double mse = ordinal_mse(predicted, data.y);
  write_predictions_csv(g.out / "predictions.csv", data.ids, data.y, predicted);
  write_json(g.out / "metrics.json", {{"classifier", to_string(model.kind())},
                                      {"n_regions", data.ids.size()},
                                      {"accuracy", acc},
                                      {"mse", mse}});
  say("accuracy " + format_fixed(acc, 6) + ", ordinal MSE " + format_fixed(mse, 6) + " over " +
      std::to_string(data.ids.size()) + " regions");
  return kExitOk;
}

int cmd_sweep(const Globals& g, std::optional<std::size_t> threads) {
  auto config = load_config(g);
  if (threads) config.threads = *threads;
  const auto report = sweep(config);
  fs::create_directories(g.out);
  report.write_csv(g.out / "report.csv", config.report_runtime);
  report.write_json(g.out / "report.json", config);
  std::size_t failed = 0;
  for (const auto& r : report.rows)
    if (r.error) {
      ++failed;
      std::cerr << "row failed (" << to_string(r.spec.feature_set) << ", k=" << r.spec.k
                << ", radius=" << format_exact(r.spec.radius_km) << ", m=" << format_exact(r.spec.multiplier)
                << ", " << to_string(r.spec.classifier) << "): " << *r.error << '\n';
    }
  say("sweep finished: " + std::to_string(report.rows.size() - failed) + " of " +
      std::to_string(report.rows.size()) + " rows succeeded");
  return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_plot(const Globals& g, const fs::path& report_path) {
  const fs::path path = report_path.empty() ? g.out / "report.csv" : report_path;
  const auto report = ExperimentReport::read_csv(path);
  const auto files = emit_plot(report, g.out);
  say("wrote " + files.csv.string() + " and " + files.svg.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geotopic feature construction and regional outcome classification"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Experiment config file");
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic world and experiment.cfg");
  synth->add_option("--rows", so.world.rows, "Grid rows")->capture_default_str();
  synth->add_option("--cols", so.world.cols, "Grid columns")->capture_default_str();
  synth->add_option("--topics", so.world.topics, "Planted topics")->capture_default_str();
  synth->add_option("--vocab", so.world.vocab, "Topic vocabulary size")->capture_default_str();
  synth->add_option("--bandwidth", so.world.kernel_bandwidth, "Spatial kernel bandwidth (cells)")
      ->capture_default_str();
  synth->add_option("--gain", so.world.gain, "Rate gain on the risk topic")->capture_default_str();
  synth->add_option("--noise", so.world.rate_noise, "Rate noise sd")->capture_default_str();
  synth->add_option("--suppressed", so.world.suppressed_fraction, "Share of suppressed rate rows")
      ->capture_default_str();
  synth->add_option("--docs", so.corpus.docs_per_region, "Records per region and year")->capture_default_str();
  synth->add_option("--tokens", so.corpus.tokens_per_doc, "Tokens per record")->capture_default_str();
  synth->add_option("--years", so.corpus.years, "Years to generate")->capture_default_str();
  synth->add_option("--unlocated", so.corpus.unlocated_fraction, "Share of records without a region")
      ->capture_default_str();
  synth->add_option("--sparse", so.corpus.sparse_region_fraction, "Share of sparse regions")
      ->capture_default_str();
  synth->add_option("--sparse-docs", so.corpus.sparse_docs_per_region, "Records per sparse region and year")
      ->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Load and validate inputs; write an ingest summary");
  RowOptions lda_o, feat_o, train_o;
  auto* lda = app.add_subcommand("lda", "Train LDA and infer region topic mixtures");
  add_row_options(lda, lda_o, false, false);
  auto* featurize = app.add_subcommand("featurize", "Build train/test feature matrices");
  add_row_options(featurize, feat_o, true, false);
  auto* label = app.add_subcommand("label", "Bin outcome rates into labels");
  auto* train = app.add_subcommand("train", "Train a classifier on features_train.csv + labels_train.csv");
  add_row_options(train, train_o, false, true);
  auto* eval = app.add_subcommand("eval", "Score model.json on features_test.csv + labels_test.csv");
  std::optional<std::size_t> threads;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the full configuration grid; write report.csv/json");
  sweep_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
  fs::path report_path;
  auto* plot = app.add_subcommand("plot", "Plot MSE against multiplier from a report CSV");
  plot->add_option("--report", report_path, "Report CSV (default: <out>/report.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*synth) return cmd_synth(g, so);
    if (*ingest) return cmd_ingest(g);
    if (*lda) return cmd_lda(g, lda_o);
    if (*featurize) return cmd_featurize(g, feat_o);
    if (*label) return cmd_label(g);
    if (*train) return cmd_train(g, train_o);
    if (*eval) return cmd_eval(g);
    if (*sweep_cmd) return cmd_sweep(g, threads);
    if (*plot) return cmd_plot(g, report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}
