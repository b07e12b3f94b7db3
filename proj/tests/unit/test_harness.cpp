#include <doctest.h>

#include <nlohmann/json.hpp>

#include "geotopic/harness.hpp"
#include "geotopic/synth.hpp"
#include "test_support.hpp"

using namespace geotopic;
using geotopic::testing::read_file;
using geotopic::testing::TempDir;
using geotopic::testing::write_file;

namespace {

// A small world on disk plus a fast config pointing at it.
struct World {
  TempDir dir{"harness"};
  ExperimentConfig config;

  explicit World(std::uint64_t seed = 1, double rate_noise = 1.0) {
    WorldConfig wc;
    wc.rows = wc.cols = 6;
    wc.topics = 4;
    wc.vocab = 80;
    wc.rate_noise = rate_noise;
    auto w = generate_world(wc, seed);
    CorpusConfig cc;
    cc.docs_per_region = 12;
    cc.tokens_per_doc = 20;
    cc.unlocated_fraction = 0.05;
    auto files = write_world(dir.path(), w, generate_corpus(w, cc, seed), generate_rates(w, cc.years, seed));
    config.records = files.records;
    config.regions = files.regions;
    config.rates = files.rates;
    config.lexicon = files.lexicon;
    config.k_list = {4};
    config.radius_km = {60};
    config.multipliers = {0, 1};
    config.feature_sets = {FeatureSet::baseline, FeatureSet::smooth};
    config.train_sweeps = 40;
    config.infer_sweeps = 20;
    config.threads = 2;
  }
};

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse keys, lists and ranges") {
    auto c = ExperimentConfig::parse(
        "# comment\n"
        "records = data/r.jsonl\n"
        "regions = /abs/regions.csv\n"
        "outcome = hiv\n"
        "train_years = 2009-2013\n"
        "test_years = 2014\n"
        "k = 5, 10\n"
        "radius_km = 25,50\n"
        "multiplier = 0, 0.5\n"
        "feature_sets = baseline, smooth+slang\n"
        "classifiers = knn, random_forest\n"
        "smoothing = weighted\n"
        "slang_weight = 0.25\n"
        "knn_k = 3\n"
        "rf_trees = 7\n"
        "seed = 99\n",
        "/base");
    CHECK(c.records == std::filesystem::path("/base/data/r.jsonl"));
    CHECK(c.regions == std::filesystem::path("/abs/regions.csv"));
    CHECK(c.outcome == "hiv");
    CHECK(c.train_years == std::set<int>{2009, 2010, 2011, 2012, 2013});
    CHECK(c.test_years == std::set<int>{2014});
    CHECK(c.k_list == std::vector<std::size_t>{5, 10});
    CHECK(c.multipliers == std::vector<double>{0, 0.5});
    CHECK(c.feature_sets == std::vector<FeatureSet>{FeatureSet::baseline, FeatureSet::smooth_slang});
    CHECK(c.classifiers == std::vector<ClassifierKind>{ClassifierKind::knn, ClassifierKind::random_forest});
    CHECK(c.smoothing == SmoothingMethod::weighted);
    CHECK(c.slang_weight == 0.25);
    CHECK(c.classifier_params.knn_k == 3);
    CHECK(c.classifier_params.forest.n_trees == 7);
    CHECK(c.seed == 99);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(ExperimentConfig::parse("bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("k = five\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("feature_sets = everything\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/file.cfg"), ConfigError);
  }

  TEST_CASE("validation") {
    ExperimentConfig c;
    c.records = c.regions = c.rates = c.lexicon = "x";
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.test_years = {2015};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.k_list.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.multipliers = {-1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.radius_km = {0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.records.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("text round trip and hash") {
    ExperimentConfig c;
    c.records = "/a/r.jsonl";
    c.k_list = {3, 7};
    c.multipliers = {0.1, 0.3};
    auto back = ExperimentConfig::parse(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.hash() == c.hash());
    auto threads = c;
    threads.threads = 7;
    CHECK(threads.hash() == c.hash());
    auto seed = c;
    seed.seed = 2;
    CHECK(seed.hash() != c.hash());
  }

  TEST_CASE("enum names") {
    for (auto fs : {FeatureSet::baseline, FeatureSet::slang, FeatureSet::smooth, FeatureSet::smooth_slang})
      CHECK(parse_feature_set(to_string(fs)) == fs);
    CHECK(to_string(FeatureSet::smooth_slang) == "smooth+slang");
    CHECK(parse_smoothing_method("concat") == SmoothingMethod::concat);
  }
}

TEST_SUITE("grid") {
  TEST_CASE("row count is the product of list lengths") {
    ExperimentConfig c;
    CHECK(sweep_grid(c).size() == 4 * 6 * 3 * 6 * 1);
    c.classifiers = {ClassifierKind::knn, ClassifierKind::gaussian_nb};
    c.k_list = {5};
    CHECK(sweep_grid(c).size() == 4 * 1 * 3 * 6 * 2);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("singleton lists give one row that matches run_pipeline") {
    World w;
    w.config.feature_sets = {FeatureSet::smooth};
    w.config.multipliers = {1};
    auto report = sweep(w.config);
    REQUIRE(report.rows.size() == 1);
    CHECK_FALSE(report.rows[0].error);
    auto row = run_pipeline(w.config, sweep_grid(w.config).front());
    CHECK(row.accuracy == report.rows[0].accuracy);
    CHECK(row.mse == report.rows[0].mse);
    CHECK(row.n_regions == report.rows[0].n_regions);
    CHECK(row.train_fingerprint == report.rows[0].train_fingerprint);
  }

  TEST_CASE("shared-stage sweep equals independent runs") {
    World w(3);
    w.config.feature_sets = {FeatureSet::baseline, FeatureSet::smooth, FeatureSet::slang, FeatureSet::smooth_slang};
    w.config.classifiers = {ClassifierKind::gaussian_nb, ClassifierKind::knn};
    auto report = sweep(w.config);
    const auto grid = sweep_grid(w.config);
    REQUIRE(report.rows.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      REQUIRE_FALSE(report.rows[i].error);
      auto row = run_pipeline(w.config, grid[i]);
      CHECK(row.accuracy == report.rows[i].accuracy);
      CHECK(row.mse == report.rows[i].mse);
      CHECK(row.train_fingerprint == report.rows[i].train_fingerprint);
    }
  }

  TEST_CASE("baseline equals smoothing at m = 0") {
    World w(4);
    w.config.multipliers = {0};
    for (auto method : {SmoothingMethod::concat, SmoothingMethod::weighted}) {
      w.config.smoothing = method;
      auto report = sweep(w.config);
      REQUIRE(report.rows.size() == 2);
      CHECK(report.rows[0].accuracy == report.rows[1].accuracy);
      CHECK(report.rows[0].mse == report.rows[1].mse);
    }
  }

  TEST_CASE("reports are byte-identical across runs and thread counts") {
    World w(5);
    TempDir out("det");
    auto a = sweep(w.config);
    w.config.threads = 1;
    auto b = sweep(w.config);
    a.write_csv(out / "a.csv", false);
    b.write_csv(out / "b.csv", false);
    CHECK(read_file(out / "a.csv") == read_file(out / "b.csv"));
    a.write_json(out / "a.json", w.config);
    b.write_json(out / "b.json", w.config);
    CHECK(read_file(out / "a.json") == read_file(out / "b.json"));
  }

  TEST_CASE("perturbing test data never changes trained models") {
    World w(6);
    w.config.feature_sets = {FeatureSet::baseline, FeatureSet::smooth_slang};
    auto before = sweep(w.config);

    // Rewrite every test-year record and rate.
    auto records = read_records_jsonl(w.config.records);
    for (auto& r : records)
      if (w.config.test_years.contains(year_of(r.timestamp))) r.text = "w0001 w0002 sl001 " + r.text.substr(0, 30);
    write_records_jsonl(w.config.records, records);
    auto rates = RateTable::load_csv(w.config.rates).rows();
    for (auto& r : rates)
      if (w.config.test_years.contains(r.year)) r.rate = 1000 - r.rate;
    RateTable(rates).write_csv(w.config.rates);

    auto after = sweep(w.config);
    REQUIRE(before.rows.size() == after.rows.size());
    for (std::size_t i = 0; i < before.rows.size(); ++i) {
      REQUIRE_FALSE(after.rows[i].error);
      CHECK(before.rows[i].train_fingerprint == after.rows[i].train_fingerprint);
    }
  }

  TEST_CASE("partial failures are recorded and the sweep continues") {
    World w(7);
    write_file(w.config.lexicon, "neverused\n");
    w.config.feature_sets = {FeatureSet::baseline, FeatureSet::slang};
    w.config.multipliers = {0};
    auto report = sweep(w.config);
    REQUIRE(report.rows.size() == 2);
    CHECK_FALSE(report.rows[0].error);
    REQUIRE(report.rows[1].error);
    CHECK(report.rows[1].error->find("slang") != std::string::npos);
    CHECK(report.has_failures());

    TempDir out("partial");
    report.write_csv(out / "r.csv", false);
    report.write_json(out / "r.json", w.config);
    CHECK(ExperimentReport::read_csv(out / "r.csv").rows.size() == 1);
    auto j = nlohmann::json::parse(read_file(out / "r.json"));
    CHECK(j["failures"].size() == 1);
    CHECK(j["seed"] == w.config.seed);
    CHECK(j["config"]["k"] == "4");
  }

  TEST_CASE("too few labelled regions names the stage") {
    World w(8);
    w.config.min_regions = 1000;
    w.config.multipliers = {0};
    w.config.feature_sets = {FeatureSet::baseline};
    try {
      run_pipeline(w.config, sweep_grid(w.config).front());
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "train");
    }
  }

  TEST_CASE("missing inputs fail in the ingest stage") {
    World w(9);
    w.config.regions = w.dir / "missing.csv";
    try {
      load_inputs(w.config);
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "ingest");
    }
  }

  TEST_CASE("unlocated records are assigned") {
    World w(10);
    auto inputs = load_inputs(w.config);
    CHECK_FALSE(inputs.train.unlocated.empty());
    auto stage = build_topic_stage(inputs, w.config, 4);
    CHECK(stage.train.assigned > 0);
    CHECK(stage.train.assigned + stage.train.unassigned == inputs.train.unlocated.size());
    CHECK(stage.train.records.size() == inputs.train.located.size() + stage.train.assigned);
  }
}

TEST_SUITE("report") {
  namespace {
  ExperimentReport sample_report() {
    ExperimentReport r;
    double mse = 2.0;
    for (auto fs : {FeatureSet::baseline, FeatureSet::smooth})
      for (double m : {0.0, 0.5, 2.0})
        for (double radius : {25.0, 50.0}) {
          ReportRow row;
          row.spec = {fs, 5, radius, m, ClassifierKind::gaussian_nb};
          row.mse = fs == FeatureSet::baseline ? 1.5 : (mse -= 0.123456789);
          row.accuracy = 0.3;
          row.n_regions = 20;
          r.rows.push_back(row);
        }
    return r;
  }
  }  // namespace

  TEST_CASE("csv header and runtime column") {
    TempDir dir("rep");
    auto r = sample_report();
    r.rows[0].runtime_ms = 12.5;
    r.write_csv(dir / "a.csv", false);
    r.write_csv(dir / "b.csv", true);
    const auto a = read_file(dir / "a.csv"), b = read_file(dir / "b.csv");
    CHECK(a.starts_with("feature_set,k,radius_km,multiplier,classifier,accuracy,mse,n_regions,runtime_ms\n"));
    CHECK(a.find("baseline,5,25,0,gaussian_nb,0.300000,1.500000,20,0\n") != std::string::npos);
    CHECK(b.find(",12.500\n") != std::string::npos);
    auto back = ExperimentReport::read_csv(dir / "a.csv");
    CHECK(back.rows.size() == r.rows.size());
    CHECK(back.rows[3].spec.multiplier == r.rows[3].spec.multiplier);
  }

  TEST_CASE("plot csv averages over the other dimensions and matches the report") {
    TempDir dir("plot");
    auto r = sample_report();
    auto files = emit_plot(r, dir.path());
    const auto csv = read_file(files.csv);
    CHECK(csv.starts_with("series,multiplier,mse\n"));
    CHECK(csv.find("baseline,0,1.500000\n") != std::string::npos);
    CHECK(csv.find("baseline,2,1.500000\n") != std::string::npos);
    // smooth at m = 0: rows 7 and 8 of the sample with mse 2 - 0.123456789 * {1, 2}.
    CHECK(csv.find("smooth,0,1.814815\n") != std::string::npos);
    const auto svg = read_file(files.svg);
    CHECK(svg.starts_with("<svg"));
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("baseline") != std::string::npos);
    CHECK(svg.find("smooth") != std::string::npos);
  }

  TEST_CASE("one-row report") {
    TempDir dir("plot1");
    ExperimentReport r;
    ReportRow row;
    row.spec = {FeatureSet::smooth, 5, 50, 1.0, ClassifierKind::knn};
    row.mse = 0.1234567;
    r.rows.push_back(row);
    r.write_csv(dir / "report.csv", false);
    auto files = emit_plot(r, dir.path(), "one");
    const auto csv = read_file(files.csv);
    CHECK(csv == "series,multiplier,mse\nsmooth,1,0.123457\n");
    const auto report_csv = read_file(dir / "report.csv");
    CHECK(report_csv.find(",0.123457,") != std::string::npos);
    const auto svg = read_file(files.svg);
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
    CHECK(circles == 1);
  }

  TEST_CASE("empty report is an error") {
    TempDir dir("plot0");
    CHECK_THROWS_AS(emit_plot(ExperimentReport{}, dir.path()), DataError);
  }
}
