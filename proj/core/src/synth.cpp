#include "geotopic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "geotopic/rng.hpp"

namespace geotopic {

namespace {

std::string numbered_id(const char* fmt, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, i);
  return buf;
}

std::vector<double> matrix_row(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return {row.begin(), row.end()};
}

double l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

void WorldConfig::validate() const {
  if (topics < 2) throw ConfigError("world: need at least 2 topics");
  if (vocab < 2 * topics) throw ConfigError("world: vocabulary must have at least 2K words");
  if (rows < 2 || cols < 2) throw ConfigError("world: grid must be at least 2x2");
  if (!(spacing_deg > 0.0)) throw ConfigError("world: spacing_deg must be positive");
  if (origin.lat < -90.0 || origin.lat + static_cast<double>(rows - 1) * spacing_deg > 90.0 ||
      origin.lon < -180.0 || origin.lon + static_cast<double>(cols - 1) * spacing_deg > 180.0)
    throw ConfigError("world: grid leaves the valid coordinate range");
  if (!(cell_concentration > 0.0) || !(topic_concentration > 0.0) || !(slang_concentration > 0.0))
    throw ConfigError("world: Dirichlet concentrations must be positive");
  if (kernel_bandwidth < 0.0) throw ConfigError("world: kernel_bandwidth must be >= 0");
  if (smoothness_bound < 0.0) throw ConfigError("world: smoothness_bound must be >= 0");
  if (topic_overlap < 0.0 || topic_overlap > 1.0) throw ConfigError("world: topic_overlap must be in [0,1]");
  if (slang_terms < 1 || slang_topics < 1 || slang_terms < slang_topics)
    throw ConfigError("world: need at least one slang term per slang topic");
  if (slang_rate_min < 0.0 || slang_rate_max > 1.0 || slang_rate_min > slang_rate_max)
    throw ConfigError("world: slang rates must satisfy 0 <= min <= max <= 1");
  if (risk_topic >= topics) throw ConfigError("world: risk_topic must be < topics");
  if (rate_noise < 0.0 || base_rate < 0.0) throw ConfigError("world: base_rate and rate_noise must be >= 0");
  if (suppressed_fraction < 0.0 || suppressed_fraction > 1.0)
    throw ConfigError("world: suppressed_fraction must be in [0,1]");
  if (population_min < kMinReportablePopulation || population_min > population_max)
    throw ConfigError("world: population range must satisfy 100 <= min <= max");
}

RegionRegistry PlantedWorld::registry() const { return RegionRegistry(regions); }

ThetaMap PlantedWorld::theta_map() const {
  ThetaMap out;
  for (std::size_t i = 0; i < regions.size(); ++i) out[regions[i].id] = matrix_row(region_theta, i);
  return out;
}

std::size_t PlantedWorld::region_index(const std::string& id) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].id == id) return i;
  throw LookupError("world has no region " + id);
}

void PlantedWorld::write_truth_json(const std::filesystem::path& path) const {
  auto matrix_json = [](const Matrix& m) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(matrix_row(m, r));
    return rows;
  };
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["grid"] = {{"rows", config.rows}, {"cols", config.cols}, {"spacing_deg", config.spacing_deg}};
  j["topics"] = config.topics;
  j["risk_topic"] = config.risk_topic;
  j["rate"] = {{"base", config.base_rate}, {"gain", config.gain}, {"noise", config.rate_noise},
               {"outcome", config.outcome}};
  std::vector<std::string> ids;
  for (const auto& r : regions) ids.push_back(r.id);
  j["regions"] = ids;
  j["words"] = words;
  j["topic_word"] = matrix_json(topic_word);
  j["region_theta"] = matrix_json(region_theta);
  j["slang_terms"] = slang_terms;
  j["slang_topic_word"] = matrix_json(slang_topic_word);
  j["region_slang_theta"] = matrix_json(region_slang_theta);
  j["slang_rate"] = slang_rate;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

PlantedWorld generate_world(const WorldConfig& config, std::uint64_t seed) {
  config.validate();
  PlantedWorld w;
  w.config = config;
  w.seed = seed;
  const std::size_t K = config.topics, V = config.vocab, n = config.rows * config.cols;

  Rng pop_rng(derive_seed(seed, "world.population"));
  const double log_min = std::log(static_cast<double>(config.population_min));
  const double log_max = std::log(static_cast<double>(config.population_max));
  for (std::size_t r = 0; r < config.rows; ++r) {
    for (std::size_t c = 0; c < config.cols; ++c) {
      const std::size_t i = r * config.cols + c;
      Region region;
      region.id = numbered_id("%05zu", i + 1);
      region.centroid = {config.origin.lat + static_cast<double>(r) * config.spacing_deg,
                         config.origin.lon + static_cast<double>(c) * config.spacing_deg};
      region.population = static_cast<std::uint64_t>(std::llround(std::exp(log_min + (log_max - log_min) * pop_rng.uniform())));
      w.regions.push_back(std::move(region));
      w.grid_row.push_back(r);
      w.grid_col.push_back(c);
    }
  }

  // Topic-word: each topic owns a contiguous block of the vocabulary.
  for (std::size_t v = 0; v < V; ++v) w.words.push_back(numbered_id("w%04zu", v));
  Rng topic_rng(derive_seed(seed, "world.topics"));
  w.topic_word = Matrix(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t begin = k * (V / K);
    const std::size_t end = k + 1 == K ? V : (k + 1) * (V / K);
    const auto block = topic_rng.dirichlet(end - begin, config.topic_concentration);
    for (std::size_t v = 0; v < V; ++v) w.topic_word(k, v) = config.topic_overlap / static_cast<double>(V);
    for (std::size_t v = begin; v < end; ++v) w.topic_word(k, v) += (1.0 - config.topic_overlap) * block[v - begin];
  }

  // Theta field: Dirichlet draws per cell, kernel-smoothed over the grid,
  // then contracted toward the mean until adjacent cells obey the bound.
  Rng field_rng(derive_seed(seed, "world.theta"));
  Matrix raw(n, K);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = field_rng.dirichlet(K, config.cell_concentration);
    std::copy(d.begin(), d.end(), raw.row(i).begin());
  }
  // The Gaussian kernel is separable: filter along columns, then rows.
  Matrix smooth = raw;
  if (config.kernel_bandwidth > 0.0) {
    const std::size_t R = config.rows, C = config.cols;
    std::vector<double> g(std::max(R, C));
    for (std::size_t d = 0; d < g.size(); ++d) {
      const double x = static_cast<double>(d);
      g[d] = std::exp(-(x * x) / (2.0 * config.kernel_bandwidth * config.kernel_bandwidth));
    }
    auto gap = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
    Matrix pass(n, K);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t c2 = 0; c2 < C; ++c2) {
          const double wgt = g[gap(c, c2)];
          for (std::size_t k = 0; k < K; ++k) pass(r * C + c, k) += wgt * raw(r * C + c2, k);
        }
    smooth = Matrix(n, K);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t r2 = 0; r2 < R; ++r2) {
        const double wgt = g[gap(r, r2)];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t k = 0; k < K; ++k) smooth(r * C + c, k) += wgt * pass(r2 * C + c, k);
      }
    std::vector<double> row_total(R, 0.0), col_total(C, 0.0);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t r2 = 0; r2 < R; ++r2) row_total[r] += g[gap(r, r2)];
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t c2 = 0; c2 < C; ++c2) col_total[c] += g[gap(c, c2)];
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t k = 0; k < K; ++k) smooth(r * C + c, k) /= row_total[r] * col_total[c];
  }
  std::vector<double> mean(K, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < K; ++k) mean[k] += smooth(i, k) / static_cast<double>(n);
  double max_adjacent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w.grid_col[i] + 1 < config.cols) max_adjacent = std::max(max_adjacent, l1(smooth.row(i), smooth.row(i + 1)));
    if (w.grid_row[i] + 1 < config.rows)
      max_adjacent = std::max(max_adjacent, l1(smooth.row(i), smooth.row(i + config.cols)));
  }
  const double lambda = max_adjacent > config.smoothness_bound ? config.smoothness_bound / max_adjacent : 1.0;
  w.region_theta = Matrix(n, K);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      w.region_theta(i, k) = lambda == 0.0 ? mean[k] : mean[k] + lambda * (smooth(i, k) - mean[k]);
      s += w.region_theta(i, k);
    }
    for (std::size_t k = 0; k < K; ++k) w.region_theta(i, k) /= s;
  }

  // Slang: terms split into topics; region mixtures independent of the
  // topic field.
  const std::size_t S = config.slang_terms, Ks = config.slang_topics;
  for (std::size_t s = 0; s < S; ++s) w.slang_terms.push_back(numbered_id("sl%03zu", s));
  Rng slang_rng(derive_seed(seed, "world.slang"));
  w.slang_topic_word = Matrix(Ks, S);
  for (std::size_t k = 0; k < Ks; ++k) {
    const std::size_t begin = k * (S / Ks);
    const std::size_t end = k + 1 == Ks ? S : (k + 1) * (S / Ks);
    const auto block = slang_rng.dirichlet(end - begin, 1.0);
    for (std::size_t s = begin; s < end; ++s) w.slang_topic_word(k, s) = block[s - begin];
  }
  w.region_slang_theta = Matrix(n, Ks);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = slang_rng.dirichlet(Ks, config.slang_concentration);
    std::copy(d.begin(), d.end(), w.region_slang_theta.row(i).begin());
    w.slang_rate.push_back(config.slang_rate_min + (config.slang_rate_max - config.slang_rate_min) * slang_rng.uniform());
  }
  return w;
}

std::vector<std::string> sparse_regions(const PlantedWorld& world, const CorpusConfig& config, std::uint64_t seed) {
  if (config.sparse_region_fraction < 0.0 || config.sparse_region_fraction > 1.0)
    throw ConfigError("corpus: sparse_region_fraction must be in [0,1]");
  std::vector<std::size_t> order(world.regions.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "corpus.sparse"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto count =
      static_cast<std::size_t>(std::llround(config.sparse_region_fraction * static_cast<double>(order.size())));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(world.regions[order[i]].id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RawRecord> generate_corpus(const PlantedWorld& world, const CorpusConfig& config, std::uint64_t seed) {
  if (config.unlocated_fraction < 0.0 || config.unlocated_fraction > 1.0)
    throw ConfigError("corpus: unlocated_fraction must be in [0,1]");
  const auto sparse_list = sparse_regions(world, config, seed);
  const std::set<std::string> sparse(sparse_list.begin(), sparse_list.end());
  const std::size_t K = world.topic_word.rows();
  std::vector<RawRecord> records;
  for (std::size_t i = 0; i < world.regions.size(); ++i) {
    const auto& region = world.regions[i];
    const auto theta = world.region_theta.row(i);
    const auto slang_theta = world.region_slang_theta.row(i);
    const std::size_t docs = sparse.contains(region.id) ? config.sparse_docs_per_region : config.docs_per_region;
    for (int year : config.years) {
      Rng rng(derive_seed(seed, "corpus/" + region.id + "/" + std::to_string(year)));
      const auto year_start = std::chrono::sys_days{std::chrono::year{year} / 1 / 1};
      for (std::size_t d = 0; d < docs; ++d) {
        RawRecord r;
        r.id = region.id + "-" + std::to_string(year) + "-" + numbered_id("%04zu", d);
        r.timestamp = Timestamp{year_start} + std::chrono::seconds{static_cast<long long>(rng.index(365 * 86400))};
        if (rng.uniform() >= config.unlocated_fraction) r.region = region.id;
        for (std::size_t t = 0; t < config.tokens_per_doc; ++t) {
          const std::size_t z = rng.discrete(theta);
          const std::size_t v = rng.discrete(world.topic_word.row(z < K ? z : K - 1));
          const bool slang = config.inject_slang && rng.uniform() < world.slang_rate[i];
          const std::string* word = &world.words[v];
          if (slang) {
            const std::size_t sk = rng.discrete(slang_theta);
            word = &world.slang_terms[rng.discrete(world.slang_topic_word.row(sk))];
          }
          if (!r.text.empty()) r.text += ' ';
          r.text += *word;
        }
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

RateTable generate_rates(const PlantedWorld& world, const std::vector<int>& years, std::uint64_t seed) {
  const auto& cfg = world.config;
  std::vector<RateRow> rows;
  for (std::size_t i = 0; i < world.regions.size(); ++i) {
    const auto& region = world.regions[i];
    for (int year : years) {
      Rng rng(derive_seed(seed, "rates/" + region.id + "/" + std::to_string(year)));
      RateRow row;
      row.region = region.id;
      row.year = year;
      row.outcome = cfg.outcome;
      const double noise = cfg.rate_noise * rng.normal();
      row.rate = std::max(0.0, cfg.base_rate + cfg.gain * world.region_theta(i, cfg.risk_topic) + noise);
      const bool suppress = rng.uniform() < cfg.suppressed_fraction;
      if (suppress) {
        row.population = 50;
      } else {
        row.population = region.population;
        if (row.rate > 0.0) {
          const auto needed = static_cast<std::uint64_t>(std::ceil(5.5e5 / row.rate));
          row.population = std::max(row.population, needed);
        }
      }
      row.count = static_cast<std::uint64_t>(std::llround(row.rate * static_cast<double>(row.population) / 1e5));
      rows.push_back(std::move(row));
    }
  }
  return RateTable(std::move(rows));
}

std::vector<TokenIds> generate_lda_documents(const Matrix& topic_word, std::size_t docs, std::size_t doc_length,
                                             double doc_alpha, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "lda.documents"));
  std::vector<TokenIds> out(docs);
  for (auto& doc : out) {
    const auto theta = rng.dirichlet(topic_word.rows(), doc_alpha);
    doc.reserve(doc_length);
    for (std::size_t t = 0; t < doc_length; ++t) {
      const std::size_t z = rng.discrete(theta);
      doc.push_back(static_cast<std::uint32_t>(rng.discrete(topic_word.row(z))));
    }
  }
  return out;
}

WorldFiles write_world(const std::filesystem::path& dir, const PlantedWorld& world,
                       const std::vector<RawRecord>& records, const RateTable& rates) {
  std::filesystem::create_directories(dir);
  WorldFiles files{dir / "regions.csv", dir / "records.jsonl", dir / "rates.csv", dir / "slang.txt",
                   dir / "world_truth.json"};
  world.registry().write_csv(files.regions);
  write_records_jsonl(files.records, records);
  rates.write_csv(files.rates);
  {
    std::ofstream out(files.lexicon);
    if (!out) throw DataError("cannot write " + files.lexicon.string());
    out << "# synthetic slang lexicon\n";
    for (const auto& t : world.slang_terms) out << t << '\n';
  }
  world.write_truth_json(files.truth);
  return files;
}

}  // namespace geotopic
