#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geotopic/common.hpp"
#include "geotopic/corpus.hpp"
#include "geotopic/geo.hpp"
#include "geotopic/labels.hpp"
#include "geotopic/topics.hpp"

namespace geotopic {

struct WorldConfig {
  std::size_t rows = 10;
  std::size_t cols = 10;
  double spacing_deg = 0.5;
  LatLon origin{39.0, -80.0};

  std::size_t topics = 5;
  std::size_t vocab = 200;
  /// Dirichlet concentration of the raw per-cell theta draws.
  double cell_concentration = 0.3;
  /// Gaussian kernel bandwidth in grid cells; 0 disables kernel smoothing.
  double kernel_bandwidth = 1.0;
  /// Largest allowed L1 distance between edge-adjacent cells' thetas.
  /// Values >= 2 leave the kernel-smoothed field unchanged.
  double smoothness_bound = 2.0;
  /// Dirichlet concentration of word weights inside a topic's own block.
  double topic_concentration = 1.0;
  /// Topic mass spread uniformly over the whole vocabulary; 0 gives
  /// disjoint topic vocabularies.
  double topic_overlap = 0.0;

  std::size_t slang_terms = 40;
  std::size_t slang_topics = 4;
  double slang_concentration = 0.5;
  double slang_rate_min = 0.05;
  double slang_rate_max = 0.15;

  std::size_t risk_topic = 0;
  double base_rate = 10.0;
  double gain = 100.0;
  double rate_noise = 1.0;
  double suppressed_fraction = 0.0;
  std::uint64_t population_min = 5000;
  std::uint64_t population_max = 500000;
  std::string outcome = "opioid";

  /// Throws ConfigError when K < 2, V < 2K, the grid is smaller than 2x2 or
  /// a parameter is out of range.
  void validate() const;
};

/// Planted parameters of a synthetic world. Row i of every per-region
/// matrix belongs to regions[i].
struct PlantedWorld {
  WorldConfig config;
  std::uint64_t seed = 0;
  std::vector<Region> regions;
  std::vector<std::size_t> grid_row;
  std::vector<std::size_t> grid_col;
  std::vector<std::string> words;        // V topic words, "w0000".."
  Matrix topic_word;                     // K x V
  Matrix region_theta;                   // regions x K
  std::vector<std::string> slang_terms;  // S slang words, "sl000"..
  Matrix slang_topic_word;               // K_s x S
  Matrix region_slang_theta;             // regions x K_s
  std::vector<double> slang_rate;        // per region

  RegionRegistry registry() const;
  ThetaMap theta_map() const;
  std::size_t region_index(const std::string& id) const;

  /// Planted truth for oracle tests.
  void write_truth_json(const std::filesystem::path& path) const;
};

PlantedWorld generate_world(const WorldConfig& config, std::uint64_t seed);

struct CorpusConfig {
  /// Records per region and year.
  std::size_t docs_per_region = 50;
  std::size_t tokens_per_doc = 30;
  std::vector<int> years{2014, 2015, 2016};
  /// Probability that a record's region is withheld.
  double unlocated_fraction = 0.0;
  /// Share of regions that only get sparse_docs_per_region records a year.
  double sparse_region_fraction = 0.0;
  std::size_t sparse_docs_per_region = 10;
  bool inject_slang = true;
};

/// Each token draws a topic from its region's theta and a word from that
/// topic. With inject_slang, each token is replaced with probability equal
/// to the region's slang rate by a slang term from the region's slang
/// mixture.
std::vector<RawRecord> generate_corpus(const PlantedWorld& world, const CorpusConfig& config, std::uint64_t seed);

/// Ids of regions chosen as sparse by generate_corpus for this seed.
std::vector<std::string> sparse_regions(const PlantedWorld& world, const CorpusConfig& config, std::uint64_t seed);

/// rate = max(0, base + gain * theta[risk] + Normal(0, rate_noise)). About
/// suppressed_fraction of rows get a population below 100; the rest get a
/// population large enough that their case count is at least 5.
RateTable generate_rates(const PlantedWorld& world, const std::vector<int>& years, std::uint64_t seed);

/// Standard LDA generative process: per-document Dirichlet(doc_alpha)
/// mixture over the rows of topic_word.
std::vector<TokenIds> generate_lda_documents(const Matrix& topic_word, std::size_t docs, std::size_t doc_length,
                                             double doc_alpha, std::uint64_t seed);

/// Names of the files written by write_world.
struct WorldFiles {
  std::filesystem::path regions;
  std::filesystem::path records;
  std::filesystem::path rates;
  std::filesystem::path lexicon;
  std::filesystem::path truth;
};

/// Writes regions.csv, records.jsonl, rates.csv, slang.txt and
/// world_truth.json into dir.
WorldFiles write_world(const std::filesystem::path& dir, const PlantedWorld& world,
                       const std::vector<RawRecord>& records, const RateTable& rates);

}  // namespace geotopic
