#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotopic/common.hpp"
#include "geotopic/topics.hpp"

namespace geotopic {

class AdjacencyGraph;
struct TokenizedRecord;

enum class BlockKind { baseline, slang_topics, slang_ratio, smooth_avg, smooth_concat };

std::string_view to_string(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);

/// A named group of feature columns with one row per region.
struct FeatureBlock {
  BlockKind kind = BlockKind::baseline;
  std::vector<std::string> columns;
  std::map<std::string, std::vector<double>> rows;

  std::size_t width() const { return columns.size(); }
  /// Throws DataError on ragged rows or duplicate column labels.
  void validate() const;
};

/// Raw theta vectors, columns `t0..t{K-1}`.
FeatureBlock baseline_block(const ThetaMap& region_thetas);

/// (theta + m * mean(neighbors)) / (1 + m); theta unchanged when there are
/// no neighbours or m == 0. Throws ConfigError for m < 0.
std::vector<double> smooth_weighted(std::span<const double> theta,
                                    std::span<const std::vector<double>> neighbor_thetas, double multiplier);

/// smooth_weighted applied per region. Neighbours without a theta in
/// region_thetas are ignored.
FeatureBlock smooth_weighted_block(const ThetaMap& region_thetas, const AdjacencyGraph& adjacency,
                                   double multiplier);

/// Per region [theta ; m * mean(neighbors)], width 2K; a region with no
/// neighbours uses its own theta as the neighbour mean.
FeatureBlock smooth_concat_block(const ThetaMap& region_thetas, const AdjacencyGraph& adjacency,
                                 double multiplier);

/// Slang-corpus thetas plus a `zero_mass` indicator column (width K_s + 1).
/// Regions whose slang document was empty carry a uniform theta and
/// indicator 1.
FeatureBlock slang_topic_block(const std::map<std::string, ThetaEstimate>& slang_region_thetas);

/// Per region mean and population standard deviation of per-record slang
/// ratios. Records without a region are skipped.
FeatureBlock slang_ratio_block(std::span<const TokenizedRecord> records);

/// Column-wise concatenation of weighted blocks.
class FeatureMatrix {
 public:
  struct BlockSpan {
    BlockKind kind;
    std::size_t offset;
    std::size_t width;
    double weight;
  };

  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> regions, std::vector<std::string> columns, Matrix values,
                std::vector<BlockSpan> blocks);

  const std::vector<std::string>& regions() const { return regions_; }
  /// Namespaced `block.column` labels.
  const std::vector<std::string>& columns() const { return columns_; }
  const Matrix& values() const { return values_; }
  const std::vector<BlockSpan>& blocks() const { return blocks_; }
  std::size_t width() const { return values_.cols(); }

  /// Rows restricted to the given regions, in the given order.
  FeatureMatrix select(std::span<const std::string> regions) const;

  void write_csv(const std::filesystem::path& path) const;
  static FeatureMatrix read_csv(const std::filesystem::path& path);

 private:
  std::vector<std::string> regions_;
  std::vector<std::string> columns_;
  Matrix values_;
  std::vector<BlockSpan> blocks_;
};

/// Blocks must cover the same region set; rows are sorted by region id and
/// each block is scaled by its weight (missing weights default to 1).
FeatureMatrix assemble(std::span<const FeatureBlock> blocks, std::span<const double> weights = {});

}  // namespace geotopic
