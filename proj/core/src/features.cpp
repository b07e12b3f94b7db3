#include "geotopic/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "geotopic/corpus.hpp"
#include "geotopic/geo.hpp"

namespace geotopic {

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::baseline: return "baseline";
    case BlockKind::slang_topics: return "slang_topics";
    case BlockKind::slang_ratio: return "slang_ratio";
    case BlockKind::smooth_avg: return "smooth_avg";
    case BlockKind::smooth_concat: return "smooth_concat";
  }
  return "unknown";
}

BlockKind parse_block_kind(std::string_view name) {
  for (auto k : {BlockKind::baseline, BlockKind::slang_topics, BlockKind::slang_ratio, BlockKind::smooth_avg,
                 BlockKind::smooth_concat})
    if (to_string(k) == name) return k;
  throw DataError("unknown feature block '" + std::string(name) + "'");
}

void FeatureBlock::validate() const {
  std::set<std::string> seen;
  for (const auto& c : columns)
    if (!seen.insert(c).second)
      throw DataError("block " + std::string(to_string(kind)) + ": duplicate column " + c);
  for (const auto& [region, row] : rows)
    if (row.size() != columns.size())
      throw DataError("block " + std::string(to_string(kind)) + ": region " + region + " has " +
                      std::to_string(row.size()) + " values, expected " + std::to_string(columns.size()));
}

namespace {

std::vector<std::string> numbered(std::string_view prefix, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

std::size_t common_width(const ThetaMap& thetas) {
  if (thetas.empty()) return 0;
  const std::size_t k = thetas.begin()->second.size();
  for (const auto& [id, t] : thetas)
    if (t.size() != k) throw DataError("region " + id + ": theta length differs from K=" + std::to_string(k));
  return k;
}

void check_multiplier(double m) {
  if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("smoothing multiplier must be finite and >= 0");
}

// Thetas of the region's neighbours that have one.
std::vector<std::vector<double>> neighbor_thetas(const ThetaMap& thetas, const AdjacencyGraph& adjacency,
                                                 const std::string& region) {
  std::vector<std::vector<double>> out;
  if (!adjacency.contains(region)) return out;
  for (const auto& n : adjacency.neighbors(region)) {
    auto it = thetas.find(n);
    if (it != thetas.end()) out.push_back(it->second);
  }
  return out;
}

std::vector<double> mean_of(std::span<const std::vector<double>> vectors, std::size_t width) {
  std::vector<double> mean(width, 0.0);
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < width; ++i) mean[i] += v[i];
  for (auto& x : mean) x /= static_cast<double>(vectors.size());
  return mean;
}

}  // namespace

FeatureBlock baseline_block(const ThetaMap& region_thetas) {
  FeatureBlock b;
  b.kind = BlockKind::baseline;
  b.columns = numbered("t", common_width(region_thetas));
  b.rows = region_thetas;
  return b;
}

std::vector<double> smooth_weighted(std::span<const double> theta,
                                    std::span<const std::vector<double>> neighbor_thetas, double multiplier) {
  check_multiplier(multiplier);
  std::vector<double> out(theta.begin(), theta.end());
  if (neighbor_thetas.empty() || multiplier == 0.0) return out;
  for (const auto& n : neighbor_thetas)
    if (n.size() != theta.size()) throw DataError("smooth_weighted: neighbour theta length mismatch");
  const auto mean = mean_of(neighbor_thetas, theta.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (theta[i] + multiplier * mean[i]) / (1.0 + multiplier);
  return out;
}

FeatureBlock smooth_weighted_block(const ThetaMap& region_thetas, const AdjacencyGraph& adjacency,
                                   double multiplier) {
  check_multiplier(multiplier);
  FeatureBlock b;
  b.kind = BlockKind::smooth_avg;
  b.columns = numbered("t", common_width(region_thetas));
  for (const auto& [id, theta] : region_thetas)
    b.rows[id] = smooth_weighted(theta, neighbor_thetas(region_thetas, adjacency, id), multiplier);
  return b;
}

FeatureBlock smooth_concat_block(const ThetaMap& region_thetas, const AdjacencyGraph& adjacency,
                                 double multiplier) {
  check_multiplier(multiplier);
  const std::size_t k = common_width(region_thetas);
  FeatureBlock b;
  b.kind = BlockKind::smooth_concat;
  b.columns = numbered("t", k);
  for (auto& c : numbered("n_t", k)) b.columns.push_back(std::move(c));
  for (const auto& [id, theta] : region_thetas) {
    const auto neighbors = neighbor_thetas(region_thetas, adjacency, id);
    const auto mean = neighbors.empty() ? theta : mean_of(neighbors, k);
    std::vector<double> row(theta);
    row.reserve(2 * k);
    for (double x : mean) row.push_back(multiplier * x);
    b.rows[id] = std::move(row);
  }
  return b;
}

FeatureBlock slang_topic_block(const std::map<std::string, ThetaEstimate>& slang_region_thetas) {
  FeatureBlock b;
  b.kind = BlockKind::slang_topics;
  std::size_t k = 0;
  if (!slang_region_thetas.empty()) k = slang_region_thetas.begin()->second.theta.size();
  b.columns = numbered("s", k);
  b.columns.push_back("zero_mass");
  for (const auto& [id, est] : slang_region_thetas) {
    if (est.theta.size() != k) throw DataError("region " + id + ": slang theta length mismatch");
    std::vector<double> row;
    row.reserve(k + 1);
    if (est.empty_document) {
      row.assign(k, 1.0 / static_cast<double>(k));
      row.push_back(1.0);
    } else {
      row = est.theta;
      row.push_back(0.0);
    }
    b.rows[id] = std::move(row);
  }
  return b;
}

FeatureBlock slang_ratio_block(std::span<const TokenizedRecord> records) {
  std::map<std::string, std::vector<double>> ratios;
  for (const auto& r : records)
    if (r.region) ratios[*r.region].push_back(slang_ratio(r));
  FeatureBlock b;
  b.kind = BlockKind::slang_ratio;
  b.columns = {"mean", "std"};
  for (auto& [id, values] : ratios) {
    // Sorted so the sums do not depend on record order.
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    b.rows[id] = {mean, std::sqrt(var / n)};
  }
  return b;
}

// ------------------------------------------------------------ matrix

FeatureMatrix::FeatureMatrix(std::vector<std::string> regions, std::vector<std::string> columns, Matrix values,
                             std::vector<BlockSpan> blocks)
    : regions_(std::move(regions)), columns_(std::move(columns)), values_(std::move(values)),
      blocks_(std::move(blocks)) {
  if (values_.rows() != regions_.size() || values_.cols() != columns_.size())
    throw DataError("FeatureMatrix: shape does not match labels");
}

FeatureMatrix FeatureMatrix::select(std::span<const std::string> regions) const {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < regions_.size(); ++i) index.emplace(regions_[i], i);
  Matrix values(regions.size(), width());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    auto it = index.find(regions[r]);
    if (it == index.end()) throw LookupError("feature matrix has no row for region " + regions[r]);
    const auto src = values_.row(it->second);
    std::copy(src.begin(), src.end(), values.row(r).begin());
  }
  return FeatureMatrix(std::vector<std::string>(regions.begin(), regions.end()), columns_, std::move(values),
                       blocks_);
}

void FeatureMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id";
  for (const auto& c : columns_) out << ',' << csv_escape(c);
  out << '\n';
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    out << csv_escape(regions_[r]);
    for (double x : values_.row(r)) out << ',' << format_exact(x);
    out << '\n';
  }
}

FeatureMatrix FeatureMatrix::read_csv(const std::filesystem::path& path) {
  const CsvTable table = geotopic::read_csv(path);
  if (table.header.empty() || table.header[0] != "region_id")
    throw DataError(path.string() + ": first column must be region_id");
  std::vector<std::string> columns(table.header.begin() + 1, table.header.end());
  std::vector<BlockSpan> blocks;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto dot = columns[c].find('.');
    if (dot == std::string::npos) throw DataError(path.string() + ": column " + columns[c] + " is not namespaced");
    const BlockKind kind = parse_block_kind(columns[c].substr(0, dot));
    if (blocks.empty() || blocks.back().kind != kind)
      blocks.push_back({kind, c, 0, 1.0});
    ++blocks.back().width;
  }
  std::vector<std::string> regions;
  Matrix values(table.rows.size(), columns.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    regions.push_back(table.rows[r][0]);
    for (std::size_t c = 0; c < columns.size(); ++c)
      values(r, c) = parse_double(table.rows[r][c + 1], columns[c]);
  }
  return FeatureMatrix(std::move(regions), std::move(columns), std::move(values), std::move(blocks));
}

FeatureMatrix assemble(std::span<const FeatureBlock> blocks, std::span<const double> weights) {
  if (blocks.empty()) throw ConfigError("assemble: no feature blocks");
  if (weights.size() > blocks.size()) throw ConfigError("assemble: more weights than blocks");
  for (const auto& b : blocks) b.validate();

  std::vector<std::string> regions;
  for (const auto& [id, _] : blocks.front().rows) regions.push_back(id);
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    std::vector<std::string> missing;
    for (const auto& id : regions)
      if (!blocks[i].rows.contains(id)) missing.push_back(id);
    for (const auto& [id, _] : blocks[i].rows)
      if (!blocks.front().rows.contains(id)) missing.push_back(id);
    if (!missing.empty()) {
      std::string list;
      for (std::size_t j = 0; j < missing.size() && j < 10; ++j) list += (j ? ", " : "") + missing[j];
      if (missing.size() > 10) list += ", ...";
      throw DataError("assemble: block " + std::string(to_string(blocks[i].kind)) +
                      " does not cover the same regions as block " +
                      std::string(to_string(blocks.front().kind)) + " (mismatched: " + list + ")");
    }
  }

  std::vector<std::string> columns;
  std::vector<FeatureMatrix::BlockSpan> spans;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const double w = i < weights.size() ? weights[i] : 1.0;
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("assemble: block weights must be finite and >= 0");
    spans.push_back({blocks[i].kind, columns.size(), blocks[i].width(), w});
    for (const auto& c : blocks[i].columns) columns.push_back(std::string(to_string(blocks[i].kind)) + "." + c);
  }

  Matrix values(regions.size(), columns.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& row = blocks[i].rows.at(regions[r]);
      const auto& span = spans[i];
      for (std::size_t c = 0; c < span.width; ++c)
        values(r, span.offset + c) = span.weight * row[c];
    }
  }
  return FeatureMatrix(std::move(regions), std::move(columns), std::move(values), std::move(spans));
}

}  // namespace geotopic
