#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geotopic/common.hpp"

namespace geotopic {

inline constexpr int kLabelCount = 6;

/// Minimum case count and population below which a row is suppressed.
inline constexpr std::uint64_t kMinReportableCount = 5;
inline constexpr std::uint64_t kMinReportablePopulation = 100;

struct RateRow {
  std::string region;
  int year = 0;
  std::string outcome;
  double rate = 0.0;  // per 100,000
  std::uint64_t count = 0;
  std::uint64_t population = 0;
  bool suppressed = false;
};

/// Crude-rate rows, unique per (region, year, outcome).
class RateTable {
 public:
  RateTable() = default;
  /// Validates rate/population ranges and key uniqueness; throws DataError.
  explicit RateTable(std::vector<RateRow> rows);

  /// CSV with header `region_id,year,outcome,rate,count,population`.
  static RateTable load_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;
  /// Same columns plus `suppressed` (0/1).
  void write_diagnostics_csv(const std::filesystem::path& path) const;

  const std::vector<RateRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  /// Mean unsuppressed rate per region over the given years for one
  /// outcome. Regions with no qualifying row are absent.
  std::map<std::string, double> mean_rates(const std::string& outcome, const std::set<int>& years) const;

 private:
  std::vector<RateRow> rows_;
};

/// count < 5 or population < 100.
bool is_suppressed(std::uint64_t count, std::uint64_t population);

/// Flags every row meeting the suppression rule.
RateTable apply_suppression(const RateTable& table);

/// z-score binning parameters (population standard deviation).
struct Binning {
  double mean = 0.0;
  double stddev = 0.0;

  /// Needs at least 2 values; throws DataError otherwise.
  static Binning fit(std::span<const double> values);
  /// Six bins with edges at -2, -1, 0, 1, 2 standard deviations; every value
  /// maps to 3 when stddev is 0.
  int label(double value) const;
  /// Representative rate of a label: mean + z * stddev at the bin centre
  /// (z = -2.5, -1.5, -0.5, 0.5, 1.5, 2.5).
  double label_rate(int label) const;
};

/// Fits a Binning to the values and labels each of them.
std::vector<int> bin_by_stddev(std::span<const double> values);

struct LabelVector {
  std::map<std::string, int> labels;
  std::map<std::string, double> rates;
  Binning binning;
  std::string outcome;
  std::set<int> years;

  /// CSV `region_id,rate,label`.
  void write_csv(const std::filesystem::path& path) const;
  static LabelVector read_csv(const std::filesystem::path& path);
};

/// Labels rates with an already fitted binning.
LabelVector make_labels(const std::map<std::string, double>& rates, const Binning& binning,
                        const std::string& outcome, const std::set<int>& years);

/// Mean squared difference of label indices. Throws on length mismatch or
/// labels outside 0..5.
double ordinal_mse(std::span<const int> predicted, std::span<const int> truth);

/// Mean squared difference between predicted label rates and true rates.
double rate_mse(std::span<const int> predicted, std::span<const double> true_rates, const Binning& binning);

}  // namespace geotopic
