#include "geotopic/labels.hpp"

#include <cmath>
#include <fstream>
#include <tuple>

#include "geotopic/common.hpp"

namespace geotopic {

RateTable::RateTable(std::vector<RateRow> rows) : rows_(std::move(rows)) {
  std::set<std::tuple<std::string, int, std::string>> keys;
  for (const auto& r : rows_) {
    if (!(r.rate >= 0.0) || !std::isfinite(r.rate))
      throw DataError("rate row " + r.region + "/" + std::to_string(r.year) + ": rate must be finite and >= 0");
    if (!keys.emplace(r.region, r.year, r.outcome).second)
      throw DataError("duplicate rate row for " + r.region + "/" + std::to_string(r.year) + "/" + r.outcome);
  }
}

RateTable RateTable::load_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t ci = table.column("region_id"), cy = table.column("year"), co = table.column("outcome"),
                    cr = table.column("rate"), cc = table.column("count"), cp = table.column("population");
  std::vector<RateRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    RateRow r;
    r.region = trim(row[ci]);
    r.year = static_cast<int>(parse_int(row[cy], "year"));
    r.outcome = trim(row[co]);
    r.rate = parse_double(row[cr], "rate");
    const long long count = parse_int(row[cc], "count");
    const long long pop = parse_int(row[cp], "population");
    if (count < 0 || pop < 0) throw DataError("rate row " + r.region + ": negative count or population");
    r.count = static_cast<std::uint64_t>(count);
    r.population = static_cast<std::uint64_t>(pop);
    rows.push_back(std::move(r));
  }
  return RateTable(std::move(rows));
}

void RateTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id,year,outcome,rate,count,population\n";
  for (const auto& r : rows_)
    out << csv_escape(r.region) << ',' << r.year << ',' << csv_escape(r.outcome) << ',' << format_exact(r.rate)
        << ',' << r.count << ',' << r.population << '\n';
}

void RateTable::write_diagnostics_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id,year,outcome,rate,count,population,suppressed\n";
  for (const auto& r : rows_)
    out << csv_escape(r.region) << ',' << r.year << ',' << csv_escape(r.outcome) << ',' << format_exact(r.rate)
        << ',' << r.count << ',' << r.population << ',' << (r.suppressed ? 1 : 0) << '\n';
}

std::map<std::string, double> RateTable::mean_rates(const std::string& outcome, const std::set<int>& years) const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : rows_) {
    if (r.suppressed || r.outcome != outcome || !years.contains(r.year)) continue;
    auto& [sum, n] = acc[r.region];
    sum += r.rate;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [region, sn] : acc) out[region] = sn.first / sn.second;
  return out;
}

bool is_suppressed(std::uint64_t count, std::uint64_t population) {
  return count < kMinReportableCount || population < kMinReportablePopulation;
}

RateTable apply_suppression(const RateTable& table) {
  std::vector<RateRow> rows = table.rows();
  for (auto& r : rows) r.suppressed = is_suppressed(r.count, r.population);
  return RateTable(std::move(rows));
}

// ------------------------------------------------------------ binning

Binning Binning::fit(std::span<const double> values) {
  if (values.size() < 2) throw DataError("binning needs at least 2 rates, got " + std::to_string(values.size()));
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return Binning{mean, std::sqrt(var / n)};
}

int Binning::label(double value) const {
  if (stddev == 0.0) return 3;
  const double z = (value - mean) / stddev;
  if (z < -2.0) return 0;
  if (z < -1.0) return 1;
  if (z < 0.0) return 2;
  if (z < 1.0) return 3;
  if (z < 2.0) return 4;
  return 5;
}

double Binning::label_rate(int label) const {
  if (label < 0 || label >= kLabelCount) throw DataError("label out of range: " + std::to_string(label));
  return mean + (static_cast<double>(label) - 2.5) * stddev;
}

std::vector<int> bin_by_stddev(std::span<const double> values) {
  const Binning b = Binning::fit(values);
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(b.label(v));
  return out;
}

LabelVector make_labels(const std::map<std::string, double>& rates, const Binning& binning,
                        const std::string& outcome, const std::set<int>& years) {
  LabelVector lv;
  lv.rates = rates;
  lv.binning = binning;
  lv.outcome = outcome;
  lv.years = years;
  for (const auto& [region, rate] : rates) lv.labels[region] = binning.label(rate);
  return lv;
}

void LabelVector::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "region_id,rate,label\n";
  for (const auto& [region, label] : labels) {
    auto it = rates.find(region);
    out << csv_escape(region) << ',' << (it == rates.end() ? std::string() : format_exact(it->second)) << ','
        << label << '\n';
  }
}

LabelVector LabelVector::read_csv(const std::filesystem::path& path) {
  const CsvTable table = geotopic::read_csv(path);
  const std::size_t ci = table.column("region_id"), cr = table.column("rate"), cl = table.column("label");
  LabelVector lv;
  for (const auto& row : table.rows) {
    const long long label = parse_int(row[cl], "label");
    if (label < 0 || label >= kLabelCount) throw DataError(path.string() + ": label out of range");
    lv.labels[row[ci]] = static_cast<int>(label);
    if (!trim(row[cr]).empty()) lv.rates[row[ci]] = parse_double(row[cr], "rate");
  }
  return lv;
}

// ------------------------------------------------------------ metrics

double ordinal_mse(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw DataError("ordinal_mse: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  if (truth.empty()) throw DataError("ordinal_mse: no labels");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= kLabelCount || truth[i] < 0 || truth[i] >= kLabelCount)
      throw DataError("ordinal_mse: label outside 0..5");
    const double d = predicted[i] - truth[i];
    sum += d * d;
  }
  return sum / static_cast<double>(truth.size());
}

double rate_mse(std::span<const int> predicted, std::span<const double> true_rates, const Binning& binning) {
  if (predicted.size() != true_rates.size()) throw DataError("rate_mse: length mismatch");
  if (true_rates.empty()) throw DataError("rate_mse: no rates");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = binning.label_rate(predicted[i]) - true_rates[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

}  // namespace geotopic
