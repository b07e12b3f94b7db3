#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geotopic/harness.hpp"

namespace geotopic {

namespace {

constexpr std::string_view kReportHeader =
    "feature_set,k,radius_km,multiplier,classifier,accuracy,mse,n_regions,runtime_ms";

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string hex(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << v;
  return o.str();
}

nlohmann::ordered_json spec_json(const RowSpec& s) {
  return {{"feature_set", to_string(s.feature_set)},
          {"k", s.k},
          {"radius_km", s.radius_km},
          {"multiplier", s.multiplier},
          {"classifier", to_string(s.classifier)}};
}

}  // namespace

bool ExperimentReport::has_failures() const {
  return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.error.has_value(); });
}

void ExperimentReport::write_csv(const std::filesystem::path& path, bool include_runtime) const {
  auto out = open_out(path);
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    if (r.error) continue;
    out << to_string(r.spec.feature_set) << ',' << r.spec.k << ',' << format_exact(r.spec.radius_km) << ','
        << format_exact(r.spec.multiplier) << ',' << to_string(r.spec.classifier) << ','
        << format_fixed(r.accuracy, 6) << ',' << format_fixed(r.mse, 6) << ',' << r.n_regions << ','
        << (include_runtime ? format_fixed(r.runtime_ms, 3) : std::string("0")) << '\n';
  }
}

void ExperimentReport::write_json(const std::filesystem::path& path, const ExperimentConfig& config) const {
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  std::istringstream text(config.to_text());
  for (std::string line; std::getline(text, line);) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 3);
  }
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  std::size_t ok = 0;
  for (const auto& r : rows) {
    if (!r.error) {
      ++ok;
      continue;
    }
    auto f = spec_json(r.spec);
    f["error"] = *r.error;
    failures.push_back(std::move(f));
  }
  nlohmann::ordered_json doc{{"seed", seed},
                             {"config_hash", hex(config_hash)},
                             {"config", cfg},
                             {"rows", rows.size()},
                             {"succeeded", ok},
                             {"failures", failures}};
  if (config.report_runtime) doc["runtime_ms"] = runtime_ms;
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

ExperimentReport ExperimentReport::read_csv(const std::filesystem::path& path) {
  const CsvTable t = geotopic::read_csv(path);
  const auto fs = t.column("feature_set"), k = t.column("k"), r = t.column("radius_km"),
             m = t.column("multiplier"), c = t.column("classifier"), acc = t.column("accuracy"),
             mse = t.column("mse"), n = t.column("n_regions"), rt = t.column("runtime_ms");
  ExperimentReport report;
  for (const auto& row : t.rows) {
    ReportRow rr;
    rr.spec.feature_set = parse_feature_set(row.at(fs));
    rr.spec.k = static_cast<std::size_t>(parse_int(row.at(k), "k"));
    rr.spec.radius_km = parse_double(row.at(r), "radius_km");
    rr.spec.multiplier = parse_double(row.at(m), "multiplier");
    rr.spec.classifier = parse_classifier_kind(row.at(c));
    rr.accuracy = parse_double(row.at(acc), "accuracy");
    rr.mse = parse_double(row.at(mse), "mse");
    rr.n_regions = static_cast<std::size_t>(parse_int(row.at(n), "n_regions"));
    rr.runtime_ms = parse_double(row.at(rt), "runtime_ms");
    report.rows.push_back(rr);
  }
  return report;
}

// ------------------------------------------------------------ plot

PlotFiles emit_plot(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& stem) {
  constexpr std::array<FeatureSet, 4> kOrder{FeatureSet::baseline, FeatureSet::smooth, FeatureSet::slang,
                                             FeatureSet::smooth_slang};
  constexpr std::array<std::string_view, 4> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};

  // series -> multiplier -> (sum, count)
  std::map<FeatureSet, std::map<double, std::pair<double, std::size_t>>> acc;
  for (const auto& r : report.rows) {
    if (r.error) continue;
    auto& cell = acc[r.spec.feature_set][r.spec.multiplier];
    cell.first += r.mse;
    ++cell.second;
  }
  if (acc.empty()) throw DataError("report has no successful rows to plot");

  struct Series {
    FeatureSet fs;
    std::vector<std::pair<double, double>> points;
  };
  std::vector<Series> series;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (auto fs : kOrder) {
    auto it = acc.find(fs);
    if (it == acc.end()) continue;
    Series s{fs, {}};
    for (const auto& [m, cell] : it->second) {
      const double mean = cell.first / static_cast<double>(cell.second);
      s.points.emplace_back(m, mean);
      x_lo = std::min(x_lo, m);
      x_hi = std::max(x_hi, m);
      y_lo = std::min(y_lo, mean);
      y_hi = std::max(y_hi, mean);
    }
    series.push_back(std::move(s));
  }

  PlotFiles files{dir / (stem + ".csv"), dir / (stem + ".svg")};
  {
    auto out = open_out(files.csv);
    out << "series,multiplier,mse\n";
    for (const auto& s : series)
      for (const auto& [m, v] : s.points)
        out << to_string(s.fs) << ',' << format_exact(m) << ',' << format_fixed(v, 6) << '\n';
  }

  if (x_hi - x_lo < 1e-12) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi - y_lo < 1e-12) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo = std::max(0.0, y_lo - pad);
  y_hi += pad;

  constexpr double W = 640, H = 400, L = 70, R = 170, T = 30, B = 50;
  auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };
  auto f2 = [](double v) { return format_fixed(v, 2); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
      << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / 4.0, y = y_lo + (y_hi - y_lo) * i / 4.0;
    svg << "<text x=\"" << f2(px(x)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
        << format_fixed(x, 2) << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << f2(py(y) + 4) << "\" text-anchor=\"end\">" << format_fixed(y, 3)
        << "</text>\n";
  }
  svg << "<text x=\"" << f2((L + W - R) / 2) << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\">neighbour multiplier</text>\n";
  svg << "<text x=\"16\" y=\"" << f2((T + H - B) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << f2((T + H - B) / 2) << ")\">MSE</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const auto color = kColors[static_cast<std::size_t>(
        std::find(kOrder.begin(), kOrder.end(), s.fs) - kOrder.begin())];
    if (s.fs == FeatureSet::baseline && s.points.size() == 1) {
      // Single baseline value: a flat reference line across the plot.
      const double y = py(s.points.front().second);
      svg << "<line x1=\"" << L << "\" y1=\"" << f2(y) << "\" x2=\"" << W - R << "\" y2=\"" << f2(y)
          << "\" stroke=\"" << color << "\" stroke-dasharray=\"6 4\" stroke-width=\"2\"/>\n";
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i)
        svg << (i ? " " : "") << f2(px(s.points[i].first)) << ',' << f2(py(s.points[i].second));
      svg << "\"/>\n";
      for (const auto& [x, y] : s.points)
        svg << "<circle cx=\"" << f2(px(x)) << "\" cy=\"" << f2(py(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(si);
    svg << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 40 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << W - R + 46 << "\" y=\"" << ly + 4 << "\">" << to_string(s.fs) << "</text>\n";
  }
  svg << "</svg>\n";
  auto out = open_out(files.svg);
  out << svg.str();
  return files;
}

}  // namespace geotopic
