#include <fstream>
#include <functional>
#include <sstream>

#include "geotopic/harness.hpp"

namespace geotopic {

std::string_view to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::baseline: return "baseline";
    case FeatureSet::slang: return "slang";
    case FeatureSet::smooth: return "smooth";
    case FeatureSet::smooth_slang: return "smooth+slang";
  }
  return "unknown";
}

FeatureSet parse_feature_set(std::string_view name) {
  for (auto fs : {FeatureSet::baseline, FeatureSet::slang, FeatureSet::smooth, FeatureSet::smooth_slang})
    if (to_string(fs) == name) return fs;
  throw ConfigError("unknown feature set '" + std::string(name) + "'");
}

std::string_view to_string(SmoothingMethod m) { return m == SmoothingMethod::concat ? "concat" : "weighted"; }

SmoothingMethod parse_smoothing_method(std::string_view name) {
  if (name == "concat") return SmoothingMethod::concat;
  if (name == "weighted") return SmoothingMethod::weighted;
  throw ConfigError("unknown smoothing method '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto end = comma == std::string_view::npos ? value.size() : comma;
    std::string item = trim(value.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double number(const std::string& key, const std::string& value) {
  try {
    return parse_double(value, key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

long long integer(const std::string& key, const std::string& value) {
  try {
    return parse_int(value, key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

std::size_t count(const std::string& key, const std::string& value) {
  const long long v = integer(key, value);
  if (v < 0) throw ConfigError(key + " must be >= 0");
  return static_cast<std::size_t>(v);
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::set<int> years(const std::string& key, const std::string& value) {
  std::set<int> out;
  for (const auto& item : split_list(value)) {
    const auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const auto lo = integer(key, item.substr(0, dash));
      const auto hi = integer(key, item.substr(dash + 1));
      if (hi < lo) throw ConfigError(key + ": empty year range " + item);
      for (auto y = lo; y <= hi; ++y) out.insert(static_cast<int>(y));
    } else {
      out.insert(static_cast<int>(integer(key, item)));
    }
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"records", [&](auto&, auto& v) { c.records = resolve(base_dir, v); }},
      {"regions", [&](auto&, auto& v) { c.regions = resolve(base_dir, v); }},
      {"rates", [&](auto&, auto& v) { c.rates = resolve(base_dir, v); }},
      {"lexicon", [&](auto&, auto& v) { c.lexicon = resolve(base_dir, v); }},
      {"stopwords", [&](auto&, auto& v) { c.stopwords = v.empty() ? std::filesystem::path{} : resolve(base_dir, v); }},
      {"outcome", [&](auto&, auto& v) { c.outcome = v; }},
      {"train_years", [&](auto& k, auto& v) { c.train_years = years(k, v); }},
      {"test_years", [&](auto& k, auto& v) { c.test_years = years(k, v); }},
      {"k",
       [&](auto& k, auto& v) {
         c.k_list.clear();
         for (const auto& item : split_list(v)) c.k_list.push_back(count(k, item));
       }},
      {"radius_km",
       [&](auto& k, auto& v) {
         c.radius_km.clear();
         for (const auto& item : split_list(v)) c.radius_km.push_back(number(k, item));
       }},
      {"multiplier",
       [&](auto& k, auto& v) {
         c.multipliers.clear();
         for (const auto& item : split_list(v)) c.multipliers.push_back(number(k, item));
       }},
      {"feature_sets",
       [&](auto&, auto& v) {
         c.feature_sets.clear();
         for (const auto& item : split_list(v)) c.feature_sets.push_back(parse_feature_set(item));
       }},
      {"classifiers",
       [&](auto&, auto& v) {
         c.classifiers.clear();
         for (const auto& item : split_list(v)) c.classifiers.push_back(parse_classifier_kind(item));
       }},
      {"smoothing", [&](auto&, auto& v) { c.smoothing = parse_smoothing_method(v); }},
      {"slang_weight", [&](auto& k, auto& v) { c.slang_weight = number(k, v); }},
      {"slang_topics", [&](auto& k, auto& v) { c.slang_topics = count(k, v); }},
      {"alpha", [&](auto& k, auto& v) { c.alpha = number(k, v); }},
      {"beta", [&](auto& k, auto& v) { c.beta = number(k, v); }},
      {"train_sweeps", [&](auto& k, auto& v) { c.train_sweeps = count(k, v); }},
      {"infer_sweeps", [&](auto& k, auto& v) { c.infer_sweeps = count(k, v); }},
      {"min_df", [&](auto& k, auto& v) { c.vocabulary.min_df = count(k, v); }},
      {"max_df_fraction", [&](auto& k, auto& v) { c.vocabulary.max_df_fraction = number(k, v); }},
      {"assign_unlocated", [&](auto& k, auto& v) { c.assign_unlocated = boolean(k, v); }},
      {"min_regions", [&](auto& k, auto& v) { c.min_regions = count(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(integer(k, v)); }},
      {"threads", [&](auto& k, auto& v) { c.threads = count(k, v); }},
      {"report_runtime", [&](auto& k, auto& v) { c.report_runtime = boolean(k, v); }},
      {"nb_threshold", [&](auto& k, auto& v) { c.classifier_params.nb_threshold = number(k, v); }},
      {"mnb_count_scale", [&](auto& k, auto& v) { c.classifier_params.mnb_count_scale = number(k, v); }},
      {"knn_k", [&](auto& k, auto& v) { c.classifier_params.knn_k = count(k, v); }},
      {"rf_trees", [&](auto& k, auto& v) { c.classifier_params.forest.n_trees = count(k, v); }},
      {"rf_max_depth", [&](auto& k, auto& v) { c.classifier_params.forest.max_depth = count(k, v); }},
      {"rf_min_leaf", [&](auto& k, auto& v) { c.classifier_params.forest.min_leaf = count(k, v); }},
      {"rf_max_features", [&](auto& k, auto& v) { c.classifier_params.forest.max_features = count(k, v); }},
      {"rf_bootstrap", [&](auto& k, auto& v) { c.classifier_params.forest.bootstrap = boolean(k, v); }},
  };

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.parent_path());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  auto year_list = [](const std::set<int>& ys) {
    return join(std::vector<int>(ys.begin(), ys.end()), [](int y) { return std::to_string(y); });
  };
  o << "records = " << records.string() << '\n'
    << "regions = " << regions.string() << '\n'
    << "rates = " << rates.string() << '\n'
    << "lexicon = " << lexicon.string() << '\n'
    << "stopwords = " << stopwords.string() << '\n'
    << "outcome = " << outcome << '\n'
    << "train_years = " << year_list(train_years) << '\n'
    << "test_years = " << year_list(test_years) << '\n'
    << "k = " << join(k_list, [](std::size_t k) { return std::to_string(k); }) << '\n'
    << "radius_km = " << join(radius_km, [](double r) { return format_exact(r); }) << '\n'
    << "multiplier = " << join(multipliers, [](double m) { return format_exact(m); }) << '\n'
    << "feature_sets = " << join(feature_sets, [](FeatureSet f) { return std::string(to_string(f)); }) << '\n'
    << "classifiers = " << join(classifiers, [](ClassifierKind k) { return std::string(to_string(k)); }) << '\n'
    << "smoothing = " << to_string(smoothing) << '\n'
    << "slang_weight = " << format_exact(slang_weight) << '\n'
    << "slang_topics = " << slang_topics << '\n'
    << "alpha = " << format_exact(alpha) << '\n'
    << "beta = " << format_exact(beta) << '\n'
    << "train_sweeps = " << train_sweeps << '\n'
    << "infer_sweeps = " << infer_sweeps << '\n'
    << "min_df = " << vocabulary.min_df << '\n'
    << "max_df_fraction = " << format_exact(vocabulary.max_df_fraction) << '\n'
    << "assign_unlocated = " << (assign_unlocated ? "true" : "false") << '\n'
    << "min_regions = " << min_regions << '\n'
    << "seed = " << seed << '\n'
    << "threads = " << threads << '\n'
    << "report_runtime = " << (report_runtime ? "true" : "false") << '\n'
    << "nb_threshold = " << format_exact(classifier_params.nb_threshold) << '\n'
    << "mnb_count_scale = " << format_exact(classifier_params.mnb_count_scale) << '\n'
    << "knn_k = " << classifier_params.knn_k << '\n'
    << "rf_trees = " << classifier_params.forest.n_trees << '\n'
    << "rf_max_depth = " << classifier_params.forest.max_depth << '\n'
    << "rf_min_leaf = " << classifier_params.forest.min_leaf << '\n'
    << "rf_max_features = " << classifier_params.forest.max_features << '\n'
    << "rf_bootstrap = " << (classifier_params.forest.bootstrap ? "true" : "false") << '\n';
  return o.str();
}

std::uint64_t ExperimentConfig::hash() const {
  // threads and report_runtime do not affect results.
  ExperimentConfig c = *this;
  c.threads = 0;
  c.report_runtime = false;
  return fnv1a64(c.to_text());
}

void ExperimentConfig::validate() const {
  if (train_years.empty() || test_years.empty()) throw ConfigError("train_years and test_years must be non-empty");
  for (int y : train_years)
    if (test_years.contains(y)) throw ConfigError("year " + std::to_string(y) + " is in both train and test years");
  if (k_list.empty() || radius_km.empty() || multipliers.empty() || feature_sets.empty() || classifiers.empty())
    throw ConfigError("k, radius_km, multiplier, feature_sets and classifiers must be non-empty");
  for (auto k : k_list)
    if (k < 1) throw ConfigError("k must be >= 1");
  for (double r : radius_km)
    if (!(r > 0.0)) throw ConfigError("radius_km values must be positive");
  for (double m : multipliers)
    if (!(m >= 0.0)) throw ConfigError("multiplier values must be >= 0");
  if (!(slang_weight >= 0.0)) throw ConfigError("slang_weight must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (train_sweeps < 1 || infer_sweeps < 1) throw ConfigError("sweep counts must be >= 1");
  if (!(vocabulary.max_df_fraction > 0.0) || vocabulary.max_df_fraction > 1.0)
    throw ConfigError("max_df_fraction must be in (0, 1]");
  if (records.empty() || regions.empty() || rates.empty() || lexicon.empty())
    throw ConfigError("records, regions, rates and lexicon paths are required");
}

}  // namespace geotopic
