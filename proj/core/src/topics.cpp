#include "geotopic/topics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

#include "geotopic/corpus.hpp"
#include "geotopic/rng.hpp"

namespace geotopic {

namespace {

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t from_hex(const std::string& s) {
  if (s.empty() || s.size() > 16) throw DataError("invalid hex value '" + s + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw DataError("invalid hex value '" + s + "'");
  }
  return v;
}

// Draws from an unnormalized cumulative array.
std::size_t sample_cumulative(Rng& rng, const std::vector<double>& cumulative) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

void normalize(std::vector<double>& v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
}

}  // namespace

// ------------------------------------------------------------ model

LdaModel::LdaModel(double alpha, double beta, std::uint64_t seed, std::size_t sweeps,
                   std::uint64_t vocab_hash, Matrix topic_word)
    : alpha_(alpha), beta_(beta), seed_(seed), sweeps_(sweeps), vocab_hash_(vocab_hash),
      topic_word_(std::move(topic_word)) {
  if (topic_word_.rows() < 1) throw ConfigError("LDA model needs at least one topic");
  if (!(alpha_ > 0.0) || !(beta_ > 0.0)) throw ConfigError("LDA priors must be positive");
}

void LdaModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["format"] = "geotopic.lda";
  j["version"] = 1;
  j["topics"] = topics();
  j["vocab_size"] = vocab_size();
  j["alpha"] = alpha_;
  j["beta"] = beta_;
  j["seed"] = to_hex(seed_);
  j["sweeps"] = sweeps_;
  j["vocab_hash"] = to_hex(vocab_hash_);
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < topics(); ++k) {
    const auto r = topic_word_.row(k);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["topic_word"] = std::move(rows);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

LdaModel LdaModel::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("format") != "geotopic.lda") throw DataError(path.string() + ": not an LDA model file");
    if (j.at("version").get<int>() != 1) throw DataError(path.string() + ": unsupported model version");
    const auto hash = from_hex(j.at("vocab_hash").get<std::string>());
    if (hash != vocab.hash())
      throw DataError(path.string() + ": vocabulary hash mismatch (model " + to_hex(hash) +
                      ", vocabulary " + to_hex(vocab.hash()) + ")");
    const auto k = j.at("topics").get<std::size_t>();
    const auto v = j.at("vocab_size").get<std::size_t>();
    if (v != vocab.size()) throw DataError(path.string() + ": vocabulary size mismatch");
    const auto& rows = j.at("topic_word");
    if (rows.size() != k) throw DataError(path.string() + ": topic_word row count mismatch");
    Matrix tw(k, v);
    for (std::size_t r = 0; r < k; ++r) {
      if (rows[r].size() != v) throw DataError(path.string() + ": topic_word row width mismatch");
      for (std::size_t c = 0; c < v; ++c) tw(r, c) = rows[r][c].get<double>();
    }
    return LdaModel(j.at("alpha").get<double>(), j.at("beta").get<double>(),
                    from_hex(j.at("seed").get<std::string>()), j.at("sweeps").get<std::size_t>(), hash,
                    std::move(tw));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed model file: " + e.what());
  }
}

std::uint64_t LdaModel::fingerprint() const {
  std::string bytes = format_exact(alpha_) + "|" + format_exact(beta_) + "|" + to_hex(seed_) + "|" +
                      std::to_string(sweeps_) + "|" + to_hex(vocab_hash_) + "|";
  std::uint64_t h = fnv1a64(bytes);
  for (double x : topic_word_.data()) h = fnv1a64(format_exact(x), h);
  return h;
}

// ------------------------------------------------------------ training

LdaModel train_lda(std::span<const TokenIds> docs, const Vocabulary& vocab, const LdaParams& params) {
  const std::size_t K = params.topics;
  const std::size_t V = vocab.size();
  if (K < 1) throw ConfigError("train_lda: topic count must be >= 1");
  if (docs.empty()) throw DataError("train_lda: empty corpus");
  if (V == 0) throw DataError("train_lda: empty vocabulary");
  const double alpha = params.alpha > 0.0 ? params.alpha : 50.0 / static_cast<double>(K);
  const double beta = params.beta;
  if (!(beta > 0.0)) throw ConfigError("train_lda: beta must be positive");
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) throw DataError("train_lda: document " + std::to_string(d) + " is empty");
    for (auto w : docs[d])
      if (w >= V) throw DataError("train_lda: token id out of vocabulary range");
  }

  Rng rng(derive_seed(params.seed, "lda.train"));
  std::vector<std::vector<std::uint32_t>> z(docs.size());
  std::vector<std::uint32_t> n_dk(docs.size() * K, 0);
  std::vector<std::uint32_t> n_kw(K * V, 0);
  std::vector<std::uint64_t> n_k(K, 0);

  for (std::size_t d = 0; d < docs.size(); ++d) {
    z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto k = static_cast<std::uint32_t>(rng.index(K));
      z[d][i] = k;
      ++n_dk[d * K + k];
      ++n_kw[k * V + docs[d][i]];
      ++n_k[k];
    }
  }

  const double v_beta = static_cast<double>(V) * beta;
  std::vector<double> cumulative(K);
  for (std::size_t sweep = 0; sweep < params.sweeps; ++sweep) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::uint32_t* doc_counts = &n_dk[d * K];
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const std::uint32_t w = docs[d][i];
        const std::uint32_t old = z[d][i];
        --doc_counts[old];
        --n_kw[old * V + w];
        --n_k[old];
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          acc += (doc_counts[k] + alpha) * (n_kw[k * V + w] + beta) / (static_cast<double>(n_k[k]) + v_beta);
          cumulative[k] = acc;
        }
        const auto k = static_cast<std::uint32_t>(sample_cumulative(rng, cumulative));
        z[d][i] = k;
        ++doc_counts[k];
        ++n_kw[k * V + w];
        ++n_k[k];
      }
    }
  }

  Matrix topic_word(K, V);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = static_cast<double>(n_k[k]) + v_beta;
    for (std::size_t w = 0; w < V; ++w) topic_word(k, w) = (n_kw[k * V + w] + beta) / denom;
  }
  return LdaModel(alpha, beta, params.seed, params.sweeps, vocab.hash(), std::move(topic_word));
}

// ------------------------------------------------------------ inference

ThetaEstimate infer_theta(const LdaModel& model, std::span<const std::uint32_t> doc,
                          const InferenceOptions& options) {
  const std::size_t K = model.topics();
  const std::size_t V = model.vocab_size();
  const double alpha = model.alpha();
  const auto& phi = model.topic_word();

  std::vector<std::uint32_t> tokens;
  tokens.reserve(doc.size());
  for (auto w : doc) {
    if (w >= V) throw DataError("infer_theta: token id out of vocabulary range");
    tokens.push_back(w);
  }

  ThetaEstimate est;
  if (tokens.empty()) {
    est.theta.assign(K, 1.0 / static_cast<double>(K));
    est.empty_document = true;
    return est;
  }
  if (K == 1) {
    est.theta = {1.0};
    return est;
  }

  const std::size_t sweeps = std::max<std::size_t>(options.sweeps, 1);
  const std::size_t kept = std::max<std::size_t>(sweeps / 4, 1);
  const std::size_t first_kept = sweeps - kept;

  Rng rng(derive_seed(options.seed, "lda.infer"));
  std::vector<std::uint32_t> z(tokens.size());
  std::vector<std::uint32_t> n_dk(K, 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    z[i] = static_cast<std::uint32_t>(rng.index(K));
    ++n_dk[z[i]];
  }

  const double n_d = static_cast<double>(tokens.size());
  const double denom = n_d + static_cast<double>(K) * alpha;
  std::vector<double> sum(K, 0.0);
  std::vector<double> cumulative(K);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::uint32_t w = tokens[i];
      --n_dk[z[i]];
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        acc += (n_dk[k] + alpha) * phi(k, w);
        cumulative[k] = acc;
      }
      z[i] = static_cast<std::uint32_t>(sample_cumulative(rng, cumulative));
      ++n_dk[z[i]];
    }
    if (sweep >= first_kept)
      for (std::size_t k = 0; k < K; ++k) sum[k] += (n_dk[k] + alpha) / denom;
  }
  normalize(sum);
  est.theta = std::move(sum);
  return est;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::optional<std::string> assign_unlocated(std::span<const std::uint32_t> record, const LdaModel& model,
                                            const ThetaMap& region_thetas, const InferenceOptions& options) {
  if (region_thetas.empty()) throw DataError("assign_unlocated: no candidate regions");
  const auto est = infer_theta(model, record, options);
  if (est.empty_document) return std::nullopt;
  const std::string* best = nullptr;
  double best_sim = -1.0;
  // Map iteration is in ascending id order, so strict '>' keeps the
  // smallest id on exact ties.
  for (const auto& [id, theta] : region_thetas) {
    const double sim = cosine_similarity(est.theta, theta);
    if (sim > best_sim) {
      best_sim = sim;
      best = &id;
    }
  }
  return *best;
}

double perplexity(const LdaModel& model, std::span<const TokenIds> held_out, const InferenceOptions& options) {
  const auto& phi = model.topic_word();
  const std::size_t K = model.topics();
  double log_likelihood = 0.0;
  std::size_t tokens = 0;
  for (std::size_t d = 0; d < held_out.size(); ++d) {
    const InferenceOptions doc_options{options.sweeps, derive_seed(options.seed, "doc" + std::to_string(d))};
    const auto est = infer_theta(model, held_out[d], doc_options);
    if (est.empty_document) continue;
    for (auto w : held_out[d]) {
      if (w >= model.vocab_size()) continue;
      double p = 0.0;
      for (std::size_t k = 0; k < K; ++k) p += est.theta[k] * phi(k, w);
      log_likelihood += std::log(p);
      ++tokens;
    }
  }
  if (tokens == 0) throw DataError("perplexity: held-out documents contain no tokens");
  return std::exp(-log_likelihood / static_cast<double>(tokens));
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<std::size_t> match_topics(const Matrix& candidate, const Matrix& reference) {
  if (candidate.cols() != reference.cols()) throw ConfigError("match_topics: width mismatch");
  if (candidate.rows() < reference.rows()) throw ConfigError("match_topics: too few candidate rows");
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t r = 0; r < reference.rows(); ++r)
    for (std::size_t c = 0; c < candidate.rows(); ++c)
      pairs.emplace_back(total_variation(candidate.row(c), reference.row(r)), r, c);
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::size_t> match(reference.rows(), SIZE_MAX);
  std::vector<bool> used(candidate.rows(), false);
  for (const auto& [dist, r, c] : pairs) {
    if (match[r] != SIZE_MAX || used[c]) continue;
    match[r] = c;
    used[c] = true;
  }
  return match;
}

void write_theta_csv(const std::filesystem::path& path, const ThetaMap& thetas) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const std::size_t K = thetas.empty() ? 0 : thetas.begin()->second.size();
  out << "region_id";
  for (std::size_t k = 0; k < K; ++k) out << ",theta_" << k;
  out << '\n';
  for (const auto& [id, theta] : thetas) {
    if (theta.size() != K) throw DataError("write_theta_csv: ragged theta rows");
    out << csv_escape(id);
    for (double x : theta) out << ',' << format_exact(x);
    out << '\n';
  }
}

ThetaMap read_theta_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "region_id")
    throw DataError(path.string() + ": first column must be region_id");
  ThetaMap out;
  for (const auto& row : table.rows) {
    std::vector<double> theta;
    for (std::size_t c = 1; c < row.size(); ++c) theta.push_back(parse_double(row[c], table.header[c]));
    out[row[0]] = std::move(theta);
  }
  return out;
}

}  // namespace geotopic
