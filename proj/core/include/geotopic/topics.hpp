#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geotopic/common.hpp"

namespace geotopic {

class Vocabulary;

/// A document as vocabulary indices.
using TokenIds = std::vector<std::uint32_t>;

/// Region id -> length-K topic distribution.
using ThetaMap = std::map<std::string, std::vector<double>>;

struct LdaParams {
  std::size_t topics = 10;
  /// Symmetric document-topic prior; non-positive means 50 / K.
  double alpha = 0.0;
  double beta = 0.01;
  std::size_t sweeps = 500;
  std::uint64_t seed = 0;
};

/// Trained topic-word model. Immutable once built.
class LdaModel {
 public:
  LdaModel(double alpha, double beta, std::uint64_t seed, std::size_t sweeps,
           std::uint64_t vocab_hash, Matrix topic_word);

  std::size_t topics() const { return topic_word_.rows(); }
  std::size_t vocab_size() const { return topic_word_.cols(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t sweeps() const { return sweeps_; }
  std::uint64_t vocab_hash() const { return vocab_hash_; }
  /// K x V, each row a distribution over the vocabulary.
  const Matrix& topic_word() const { return topic_word_; }

  /// JSON with K, alpha, beta, seed, sweeps, vocabulary hash and the dense
  /// topic-word matrix.
  void save(const std::filesystem::path& path) const;
  /// Throws DataError when the stored vocabulary hash differs from vocab's.
  static LdaModel load(const std::filesystem::path& path, const Vocabulary& vocab);

  /// Stable hash of all parameters and the topic-word matrix.
  std::uint64_t fingerprint() const;

 private:
  double alpha_;
  double beta_;
  std::uint64_t seed_;
  std::size_t sweeps_;
  std::uint64_t vocab_hash_;
  Matrix topic_word_;
};

/// Collapsed Gibbs sampling. Every document must be non-empty; token ids
/// must be < vocab.size(). The result is a deterministic function of
/// (docs, vocabulary, params).
LdaModel train_lda(std::span<const TokenIds> docs, const Vocabulary& vocab, const LdaParams& params);

struct InferenceOptions {
  std::size_t sweeps = 100;
  std::uint64_t seed = 0;
};

struct ThetaEstimate {
  std::vector<double> theta;
  /// True when the document had no in-vocabulary tokens; theta is uniform.
  bool empty_document = false;
};

/// Gibbs inference of a document's topic mixture under a fixed model.
/// theta = (n_dk + alpha) / (n_d + K alpha), averaged over the last quarter
/// of the sweeps. Throws DataError for token ids outside the vocabulary.
ThetaEstimate infer_theta(const LdaModel& model, std::span<const std::uint32_t> doc,
                          const InferenceOptions& options = {});

/// dot(a, b) / (|a| |b|). Throws DataError on length mismatch or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Region whose theta is most cosine-similar to the record's inferred
/// theta; exact ties go to the smallest region id. Returns nullopt when the
/// record has no in-vocabulary tokens.
std::optional<std::string> assign_unlocated(std::span<const std::uint32_t> record, const LdaModel& model,
                                            const ThetaMap& region_thetas,
                                            const InferenceOptions& options = {});

/// exp(-sum log p(w) / N) with each document's theta inferred first.
/// Throws DataError when the documents hold no tokens.
double perplexity(const LdaModel& model, std::span<const TokenIds> held_out,
                  const InferenceOptions& options = {});

/// 0.5 * L1 distance.
double total_variation(std::span<const double> p, std::span<const double> q);

/// Greedy one-to-one matching of reference rows to candidate rows by
/// increasing total-variation distance. Returns, for each reference row,
/// the index of its matched candidate row. Requires candidate.rows() >=
/// reference.rows() and equal column counts.
std::vector<std::size_t> match_topics(const Matrix& candidate, const Matrix& reference);

/// CSV `region_id,theta_0,...,theta_{K-1}`.
void write_theta_csv(const std::filesystem::path& path, const ThetaMap& thetas);
ThetaMap read_theta_csv(const std::filesystem::path& path);

}  // namespace geotopic
