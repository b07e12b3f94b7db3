#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "geotopic/common.hpp"

namespace geotopic {

class RegionRegistry;

using Timestamp = std::chrono::sys_seconds;

/// Parses an ISO-8601 UTC timestamp: `YYYY-MM-DD`, optionally followed by
/// `THH:MM[:SS[.fff]]` and `Z` or a `+HH:MM`/`-HH:MM` offset.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
int year_of(Timestamp ts);

/// One geotagged short-text record as read from the input JSONL.
struct RawRecord {
  std::string id;
  std::string text;
  std::optional<std::string> region;
  Timestamp timestamp{};
};

/// Parses one JSONL line. Unknown fields are ignored.
RawRecord parse_record(std::string_view json_line);
std::vector<RawRecord> read_records_jsonl(const std::filesystem::path& path);
void write_records_jsonl(const std::filesystem::path& path, std::span<const RawRecord> records);

// ------------------------------------------------------------ tokenizer

const std::unordered_set<std::string>& default_stopwords();

/// Reads a stopword file: one word per line, `#` comments skipped.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

struct TokenizerOptions {
  std::size_t min_length = 2;  // in code points
  bool strip_urls = true;
  bool strip_mentions = true;
  std::unordered_set<std::string> stopwords = default_stopwords();

  /// Lowercases and splits but applies no filter.
  static TokenizerOptions passthrough();
};

/// Lowercase word tokens. URLs, @-mentions and punctuation are removed,
/// tokens shorter than `min_length` and stopwords are dropped. Words are
/// maximal runs of ASCII alphanumerics and non-ASCII UTF-8 bytes.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

// ------------------------------------------------------------ slang

class SlangLexicon {
 public:
  /// One term per line; `#`-prefixed lines are comments. Terms are
  /// normalized with the tokenizer's case folding. Throws DataError when
  /// the file is missing or has no terms.
  static SlangLexicon load(const std::filesystem::path& path);
  static SlangLexicon from_terms(std::span<const std::string> terms);

  bool contains(std::string_view token) const;
  std::size_t size() const { return terms_.size(); }
  const std::filesystem::path& source() const { return source_; }
  /// Sorted term list.
  std::vector<std::string> terms() const;

 private:
  std::unordered_set<std::string> terms_;
  std::filesystem::path source_;
};

struct TokenizedRecord {
  std::string id;
  std::optional<std::string> region;
  int year = 0;
  std::vector<std::string> tokens;
  std::size_t slang_count = 0;
  std::size_t token_count = 0;
};

TokenizedRecord tokenize_record(const RawRecord& record, const TokenizerOptions& options,
                                const SlangLexicon* lexicon = nullptr);

/// Tokens that are lexicon members, in their original order.
std::vector<std::string> strip_to_slang(const TokenizedRecord& record, const SlangLexicon& lexicon);

/// slang_count / token_count, or 0 for an empty record.
double slang_ratio(const TokenizedRecord& record);

/// Located records have a region known to the registry; everything else
/// (missing or unknown region id) goes to the unlocated pool.
struct PartitionedRecords {
  std::vector<TokenizedRecord> located;
  std::vector<TokenizedRecord> unlocated;
};

PartitionedRecords partition_by_registry(std::vector<TokenizedRecord> records,
                                         const RegionRegistry& registry);

// ------------------------------------------------------------ vocabulary

struct VocabularyOptions {
  std::size_t min_df = 2;
  double max_df_fraction = 0.5;
};

/// Dense token <-> index map with document frequencies. Indices follow the
/// lexicographic order of the retained tokens.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from documents given as token lists; df counts documents.
  static Vocabulary build(std::span<const std::vector<std::string>> documents,
                          const VocabularyOptions& options = {});
  /// Keeps every listed token (duplicates collapse), df = 0.
  static Vocabulary from_tokens(std::span<const std::string> tokens);

  static Vocabulary read_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> index(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t df(std::size_t index) const { return df_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Content hash over the ordered token list.
  std::uint64_t hash() const;

  /// Maps tokens to indices, dropping out-of-vocabulary tokens.
  std::vector<std::uint32_t> encode(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

// ------------------------------------------------------------ documents

/// All located tokens of one region. The bag is keyed by token text so it
/// stays independent of any particular (pruned) vocabulary.
struct RegionDocument {
  std::string region;
  std::map<std::string, std::size_t> bag;
  std::size_t record_count = 0;

  std::size_t token_total() const;
  /// Expands the bag into index form under a vocabulary (OOV dropped);
  /// indices appear in ascending order.
  std::vector<std::uint32_t> encode(const Vocabulary& vocab) const;
};

using RegionDocuments = std::map<std::string, RegionDocument>;

/// Groups located records into one document per region. Records without a
/// region are skipped.
RegionDocuments assemble_region_documents(std::span<const TokenizedRecord> records);

/// Region x V tf-idf matrix, weight = tf * ln(N / df), with N the number
/// of region documents and df counted over them. Rows follow the map order.
Matrix tfidf(const RegionDocuments& documents, const Vocabulary& vocab);

}  // namespace geotopic
