#include "geotopic/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "geotopic/geo.hpp"

namespace geotopic {

// ------------------------------------------------------------ timestamps

namespace {

int take_digits(std::string_view text, std::size_t& pos, std::size_t count) {
  if (pos + count > text.size()) throw DataError("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (c < '0' || c > '9') throw DataError("invalid timestamp '" + std::string(text) + "'");
    value = value * 10 + (c - '0');
  }
  pos += count;
  return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c)
    throw DataError("invalid timestamp '" + std::string(text) + "'");
  ++pos;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  std::size_t pos = 0;
  const int y = take_digits(text, pos, 4);
  expect(text, pos, '-');
  const int mo = take_digits(text, pos, 2);
  expect(text, pos, '-');
  const int d = take_digits(text, pos, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("invalid date in timestamp '" + std::string(text) + "'");

  int hh = 0, mm = 0, ss = 0;
  int offset_minutes = 0;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    ++pos;
    hh = take_digits(text, pos, 2);
    expect(text, pos, ':');
    mm = take_digits(text, pos, 2);
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      ss = take_digits(text, pos, 2);
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      }
    }
    if (hh > 23 || mm > 59 || ss > 60)
      throw DataError("invalid time in timestamp '" + std::string(text) + "'");
    if (pos < text.size()) {
      if (text[pos] == 'Z') {
        ++pos;
      } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '-' ? -1 : 1;
        ++pos;
        const int oh = take_digits(text, pos, 2);
        if (pos < text.size() && text[pos] == ':') ++pos;
        const int om = take_digits(text, pos, 2);
        offset_minutes = sign * (oh * 60 + om);
      }
    }
  }
  if (pos != text.size()) throw DataError("trailing characters in timestamp '" + std::string(text) + "'");
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(ts);
  const year_month_day ymd{days};
  const hh_mm_ss hms{ts - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

int year_of(Timestamp ts) {
  using namespace std::chrono;
  return static_cast<int>(year_month_day{floor<days>(ts)}.year());
}

// ------------------------------------------------------------ records

RawRecord parse_record(std::string_view json_line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed record JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("record is not a JSON object");

  RawRecord r;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    throw DataError("record without a non-empty string id");
  r.id = j["id"].get<std::string>();
  if (j.contains("text") && !j["text"].is_null()) {
    if (!j["text"].is_string()) throw DataError("record " + r.id + ": text is not a string");
    r.text = j["text"].get<std::string>();
  }
  if (j.contains("region") && !j["region"].is_null()) {
    if (!j["region"].is_string()) throw DataError("record " + r.id + ": region is not a string");
    r.region = j["region"].get<std::string>();
  }
  if (!j.contains("ts") || !j["ts"].is_string())
    throw DataError("record " + r.id + ": missing ts");
  r.timestamp = parse_timestamp(j["ts"].get<std::string>());
  return r;
}

std::vector<RawRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_records_jsonl(const std::filesystem::path& path, std::span<const RawRecord> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["region"] = r.region ? nlohmann::ordered_json(*r.region) : nlohmann::ordered_json(nullptr);
    j["ts"] = format_timestamp(r.timestamp);
    out << j.dump() << '\n';
  }
}

// ------------------------------------------------------------ tokenizer

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",     "about", "after", "all",   "also",  "am",    "an",    "and",   "any",   "are",
      "as",    "at",    "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",
      "does",  "for",   "from",  "get",   "got",   "had",   "has",   "have",  "he",    "her",
      "him",   "his",   "how",   "if",    "in",    "into",  "is",    "it",    "its",   "just",
      "me",    "my",    "no",    "not",   "now",   "of",    "ok",    "okay",  "on",    "one",
      "or",    "our",   "out",   "rt",    "she",   "so",    "than",  "that",  "the",   "their",
      "them",  "then",  "there", "these", "they",  "this",  "to",    "too",   "up",    "us",
      "was",   "we",    "were",  "what",  "when",  "where", "which", "who",   "why",   "will",
      "with",  "would", "you",   "your"};
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    for (auto& t : tokenize(w, TokenizerOptions::passthrough())) words.insert(std::move(t));
  }
  return words;
}

TokenizerOptions TokenizerOptions::passthrough() {
  TokenizerOptions o;
  o.min_length = 1;
  o.strip_urls = false;
  o.strip_mentions = false;
  o.stopwords.clear();
  return o;
}

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::string_view chunk = text.substr(start, i - start);
    if (chunk.empty()) continue;
    if (options.strip_urls && (starts_with_ci(chunk, "http://") || starts_with_ci(chunk, "https://") ||
                               starts_with_ci(chunk, "www.")))
      continue;
    if (options.strip_mentions && chunk.front() == '@') continue;

    std::size_t j = 0;
    while (j < chunk.size()) {
      while (j < chunk.size() && !is_word_byte(static_cast<unsigned char>(chunk[j]))) ++j;
      std::string word;
      while (j < chunk.size() && is_word_byte(static_cast<unsigned char>(chunk[j]))) {
        char c = chunk[j++];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        word += c;
      }
      if (word.empty()) continue;
      if (code_points(word) < options.min_length) continue;
      if (options.stopwords.contains(word)) continue;
      out.push_back(std::move(word));
    }
  }
  return out;
}

// ------------------------------------------------------------ slang

SlangLexicon SlangLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open slang lexicon " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    terms.push_back(t);
  }
  auto lex = from_terms(terms);
  lex.source_ = path;
  if (lex.size() == 0) throw DataError("slang lexicon " + path.string() + " has no terms");
  return lex;
}

SlangLexicon SlangLexicon::from_terms(std::span<const std::string> terms) {
  SlangLexicon lex;
  for (const auto& t : terms)
    for (auto& token : tokenize(t, TokenizerOptions::passthrough())) lex.terms_.insert(std::move(token));
  return lex;
}

bool SlangLexicon::contains(std::string_view token) const {
  return terms_.contains(std::string(token));
}

std::vector<std::string> SlangLexicon::terms() const {
  std::vector<std::string> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end());
  return out;
}

TokenizedRecord tokenize_record(const RawRecord& record, const TokenizerOptions& options,
                                const SlangLexicon* lexicon) {
  TokenizedRecord t;
  t.id = record.id;
  t.region = record.region;
  t.year = year_of(record.timestamp);
  t.tokens = tokenize(record.text, options);
  t.token_count = t.tokens.size();
  if (lexicon != nullptr)
    t.slang_count = static_cast<std::size_t>(
        std::count_if(t.tokens.begin(), t.tokens.end(), [&](const auto& tok) { return lexicon->contains(tok); }));
  return t;
}

std::vector<std::string> strip_to_slang(const TokenizedRecord& record, const SlangLexicon& lexicon) {
  std::vector<std::string> out;
  for (const auto& tok : record.tokens)
    if (lexicon.contains(tok)) out.push_back(tok);
  return out;
}

double slang_ratio(const TokenizedRecord& record) {
  if (record.token_count == 0) return 0.0;
  return static_cast<double>(record.slang_count) / static_cast<double>(record.token_count);
}

PartitionedRecords partition_by_registry(std::vector<TokenizedRecord> records,
                                         const RegionRegistry& registry) {
  PartitionedRecords out;
  for (auto& r : records) {
    if (r.region && registry.contains(*r.region)) {
      out.located.push_back(std::move(r));
    } else {
      r.region.reset();
      out.unlocated.push_back(std::move(r));
    }
  }
  return out;
}

// ------------------------------------------------------------ vocabulary

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> documents,
                             const VocabularyOptions& options) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::vector<std::string> unique(doc.begin(), doc.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto& t : unique) ++df[t];
  }
  const double max_df = options.max_df_fraction * static_cast<double>(documents.size());
  Vocabulary v;
  for (const auto& [token, count] : df) {
    if (count < options.min_df) continue;
    if (static_cast<double>(count) > max_df) continue;
    v.lookup_.emplace(token, v.tokens_.size());
    v.tokens_.push_back(token);
    v.df_.push_back(count);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  std::vector<std::string> sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Vocabulary v;
  for (auto& t : sorted) {
    v.lookup_.emplace(t, v.tokens_.size());
    v.tokens_.push_back(std::move(t));
    v.df_.push_back(0);
  }
  return v;
}

Vocabulary Vocabulary::read_csv(const std::filesystem::path& path) {
  const CsvTable table = geotopic::read_csv(path);
  const std::size_t ct = table.column("token"), ci = table.column("index"), cd = table.column("df");
  Vocabulary v;
  v.tokens_.resize(table.rows.size());
  v.df_.resize(table.rows.size());
  std::vector<bool> seen(table.rows.size(), false);
  for (const auto& row : table.rows) {
    const long long idx = parse_int(row[ci], "vocabulary index");
    if (idx < 0 || static_cast<std::size_t>(idx) >= table.rows.size() || seen[static_cast<std::size_t>(idx)])
      throw DataError(path.string() + ": vocabulary indices are not dense 0..V-1");
    const auto i = static_cast<std::size_t>(idx);
    seen[i] = true;
    v.tokens_[i] = row[ct];
    v.df_[i] = static_cast<std::size_t>(parse_int(row[cd], "vocabulary df"));
    if (!v.lookup_.emplace(row[ct], i).second)
      throw DataError(path.string() + ": duplicate token '" + row[ct] + "'");
  }
  return v;
}

void Vocabulary::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "token,index,df\n";
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    out << csv_escape(tokens_[i]) << ',' << i << ',' << df_[i] << '\n';
}

std::optional<std::size_t> Vocabulary::index(std::string_view token) const {
  auto it = lookup_.find(std::string(token));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a64("vocabulary");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

std::vector<std::uint32_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens)
    if (auto i = index(t)) ids.push_back(static_cast<std::uint32_t>(*i));
  return ids;
}

// ------------------------------------------------------------ documents

std::size_t RegionDocument::token_total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : bag) n += c;
  return n;
}

std::vector<std::uint32_t> RegionDocument::encode(const Vocabulary& vocab) const {
  std::vector<std::pair<std::uint32_t, std::size_t>> entries;
  for (const auto& [token, count] : bag)
    if (auto i = vocab.index(token)) entries.emplace_back(static_cast<std::uint32_t>(*i), count);
  std::sort(entries.begin(), entries.end());
  std::vector<std::uint32_t> ids;
  for (const auto& [id, count] : entries) ids.insert(ids.end(), count, id);
  return ids;
}

RegionDocuments assemble_region_documents(std::span<const TokenizedRecord> records) {
  RegionDocuments docs;
  for (const auto& r : records) {
    if (!r.region) continue;
    auto& doc = docs[*r.region];
    doc.region = *r.region;
    ++doc.record_count;
    for (const auto& t : r.tokens) ++doc.bag[t];
  }
  return docs;
}

Matrix tfidf(const RegionDocuments& documents, const Vocabulary& vocab) {
  const std::size_t n = documents.size();
  Matrix w(n, vocab.size());
  std::vector<std::size_t> df(vocab.size(), 0);
  for (const auto& [_, doc] : documents)
    for (const auto& [token, count] : doc.bag)
      if (auto i = vocab.index(token)) ++df[*i];
  std::size_t r = 0;
  for (const auto& [_, doc] : documents) {
    for (const auto& [token, count] : doc.bag) {
      const auto i = vocab.index(token);
      if (!i) continue;
      const double idf = std::log(static_cast<double>(n) / static_cast<double>(df[*i]));
      w(r, *i) = static_cast<double>(count) * idf;
    }
    ++r;
  }
  return w;
}

}  // namespace geotopic
