#include <doctest.h>

#include <cmath>
#include <numeric>

#include "geotopic/corpus.hpp"
#include "geotopic/geo.hpp"
#include "geotopic/rng.hpp"
#include "test_support.hpp"

using namespace geotopic;
using geotopic::testing::TempDir;
using geotopic::testing::write_file;
using Tokens = std::vector<std::string>;

namespace {

TokenizedRecord record_with(Tokens tokens, std::optional<std::string> region = std::nullopt,
                            const SlangLexicon* lex = nullptr) {
  TokenizedRecord r;
  r.id = "r";
  r.region = std::move(region);
  r.tokens = std::move(tokens);
  r.token_count = r.tokens.size();
  if (lex)
    for (const auto& t : r.tokens) r.slang_count += lex->contains(t) ? 1 : 0;
  return r;
}

}  // namespace

TEST_SUITE("tokenize") {
  TEST_CASE("empty input") { CHECK(tokenize("").empty()); }

  TEST_CASE("urls, mentions and case") {
    CHECK(tokenize("HIV testing @clinic http://t.co/x") == Tokens{"hiv", "testing"});
  }

  TEST_CASE("short tokens and default stopwords") { CHECK(tokenize("a I ok").empty()); }

  TEST_CASE("punctuation splits and disappears") {
    CHECK(tokenize("wow!!! ... great,news -- (today)") == Tokens{"wow", "great", "news", "today"});
    CHECK(tokenize("!!! ?? ...").empty());
  }

  TEST_CASE("https and www urls") {
    CHECK(tokenize("see https://x.org/a?b=1 and WWW.site.com now") == Tokens{"see"});
  }

  TEST_CASE("minimum length counts code points") {
    // "é" is two bytes but one code point.
    CHECK(tokenize("é éa") == Tokens{"éa"});
  }

  TEST_CASE("custom stopwords replace the default list") {
    TokenizerOptions opt;
    opt.stopwords = {"testing"};
    CHECK(tokenize("ok testing hiv", opt) == Tokens{"ok", "hiv"});
  }

  TEST_CASE("stopword file") {
    TempDir dir("stop");
    auto path = write_file(dir / "stop.txt", "# comment\nFoo\n\nbar\n");
    auto words = load_stopwords(path);
    CHECK(words.size() == 2);
    CHECK(words.contains("foo"));
    CHECK(words.contains("bar"));
    CHECK_THROWS_AS(load_stopwords(dir / "missing.txt"), DataError);
  }

  TEST_CASE("idempotent on its own output") {
    Rng rng(7);
    const std::string alphabet = "abcDEF  @#!.,:/hw12";
    for (int trial = 0; trial < 500; ++trial) {
      std::string text;
      const auto len = rng.index(60);
      for (std::size_t i = 0; i < len; ++i) text += alphabet[rng.index(alphabet.size())];
      const auto once = tokenize(text);
      std::string joined;
      for (const auto& t : once) joined += t + " ";
      CHECK(tokenize(joined) == once);
    }
  }

  TEST_CASE("tokens are lowercase without whitespace") {
    for (const auto& t : tokenize("MiXeD Case\tTabs\nLines HERE")) {
      for (char c : t) {
        CHECK_FALSE(std::isspace(static_cast<unsigned char>(c)));
        CHECK_FALSE(std::isupper(static_cast<unsigned char>(c)));
      }
    }
  }
}

TEST_SUITE("records") {
  TEST_CASE("json line parsing ignores unknown fields") {
    auto r = parse_record(R"({"id":"1","text":"hi there","region":"19104","ts":"2015-03-01T12:00:00Z","x":5})");
    CHECK(r.id == "1");
    CHECK(r.text == "hi there");
    REQUIRE(r.region);
    CHECK(*r.region == "19104");
    CHECK(year_of(r.timestamp) == 2015);
  }

  TEST_CASE("null region") {
    auto r = parse_record(R"({"id":"2","text":"","region":null,"ts":"2014-01-01T00:00:00Z"})");
    CHECK_FALSE(r.region);
  }

  TEST_CASE("bad records") {
    CHECK_THROWS_AS(parse_record(R"({"id":"","text":"x","ts":"2014-01-01T00:00:00Z"})"), DataError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","text":"x","ts":"yesterday"})"), DataError);
    CHECK_THROWS_AS(parse_record("not json"), DataError);
  }

  TEST_CASE("timestamps with offsets") {
    CHECK(format_timestamp(parse_timestamp("2015-12-31T23:30:00-01:00")) == "2016-01-01T00:30:00Z");
    CHECK(year_of(parse_timestamp("2016-01-01T00:30:00+01:00")) == 2015);
  }

  TEST_CASE("jsonl round trip") {
    TempDir dir("jsonl");
    std::vector<RawRecord> in{{"a", "hello \"world\"", "001", parse_timestamp("2014-05-01T10:00:00Z")},
                              {"b", "", std::nullopt, parse_timestamp("2016-05-01T10:00:00Z")}};
    write_records_jsonl(dir / "r.jsonl", in);
    auto out = read_records_jsonl(dir / "r.jsonl");
    REQUIRE(out.size() == 2);
    CHECK(out[0].text == in[0].text);
    CHECK(out[0].region == in[0].region);
    CHECK_FALSE(out[1].region);
    CHECK(out[1].timestamp == in[1].timestamp);
  }
}

TEST_SUITE("slang") {
  TEST_CASE("load normalizes and deduplicates") {
    TempDir dir("lex");
    auto lex = SlangLexicon::load(write_file(dir / "lex.txt", "lit\nLIT\nfam\n"));
    CHECK(lex.size() == 2);
    CHECK(lex.contains("lit"));
    CHECK(lex.contains("fam"));
    CHECK(lex.source() == dir / "lex.txt");
  }

  TEST_CASE("empty or missing file is an error") {
    TempDir dir("lex");
    CHECK_THROWS_AS(SlangLexicon::load(write_file(dir / "empty.txt", "")), DataError);
    CHECK_THROWS_AS(SlangLexicon::load(write_file(dir / "comments.txt", "# only\n")), DataError);
    CHECK_THROWS_AS(SlangLexicon::load(dir / "missing.txt"), DataError);
  }

  TEST_CASE("exact match") {
    TempDir dir("lex");
    auto lex = SlangLexicon::load(write_file(dir / "lex.txt", "yeet\n"));
    CHECK(lex.contains("yeet"));
    CHECK_FALSE(lex.contains("yet"));
  }

  TEST_CASE("strip_to_slang keeps order") {
    const auto lex = SlangLexicon::from_terms(Tokens{"lit", "fam"});
    CHECK(strip_to_slang(record_with({"hiv", "lit", "fam"}), lex) == Tokens{"lit", "fam"});
    CHECK(strip_to_slang(record_with({"hiv", "testing"}), lex).empty());
    CHECK(strip_to_slang(record_with({"fam", "lit", "fam"}), lex) == Tokens{"fam", "lit", "fam"});
  }

  TEST_CASE("slang_ratio") {
    TokenizedRecord r;
    r.token_count = 10;
    CHECK(slang_ratio(r) == 0.0);
    r.token_count = 5;
    r.slang_count = 5;
    CHECK(slang_ratio(r) == 1.0);
    r.token_count = 12;
    r.slang_count = 3;
    CHECK(slang_ratio(r) == 0.25);
    r.token_count = 0;
    r.slang_count = 0;
    CHECK(slang_ratio(r) == 0.0);
  }

  TEST_CASE("slang_count equals stripped length") {
    const auto lex = SlangLexicon::from_terms(Tokens{"lit", "fam", "yeet"});
    Rng rng(3);
    const Tokens pool{"lit", "fam", "yeet", "hiv", "clinic", "test", "yet"};
    for (int i = 0; i < 200; ++i) {
      std::string text;
      for (std::size_t j = 0, n = rng.index(15); j < n; ++j) text += pool[rng.index(pool.size())] + " ";
      RawRecord raw{"id", text, std::nullopt, parse_timestamp("2015-01-01T00:00:00Z")};
      auto rec = tokenize_record(raw, TokenizerOptions{}, &lex);
      CHECK(rec.slang_count == strip_to_slang(rec, lex).size());
      CHECK(rec.slang_count <= rec.token_count);
      CHECK(rec.token_count == rec.tokens.size());
    }
  }
}

TEST_SUITE("partition") {
  TEST_CASE("unknown and missing regions become unlocated") {
    RegionRegistry reg({{"A", {0, 0}, 10}, {"B", {0, 1}, 10}});
    std::vector<TokenizedRecord> recs{record_with({"x"}, "A"), record_with({"y"}, "Z"), record_with({"z"})};
    auto p = partition_by_registry(recs, reg);
    REQUIRE(p.located.size() == 1);
    CHECK(*p.located[0].region == "A");
    REQUIRE(p.unlocated.size() == 2);
    for (const auto& r : p.unlocated) CHECK_FALSE(r.region);
  }
}

TEST_SUITE("vocabulary") {
  TEST_CASE("pruning by document frequency") {
    std::vector<Tokens> docs{{"a1", "b1", "c1"}, {"a1", "b1"}, {"a1", "d1"}, {"b1", "e1"}};
    // a1 and b1 appear in 3 of 4 docs; with max fraction 0.5 they are cut.
    auto v = Vocabulary::build(docs, {1, 0.5});
    CHECK(v.tokens() == Tokens{"c1", "d1", "e1"});
    auto v2 = Vocabulary::build(docs, {2, 1.0});
    CHECK(v2.tokens() == Tokens{"a1", "b1"});
    CHECK(v2.df(*v2.index("a1")) == 3);
  }

  TEST_CASE("index round trip and dense indices") {
    std::vector<Tokens> docs{{"x1", "y1", "z1"}, {"z1", "w1"}};
    auto v = Vocabulary::build(docs, {1, 1.0});
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(*v.index(v.token(i)) == i);
    CHECK_FALSE(v.index("nope"));
  }

  TEST_CASE("encode drops out-of-vocabulary tokens") {
    auto v = Vocabulary::from_tokens(Tokens{"aa", "bb"});
    CHECK(v.encode(Tokens{"bb", "zz", "aa", "bb"}) == std::vector<std::uint32_t>{1, 0, 1});
  }

  TEST_CASE("csv round trip") {
    TempDir dir("vocab");
    std::vector<Tokens> docs{{"x1", "y1"}, {"y1", "z1"}};
    auto v = Vocabulary::build(docs, {1, 1.0});
    v.write_csv(dir / "v.csv");
    CHECK(geotopic::testing::read_file(dir / "v.csv").starts_with("token,index,df\n"));
    auto back = Vocabulary::read_csv(dir / "v.csv");
    CHECK(back.tokens() == v.tokens());
    CHECK(back.hash() == v.hash());
    CHECK(back.df(1) == v.df(1));
  }

  TEST_CASE("hash depends on tokens") {
    CHECK(Vocabulary::from_tokens(Tokens{"aa"}).hash() != Vocabulary::from_tokens(Tokens{"bb"}).hash());
  }
}

TEST_SUITE("region documents") {
  TEST_CASE("grouping by region") {
    std::vector<TokenizedRecord> recs{record_with({"x1", "y1"}, "A"), record_with({"x1"}, "A"),
                                      record_with({"z1"}, "B")};
    auto docs = assemble_region_documents(recs);
    REQUIRE(docs.size() == 2);
    CHECK(docs.at("A").record_count == 2);
    CHECK(docs.at("A").bag.at("x1") == 2);
    CHECK(docs.at("B").record_count == 1);
  }

  TEST_CASE("zero records") { CHECK(assemble_region_documents(std::vector<TokenizedRecord>{}).empty()); }

  TEST_CASE("token mass is conserved") {
    Rng rng(11);
    std::vector<TokenizedRecord> recs;
    std::size_t total = 0;
    for (int i = 0; i < 300; ++i) {
      Tokens t;
      for (std::size_t j = 0, n = rng.index(20); j < n; ++j) t.push_back("w" + std::to_string(rng.index(30)));
      total += t.size();
      recs.push_back(record_with(t, "R" + std::to_string(rng.index(7))));
    }
    auto docs = assemble_region_documents(recs);
    std::size_t sum = 0;
    for (const auto& [_, d] : docs) {
      sum += d.token_total();
      for (const auto& [tok, c] : d.bag) CHECK(c > 0);
      CHECK(d.record_count >= 1);
    }
    CHECK(sum == total);
  }
}

TEST_SUITE("tfidf") {
  namespace {
  RegionDocuments docs_of(std::vector<std::pair<std::string, Tokens>> spec) {
    std::vector<TokenizedRecord> recs;
    for (auto& [region, toks] : spec) recs.push_back(record_with(toks, region));
    return assemble_region_documents(recs);
  }
  }  // namespace

  TEST_CASE("token in every document has zero weight") {
    auto docs = docs_of({{"A", {"aa", "bb"}}, {"B", {"aa"}}});
    auto vocab = Vocabulary::from_tokens(Tokens{"aa", "bb"});
    auto m = tfidf(docs, vocab);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 0) == 0.0);
  }

  TEST_CASE("single document corpus is all zero") {
    auto docs = docs_of({{"A", {"aa", "bb", "bb"}}});
    auto m = tfidf(docs, Vocabulary::from_tokens(Tokens{"aa", "bb"}));
    CHECK(m(0, 0) == 0.0);
    CHECK(m(0, 1) == 0.0);
  }

  TEST_CASE("hand-evaluated weight") {
    auto docs = docs_of({{"A", {"aa", "aa", "aa"}}, {"B", {"bb"}}});
    auto m = tfidf(docs, Vocabulary::from_tokens(Tokens{"aa", "bb"}));
    CHECK(m.rows() == 2);
    CHECK(m(0, 0) == doctest::Approx(3 * std::log(2.0)));
    CHECK(m(0, 0) == doctest::Approx(2.079).epsilon(1e-3));
    CHECK(m(1, 0) == 0.0);
  }
}
