#include <doctest.h>

#include <cmath>
#include <numeric>

#include "geotopic/corpus.hpp"
#include "geotopic/synth.hpp"
#include "geotopic/topics.hpp"
#include "test_support.hpp"

using namespace geotopic;
using geotopic::testing::TempDir;

namespace {

Vocabulary word_vocab(std::size_t v) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < v; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%04zu", i);
    tokens.emplace_back(buf);
  }
  return Vocabulary::from_tokens(tokens);
}

// K topics over V words, topic k uniform on its own contiguous block.
Matrix block_topics(std::size_t k, std::size_t v) {
  Matrix m(k, v);
  const std::size_t width = v / k;
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t w = t * width; w < (t + 1) * width; ++w) m(t, w) = 1.0 / static_cast<double>(width);
  return m;
}

double row_sum(std::span<const double> row) { return std::accumulate(row.begin(), row.end(), 0.0); }

void check_normalized(const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) CHECK(std::abs(row_sum(m.row(r)) - 1.0) < 1e-9);
}

struct TwoTopicFixture {
  Vocabulary vocab = word_vocab(100);
  Matrix planted = block_topics(2, 100);
  std::vector<TokenIds> docs = generate_lda_documents(planted, 500, 40, 0.5, 42);
  LdaModel model = train_lda(docs, vocab, {2, 0.0, 0.01, 200, 7});
};

const TwoTopicFixture& two_topics() {
  static const TwoTopicFixture f;
  return f;
}

}  // namespace

TEST_SUITE("train_lda") {
  TEST_CASE("validation") {
    auto vocab = word_vocab(10);
    std::vector<TokenIds> none;
    CHECK_THROWS_AS(train_lda(none, vocab, {2, 0, 0.01, 10, 1}), DataError);
    std::vector<TokenIds> docs{{0, 1}, {2}};
    CHECK_THROWS_AS(train_lda(docs, vocab, {0, 0, 0.01, 10, 1}), ConfigError);
    CHECK(train_lda(docs, vocab, {2, -1, 0.01, 10, 1}).alpha() == 25.0);  // non-positive: 50 / K
    CHECK_THROWS_AS(train_lda(docs, vocab, {2, 0, 0.0, 10, 1}), ConfigError);
    std::vector<TokenIds> with_empty{{0, 1}, {}};
    CHECK_THROWS_AS(train_lda(with_empty, vocab, {2, 0, 0.01, 10, 1}), DataError);
    std::vector<TokenIds> out_of_range{{0, 99}};
    CHECK_THROWS_AS(train_lda(out_of_range, vocab, {2, 0, 0.01, 10, 1}), DataError);
  }

  TEST_CASE("default alpha is 50/K") {
    auto vocab = word_vocab(10);
    std::vector<TokenIds> docs{{0, 1, 2}, {3, 4}};
    auto m = train_lda(docs, vocab, {5, 0.0, 0.01, 5, 1});
    CHECK(m.alpha() == 10.0);
    CHECK(m.beta() == 0.01);
    CHECK(m.topics() == 5);
    CHECK(m.vocab_size() == 10);
  }

  TEST_CASE("K = 1 gives theta [1] for every document") {
    const auto& f = two_topics();
    auto m = train_lda(f.docs, f.vocab, {1, 0, 0.01, 20, 3});
    check_normalized(m.topic_word());
    for (std::size_t d = 0; d < 20; ++d) CHECK(infer_theta(m, f.docs[d]).theta == std::vector<double>{1.0});
  }

  TEST_CASE("two planted topics are recovered") {
    const auto& f = two_topics();
    check_normalized(f.model.topic_word());
    const auto match = match_topics(f.model.topic_word(), f.planted);
    for (std::size_t planted = 0; planted < 2; ++planted) {
      const auto row = f.model.topic_word().row(match[planted]);
      const double mass = std::accumulate(row.begin() + static_cast<long>(planted * 50),
                                          row.begin() + static_cast<long>((planted + 1) * 50), 0.0);
      CHECK(mass >= 0.9);
    }
  }

  TEST_CASE("same seed gives identical topic_word") {
    const auto& f = two_topics();
    auto a = train_lda(std::span(f.docs).first(100), f.vocab, {3, 0, 0.01, 30, 99});
    auto b = train_lda(std::span(f.docs).first(100), f.vocab, {3, 0, 0.01, 30, 99});
    CHECK(a.topic_word() == b.topic_word());
    CHECK(a.fingerprint() == b.fingerprint());
    auto c = train_lda(std::span(f.docs).first(100), f.vocab, {3, 0, 0.01, 30, 100});
    CHECK_FALSE(c.topic_word() == a.topic_word());
  }

  TEST_CASE("topic_word rows are smoothed count ratios") {
    // One document, one token, K = 1: counts are known exactly.
    auto vocab = word_vocab(4);
    std::vector<TokenIds> docs{{2}};
    auto m = train_lda(docs, vocab, {1, 0, 0.5, 3, 1});
    CHECK(m.topic_word()(0, 2) == doctest::Approx((1 + 0.5) / (1 + 4 * 0.5)));
    CHECK(m.topic_word()(0, 0) == doctest::Approx(0.5 / (1 + 4 * 0.5)));
  }
}

TEST_SUITE("infer_theta") {
  TEST_CASE("empty document gives a flagged uniform theta") {
    const auto& f = two_topics();
    auto est = infer_theta(f.model, TokenIds{});
    CHECK(est.empty_document);
    CHECK(est.theta == std::vector<double>{0.5, 0.5});
  }

  TEST_CASE("planted-topic document") {
    const auto& f = two_topics();
    const auto match = match_topics(f.model.topic_word(), f.planted);
    TokenIds doc;
    // Long enough that the 50/K prior does not dominate the counts.
    for (int rep = 0; rep < 10; ++rep)
      for (std::uint32_t w = 0; w < 50; w += 2) doc.push_back(w);
    auto est = infer_theta(f.model, doc, {100, 5});
    CHECK_FALSE(est.empty_document);
    CHECK(est.theta[match[0]] >= 0.8);
    CHECK(std::abs(row_sum(est.theta) - 1.0) < 1e-9);
  }

  TEST_CASE("deterministic per seed") {
    const auto& f = two_topics();
    CHECK(infer_theta(f.model, f.docs[3], {50, 9}).theta == infer_theta(f.model, f.docs[3], {50, 9}).theta);
  }

  TEST_CASE("out-of-range token ids are rejected") {
    const auto& f = two_topics();
    CHECK_THROWS_AS(infer_theta(f.model, TokenIds{1000}), DataError);
  }
}

TEST_SUITE("similarity") {
  TEST_CASE("cosine") {
    const std::vector<double> a{0.2, 0.3, 0.5};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
    CHECK(cosine_similarity(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}) ==
          doctest::Approx(0.70710678));
    CHECK_THROWS_AS(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), DataError);
    CHECK_THROWS_AS(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 0}), DataError);
  }

  TEST_CASE("total variation") {
    CHECK(total_variation(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0);
    CHECK(total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) == 0.0);
  }

  TEST_CASE("greedy matching undoes a permutation") {
    Matrix ref = block_topics(3, 9);
    Matrix cand(3, 9);
    const std::size_t perm[3] = {2, 0, 1};
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t w = 0; w < 9; ++w) cand(perm[t], w) = ref(t, w);
    CHECK(match_topics(cand, ref) == std::vector<std::size_t>{2, 0, 1});
  }
}

TEST_SUITE("assign_unlocated") {
  TEST_CASE("single candidate") {
    const auto& f = two_topics();
    ThetaMap regions{{"only", {0.3, 0.7}}};
    CHECK(assign_unlocated(f.docs[0], f.model, regions) == std::optional<std::string>("only"));
  }

  TEST_CASE("planted record goes to the matching region") {
    const auto& f = two_topics();
    const auto match = match_topics(f.model.topic_word(), f.planted);
    std::vector<double> a(2, 0.0), b(2, 0.0);
    a[match[0]] = 1.0;
    b[match[1]] = 1.0;
    ThetaMap regions{{"A", a}, {"B", b}};
    TokenIds record{1, 5, 9, 13, 17, 21, 33, 40};  // planted topic 0 words only
    CHECK(assign_unlocated(record, f.model, regions, {100, 2}) == std::optional<std::string>("A"));
  }

  TEST_CASE("exact tie goes to the smallest id") {
    const auto& f = two_topics();
    ThetaMap regions{{"002", {0.5, 0.5}}, {"001", {0.5, 0.5}}};
    CHECK(assign_unlocated(f.docs[0], f.model, regions) == std::optional<std::string>("001"));
  }

  TEST_CASE("empty record is unassigned") {
    const auto& f = two_topics();
    ThetaMap regions{{"A", {0.5, 0.5}}};
    CHECK_FALSE(assign_unlocated(TokenIds{}, f.model, regions));
  }

  TEST_CASE("no candidates is an error") {
    const auto& f = two_topics();
    CHECK_THROWS(assign_unlocated(f.docs[0], f.model, ThetaMap{}));
  }
}

TEST_SUITE("perplexity") {
  TEST_CASE("uniform single topic equals V") {
    const std::size_t v = 37;
    auto vocab = word_vocab(v);
    LdaModel m(1.0, 0.01, 0, 0, vocab.hash(), Matrix(1, v, 1.0 / v));
    std::vector<TokenIds> docs{{0, 3, 5}, {36, 1}};
    CHECK(perplexity(m, docs) == doctest::Approx(static_cast<double>(v)));
  }

  TEST_CASE("zero tokens is an error") {
    const auto& f = two_topics();
    std::vector<TokenIds> empty{{}, {}};
    CHECK_THROWS_AS(perplexity(f.model, empty), DataError);
  }

  TEST_CASE("training corpus perplexity is bounded by V and improves with sweeps") {
    const auto& f = two_topics();
    auto held = std::span(f.docs).first(100);
    const double trained = perplexity(f.model, held, {50, 1});
    CHECK(trained <= 100.0);
    auto short_run = train_lda(f.docs, f.vocab, {2, 0, 0.01, 1, 7});
    CHECK(trained <= perplexity(short_run, held, {50, 1}) * 1.02);
  }
}

TEST_SUITE("persistence") {
  TEST_CASE("model save and load") {
    const auto& f = two_topics();
    TempDir dir("lda");
    f.model.save(dir / "m.json");
    auto back = LdaModel::load(dir / "m.json", f.vocab);
    CHECK(back.topic_word() == f.model.topic_word());
    CHECK(back.alpha() == f.model.alpha());
    CHECK(back.seed() == f.model.seed());
    CHECK(back.fingerprint() == f.model.fingerprint());
    CHECK_THROWS_AS(LdaModel::load(dir / "m.json", word_vocab(99)), DataError);
  }

  TEST_CASE("theta csv round trip") {
    TempDir dir("theta");
    ThetaMap thetas{{"b", {0.1, 0.9}}, {"a", {1.0 / 3, 2.0 / 3}}};
    write_theta_csv(dir / "t.csv", thetas);
    CHECK(geotopic::testing::read_file(dir / "t.csv").starts_with("region_id,theta_0,theta_1\n"));
    CHECK(read_theta_csv(dir / "t.csv") == thetas);
  }
}
