#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "geotopic/classify.hpp"
#include "geotopic/corpus.hpp"
#include "geotopic/features.hpp"
#include "geotopic/geo.hpp"
#include "geotopic/rng.hpp"
#include "geotopic/synth.hpp"
#include "geotopic/topics.hpp"

using namespace geotopic;

namespace {

PlantedWorld world_of(std::size_t side) {
  WorldConfig wc;
  wc.rows = wc.cols = side;
  return generate_world(wc, 7);
}

void BM_Tokenize(benchmark::State& state) {
  const std::string text =
      "Feeling rough today, heading to the clinic on Main St @friend #health http://example.com/x "
      "can't sleep again, third night in a row!!";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_AdjacencyBruteForce(benchmark::State& state) {
  const auto registry = world_of(static_cast<std::size_t>(state.range(0))).registry();
  for (auto _ : state) benchmark::DoNotOptimize(build_adjacency(registry, 60.0));
}
BENCHMARK(BM_AdjacencyBruteForce)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_AdjacencyBucketed(benchmark::State& state) {
  const auto registry = world_of(static_cast<std::size_t>(state.range(0))).registry();
  for (auto _ : state) benchmark::DoNotOptimize(build_adjacency_bucketed(registry, 60.0));
}
BENCHMARK(BM_AdjacencyBucketed)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_LdaTrain(benchmark::State& state) {
  WorldConfig wc;
  wc.topics = static_cast<std::size_t>(state.range(0));
  wc.vocab = 200;
  const auto world = generate_world(wc, 3);
  const auto docs = generate_lda_documents(world.topic_word, 500, 40, 0.5, 4);
  const auto vocab = Vocabulary::from_tokens(world.words);
  LdaParams params;
  params.topics = wc.topics;
  params.sweeps = 50;
  for (auto _ : state) benchmark::DoNotOptimize(train_lda(docs, vocab, params));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 500 * 40 * params.sweeps));
}
BENCHMARK(BM_LdaTrain)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_InferTheta(benchmark::State& state) {
  WorldConfig wc;
  const auto world = generate_world(wc, 3);
  const auto docs = generate_lda_documents(world.topic_word, 200, 40, 0.5, 4);
  const auto vocab = Vocabulary::from_tokens(world.words);
  const auto model = train_lda(docs, vocab, {wc.topics, 0.0, 0.01, 50, 1});
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(infer_theta(model, docs[i++ % docs.size()], {100, 2}));
}
BENCHMARK(BM_InferTheta);

void BM_SmoothWeightedBlock(benchmark::State& state) {
  const auto world = world_of(30);
  const auto graph = build_adjacency_bucketed(world.registry(), 80.0);
  const auto thetas = world.theta_map();
  for (auto _ : state) benchmark::DoNotOptimize(smooth_weighted_block(thetas, graph, 1.0));
}
BENCHMARK(BM_SmoothWeightedBlock)->Unit(benchmark::kMillisecond);

void BM_ClassifierTrain(benchmark::State& state) {
  Rng rng(9);
  Dataset d;
  d.x = Matrix(600, 20);
  for (std::size_t r = 0; r < 600; ++r)
    for (auto& v : d.x.row(r)) v = rng.uniform();
  for (std::size_t r = 0; r < 600; ++r) d.y.push_back(static_cast<int>(r % 6));
  ClassifierSpec spec;
  spec.kind = static_cast<ClassifierKind>(state.range(0));
  spec.forest.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(train_classifier(spec, d));
  state.SetLabel(std::string(to_string(spec.kind)));
}
BENCHMARK(BM_ClassifierTrain)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
