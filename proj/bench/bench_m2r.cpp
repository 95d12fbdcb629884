// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "m2r/pipeline.hpp"
#include "m2r/sentence_icl.hpp"
#include "m2r/synthetic.hpp"
#include "m2r/token_knn.hpp"
#include "m2r/toy_model.hpp"
#include "m2r/vector_index.hpp"

namespace {

using namespace m2r;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Matrix m(rows, cols);
  for (float& v : m.data()) v = dist(rng);
  return m;
}

const VectorIndex& shared_index(std::size_t n) {
  static std::map<std::size_t, VectorIndex> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    VectorIndex index(32);
    index.insert_batch(random_matrix(n, 32, n));
    index.freeze();
    it = cache.emplace(n, std::move(index)).first;
  }
  return it->second;
}

void BM_QueryTopk(benchmark::State& state) {
  const auto& index = shared_index(static_cast<std::size_t>(state.range(0)));
  const Matrix queries = random_matrix(64, 32, 1);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.query_topk(queries.row(q++ % 64), 16));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_QueryTopkOracle(benchmark::State& state) {
  const auto& index = shared_index(static_cast<std::size_t>(state.range(0)));
  const Matrix queries = random_matrix(64, 32, 1);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.query_topk_oracle(queries.row(q++ % 64), 16));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_QueryTopk)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_QueryTopkOracle)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

struct Batch {
  SyntheticBenchmark bench;
  ToyModel model;
  SentenceDatastore sentences;
  TokenDatastore tokens;
  CorpusAudioSource audio;

  Batch()
      : bench(make_synthetic_benchmark([] {
          SyntheticSpec s;
          s.n_train = 1000;
          s.n_test = 100;
          return s;
        }())),
        model(bench.model_config),
        sentences(build_sentence_datastore(model, bench.train).store),
        tokens(build_token_datastore(model, bench.train).store),
        audio(bench.train) {}

  BatchInputs inputs() const { return {&model, &bench.test, &sentences, &audio, &tokens}; }
};

const Batch& shared_batch() {
  static const Batch b;
  return b;
}

template <BatchOutcome (*Run)(const BatchInputs&, const DecodeConfig&)>
void BM_Batch(benchmark::State& state) {
  const auto& b = shared_batch();
  DecodeConfig cfg;
  cfg.mode = DecodeMode::kM2r;
  for (auto _ : state) benchmark::DoNotOptimize(Run(b.inputs(), cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(b.bench.test.size()));
}

BENCHMARK(BM_Batch<run_batch>)->Name("BM_RunBatch")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Batch<run_batch_serial>)->Name("BM_RunBatchSerial")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
