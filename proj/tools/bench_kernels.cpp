// Compares the serial reference kernels against their OpenMP versions, and a
// serial vs parallel training batch on a concept-tagger-sized workload.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "slotfill/kernels.hpp"
#include "slotfill/models.hpp"
#include "slotfill/training.hpp"

using namespace slotfill;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

static void bench_matvec(std::size_t m, std::size_t n, int reps) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<double> W(m * n), x(n), y(m);
  for (auto& v : W) v = dist(rng);
  for (auto& v : x) v = dist(rng);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) kernels::matvec_serial(W.data(), x.data(), y.data(), m, n);
  double serial = ms_since(t0);

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) kernels::matvec_omp(W.data(), x.data(), y.data(), m, n);
  double parallel = ms_since(t0);

  std::printf("matvec %4zux%-4zu x%-5d  serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n", m, n,
              reps, serial, parallel, serial / parallel);
}

static void bench_batch(bool parallel, std::size_t batch, std::size_t steps) {
  DomainSchema schema{"bench", {{"a", "first value"}, {"b", "second value"}}};
  SynthGrammar grammar;
  grammar.templates = {"set {a} and {b} now", "please use {a} with {b} here"};
  grammar.lexicons["a"] = {"red fox", "green frog", "blue bird"};
  grammar.lexicons["b"] = {"one", "two", "three"};
  auto data = synth_generate(grammar, schema, 7, 32);
  EmbeddingTable table = make_random_table(grammar_vocabulary(grammar, schema), 50, 0);

  TrainConfig cfg;
  cfg.kind = ModelKind::ConceptTagger;
  cfg.steps = steps;
  cfg.batch_size = batch;
  cfg.parallel_batch = parallel;
  cfg.dev_period = steps + 1;  // no dev scoring

  std::map<std::string, DomainTrainData> train_data;
  train_data["bench"] = DomainTrainData{schema, data, {}};

  auto t0 = Clock::now();
  TrainResult result = train(train_data, table, cfg);
  double elapsed = ms_since(t0);
  std::printf("ct train  batch %zu, %zu steps (%s): %8.2f ms  (final loss %.4f)\n", batch, steps,
              parallel ? "omp" : "serial", elapsed, result.log.loss.back());
}

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; both paths run serially\n");
#endif
  bench_matvec(256, 256, 2000);
  bench_matvec(512, 512, 1000);
  bench_matvec(1024, 1024, 200);
  bench_batch(false, 16, 20);
  bench_batch(true, 16, 20);
  return 0;
}
