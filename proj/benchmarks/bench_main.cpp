#include <benchmark/benchmark.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "aishare/aggregate.hpp"
#include "aishare/analytics.hpp"
#include "aishare/estimator.hpp"
#include "aishare/ingest.hpp"
#include "aishare/rng.hpp"
#include "aishare/synth.hpp"

using namespace aishare;

namespace {

EconomySnapshot bench_snapshot() {
  EconomySnapshot s;
  s.telemetry = {EconomyId::must("ZMB"), {2025, 1}, 120'000, 14'400, 0.62, 300'000};
  s.reference = {EconomyId::must("ZMB"), {2025, 1}, 0.7,  2.1, 10'300'000,
                 0.35,                   1300.0,    20'000'000};
  return s;
}

GlobalContext bench_context() {
  GlobalContext context;
  context.alpha_bar = 0.6;
  context.gamma_bar = 0.15;
  context.ratio_min = 0.05;
  context.ratio_p90 = 1.2;
  context.mobile_avg_global = 1.4;
  return context;
}

void estimate_chain(benchmark::State& state) {
  auto snapshot = bench_snapshot();
  auto context = bench_context();
  estimator::EstimatorConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimator::estimate(snapshot, context, config));
  }
}
BENCHMARK(estimate_chain);

void spearman_n1000(benchmark::State& state) {
  CounterRng rng(1, 0);
  std::vector<double> x;
  std::vector<double> y;
  for (int i = 0; i < 1000; ++i) {
    x.push_back(rng.next_unit());
    y.push_back(rng.next_unit() + 0.3 * x.back());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytics::spearman(x, y));
  }
}
BENCHMARK(spearman_n1000);

void rolling_window_10k(benchmark::State& state) {
  CounterRng rng(2, 0);
  std::vector<SeriesPoint> series;
  auto economy = EconomyId::must("ZMB");
  for (int i = 0; i < 10'000; ++i) {
    series.push_back({economy, Period::from_index(24'000 + i), rng.next_unit()});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate::rolling_average(series, 3));
  }
}
BENCHMARK(rolling_window_10k);

void generate_population_100k(benchmark::State& state) {
  auto spec = synth::conforming_spec(10, 10'000, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth::generate(spec));
  }
}
BENCHMARK(generate_population_100k);

void load_telemetry_5k_rows(benchmark::State& state) {
  auto dir = std::filesystem::temp_directory_path() / "aishare-bench";
  std::filesystem::create_directories(dir);
  auto path = dir / "telemetry.csv";
  {
    std::FILE* out = std::fopen(path.c_str(), "w");
    std::fputs("economy,period,active_users,ai_users,opt_in_rate,mad\n", out);
    for (int i = 0; i < 5000; ++i) {
      std::fprintf(out, "%c%c%c,2025-%02d,%d,%d,0.62,%d\n",
                   static_cast<char>('A' + i % 26), static_cast<char>('A' + (i / 26) % 26),
                   static_cast<char>('A' + (i / 676) % 26), i % 12 + 1, 100'000 + i,
                   12'000 + i, 250'000 + i);
    }
    std::fclose(out);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ingest::load_table(path, ingest::telemetry_schema()));
  }
  std::filesystem::remove_all(dir);
}
BENCHMARK(load_telemetry_5k_rows);

}  // namespace

BENCHMARK_MAIN();
