#include <benchmark/benchmark.h>

#include <random>

#include "churnnet/metrics.hpp"

using namespace churnnet;

namespace {

struct Sample {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Sample sample(std::size_t n) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Sample s;
  s.scores.resize(n);
  s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.scores[i] = unit(gen);
    s.labels[i] = unit(gen) < 0.05 ? 1 : 0;
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

}  // namespace

static void auc_10k(benchmark::State& state) {
  Sample s = sample(10000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(s.scores, s.labels));
  }
}
BENCHMARK(auc_10k);

static void lift_10k(benchmark::State& state) {
  Sample s = sample(10000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lift(s.scores, s.labels, 0.005));
  }
}
BENCHMARK(lift_10k);

static void emp_10k(benchmark::State& state) {
  Sample s = sample(10000);
  EmpParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(emp(s.scores, s.labels, params).emp);
  }
}
BENCHMARK(emp_10k)->Unit(benchmark::kMillisecond);
