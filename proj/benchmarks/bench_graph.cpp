#include <benchmark/benchmark.h>

#include "churnnet/graph.hpp"
#include "churnnet/synth.hpp"

using namespace churnnet;

namespace {

const SynthResult& data() {
  static SynthResult result = [] {
    SynthConfig cfg;
    cfg.n_customers = 10000;
    cfg.sparsity = 1e-3;
    cfg.seed = 1234;
    return generate(cfg);
  }();
  return result;
}

}  // namespace

static void build_length_graph(benchmark::State& state) {
  const CdrStore& store = data().store;
  GraphBuildOptions opts;
  opts.scheme = WeightScheme::length;
  for (auto _ : state) {
    CallGraph g = build_graph(store, {4, 4}, opts);
    benchmark::DoNotOptimize(g.edge_count());
  }
}
BENCHMARK(build_length_graph)->Unit(benchmark::kMillisecond);

static void build_decayed_segmented_graph(benchmark::State& state) {
  const CdrStore& store = data().store;
  GraphBuildOptions opts;
  opts.scheme = WeightScheme::count;
  opts.decay = DecaySpec{true, defaults::kDecayGammaPerWeek};
  opts.segment = standard_segments()[17];  // a time-of-day combination
  for (auto _ : state) {
    CallGraph g = build_graph(store, {2, 4}, opts);
    benchmark::DoNotOptimize(g.edge_count());
  }
}
BENCHMARK(build_decayed_segmented_graph)->Unit(benchmark::kMillisecond);

static void reciprocal_filter(benchmark::State& state) {
  const CdrStore& store = data().store;
  GraphBuildOptions opts;
  CallGraph g = build_graph(store, {4, 4}, opts);
  for (auto _ : state) {
    CallGraph r = filter_reciprocal(g);
    benchmark::DoNotOptimize(r.edge_count());
  }
}
BENCHMARK(reciprocal_filter)->Unit(benchmark::kMillisecond);
