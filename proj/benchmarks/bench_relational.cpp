#include <benchmark/benchmark.h>

#include "churnnet/relational.hpp"
#include "churnnet/synth.hpp"

using namespace churnnet;

namespace {

struct Fixture {
  CallGraph graph;
  LabelState init;
  Fixture() {
    SynthConfig cfg;
    cfg.n_customers = 10000;
    cfg.sparsity = 1e-3;
    cfg.seed = 99;
    SynthResult synth = generate(cfg);
    graph = build_graph(synth.store, {4, 4}, GraphBuildOptions{});
    ChurnLabels labels =
        label_churn(synth.store, synth.store.observation_window());
    TimeInterval m4 = synth.store.month_span(4);
    init.labels.assign(synth.store.node_count(), 0);
    for (NodeIndex i = 0; i < synth.store.node_count(); ++i) {
      init.labels[i] = labels.churned_in(i, m4) ? 1 : 0;
    }
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

static void wvrn_sweep(benchmark::State& state) {
  const Fixture& f = fixture();
  Wvrn rc(f.init.prior());
  std::vector<double> cur = f.init.to_scores();
  std::vector<double> out(cur.size(), 0.0);
  for (auto _ : state) {
    rc.score(f.graph, cur, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(wvrn_sweep)->Unit(benchmark::kMillisecond);

static void spa_rc_sweep(benchmark::State& state) {
  const Fixture& f = fixture();
  SpaRc rc(0.85, f.init.prior());
  std::vector<double> cur = f.init.to_scores();
  std::vector<double> out(cur.size(), 0.0);
  for (auto _ : state) {
    rc.score(f.graph, cur, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(spa_rc_sweep)->Unit(benchmark::kMillisecond);

static void relaxation_labelling_full(benchmark::State& state) {
  const Fixture& f = fixture();
  Wvrn rc(f.init.prior());
  CiConfig cfg;
  cfg.method = CiMethod::rl;
  for (auto _ : state) {
    ScoreState s = run_ci(rc, f.graph, f.init, cfg);
    benchmark::DoNotOptimize(s.scores.data());
  }
}
BENCHMARK(relaxation_labelling_full)->Unit(benchmark::kMillisecond);

static void gibbs_hundred_sweeps(benchmark::State& state) {
  const Fixture& f = fixture();
  Wvrn rc(f.init.prior());
  CiConfig cfg;
  cfg.method = CiMethod::gibbs;
  cfg.gibbs_burn_in = 20;
  cfg.gibbs_max_iter = 80;
  cfg.seed = 7;
  for (auto _ : state) {
    ScoreState s = run_ci(rc, f.graph, f.init, cfg);
    benchmark::DoNotOptimize(s.scores.data());
  }
}
BENCHMARK(gibbs_hundred_sweeps)->Unit(benchmark::kMillisecond);
