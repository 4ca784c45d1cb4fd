#include <doctest.h>

#include <cmath>
#include <sstream>

#include "churnnet/synth.hpp"

using namespace churnnet;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_customers = 2000;
  cfg.churn_rate = 0.05;
  cfg.sparsity = 5e-3;
  cfg.homophily = 0.8;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("generate is byte-identical under a fixed seed") {
  SynthConfig cfg = small_config(42);
  SynthResult a = generate(cfg);
  SynthResult b = generate(cfg);
  std::ostringstream csv_a, csv_b, lab_a, lab_b;
  write_cdr_csv(a.store, csv_a);
  write_cdr_csv(b.store, csv_b);
  write_labels_csv(a.store, a.ground_truth, lab_a);
  write_labels_csv(b.store, b.ground_truth, lab_b);
  CHECK(csv_a.str() == csv_b.str());
  CHECK(lab_a.str() == lab_b.str());
  CHECK_FALSE(csv_a.str().empty());
}

TEST_CASE("different seeds give different data") {
  SynthResult a = generate(small_config(1));
  SynthResult b = generate(small_config(2));
  std::ostringstream csv_a, csv_b;
  write_cdr_csv(a.store, csv_a);
  write_cdr_csv(b.store, csv_b);
  CHECK(csv_a.str() != csv_b.str());
}

TEST_CASE("no churner has activity at or after its churndate") {
  SynthResult r = generate(small_config(7));
  for (const CdrRecord& rec : r.store.records()) {
    for (NodeIndex who : {rec.caller, rec.callee}) {
      if (r.ground_truth.churner[who]) {
        CHECK(rec.start < r.ground_truth.churndate[who]);
      }
    }
  }
}

TEST_CASE("zero churn rate yields no churners") {
  SynthConfig cfg = small_config(9);
  cfg.churn_rate = 0.0;
  SynthResult r = generate(cfg);
  for (NodeIndex i = 0; i < r.store.node_count(); ++i) {
    CHECK_FALSE(r.ground_truth.churner[i]);
  }
}

TEST_CASE("realized churn rate lands near the target") {
  SynthConfig cfg;
  cfg.n_customers = 10000;
  cfg.churn_rate = 0.05;
  cfg.sparsity = 1e-3;
  cfg.homophily = 0.5;
  cfg.seed = 11;
  SynthResult r = generate(cfg);
  SynthDiagnostics d = verify(r.store, r.ground_truth, cfg);
  for (double rate : d.monthly_churn_rate) {
    CHECK(rate >= 0.04);
    CHECK(rate <= 0.06);
  }
}

TEST_CASE("realized sparsity lands within the diagnostic tolerance") {
  SynthConfig cfg;
  cfg.n_customers = 10000;
  cfg.churn_rate = 0.05;
  cfg.sparsity = 1e-3;
  cfg.seed = 13;
  SynthResult r = generate(cfg);
  SynthDiagnostics d = verify(r.store, r.ground_truth, cfg);
  CHECK(std::fabs(d.realized_sparsity - cfg.sparsity) / cfg.sparsity < 0.20);
}

TEST_CASE("extreme homophily shows up as a large neighbor-churn lift") {
  SynthConfig cfg = small_config(17);
  cfg.homophily = 1.0;
  SynthResult r = generate(cfg);
  SynthDiagnostics d = verify(r.store, r.ground_truth, cfg);
  CHECK(d.homophily_lift > 2.0);

  SynthConfig flat = small_config(17);
  flat.homophily = 0.0;
  SynthResult rf = generate(flat);
  SynthDiagnostics df = verify(rf.store, rf.ground_truth, flat);
  CHECK(df.homophily_lift < d.homophily_lift);
}

TEST_CASE("generator output parses back through the cdr pipeline") {
  SynthResult r = generate(small_config(19));
  std::ostringstream csv;
  write_cdr_csv(r.store, csv);
  std::istringstream in(csv.str());
  ParseResult parsed = parse_cdr(in, CsvSchema{}, 0);
  CHECK(parsed.malformed_rows == 0);
  CHECK(parsed.store.records().size() == r.store.records().size());
}

TEST_CASE("unsatisfiable sparsity is a configuration error") {
  SynthConfig cfg;
  cfg.n_customers = 100;
  cfg.sparsity = 1e-6;  // < 1 tie for 100 customers
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.n_customers = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.churn_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.homophily = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
