#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "churnnet/cdr.hpp"

namespace churnnet {

// Seeded synthetic CDR generator. Stands in for proprietary operator data:
// a power-law social graph, monthly churn with one-hop contagion at strength
// h, and call events with configurable temporal mix. A fixed seed produces
// byte-identical exports.
struct SynthConfig {
  std::size_t n_customers = 10000;
  int months = kMonthCount;
  double churn_rate = 0.05;     // per month, of still-active customers
  double sparsity = 1e-3;       // fraction of nonzero ordered pairs
  double homophily = 0.8;       // P(churner propagates to a neighbor next month)
  double degree_exponent = 2.5; // power-law weight for the tie sampler
  double calls_per_tie_month = 4.0;
  double mean_duration_s = 90.0;
  double short_call_fraction = 0.05;  // sub-4s accidental calls
  std::array<double, 3> tod_mix{0.45, 0.40, 0.15};  // day, evening, night
  double weekend_fraction = 0.25;
  std::int64_t epoch = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthResult {
  CdrStore store;
  ChurnLabels ground_truth;
};

SynthResult generate(const SynthConfig& config);

struct SynthDiagnostics {
  std::vector<double> monthly_churn_rate;  // realized, per month
  double target_churn_rate;
  double realized_sparsity;  // undirected tie graph over the first month
  double target_sparsity;
  double mean_degree;
  std::size_t max_degree;
  // P(churn in m+1 | neighbor churned in m) / P(churn in m+1), pooled
  double homophily_lift;
  std::vector<std::string> deviations;  // targets missed by > 20% relative

  std::string describe() const;
};

SynthDiagnostics verify(const CdrStore& store, const ChurnLabels& truth,
                        const SynthConfig& config);

}  // namespace churnnet
