#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "churnnet/cdr.hpp"
#include "churnnet/classify.hpp"
#include "churnnet/config.hpp"
#include "churnnet/features.hpp"
#include "churnnet/graph.hpp"
#include "churnnet/metrics.hpp"
#include "churnnet/relational.hpp"
#include "churnnet/stats.hpp"
#include "churnnet/synth.hpp"

namespace churnnet {

enum class Timeframe { short_term, long_term };
const char* to_string(Timeframe t);

// Month bindings of one scoring run. Scores produced at time t estimate
// churn at t+1; CDRN/NLB pre-train on the t-1 network against churn at t.
struct RlTimeline {
  MonthRange pretrain_net;
  MonthRange train_net;
  int pretrain_cv_month;       // labels feeding pre-training class vectors
  int pretrain_outcome_month;  // churn events the pre-training predicts
  int train_label_month;       // known labels seeding collective inference
  int eval_month;              // churn events the scores are judged against
};

// Standard bindings: scores at t = M4 estimating M5. Short-term networks are
// M3 (pre-train) and M4 (train); long-term M1-M3 and M2-M4. `shift` moves the
// whole timeline earlier, e.g. shift = -1 scores M4 for the out-of-time
// training tables.
RlTimeline rl_timeline(Timeframe timeframe, int shift = 0);

struct DatasetSpec {
  std::string name;
  // Either file-backed (cdr csv + optional labels csv) or synthetic.
  std::string cdr_path;
  std::string labels_path;
  std::optional<SynthConfig> synth;
};

struct ExperimentPlan {
  std::vector<DatasetSpec> datasets;
  std::vector<std::string> learners = all_learner_ids();
  std::vector<WeightScheme> rl_schemes{WeightScheme::length, WeightScheme::count};
  std::vector<Timeframe> rl_timeframes{Timeframe::short_term,
                                       Timeframe::long_term};
  Direction rl_direction = Direction::undirected;
  bool rl_decay = true;
  std::vector<FeatureMode> nrc_modes{FeatureMode::network_only,
                                     FeatureMode::rl_only, FeatureMode::all};
  std::vector<std::string> metrics{"lift@0.005", "lift@0.05", "auc", "emp"};

  // architecture grid
  std::vector<Direction> grid_directions{Direction::undirected,
                                         Direction::outgoing,
                                         Direction::incoming};
  std::vector<WeightScheme> grid_schemes{WeightScheme::length,
                                         WeightScheme::count,
                                         WeightScheme::average,
                                         WeightScheme::binary};
  std::vector<bool> grid_decay{false, true};
  std::vector<SegmentSpec> grid_segments = standard_segments();
  std::vector<bool> grid_reciprocal{false, true};
  std::string grid_proxy = "no-nlb";
  std::vector<std::string> grid_metrics{"auc", "lift@0.005"};
  std::size_t grid_max_new_cells = 0;  // 0 = no limit; testing hook

  EmpParams emp;
  CiConfig ci;
  LogisticOptions logistic;
  double oversample_ratio = 0.5;
  double decay_gamma = defaults::kDecayGammaPerWeek;
  std::uint32_t min_call_seconds = kDefaultMinCallSeconds;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = ".";

  std::size_t grid_cell_count() const;
  std::string fingerprint() const;  // hash of everything that shapes results
};

// Plan assembled from config keys (synth.*, learners, grid.*, emp.*, ci.*,
// logistic.*, ...) plus CLI-level overrides.
ExperimentPlan plan_from_config(const Config& config);

struct ReportRow {
  std::string dataset;
  std::string architecture;
  std::string learner;
  std::string timeframe;
  std::string metric;
  double value = 0.0;
  std::string params_hash;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> notices;  // skipped learners etc.

  void write_csv(std::ostream& out) const;
  static EvalReport read_csv(std::istream& in);
  void append(const EvalReport& other);
};

// Dataset resolved into memory: records filtered by the four-second rule,
// churn labels over the full window, per-month churn event vectors.
struct LoadedDataset {
  std::string name;
  CdrStore store;
  ChurnLabels labels;
  std::vector<std::vector<std::uint8_t>> month_churn;  // index 1..6 used
  double prior(int month) const;                       // churn base rate
  std::vector<std::uint8_t> at_risk(int month) const;  // active at month start
};

LoadedDataset load_dataset(const DatasetSpec& spec, const ExperimentPlan& plan);

// Scores one CI-RC learner on the given timeline/architecture. Returns
// nothing when the learner needs a pre-training window the timeline cannot
// supply (a notice is appended instead).
std::optional<ScoreState> score_learner(const LearnerId& id,
                                        const LoadedDataset& data,
                                        const RlTimeline& timeline,
                                        const GraphBuildOptions& net,
                                        const ExperimentPlan& plan,
                                        std::vector<std::string>* notices);

double compute_metric(const std::string& metric, std::span<const double> scores,
                      std::span<const std::uint8_t> labels,
                      const EmpParams& emp_params);

// Benchmarks every learner over timeframes x weight schemes per dataset
// (four score sets each) and evaluates all plan metrics on the prediction
// month over the at-risk base.
EvalReport run_learner_benchmark(const ExperimentPlan& plan);

// Out-of-time logistic models per feature mode (network features only, RL
// scores only, both), evaluated on the prediction month.
EvalReport run_nrc_benchmark(const ExperimentPlan& plan);

// Proxy learner over the full architecture grid with an append-only journal
// in plan.out_dir; interrupted runs resume by cell hash. Emits
// grid_journal.csv, grid_report.csv (sorted, byte-stable) and manifest.json.
EvalReport run_architecture_grid(const ExperimentPlan& plan);

struct StatsSummary {
  std::string json;  // full summary, Table-of-p-values shape
  bool underpowered = false;
};

// Friedman + Nemenyi per metric over the learner report, Kruskal-Wallis for
// the CI-vs-no-CI and RL-vs-NRC groupings, and the soft PASS/FAIL directional
// conclusions. Never throws on underpowered input; the summary says so.
StatsSummary run_stats(const EvalReport& learner_report,
                       const EvalReport& nrc_report,
                       const ExperimentPlan& plan);

}  // namespace churnnet
