#include "churnnet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "churnnet/csv.hpp"
#include "churnnet/mathx.hpp"
#include "churnnet/rng.hpp"

namespace churnnet {

const char* to_string(Timeframe t) {
  return t == Timeframe::short_term ? "short" : "long";
}

RlTimeline rl_timeline(Timeframe timeframe, int shift) {
  RlTimeline t;
  if (timeframe == Timeframe::short_term) {
    t.pretrain_net = {3 + shift, 3 + shift};
    t.train_net = {4 + shift, 4 + shift};
  } else {
    t.pretrain_net = {1 + shift, 3 + shift};
    t.train_net = {2 + shift, 4 + shift};
  }
  t.pretrain_cv_month = 3 + shift;
  t.pretrain_outcome_month = 4 + shift;
  t.train_label_month = 4 + shift;
  t.eval_month = 5 + shift;
  return t;
}

namespace {

bool month_range_valid(MonthRange r) {
  return r.first >= 1 && r.last <= kMonthCount && r.first <= r.last;
}

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  int n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::size_t ExperimentPlan::grid_cell_count() const {
  return grid_directions.size() * grid_schemes.size() * grid_decay.size() *
         grid_segments.size() * grid_reciprocal.size();
}

std::string ExperimentPlan::fingerprint() const {
  std::ostringstream s;
  s << "seed=" << seed << ";min_call=" << min_call_seconds
    << ";oversample=" << oversample_ratio << ";gamma=" << decay_gamma
    << ";emp=" << emp.describe() << ";ci=" << to_string(ci.method) << ','
    << ci.gibbs_burn_in << ',' << ci.gibbs_max_iter << ',' << ci.ic_max_iter
    << ',' << ci.score_max_iter << ',' << ci.threshold << ',' << ci.rlsa_k
    << ',' << ci.rlsa_alpha << ',' << ci.spa_diffusion
    << ";logistic=" << logistic.l2 << ',' << logistic.max_iter << ','
    << logistic.tol << ";proxy=" << grid_proxy
    << ";dir=" << to_string(rl_direction) << ";decay=" << rl_decay;
  s << ";learners=";
  for (const std::string& l : learners) s << l << '+';
  s << ";datasets=";
  for (const DatasetSpec& d : datasets) {
    s << d.name;
    if (d.synth) s << '(' << d.synth->seed << ',' << d.synth->n_customers << ')';
    s << '+';
  }
  return hash_hex(rng::fnv1a(s.str()));
}

ExperimentPlan plan_from_config(const Config& cfg) {
  ExperimentPlan plan;
  plan.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  plan.workers = static_cast<int>(cfg.get_int("workers", 1));
  plan.out_dir = cfg.get_string("out", ".");
  plan.min_call_seconds = static_cast<std::uint32_t>(
      cfg.get_int("cdr.min_call_seconds", kDefaultMinCallSeconds));
  plan.oversample_ratio = cfg.get_double("nrc.oversample_ratio", 0.5);
  plan.decay_gamma =
      cfg.get_double("graph.decay_gamma", defaults::kDecayGammaPerWeek);

  if (cfg.has("learners")) {
    plan.learners = cfg.get_list("learners", plan.learners);
    for (const std::string& l : plan.learners) parse_learner_id(l);
  }
  if (cfg.has("metrics")) plan.metrics = cfg.get_list("metrics", plan.metrics);

  plan.rl_direction = direction_from_string(
      cfg.get_string("rl.direction", "undirected"));
  plan.rl_decay = cfg.get_bool("rl.decay", true);
  if (cfg.has("rl.schemes")) {
    plan.rl_schemes.clear();
    for (const std::string& s : cfg.get_list("rl.schemes", {})) {
      plan.rl_schemes.push_back(scheme_from_string(s));
    }
  }
  if (cfg.has("rl.timeframes")) {
    plan.rl_timeframes.clear();
    for (const std::string& s : cfg.get_list("rl.timeframes", {})) {
      if (s == "short") plan.rl_timeframes.push_back(Timeframe::short_term);
      else if (s == "long") plan.rl_timeframes.push_back(Timeframe::long_term);
      else throw std::invalid_argument("unknown timeframe: " + s);
    }
  }
  if (cfg.has("nrc.modes")) {
    plan.nrc_modes.clear();
    for (const std::string& s : cfg.get_list("nrc.modes", {})) {
      plan.nrc_modes.push_back(feature_mode_from_string(s));
    }
  }

  if (cfg.has("grid.directions")) {
    plan.grid_directions.clear();
    for (const std::string& s : cfg.get_list("grid.directions", {})) {
      plan.grid_directions.push_back(direction_from_string(s));
    }
  }
  if (cfg.has("grid.schemes")) {
    plan.grid_schemes.clear();
    for (const std::string& s : cfg.get_list("grid.schemes", {})) {
      plan.grid_schemes.push_back(scheme_from_string(s));
    }
  }
  if (cfg.has("grid.decay")) {
    plan.grid_decay.clear();
    for (const std::string& s : cfg.get_list("grid.decay", {})) {
      plan.grid_decay.push_back(s == "on" || s == "true" || s == "1");
    }
  }
  if (cfg.has("grid.segments")) {
    std::vector<SegmentSpec> all = standard_segments();
    std::vector<SegmentSpec> chosen;
    for (const std::string& name : cfg.get_list("grid.segments", {})) {
      bool found = false;
      for (const SegmentSpec& s : all) {
        if (s.name == name) {
          chosen.push_back(s);
          found = true;
          break;
        }
      }
      if (!found) throw std::invalid_argument("unknown segment: " + name);
    }
    plan.grid_segments = std::move(chosen);
  }
  if (cfg.has("grid.reciprocal")) {
    plan.grid_reciprocal.clear();
    for (const std::string& s : cfg.get_list("grid.reciprocal", {})) {
      plan.grid_reciprocal.push_back(s == "on" || s == "true" || s == "1");
    }
  }
  plan.grid_proxy = cfg.get_string("grid.proxy", "no-nlb");
  parse_learner_id(plan.grid_proxy);
  if (cfg.has("grid.metrics")) {
    plan.grid_metrics = cfg.get_list("grid.metrics", plan.grid_metrics);
  }

  plan.emp.clv = cfg.get_double("emp.clv", plan.emp.clv);
  plan.emp.delta = cfg.get_double("emp.delta", plan.emp.delta);
  plan.emp.phi = cfg.get_double("emp.phi", plan.emp.phi);
  plan.emp.beta_a = cfg.get_double("emp.beta_a", plan.emp.beta_a);
  plan.emp.beta_b = cfg.get_double("emp.beta_b", plan.emp.beta_b);

  plan.ci.threshold = cfg.get_double("ci.threshold", plan.ci.threshold);
  plan.ci.gibbs_burn_in =
      static_cast<int>(cfg.get_int("ci.gibbs_burn_in", plan.ci.gibbs_burn_in));
  plan.ci.gibbs_max_iter =
      static_cast<int>(cfg.get_int("ci.gibbs_max_iter", plan.ci.gibbs_max_iter));
  plan.ci.ic_max_iter =
      static_cast<int>(cfg.get_int("ci.ic_max_iter", plan.ci.ic_max_iter));
  plan.ci.score_max_iter =
      static_cast<int>(cfg.get_int("ci.score_max_iter", plan.ci.score_max_iter));
  plan.ci.rlsa_k = cfg.get_double("ci.rlsa_k", plan.ci.rlsa_k);
  plan.ci.rlsa_alpha = cfg.get_double("ci.rlsa_alpha", plan.ci.rlsa_alpha);
  plan.ci.spa_diffusion = cfg.get_double("ci.spa_diffusion", plan.ci.spa_diffusion);

  plan.logistic.l2 = cfg.get_double("logistic.l2", plan.logistic.l2);
  plan.logistic.max_iter =
      static_cast<int>(cfg.get_int("logistic.max_iter", plan.logistic.max_iter));
  plan.logistic.tol = cfg.get_double("logistic.tol", plan.logistic.tol);
  plan.logistic.coef_bound =
      cfg.get_double("logistic.coef_bound", plan.logistic.coef_bound);

  // datasets: "datasets" lists names; each name has either <name>.cdr (a file
  // path) or synth parameters under <name>.*
  std::vector<std::string> names = cfg.get_list("datasets", {});
  for (const std::string& name : names) {
    DatasetSpec spec;
    spec.name = name;
    spec.cdr_path = cfg.get_string(name + ".cdr", "");
    spec.labels_path = cfg.get_string(name + ".labels", "");
    if (spec.cdr_path.empty()) {
      SynthConfig sc;
      sc.n_customers = static_cast<std::size_t>(
          cfg.get_int(name + ".customers", cfg.get_int("synth.customers", 10000)));
      sc.churn_rate =
          cfg.get_double(name + ".churn_rate", cfg.get_double("synth.churn_rate", 0.05));
      sc.sparsity =
          cfg.get_double(name + ".sparsity", cfg.get_double("synth.sparsity", 1e-3));
      sc.homophily =
          cfg.get_double(name + ".homophily", cfg.get_double("synth.homophily", 0.8));
      sc.degree_exponent = cfg.get_double(
          name + ".degree_exponent", cfg.get_double("synth.degree_exponent", 2.5));
      sc.calls_per_tie_month =
          cfg.get_double(name + ".calls_per_tie_month",
                         cfg.get_double("synth.calls_per_tie_month", 4.0));
      sc.seed = static_cast<std::uint64_t>(
          cfg.get_int(name + ".seed", static_cast<std::int64_t>(
                                          rng::derive_seed(plan.seed, name))));
      spec.synth = sc;
    }
    plan.datasets.push_back(std::move(spec));
  }
  return plan;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "dataset,architecture,learner,timeframe,metric,value,params_hash\n";
  for (const ReportRow& r : rows) {
    out << csv::escape(r.dataset) << ',' << csv::escape(r.architecture) << ','
        << csv::escape(r.learner) << ',' << csv::escape(r.timeframe) << ','
        << csv::escape(r.metric) << ',' << csv::format_double(r.value) << ','
        << r.params_hash << '\n';
  }
}

EvalReport EvalReport::read_csv(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->size() != 7 || (*header)[0] != "dataset") {
    throw std::invalid_argument("report csv: bad header");
  }
  EvalReport report;
  while (auto row = reader.next()) {
    if (row->size() != 7) throw std::invalid_argument("report csv: bad row");
    ReportRow r;
    r.dataset = (*row)[0];
    r.architecture = (*row)[1];
    r.learner = (*row)[2];
    r.timeframe = (*row)[3];
    r.metric = (*row)[4];
    r.value = std::stod((*row)[5]);
    r.params_hash = (*row)[6];
    report.rows.push_back(std::move(r));
  }
  return report;
}

void EvalReport::append(const EvalReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  notices.insert(notices.end(), other.notices.begin(), other.notices.end());
}

double LoadedDataset::prior(int month) const {
  const auto& v = month_churn[month];
  double sum = 0.0;
  for (std::uint8_t l : v) sum += l ? 1.0 : 0.0;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

std::vector<std::uint8_t> LoadedDataset::at_risk(int month) const {
  std::int64_t begin = store.month_span(month).begin;
  std::vector<std::uint8_t> out(store.node_count(), 1);
  for (NodeIndex i = 0; i < store.node_count(); ++i) {
    if (labels.churned_before(i, begin)) out[i] = 0;
  }
  return out;
}

LoadedDataset load_dataset(const DatasetSpec& spec, const ExperimentPlan& plan) {
  std::optional<CdrStore> store;
  if (spec.synth) {
    SynthResult synth = generate(*spec.synth);
    store.emplace(std::move(synth.store));
  } else {
    std::ifstream in(spec.cdr_path);
    if (!in) throw std::runtime_error("cannot open cdr file: " + spec.cdr_path);
    ParseResult parsed = parse_cdr(in, CsvSchema{}, 0);
    store.emplace(std::move(parsed.store));
  }
  CdrStore filtered = filter_short_calls(*store, plan.min_call_seconds);
  ChurnLabels labels;
  if (!spec.labels_path.empty()) {
    std::ifstream in(spec.labels_path);
    if (!in) throw std::runtime_error("cannot open labels: " + spec.labels_path);
    labels = read_labels_csv(filtered, in);
  } else {
    labels = label_churn(filtered, filtered.observation_window());
  }

  LoadedDataset data{spec.name, std::move(filtered), std::move(labels), {}};
  data.month_churn.resize(kMonthCount + 1);
  for (int m = 1; m <= kMonthCount; ++m) {
    TimeInterval span = data.store.month_span(m);
    std::vector<std::uint8_t> v(data.store.node_count(), 0);
    for (NodeIndex i = 0; i < data.store.node_count(); ++i) {
      if (data.labels.churned_in(i, span)) v[i] = 1;
    }
    data.month_churn[m] = std::move(v);
  }
  return data;
}

namespace {

// Shared per-(timeframe, scheme) scoring state for a batch of learners.
struct ScoringContext {
  CallGraph train_graph;
  std::optional<CallGraph> pretrain_graph;
  LabelState init;
  double prior = 0.0;
  std::optional<ReferenceVector> rv;
  std::optional<NlbModel> nlb_model;
  std::string pretrain_failure;  // notice when cdrn/nlb cannot pre-train
};

ScoringContext make_context(const LoadedDataset& data, const RlTimeline& timeline,
                            const GraphBuildOptions& net,
                            const ExperimentPlan& plan, bool want_pretrain) {
  ScoringContext ctx;
  ctx.train_graph = build_graph(data.store, timeline.train_net, net);
  ctx.init.labels = data.month_churn[timeline.train_label_month];
  ctx.prior = ctx.init.prior();
  if (!want_pretrain) return ctx;
  if (!month_range_valid(timeline.pretrain_net) ||
      timeline.pretrain_cv_month < 1) {
    ctx.pretrain_failure = "pre-training window outside M1..M6";
    return ctx;
  }
  ctx.pretrain_graph = build_graph(data.store, timeline.pretrain_net, net);
  LabelState cv_labels{data.month_churn[timeline.pretrain_cv_month]};
  std::vector<double> cv_scores = cv_labels.to_scores();
  const auto& outcome = data.month_churn[timeline.pretrain_outcome_month];
  try {
    ctx.rv = cdrn_pretrain(*ctx.pretrain_graph, cv_scores, outcome);
  } catch (const std::exception& e) {
    ctx.pretrain_failure = e.what();
  }
  try {
    ctx.nlb_model =
        nlb_pretrain(*ctx.pretrain_graph, cv_scores, outcome, plan.logistic);
  } catch (const std::exception& e) {
    ctx.pretrain_failure = e.what();
  }
  return ctx;
}

std::unique_ptr<RelationalClassifier> make_rc(const LearnerId& id,
                                              const ScoringContext& ctx,
                                              const ExperimentPlan& plan) {
  if (id.rc == "wvrn") return std::make_unique<Wvrn>(ctx.prior);
  if (id.rc == "sparc") {
    return std::make_unique<SpaRc>(plan.ci.spa_diffusion, ctx.prior);
  }
  if (id.rc == "cdrn") {
    if (!ctx.rv) return nullptr;
    return std::make_unique<Cdrn>(*ctx.rv, ctx.prior);
  }
  if (id.rc == "nlb") {
    if (!ctx.nlb_model) return nullptr;
    return std::make_unique<Nlb>(*ctx.nlb_model, ctx.prior);
  }
  throw std::invalid_argument("unknown relational classifier: " + id.rc);
}

ScoreState run_learner(const LearnerId& id, const RelationalClassifier& rc,
                       const ScoringContext& ctx, const ExperimentPlan& plan,
                       std::uint64_t seed) {
  CiConfig cfg = plan.ci;
  cfg.method = id.ci;
  cfg.seed = seed;
  return run_ci(rc, ctx.train_graph, ctx.init, cfg);
}

struct Restricted {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Restricted restrict_to(std::span<const double> scores,
                       std::span<const std::uint8_t> labels,
                       std::span<const std::uint8_t> mask) {
  Restricted out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) {
      out.scores.push_back(scores[i]);
      out.labels.push_back(labels[i]);
    }
  }
  return out;
}

std::string architecture_string(Direction dir, WeightScheme scheme, bool decay,
                                const std::string& segment, bool reciprocal) {
  std::string s = std::string(to_string(dir)) + "|" + to_string(scheme) +
                  "|decay=" + (decay ? "on" : "off") + "|seg=" + segment +
                  "|recip=" + (reciprocal ? "on" : "off");
  return s;
}

}  // namespace

std::optional<ScoreState> score_learner(const LearnerId& id,
                                        const LoadedDataset& data,
                                        const RlTimeline& timeline,
                                        const GraphBuildOptions& net,
                                        const ExperimentPlan& plan,
                                        std::vector<std::string>* notices) {
  bool needs_pretrain = id.rc == "cdrn" || id.rc == "nlb";
  if (!month_range_valid(timeline.train_net) || timeline.eval_month > kMonthCount ||
      timeline.train_label_month < 1) {
    if (notices) notices->push_back(id.str() + ": timeline outside M1..M6");
    return std::nullopt;
  }
  ScoringContext ctx = make_context(data, timeline, net, plan, needs_pretrain);
  std::unique_ptr<RelationalClassifier> rc = make_rc(id, ctx, plan);
  if (!rc) {
    if (notices) {
      notices->push_back(id.str() + " skipped: " + ctx.pretrain_failure);
    }
    return std::nullopt;
  }
  std::uint64_t seed = rng::derive_seed(
      plan.seed, data.name + "|" + id.str() + "|" +
                     std::to_string(timeline.train_label_month));
  return run_learner(id, *rc, ctx, plan, seed);
}

double compute_metric(const std::string& metric, std::span<const double> scores,
                      std::span<const std::uint8_t> labels,
                      const EmpParams& emp_params) {
  if (metric.rfind("lift@", 0) == 0) {
    double f = std::stod(metric.substr(5));
    return lift(scores, labels, f);
  }
  if (metric == "auc") return auc(scores, labels);
  if (metric == "emp") return emp(scores, labels, emp_params).emp;
  if (metric == "mp") return mp(scores, labels, emp_params).profit;
  throw std::invalid_argument("unknown metric: " + metric);
}

EvalReport run_learner_benchmark(const ExperimentPlan& plan) {
  std::vector<LoadedDataset> datasets;
  datasets.reserve(plan.datasets.size());
  for (const DatasetSpec& spec : plan.datasets) {
    datasets.push_back(load_dataset(spec, plan));
  }

  struct Job {
    std::size_t dataset;
    Timeframe timeframe;
    WeightScheme scheme;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (Timeframe tf : plan.rl_timeframes) {
      for (WeightScheme ws : plan.rl_schemes) {
        jobs.push_back({d, tf, ws});
      }
    }
  }

  std::vector<EvalReport> partial(jobs.size());
  parallel_for(jobs.size(), plan.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const LoadedDataset& data = datasets[job.dataset];
    RlTimeline timeline = rl_timeline(job.timeframe);
    GraphBuildOptions net;
    net.direction = plan.rl_direction;
    net.scheme = job.scheme;
    net.decay = DecaySpec{plan.rl_decay, plan.decay_gamma};

    EvalReport& out = partial[j];
    ScoringContext ctx = make_context(data, timeline, net, plan, true);
    std::vector<std::uint8_t> risk = data.at_risk(timeline.eval_month);
    const auto& eval_labels = data.month_churn[timeline.eval_month];
    std::string arch = architecture_string(net.direction, net.scheme,
                                           net.decay.enabled, "whole", false);

    for (const std::string& learner : plan.learners) {
      LearnerId id = parse_learner_id(learner);
      std::unique_ptr<RelationalClassifier> rc = make_rc(id, ctx, plan);
      if (!rc) {
        out.notices.push_back(data.name + "/" + arch + "/" + learner +
                              " skipped: " + ctx.pretrain_failure);
        continue;
      }
      std::uint64_t seed = rng::derive_seed(
          plan.seed, data.name + "|" + learner + "|" + to_string(job.timeframe) +
                         "|" + to_string(job.scheme));
      ScoreState scores = run_learner(id, *rc, ctx, plan, seed);
      Restricted r = restrict_to(scores.scores, eval_labels, risk);
      for (const std::string& metric : plan.metrics) {
        try {
          double value = compute_metric(metric, r.scores, r.labels, plan.emp);
          ReportRow row;
          row.dataset = data.name;
          row.architecture = arch;
          row.learner = learner;
          row.timeframe = to_string(job.timeframe);
          row.metric = metric;
          row.value = value;
          row.params_hash = hash_hex(rng::fnv1a(
              plan.fingerprint() + row.dataset + row.architecture + row.learner +
              row.timeframe + row.metric));
          out.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          out.notices.push_back(data.name + "/" + learner + "/" + metric +
                                " failed: " + e.what());
        }
      }
    }
  });

  EvalReport report;
  for (const EvalReport& p : partial) report.append(p);
  return report;
}

namespace {

// Relational-learner score columns for the NRC tables, one per learner.
std::vector<RlScoreColumn> rl_feature_scores(const LoadedDataset& data,
                                             const ExperimentPlan& plan,
                                             int shift,
                                             std::vector<std::string>* notices) {
  std::vector<RlScoreColumn> cols;
  RlTimeline timeline = rl_timeline(Timeframe::short_term, shift);
  GraphBuildOptions net;
  net.direction = plan.rl_direction;
  net.scheme = plan.rl_schemes.empty() ? WeightScheme::length : plan.rl_schemes[0];
  net.decay = DecaySpec{plan.rl_decay, plan.decay_gamma};
  ScoringContext ctx = make_context(data, timeline, net, plan, true);
  for (const std::string& learner : plan.learners) {
    LearnerId id = parse_learner_id(learner);
    std::unique_ptr<RelationalClassifier> rc = make_rc(id, ctx, plan);
    if (!rc) {
      if (notices) {
        notices->push_back(data.name + "/nrc rl-features/" + learner +
                           " skipped: " + ctx.pretrain_failure);
      }
      continue;
    }
    std::uint64_t seed = rng::derive_seed(
        plan.seed,
        data.name + "|nrc|" + learner + "|shift" + std::to_string(shift));
    ScoreState s = run_learner(id, *rc, ctx, plan, seed);
    cols.push_back(RlScoreColumn{learner, std::move(s.scores)});
  }
  return cols;
}

FeatureTable nrc_feature_table(const LoadedDataset& data,
                               const ExperimentPlan& plan, MonthRange window,
                               int label_month,
                               std::span<const RlScoreColumn> rl_cols,
                               FeatureMode mode,
                               std::span<const std::uint8_t> at_risk) {
  GraphBuildOptions net;
  net.direction = Direction::undirected;
  net.scheme = plan.rl_schemes.empty() ? WeightScheme::length : plan.rl_schemes[0];
  net.decay = DecaySpec{plan.rl_decay, plan.decay_gamma};
  CallGraph g = build_graph(data.store, window, net);
  const auto& link_labels = data.month_churn[label_month];

  NetworkFeatureBlock block;
  block.degree = degree_features(g, link_labels);
  block.triangles = triangle_features(g, link_labels);
  block.transitivity = transitivity(g);
  block.link = link_based(g, link_labels);
  TimeInterval span = data.store.span(window);
  block.rfm = rfm_features(data.store.months(window), data.store.node_count(),
                           span.begin, span.end);
  FeatureTable table = assemble(block, rl_cols, mode);

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < at_risk.size(); ++i) {
    if (at_risk[i]) keep.push_back(i);
  }
  return table.subset(keep);
}

}  // namespace

EvalReport run_nrc_benchmark(const ExperimentPlan& plan) {
  std::vector<LoadedDataset> datasets;
  for (const DatasetSpec& spec : plan.datasets) {
    datasets.push_back(load_dataset(spec, plan));
  }

  struct Job {
    std::size_t dataset;
    FeatureMode mode;
  };
  std::vector<Job> jobs;
  // rl score columns shared across modes, computed once per dataset
  std::vector<std::vector<RlScoreColumn>> train_cols(datasets.size());
  std::vector<std::vector<RlScoreColumn>> test_cols(datasets.size());
  std::vector<std::string> score_notices;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    bool need_rl = false;
    for (FeatureMode m : plan.nrc_modes) {
      if (m != FeatureMode::network_only) need_rl = true;
    }
    if (need_rl) {
      train_cols[d] = rl_feature_scores(datasets[d], plan, -1, &score_notices);
      test_cols[d] = rl_feature_scores(datasets[d], plan, 0, &score_notices);
      // keep only learners scored on both sides so columns line up
      auto has = [](const std::vector<RlScoreColumn>& v, const std::string& id) {
        for (const auto& c : v) {
          if (c.learner == id) return true;
        }
        return false;
      };
      std::erase_if(train_cols[d], [&](const RlScoreColumn& c) {
        return !has(test_cols[d], c.learner);
      });
      std::erase_if(test_cols[d], [&](const RlScoreColumn& c) {
        return !has(train_cols[d], c.learner);
      });
    }
    for (FeatureMode m : plan.nrc_modes) jobs.push_back({d, m});
  }

  std::vector<EvalReport> partial(jobs.size());
  parallel_for(jobs.size(), plan.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const LoadedDataset& data = datasets[job.dataset];
    EvalReport& out = partial[j];

    OotOptions opts;
    opts.oversample_ratio = plan.oversample_ratio;
    opts.seed = rng::derive_seed(plan.seed, data.name + "|oot|" +
                                                to_string(job.mode));
    opts.logistic = plan.logistic;

    std::vector<std::uint8_t> risk_train = data.at_risk(opts.split.train_label_month);
    std::vector<std::uint8_t> risk_test = data.at_risk(opts.split.test_label_month);

    FeatureBuilder features = [&](MonthRange window, int label_month) {
      bool train_side = label_month == opts.split.train_features.last;
      return nrc_feature_table(
          data, plan, window, label_month,
          train_side ? train_cols[job.dataset] : test_cols[job.dataset],
          job.mode, train_side ? risk_train : risk_test);
    };
    LabelProvider labels = [&](int month) {
      const auto& all = data.month_churn[month];
      const auto& mask =
          month == opts.split.train_label_month ? risk_train : risk_test;
      std::vector<std::uint8_t> subset;
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (mask[i]) subset.push_back(all[i]);
      }
      return subset;
    };

    LogisticClassifier classifier(plan.logistic);
    std::string learner = std::string("log-") +
                          (job.mode == FeatureMode::network_only ? "no"
                           : job.mode == FeatureMode::rl_only    ? "rl"
                                                                 : "all");
    std::string arch = "oot|" + architecture_string(Direction::undirected,
                                                    plan.rl_schemes.empty()
                                                        ? WeightScheme::length
                                                        : plan.rl_schemes[0],
                                                    plan.rl_decay, "whole", false);
    try {
      OotResult result = run_oot(data.store, features, labels, classifier, opts);
      for (const std::string& metric : plan.metrics) {
        try {
          double value = compute_metric(metric, result.test_scores,
                                        result.test_labels, plan.emp);
          ReportRow row;
          row.dataset = data.name;
          row.architecture = arch;
          row.learner = learner;
          row.timeframe = "oot";
          row.metric = metric;
          row.value = value;
          row.params_hash = hash_hex(rng::fnv1a(
              plan.fingerprint() + row.dataset + row.architecture + row.learner +
              row.timeframe + row.metric));
          out.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          out.notices.push_back(data.name + "/" + learner + "/" + metric +
                                " failed: " + e.what());
        }
      }
      if (!result.model.converged) {
        out.notices.push_back(data.name + "/" + learner +
                              ": logistic fit did not converge");
      }
    } catch (const std::exception& e) {
      out.notices.push_back(data.name + "/" + learner + " failed: " + e.what());
    }
  });

  EvalReport report;
  report.notices = std::move(score_notices);
  for (const EvalReport& p : partial) report.append(p);
  return report;
}

namespace {

struct GridCell {
  Direction direction;
  WeightScheme scheme;
  bool decay;
  SegmentSpec segment;
  bool reciprocal;
  std::string architecture;
  std::string hash;
};

std::vector<GridCell> enumerate_cells(const ExperimentPlan& plan,
                                      const std::string& dataset) {
  std::vector<GridCell> cells;
  for (Direction dir : plan.grid_directions) {
    for (WeightScheme ws : plan.grid_schemes) {
      for (bool decay : plan.grid_decay) {
        for (const SegmentSpec& seg : plan.grid_segments) {
          for (bool recip : plan.grid_reciprocal) {
            GridCell cell{dir, ws, decay, seg, recip, "", ""};
            cell.architecture =
                architecture_string(dir, ws, decay, seg.name, recip);
            cell.hash = hash_hex(rng::fnv1a(plan.fingerprint() + "|" + dataset +
                                            "|" + cell.architecture + "|" +
                                            plan.grid_proxy));
            cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  return cells;
}

// journal line: hash,architecture,status,<one value column per grid metric>
struct JournalEntry {
  std::string status;
  std::vector<std::string> values;  // value text, kept verbatim
};

std::map<std::string, JournalEntry> read_journal(const std::string& path,
                                                 std::size_t metric_count) {
  std::map<std::string, JournalEntry> done;
  std::ifstream in(path, std::ios::binary);
  if (!in) return done;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // partial tail line from a kill
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty() || line.rfind("hash,", 0) == 0) continue;
    std::vector<std::string> fields = csv::split_line(line);
    if (fields.size() != 3 + metric_count) continue;  // malformed
    JournalEntry entry;
    entry.status = fields[2];
    for (std::size_t k = 0; k < metric_count; ++k) {
      entry.values.push_back(fields[3 + k]);
    }
    done.emplace(fields[0], std::move(entry));
  }
  return done;
}

}  // namespace

EvalReport run_architecture_grid(const ExperimentPlan& plan) {
  if (plan.datasets.empty()) {
    throw std::invalid_argument("grid: plan has no dataset");
  }
  LoadedDataset data = load_dataset(plan.datasets[0], plan);
  LearnerId proxy = parse_learner_id(plan.grid_proxy);
  RlTimeline timeline = rl_timeline(Timeframe::short_term);
  std::vector<std::uint8_t> risk = data.at_risk(timeline.eval_month);
  const auto& eval_labels = data.month_churn[timeline.eval_month];

  std::vector<GridCell> cells = enumerate_cells(plan, data.name);
  std::filesystem::create_directories(plan.out_dir);
  std::string journal_path = plan.out_dir + "/grid_journal.csv";
  std::map<std::string, JournalEntry> done =
      read_journal(journal_path, plan.grid_metrics.size());

  std::ofstream journal(journal_path, std::ios::app);
  if (!journal) throw std::runtime_error("grid: cannot open journal");
  if (done.empty()) {
    journal << "hash,architecture,status";
    for (const std::string& m : plan.grid_metrics) journal << ',' << m;
    journal << '\n';
    journal.flush();
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!done.count(cells[i].hash)) pending.push_back(i);
  }
  if (plan.grid_max_new_cells > 0 && pending.size() > plan.grid_max_new_cells) {
    pending.resize(plan.grid_max_new_cells);
  }

  std::mutex journal_mutex;
  parallel_for(pending.size(), plan.workers, [&](std::size_t p) {
    const GridCell& cell = cells[pending[p]];
    GraphBuildOptions net;
    net.direction = cell.direction;
    net.scheme = cell.scheme;
    net.decay = DecaySpec{cell.decay, plan.decay_gamma};
    net.segment = cell.segment;
    net.reciprocal_only = cell.reciprocal;

    JournalEntry entry;
    try {
      ScoringContext ctx =
          make_context(data, timeline, net, plan,
                       proxy.rc == "cdrn" || proxy.rc == "nlb");
      std::unique_ptr<RelationalClassifier> rc = make_rc(proxy, ctx, plan);
      if (!rc || ctx.train_graph.edge_count() == 0) {
        entry.status = "degenerate";
        entry.values.assign(plan.grid_metrics.size(), "");
      } else {
        std::uint64_t seed =
            rng::derive_seed(plan.seed, data.name + "|grid|" + cell.hash);
        ScoreState scores = run_learner(proxy, *rc, ctx, plan, seed);
        Restricted r = restrict_to(scores.scores, eval_labels, risk);
        entry.status = "ok";
        for (const std::string& metric : plan.grid_metrics) {
          entry.values.push_back(csv::format_double(
              compute_metric(metric, r.scores, r.labels, plan.emp)));
        }
      }
    } catch (const std::exception&) {
      entry.status = "degenerate";
      entry.values.assign(plan.grid_metrics.size(), "");
    }

    std::lock_guard<std::mutex> lock(journal_mutex);
    journal << cell.hash << ',' << csv::escape(cell.architecture) << ','
            << entry.status;
    for (const std::string& v : entry.values) journal << ',' << v;
    journal << '\n';
    journal.flush();
  });
  journal.close();

  // canonical report in enumeration order, values verbatim from the journal
  done = read_journal(journal_path, plan.grid_metrics.size());
  EvalReport report;
  std::ofstream report_csv(plan.out_dir + "/grid_report.csv", std::ios::binary);
  report_csv << "dataset,architecture,learner,timeframe,metric,value,params_hash\n";
  std::size_t completed = 0;
  for (const GridCell& cell : cells) {
    auto it = done.find(cell.hash);
    if (it == done.end()) continue;
    ++completed;
    const JournalEntry& entry = it->second;
    if (entry.status != "ok") {
      report_csv << csv::escape(data.name) << ','
                 << csv::escape(cell.architecture) << ','
                 << csv::escape(plan.grid_proxy) << ",short,degenerate,1,"
                 << cell.hash << '\n';
      ReportRow row{data.name, cell.architecture, plan.grid_proxy,
                    "short",   "degenerate",      1.0,
                    cell.hash};
      report.rows.push_back(std::move(row));
      continue;
    }
    for (std::size_t k = 0; k < plan.grid_metrics.size(); ++k) {
      report_csv << csv::escape(data.name) << ','
                 << csv::escape(cell.architecture) << ','
                 << csv::escape(plan.grid_proxy) << ",short,"
                 << csv::escape(plan.grid_metrics[k]) << ',' << entry.values[k]
                 << ',' << cell.hash << '\n';
      ReportRow row{data.name,           cell.architecture,
                    plan.grid_proxy,     "short",
                    plan.grid_metrics[k], std::stod(entry.values[k]),
                    cell.hash};
      report.rows.push_back(std::move(row));
    }
  }
  report_csv.close();

  nlohmann::json manifest;
  manifest["plan_fingerprint"] = plan.fingerprint();
  manifest["dataset"] = data.name;
  manifest["proxy"] = plan.grid_proxy;
  manifest["cells"] = cells.size();
  manifest["completed"] = completed;
  manifest["metrics"] = plan.grid_metrics;
  manifest["emp_params"] = plan.emp.describe();
  std::ofstream manifest_out(plan.out_dir + "/manifest.json", std::ios::binary);
  manifest_out << manifest.dump(2) << '\n';
  return report;
}

namespace {

struct MatrixBundle {
  RankMatrix matrix;
  bool valid = false;
};

// Learner matrix for one metric: rows are (dataset, timeframe, architecture)
// blocks, columns the learners present in every block.
MatrixBundle learner_matrix(const EvalReport& report, const std::string& metric,
                            const std::vector<std::string>& learners) {
  std::map<std::string, std::map<std::string, double>> blocks;
  for (const ReportRow& r : report.rows) {
    if (r.metric != metric) continue;
    std::string block = r.dataset + "|" + r.timeframe + "|" + r.architecture;
    blocks[block][r.learner] = r.value;
  }
  MatrixBundle out;
  if (blocks.size() < 2) return out;
  std::vector<std::string> kept;
  for (const std::string& l : learners) {
    bool everywhere = true;
    for (const auto& [block, values] : blocks) {
      if (!values.count(l)) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) kept.push_back(l);
  }
  if (kept.size() < 2) return out;
  out.matrix.methods = kept;
  for (const auto& [block, values] : blocks) {
    out.matrix.datasets.push_back(block);
    for (const std::string& l : kept) {
      out.matrix.values.push_back(values.at(l));
    }
  }
  out.valid = true;
  return out;
}

nlohmann::json test_to_json(const TestResult& t) {
  return {{"statistic", t.statistic}, {"p_value", t.p_value}};
}

}  // namespace

StatsSummary run_stats(const EvalReport& learner_report,
                       const EvalReport& nrc_report,
                       const ExperimentPlan& plan) {
  nlohmann::json out;
  bool underpowered = false;
  const double alpha = 0.05;

  nlohmann::json friedman_json, nemenyi_json, kw_json, nrc_json;
  std::map<std::string, bool> rq4_by_metric;
  std::map<std::string, bool> rq5_by_metric;

  for (const std::string& metric : plan.metrics) {
    MatrixBundle bundle =
        learner_matrix(learner_report, metric, plan.learners);
    if (!bundle.valid) {
      underpowered = true;
      friedman_json[metric] = nullptr;
      continue;
    }
    const RankMatrix& m = bundle.matrix;
    friedman_json[metric] = test_to_json(friedman(m, true));
    if (m.col_count() <= 30) {
      NemenyiResult nem = nemenyi(m, alpha, true);
      nlohmann::json nj;
      nj["critical_difference"] = nem.critical_difference;
      nlohmann::json ranks;
      for (std::size_t c = 0; c < m.col_count(); ++c) {
        ranks[m.methods[c]] = nem.avg_ranks[c];
      }
      nj["avg_ranks"] = ranks;
      std::vector<std::vector<std::string>> pairs;
      for (std::size_t a = 0; a < m.col_count(); ++a) {
        for (std::size_t b = a + 1; b < m.col_count(); ++b) {
          if (nem.pair_significant(a, b)) {
            pairs.push_back({m.methods[a], m.methods[b]});
          }
        }
      }
      nj["significant_pairs"] = pairs;
      nemenyi_json[metric] = nj;

      // RQ4 check: mean rank of the no-CI learners vs the CI learners
      double no_sum = 0.0, ci_sum = 0.0;
      std::size_t no_n = 0, ci_n = 0;
      for (std::size_t c = 0; c < m.col_count(); ++c) {
        if (m.methods[c].rfind("no-", 0) == 0) {
          no_sum += nem.avg_ranks[c];
          ++no_n;
        } else {
          ci_sum += nem.avg_ranks[c];
          ++ci_n;
        }
      }
      if (no_n > 0 && ci_n > 0) {
        rq4_by_metric[metric] =
            no_sum / static_cast<double>(no_n) < ci_sum / static_cast<double>(ci_n);
      }
    }

    // Kruskal-Wallis, CI vs no-CI, on pooled metric values
    std::vector<double> group_no, group_ci;
    for (const ReportRow& r : learner_report.rows) {
      if (r.metric != metric) continue;
      (r.learner.rfind("no-", 0) == 0 ? group_no : group_ci).push_back(r.value);
    }
    if (group_no.size() > 0 && group_ci.size() > 0) {
      kw_json["ci_vs_no"][metric] =
          test_to_json(kruskal_wallis({group_no, group_ci}));
    }

    // Kruskal-Wallis, relational learners vs non-relational classifiers
    std::vector<double> group_rl, group_nrc;
    for (const ReportRow& r : learner_report.rows) {
      if (r.metric == metric) group_rl.push_back(r.value);
    }
    for (const ReportRow& r : nrc_report.rows) {
      if (r.metric == metric) group_nrc.push_back(r.value);
    }
    if (!group_rl.empty() && !group_nrc.empty()) {
      kw_json["rl_vs_nrc"][metric] =
          test_to_json(kruskal_wallis({group_rl, group_nrc}));
    }

    // NRC mode comparison
    std::map<std::string, std::map<std::string, double>> by_dataset;
    for (const ReportRow& r : nrc_report.rows) {
      if (r.metric == metric) by_dataset[r.dataset][r.learner] = r.value;
    }
    std::vector<std::string> modes{"log-no", "log-rl", "log-all"};
    bool complete = by_dataset.size() >= 2;
    for (const auto& [ds, values] : by_dataset) {
      for (const std::string& mode : modes) {
        if (!values.count(mode)) complete = false;
      }
    }
    if (complete) {
      RankMatrix nm;
      nm.methods = modes;
      for (const auto& [ds, values] : by_dataset) {
        nm.datasets.push_back(ds);
        for (const std::string& mode : modes) {
          nm.values.push_back(values.at(mode));
        }
      }
      std::vector<double> ranks = average_ranks(nm, true);
      nlohmann::json nj;
      nj["friedman"] = test_to_json(friedman(nm, true));
      nlohmann::json rj;
      for (std::size_t c = 0; c < modes.size(); ++c) rj[modes[c]] = ranks[c];
      nj["avg_ranks"] = rj;
      nrc_json[metric] = nj;
      rq5_by_metric[metric] = ranks[2] < ranks[0] && ranks[2] < ranks[1];
    } else if (!by_dataset.empty()) {
      underpowered = true;
    }
  }

  auto conclude = [](const std::map<std::string, bool>& by_metric) {
    if (by_metric.empty()) return std::string("UNDECIDED");
    std::size_t pass = 0;
    for (const auto& [metric, ok] : by_metric) pass += ok ? 1 : 0;
    return 2 * pass >= by_metric.size() ? std::string("PASS")
                                        : std::string("FAIL");
  };
  nlohmann::json conclusions = nlohmann::json::array();
  {
    nlohmann::json c;
    c["id"] = "rq5_combined_features_rank_best";
    c["statement"] =
        "NRC models with network features and RL scores outrank single-block models";
    c["verdict"] = conclude(rq5_by_metric);
    nlohmann::json per;
    for (const auto& [metric, ok] : rq5_by_metric) per[metric] = ok;
    c["per_metric"] = per;
    conclusions.push_back(c);
  }
  {
    nlohmann::json c;
    c["id"] = "rq4_no_ci_rank_best";
    c["statement"] =
        "learners without collective inference outrank the CI variants";
    c["verdict"] = conclude(rq4_by_metric);
    nlohmann::json per;
    for (const auto& [metric, ok] : rq4_by_metric) per[metric] = ok;
    c["per_metric"] = per;
    conclusions.push_back(c);
  }

  out["friedman"] = friedman_json;
  out["nemenyi"] = nemenyi_json;
  out["kruskal_wallis"] = kw_json;
  out["nrc"] = nrc_json;
  out["conclusions"] = conclusions;
  out["underpowered"] = underpowered;
  out["alpha"] = alpha;

  StatsSummary summary;
  summary.underpowered = underpowered;
  summary.json = out.dump(2);
  return summary;
}

}  // namespace churnnet
