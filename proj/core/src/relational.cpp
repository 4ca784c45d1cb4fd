#include "churnnet/relational.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "churnnet/csv.hpp"
#include "churnnet/rng.hpp"

namespace churnnet {

double LabelState::prior() const {
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (std::uint8_t l : labels) sum += l ? 1.0 : 0.0;
  return sum / static_cast<double>(labels.size());
}

std::vector<double> LabelState::to_scores() const {
  std::vector<double> s(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) s[i] = labels[i] ? 1.0 : 0.0;
  return s;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Class vector (c0 mass, c1 mass) of one node from current scores.
std::array<double, 2> class_vector(const CallGraph& g, NodeIndex i,
                                   std::span<const double> current) {
  auto nbrs = g.neighbors_of(i);
  auto ws = g.weights_of(i);
  std::array<double, 2> cv{0.0, 0.0};
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    cv[1] += ws[k] * current[nbrs[k]];
    cv[0] += ws[k] * (1.0 - current[nbrs[k]]);
  }
  return cv;
}

}  // namespace

void Wvrn::score(const CallGraph& graph, std::span<const double> current,
                 std::span<double> out) const {
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    auto nbrs = graph.neighbors_of(i);
    auto ws = graph.weights_of(i);
    double z = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      z += ws[k];
      acc += ws[k] * current[nbrs[k]];
    }
    out[i] = z > 0.0 ? clamp01(acc / z) : prior_;
  }
}

void Cdrn::score(const CallGraph& graph, std::span<const double> current,
                 std::span<double> out) const {
  double rv_norm = std::sqrt(rv_.churn[0] * rv_.churn[0] +
                             rv_.churn[1] * rv_.churn[1]);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    std::array<double, 2> cv = class_vector(graph, i, current);
    double cv_norm = std::sqrt(cv[0] * cv[0] + cv[1] * cv[1]);
    if (cv_norm <= 0.0 || rv_norm <= 0.0) {
      out[i] = prior_;
      continue;
    }
    double cosine =
        (cv[0] * rv_.churn[0] + cv[1] * rv_.churn[1]) / (cv_norm * rv_norm);
    out[i] = clamp01(cosine);
  }
}

void Nlb::score(const CallGraph& graph, std::span<const double> current,
                std::span<double> out) const {
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    std::array<double, 2> cv = class_vector(graph, i, current);
    double total = cv[0] + cv[1];
    if (total <= 0.0) {
      out[i] = prior_;
      continue;
    }
    out[i] = sigmoid(model_.beta0 + model_.beta1 * (cv[1] / total));
  }
}

void SpaRc::score(const CallGraph& graph, std::span<const double> current,
                  std::span<double> out) const {
  std::vector<double> wsum = graph.weight_sums();
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    auto nbrs = graph.neighbors_of(i);
    auto ws = graph.weights_of(i);
    double z = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      double denom = wsum[nbrs[k]];
      if (denom <= 0.0) continue;  // zero out-weight neighbor contributes 0
      double ratio = ws[k] / denom;
      z += ratio;
      acc += ratio * current[nbrs[k]];
    }
    out[i] = z > 0.0 ? clamp01(diffusion_ * acc / z) : prior_;
  }
}

namespace {

ScoreState single_sweep(const RelationalClassifier& rc, const CallGraph& g,
                        std::span<const double> state) {
  ScoreState out;
  out.scores.assign(g.nodes, 0.0);
  rc.score(g, state, out.scores);
  out.iterations = 1;
  out.converged = true;
  return out;
}

}  // namespace

ScoreState wvrn(const CallGraph& graph, std::span<const double> state) {
  double prior = 0.0;
  for (double v : state) prior += v;
  prior = state.empty() ? 0.0 : prior / static_cast<double>(state.size());
  return single_sweep(Wvrn(prior), graph, state);
}

ScoreState wvrn(const CallGraph& graph, const LabelState& state) {
  return single_sweep(Wvrn(state.prior()), graph, state.to_scores());
}

ReferenceVector cdrn_pretrain(const CallGraph& graph_prev,
                              std::span<const double> scores_prev,
                              std::span<const std::uint8_t> labels_t) {
  if (scores_prev.size() != graph_prev.nodes ||
      labels_t.size() != graph_prev.nodes) {
    throw std::invalid_argument("cdrn_pretrain: size mismatch");
  }
  ReferenceVector rv;
  std::array<double, 2> sum_churn{0.0, 0.0}, sum_non{0.0, 0.0};
  std::size_t n_churn = 0, n_non = 0;
  for (NodeIndex i = 0; i < graph_prev.nodes; ++i) {
    std::array<double, 2> cv = class_vector(graph_prev, i, scores_prev);
    if (labels_t[i]) {
      sum_churn[0] += cv[0];
      sum_churn[1] += cv[1];
      ++n_churn;
    } else {
      sum_non[0] += cv[0];
      sum_non[1] += cv[1];
      ++n_non;
    }
  }
  if (n_churn == 0) {
    throw std::runtime_error("cdrn_pretrain: no churners in pre-training labels");
  }
  rv.churn = {sum_churn[0] / n_churn, sum_churn[1] / n_churn};
  if (n_non > 0) rv.nonchurn = {sum_non[0] / n_non, sum_non[1] / n_non};
  return rv;
}

ScoreState cdrn(const CallGraph& graph, std::span<const double> state,
                const ReferenceVector& rv, double prior) {
  return single_sweep(Cdrn(rv, prior), graph, state);
}

NlbModel nlb_pretrain(const CallGraph& graph_prev,
                      std::span<const double> scores_prev,
                      std::span<const std::uint8_t> labels_t,
                      const LogisticOptions& options) {
  if (scores_prev.size() != graph_prev.nodes ||
      labels_t.size() != graph_prev.nodes) {
    throw std::invalid_argument("nlb_pretrain: size mismatch");
  }
  std::vector<double> x(graph_prev.nodes, 0.0);
  for (NodeIndex i = 0; i < graph_prev.nodes; ++i) {
    std::array<double, 2> cv = class_vector(graph_prev, i, scores_prev);
    double total = cv[0] + cv[1];
    x[i] = total > 0.0 ? cv[1] / total : 0.0;
  }
  // constant feature (e.g. no labeled neighbors anywhere): intercept-only
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) {
    bool has0 = false, has1 = false;
    for (std::uint8_t v : labels_t) (v ? has1 : has0) = true;
    if (!has0 || !has1) {
      throw std::invalid_argument("nlb_pretrain: single-class labels");
    }
    double pi1 = 0.0;
    for (std::uint8_t v : labels_t) pi1 += v ? 1.0 : 0.0;
    pi1 /= static_cast<double>(labels_t.size());
    return NlbModel{std::log(pi1 / (1.0 - pi1)), 0.0};
  }
  RawFit fit = fit_logistic_raw(x, x.size(), 1, labels_t, options);
  return NlbModel{fit.coefficients[0], fit.coefficients[1]};
}

ScoreState nlb(const CallGraph& graph, std::span<const double> state,
               const NlbModel& model, double prior) {
  return single_sweep(Nlb(model, prior), graph, state);
}

ScoreState spa_rc(const CallGraph& graph, std::span<const double> state,
                  double diffusion, double prior) {
  return single_sweep(SpaRc(diffusion, prior), graph, state);
}

const char* to_string(CiMethod m) {
  switch (m) {
    case CiMethod::none: return "no";
    case CiMethod::gibbs: return "gibbs";
    case CiMethod::ic: return "ic";
    case CiMethod::rl: return "rl";
    case CiMethod::rlsa: return "rlsa";
    case CiMethod::spa: return "spa";
  }
  return "?";
}

CiMethod ci_from_string(const std::string& s) {
  if (s == "no" || s == "none") return CiMethod::none;
  if (s == "gibbs") return CiMethod::gibbs;
  if (s == "ic") return CiMethod::ic;
  if (s == "rl") return CiMethod::rl;
  if (s == "rlsa") return CiMethod::rlsa;
  if (s == "spa") return CiMethod::spa;
  throw std::invalid_argument("unknown collective inference method: " + s);
}

void CiConfig::validate() const {
  if (gibbs_burn_in < 0) throw std::invalid_argument("ci: burn_in < 0");
  if (!(threshold > 0.0)) throw std::invalid_argument("ci: threshold <= 0");
  if (!(rlsa_k > 0.0 && rlsa_k <= 1.0)) {
    throw std::invalid_argument("ci: rlsa k must be in (0,1]");
  }
  if (!(rlsa_alpha > 0.0 && rlsa_alpha < 1.0)) {
    throw std::invalid_argument("ci: rlsa alpha must be in (0,1)");
  }
  if (!(spa_diffusion > 0.0 && spa_diffusion < 1.0)) {
    throw std::invalid_argument("ci: spa diffusion must be in (0,1)");
  }
  if (gibbs_max_iter < 1 || ic_max_iter < 1 || score_max_iter < 1) {
    throw std::invalid_argument("ci: iteration caps must be >= 1");
  }
}

namespace {

void notify(const SweepObserver* obs, int sweep, std::span<const double> s) {
  if (obs && *obs) (*obs)(sweep, s);
}

ScoreState run_gibbs(const RelationalClassifier& rc, const CallGraph& g,
                     const LabelState& init, const CiConfig& cfg,
                     const SweepObserver* observer) {
  std::size_t n = g.nodes;
  std::mt19937_64 gen(cfg.seed);
  std::vector<double> state = init.to_scores();
  std::vector<double> rc_out(n, 0.0);

  auto sample_sweep = [&]() {
    rc.score(g, state, rc_out);
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = rng::uniform01(gen) < rc_out[i] ? 1.0 : 0.0;
    }
  };

  for (int j = 1; j <= cfg.gibbs_burn_in; ++j) {
    sample_sweep();
    notify(observer, j - cfg.gibbs_burn_in - 1, state);  // negative = burn-in
  }

  std::vector<double> accum(n, 0.0);
  std::vector<double> mean(n, 0.0);
  ScoreState out;
  double prev_mean_sum = 0.0;
  for (int t = 1; t <= cfg.gibbs_max_iter; ++t) {
    sample_sweep();
    double mean_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      accum[i] += state[i];
      mean[i] = accum[i] / static_cast<double>(t);
      mean_sum += mean[i];
    }
    notify(observer, t, mean);
    if (cfg.early_stop && t >= 2 &&
        std::fabs(mean_sum - prev_mean_sum) < cfg.threshold) {
      out.scores = std::move(mean);
      out.iterations = t;
      out.converged = true;
      return out;
    }
    prev_mean_sum = mean_sum;
  }
  out.scores = std::move(mean);
  out.iterations = cfg.gibbs_max_iter;
  out.converged = false;
  return out;
}

ScoreState run_ic(const RelationalClassifier& rc, const CallGraph& g,
                  const LabelState& init, const CiConfig& cfg,
                  const SweepObserver* observer) {
  std::size_t n = g.nodes;
  std::vector<double> state = init.to_scores();
  std::vector<double> rc_out(n, 0.0);
  std::vector<double> hard(n, 0.0);
  ScoreState out;
  for (int j = 1; j <= cfg.ic_max_iter; ++j) {
    rc.score(g, state, rc_out);
    bool all_zero = true;
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      hard[i] = rc_out[i] > 0.5 ? 1.0 : 0.0;  // tie at 0.5 -> c0
      if (hard[i] != 0.0) all_zero = false;
      max_change = std::max(max_change, std::fabs(state[i] - hard[i]));
    }
    notify(observer, j, hard);
    if (cfg.early_stop && (all_zero || max_change <= cfg.threshold)) {
      out.scores = hard;
      out.iterations = j;
      out.converged = true;
      return out;
    }
    state = hard;
  }
  out.scores = hard;
  out.iterations = cfg.ic_max_iter;
  out.converged = false;
  return out;
}

ScoreState run_rl(const RelationalClassifier& rc, const CallGraph& g,
                  const LabelState& init, const CiConfig& cfg,
                  const SweepObserver* observer) {
  std::size_t n = g.nodes;
  std::vector<double> state = init.to_scores();
  std::vector<double> next(n, 0.0);
  ScoreState out;
  for (int j = 1; j <= cfg.score_max_iter; ++j) {
    rc.score(g, state, next);
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      max_change = std::max(max_change, std::fabs(next[i] - state[i]));
    }
    state.swap(next);
    notify(observer, j, state);
    if (cfg.early_stop && max_change <= cfg.threshold) {
      out.scores = state;
      out.iterations = j;
      out.converged = true;
      return out;
    }
  }
  out.scores = state;
  out.iterations = cfg.score_max_iter;
  out.converged = false;
  return out;
}

ScoreState run_rlsa(const RelationalClassifier& rc, const CallGraph& g,
                    const LabelState& init, const CiConfig& cfg,
                    const SweepObserver* observer) {
  std::size_t n = g.nodes;
  std::vector<double> state = init.to_scores();  // v == c-hat after each sweep
  std::vector<double> raw(n, 0.0);
  double beta = cfg.rlsa_k;
  ScoreState out;
  for (int j = 1; j <= cfg.score_max_iter; ++j) {
    rc.score(g, state, raw);
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double est = beta * raw[i] + (1.0 - beta) * state[i];
      max_change = std::max(max_change, std::fabs(est - state[i]));
      raw[i] = est;
    }
    state.swap(raw);
    notify(observer, j, state);
    if (cfg.early_stop && max_change <= cfg.threshold) {
      out.scores = state;
      out.iterations = j;
      out.converged = true;
      return out;
    }
    beta *= cfg.rlsa_alpha;
  }
  out.scores = state;
  out.iterations = cfg.score_max_iter;
  out.converged = false;
  return out;
}

ScoreState run_spa(const RelationalClassifier& rc, const CallGraph& g,
                   const LabelState& init, const CiConfig& cfg,
                   const SweepObserver* observer) {
  std::size_t n = g.nodes;
  std::vector<double> state = init.to_scores();
  std::vector<double> next(n, 0.0);
  ScoreState out;
  // runs at least one sweep, then keeps going while the aggregated score
  // change exceeds the threshold or activation is still spreading
  for (int j = 1; j <= cfg.score_max_iter; ++j) {
    rc.score(g, state, next);
    double agg_change = 0.0;
    std::size_t active_prev = 0, active_next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      agg_change += std::fabs(next[i] - state[i]);
      if (state[i] > 0.0) ++active_prev;
      if (next[i] > 0.0) ++active_next;
    }
    state.swap(next);
    notify(observer, j, state);
    bool keep_going = agg_change > cfg.threshold || active_next > active_prev;
    if (cfg.early_stop && !keep_going) {
      out.scores = state;
      out.iterations = j;
      out.converged = true;
      return out;
    }
  }
  out.scores = state;
  out.iterations = cfg.score_max_iter;
  out.converged = false;
  return out;
}

}  // namespace

ScoreState run_ci(const RelationalClassifier& rc, const CallGraph& graph,
                  const LabelState& init, const CiConfig& config,
                  const SweepObserver* observer) {
  config.validate();
  if (init.labels.size() != graph.nodes) {
    throw std::invalid_argument("run_ci: init labels must cover all nodes");
  }
  switch (config.method) {
    case CiMethod::none: {
      ScoreState out = single_sweep(rc, graph, init.to_scores());
      notify(observer, 1, out.scores);
      return out;
    }
    case CiMethod::gibbs:
      return run_gibbs(rc, graph, init, config, observer);
    case CiMethod::ic:
      return run_ic(rc, graph, init, config, observer);
    case CiMethod::rl:
      return run_rl(rc, graph, init, config, observer);
    case CiMethod::rlsa:
      return run_rlsa(rc, graph, init, config, observer);
    case CiMethod::spa:
      return run_spa(rc, graph, init, config, observer);
  }
  throw std::invalid_argument("run_ci: unknown method");
}

std::vector<double> sensitivity_trace(const RelationalClassifier& rc,
                                      const CallGraph& graph,
                                      const LabelState& init, CiConfig config,
                                      int sweeps) {
  config.early_stop = false;
  switch (config.method) {
    case CiMethod::gibbs: config.gibbs_max_iter = sweeps; break;
    case CiMethod::ic: config.ic_max_iter = sweeps; break;
    case CiMethod::none: break;
    default: config.score_max_iter = sweeps; break;
  }
  std::vector<double> variances;
  variances.reserve(static_cast<std::size_t>(sweeps));
  SweepObserver obs = [&](int sweep, std::span<const double> scores) {
    if (sweep < 1) return;  // skip gibbs burn-in
    double mean = 0.0;
    for (double v : scores) mean += v;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double v : scores) var += (v - mean) * (v - mean);
    variances.push_back(var / static_cast<double>(scores.size()));
  };
  run_ci(rc, graph, init, config, &obs);
  return variances;
}

std::string LearnerId::str() const {
  return std::string(to_string(ci)) + "-" + rc;
}

LearnerId parse_learner_id(const std::string& id) {
  std::size_t dash = id.find('-');
  if (dash == std::string::npos) {
    throw std::invalid_argument("learner id must be 'CI-RC': " + id);
  }
  LearnerId out;
  out.ci = ci_from_string(id.substr(0, dash));
  out.rc = id.substr(dash + 1);
  if (out.rc != "wvrn" && out.rc != "cdrn" && out.rc != "nlb" &&
      out.rc != "sparc") {
    throw std::invalid_argument("unknown relational classifier: " + out.rc);
  }
  return out;
}

std::vector<std::string> all_learner_ids() {
  std::vector<std::string> out;
  for (const char* ci : {"no", "gibbs", "ic", "rl", "rlsa", "spa"}) {
    for (const char* rc : {"wvrn", "cdrn", "nlb", "sparc"}) {
      out.push_back(std::string(ci) + "-" + rc);
    }
  }
  return out;
}

void write_scores_csv(const IdTable& ids, const std::string& learner,
                      std::span<const double> scores, std::ostream& out) {
  out << "customer,learner,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out << csv::escape(ids.name(static_cast<NodeIndex>(i))) << ','
        << csv::escape(learner) << ',' << csv::format_double(scores[i]) << '\n';
  }
}

}  // namespace churnnet
