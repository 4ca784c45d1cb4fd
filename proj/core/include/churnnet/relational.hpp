#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "churnnet/classify.hpp"
#include "churnnet/graph.hpp"

namespace churnnet {

// Known class labels at time t; c0 = non-churner (0), c1 = churner (1).
struct LabelState {
  std::vector<std::uint8_t> labels;
  double prior() const;  // fraction of c1
  std::vector<double> to_scores() const;
};

// Per-node P(l_i = c1) in [0,1].
struct ScoreState {
  std::vector<double> scores;
  int iterations = 0;
  bool converged = false;
};

// Per-class mean of class vectors from the pre-training period.
struct ReferenceVector {
  std::array<double, 2> churn{};     // RV(c1): (c0 mass, c1 mass)
  std::array<double, 2> nonchurn{};  // RV(c0)
};

struct NlbModel {
  double beta0 = 0.0;
  double beta1 = 0.0;
};

// Relational classifiers score every node from its neighbors' current churn
// probabilities and the edge weights. Zero-degree nodes (and other cases with
// no relational evidence) fall back to the class prior pi1.
class RelationalClassifier {
 public:
  virtual ~RelationalClassifier() = default;
  virtual void score(const CallGraph& graph, std::span<const double> current,
                     std::span<double> out) const = 0;
  virtual std::string id() const = 0;
};

// Weighted-vote relational neighbor: weighted average of neighbor scores.
class Wvrn final : public RelationalClassifier {
 public:
  explicit Wvrn(double prior) : prior_(prior) {}
  void score(const CallGraph& graph, std::span<const double> current,
             std::span<double> out) const override;
  std::string id() const override { return "wvrn"; }

 private:
  double prior_;
};

// Class-distribution relational neighbor: cosine similarity between a node's
// class vector and the churner reference vector.
class Cdrn final : public RelationalClassifier {
 public:
  Cdrn(ReferenceVector rv, double prior) : rv_(rv), prior_(prior) {}
  void score(const CallGraph& graph, std::span<const double> current,
             std::span<double> out) const override;
  std::string id() const override { return "cdrn"; }

 private:
  ReferenceVector rv_;
  double prior_;
};

// Network-only link-based classifier: logistic model on the count-link
// (normalized class vector) churn component.
class Nlb final : public RelationalClassifier {
 public:
  Nlb(NlbModel model, double prior) : model_(model), prior_(prior) {}
  void score(const CallGraph& graph, std::span<const double> current,
             std::span<double> out) const override;
  std::string id() const override { return "nlb"; }

 private:
  NlbModel model_;
  double prior_;
};

// Spreading-activation relational classifier: neighbor scores weighted by
// w_ij / sum_s w_js, scaled by the diffusion constant d. The normalizer sums
// the ratio weights of the node's own neighborhood.
class SpaRc final : public RelationalClassifier {
 public:
  SpaRc(double diffusion, double prior) : diffusion_(diffusion), prior_(prior) {
    if (!(diffusion > 0.0 && diffusion < 1.0)) {
      throw std::invalid_argument("SpaRc: diffusion must be in (0,1)");
    }
  }
  void score(const CallGraph& graph, std::span<const double> current,
             std::span<double> out) const override;
  std::string id() const override { return "sparc"; }

 private:
  double diffusion_;
  double prior_;
};

ScoreState wvrn(const CallGraph& graph, std::span<const double> state);
ScoreState wvrn(const CallGraph& graph, const LabelState& state);

// Pre-training on the previous timeframe: class vectors computed on the t-1
// graph with the t-1 labels, grouped by the labels observed at time t.
// Throws std::runtime_error when the grouping labels contain no churners.
ReferenceVector cdrn_pretrain(const CallGraph& graph_prev,
                              std::span<const double> scores_prev,
                              std::span<const std::uint8_t> labels_t);

ScoreState cdrn(const CallGraph& graph, std::span<const double> state,
                const ReferenceVector& rv, double prior);

// Logistic fit of labels at time t against the count-link churn component on
// the t-1 graph. Single-class labels throw; runaway coefficients are clipped
// at options.coef_bound.
NlbModel nlb_pretrain(const CallGraph& graph_prev,
                      std::span<const double> scores_prev,
                      std::span<const std::uint8_t> labels_t,
                      const LogisticOptions& options = {});

ScoreState nlb(const CallGraph& graph, std::span<const double> state,
               const NlbModel& model, double prior);

ScoreState spa_rc(const CallGraph& graph, std::span<const double> state,
                  double diffusion, double prior);

enum class CiMethod { none, gibbs, ic, rl, rlsa, spa };

const char* to_string(CiMethod m);
CiMethod ci_from_string(const std::string& s);

struct CiConfig {
  CiMethod method = CiMethod::none;
  int gibbs_burn_in = 200;
  int gibbs_max_iter = 2000;
  int ic_max_iter = 1000;
  int score_max_iter = 100;  // rl, rlsa, spa
  double threshold = 1e-4;
  double rlsa_k = 1.0;
  double rlsa_alpha = 0.99;
  double spa_diffusion = 0.85;
  std::uint64_t seed = 0;     // gibbs sampling
  bool early_stop = true;     // disabled for sensitivity traces

  void validate() const;
};

// Observer invoked after every sweep with the current per-node state: scores
// for score-based methods, sampled/assigned labels during Gibbs burn-in and
// IC, and the running mean during Gibbs accumulation.
using SweepObserver = std::function<void(int sweep, std::span<const double>)>;

// Runs the collective inference procedure around `rc` starting from the known
// labels at time t. All methods are double-buffered: each sweep scores every
// node from the previous sweep's state. Gibbs draws one uniform per node per
// sweep in node-index order from mt19937_64(seed).
ScoreState run_ci(const RelationalClassifier& rc, const CallGraph& graph,
                  const LabelState& init, const CiConfig& config,
                  const SweepObserver* observer = nullptr);

// Score variance after each of `sweeps` iterations with early stopping
// disabled; used to reproduce the smoothing sensitivity analysis.
std::vector<double> sensitivity_trace(const RelationalClassifier& rc,
                                      const CallGraph& graph,
                                      const LabelState& init, CiConfig config,
                                      int sweeps);

// "CI-RC" learner naming, e.g. "gibbs-nlb", "no-wvrn".
struct LearnerId {
  CiMethod ci;
  std::string rc;  // wvrn | cdrn | nlb | sparc
  std::string str() const;
};
LearnerId parse_learner_id(const std::string& id);
std::vector<std::string> all_learner_ids();  // the 24 CI x RC combinations

void write_scores_csv(const IdTable& ids, const std::string& learner,
                      std::span<const double> scores, std::ostream& out);

}  // namespace churnnet
