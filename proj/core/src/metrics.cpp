#include "churnnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "churnnet/csv.hpp"
#include "churnnet/mathx.hpp"

namespace churnnet {

void EmpParams::validate() const {
  if (!(clv > 0.0)) throw std::invalid_argument("emp: CLV must be positive");
  if (delta < 0.0 || delta > 1.0 || phi < 0.0 || phi > 1.0) {
    throw std::invalid_argument("emp: delta and phi must be in [0,1]");
  }
  if (!(beta_a > 0.0 && beta_b > 0.0)) {
    throw std::invalid_argument("emp: beta parameters must be positive");
  }
}

std::string EmpParams::describe() const {
  return "clv=" + csv::format_double(clv) + ";delta=" + csv::format_double(delta) +
         ";phi=" + csv::format_double(phi) + ";beta=(" +
         csv::format_double(beta_a) + "," + csv::format_double(beta_b) + ")";
}

namespace {

void check_sizes(std::span<const double> scores,
                 std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("metrics: scores/labels size mismatch");
  }
}

std::size_t count_churners(std::span<const std::uint8_t> labels) {
  std::size_t n1 = 0;
  for (std::uint8_t l : labels) n1 += l ? 1 : 0;
  return n1;
}

// Cumulative churner / non-churner counts per distinct score threshold,
// descending; ties grouped at one threshold.
struct ThresholdCurve {
  std::vector<std::size_t> churn;  // churners with score >= threshold_k
  std::vector<std::size_t> non;
  std::size_t n_churn = 0;
  std::size_t n_non = 0;
};

ThresholdCurve threshold_curve(std::span<const double> scores,
                               std::span<const std::uint8_t> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  ThresholdCurve curve;
  std::size_t c1 = 0, c0 = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]]) ++c1;
    else ++c0;
    bool group_end =
        k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]];
    if (group_end) {
      curve.churn.push_back(c1);
      curve.non.push_back(c0);
    }
  }
  curve.n_churn = c1;
  curve.n_non = c0;
  return curve;
}

}  // namespace

double lift(std::span<const double> scores, std::span<const std::uint8_t> labels,
            double fraction) {
  check_sizes(scores, labels);
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("lift: fraction must be in (0,1]");
  }
  std::size_t n = scores.size();
  std::size_t n1 = count_churners(labels);
  if (n1 == 0) throw std::invalid_argument("lift: no churners");

  // top ceil(f*n), with a guard against floating error in f*n
  std::size_t top = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  top = std::clamp<std::size_t>(top, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // stable customer order on ties
  });
  std::size_t hits = 0;
  for (std::size_t k = 0; k < top; ++k) hits += labels[order[k]] ? 1 : 0;
  double top_rate = static_cast<double>(hits) / static_cast<double>(top);
  double base_rate = static_cast<double>(n1) / static_cast<double>(n);
  return top_rate / base_rate;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_sizes(scores, labels);
  std::size_t n = scores.size();
  std::size_t n1 = count_churners(labels);
  std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) {
    throw std::invalid_argument("auc: both classes must be present");
  }
  // rank-sum with average ranks on ties
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_churn = 0.0;
  std::size_t k = 0;
  while (k < n) {
    std::size_t j = k;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[k]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(k + 1 + j + 1);
    for (std::size_t t = k; t <= j; ++t) {
      if (labels[order[t]]) rank_sum_churn += avg_rank;
    }
    k = j + 1;
  }
  double u = rank_sum_churn - static_cast<double>(n1) *
                                  (static_cast<double>(n1) + 1.0) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

namespace {

// Profit per customer when targeting everyone at or above threshold k.
double profit_at(const ThresholdCurve& curve, std::size_t k, double gamma,
                 const EmpParams& p, std::size_t n) {
  double f0 = curve.n_churn > 0
                  ? static_cast<double>(curve.churn[k]) / curve.n_churn
                  : 0.0;
  double f1 = curve.n_non > 0
                  ? static_cast<double>(curve.non[k]) / curve.n_non
                  : 0.0;
  double pi0 = static_cast<double>(curve.n_churn) / static_cast<double>(n);
  double pi1 = static_cast<double>(curve.n_non) / static_cast<double>(n);
  return p.clv * (gamma * (1.0 - p.delta) - p.phi) * pi0 * f0 -
         p.clv * (p.delta + p.phi) * pi1 * f1;
}

double eta_at(const ThresholdCurve& curve, std::size_t k, std::size_t n) {
  return static_cast<double>(curve.churn[k] + curve.non[k]) /
         static_cast<double>(n);
}

}  // namespace

MpResult mp(std::span<const double> scores, std::span<const std::uint8_t> labels,
            const EmpParams& params, double gamma) {
  check_sizes(scores, labels);
  params.validate();
  ThresholdCurve curve = threshold_curve(scores, labels);
  std::size_t n = scores.size();
  // empty targeting is always admissible
  MpResult best{0.0, 0.0};
  for (std::size_t k = 0; k < curve.churn.size(); ++k) {
    double p = profit_at(curve, k, gamma, params, n);
    if (p > best.profit) best = {p, eta_at(curve, k, n)};
  }
  return best;
}

EmpResult emp(std::span<const double> scores, std::span<const std::uint8_t> labels,
              const EmpParams& params, double quad_tol) {
  check_sizes(scores, labels);
  params.validate();
  ThresholdCurve curve = threshold_curve(scores, labels);
  std::size_t n = scores.size();

  auto best_at_gamma = [&](double gamma) {
    MpResult best{0.0, 0.0};
    for (std::size_t k = 0; k < curve.churn.size(); ++k) {
      double p = profit_at(curve, k, gamma, params, n);
      if (p > best.profit) best = {p, eta_at(curve, k, n)};
    }
    return best;
  };

  auto profit_integrand = [&](double g) {
    return best_at_gamma(g).profit * mathx::beta_pdf(g, params.beta_a, params.beta_b);
  };
  auto eta_integrand = [&](double g) {
    return best_at_gamma(g).eta * mathx::beta_pdf(g, params.beta_a, params.beta_b);
  };

  // scale the absolute tolerance to the integrand's magnitude
  double scale = std::max(1.0, std::fabs(best_at_gamma(0.5).profit));
  EmpResult out;
  out.emp = mathx::integrate_adaptive(profit_integrand, 0.0, 1.0,
                                      quad_tol * scale);
  out.eta = mathx::integrate_adaptive(eta_integrand, 0.0, 1.0, quad_tol);
  return out;
}

}  // namespace churnnet
