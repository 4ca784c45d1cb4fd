#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace churnnet {

// Parameters of the profit measures. delta and phi are fractions of CLV;
// gamma (incentive acceptance) follows Beta(a, b) for EMP and is a point
// value for MP. pi0/pi1 (churner / non-churner base rates) come from labels.
struct EmpParams {
  double clv = 200.0;
  double delta = 10.0 / 200.0;
  double phi = 1.0 / 200.0;
  double beta_a = 6.0;
  double beta_b = 14.0;

  void validate() const;
  std::string describe() const;  // echoed with every reported EMP value
};

inline constexpr double kMpDefaultGamma = 0.3;  // Beta(6,14) mean

// Lift at a fraction: churn rate among the ceil(f*n) highest-scored customers
// over the base churn rate. Score ties break by ascending customer index.
// Throws std::invalid_argument without churners or for f outside (0,1].
double lift(std::span<const double> scores, std::span<const std::uint8_t> labels,
            double fraction);

// Probability a random churner outranks a random non-churner, ties count 1/2.
// Throws std::invalid_argument unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MpResult {
  double profit;  // per customer
  double eta;     // targeted fraction at the optimal threshold
};

// Maximum profit over all score thresholds (including targeting nobody, so
// the result is never negative), at a fixed acceptance probability gamma.
MpResult mp(std::span<const double> scores, std::span<const std::uint8_t> labels,
            const EmpParams& params, double gamma = kMpDefaultGamma);

struct EmpResult {
  double emp;
  double eta;  // expected targeted fraction
};

// Expected maximum profit: per-gamma optimal profit integrated against the
// Beta(a,b) acceptance distribution by adaptive quadrature.
EmpResult emp(std::span<const double> scores, std::span<const std::uint8_t> labels,
              const EmpParams& params, double quad_tol = 1e-6);

}  // namespace churnnet
