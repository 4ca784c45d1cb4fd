#include "churnnet/mathx.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace churnnet::mathx {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;

// Series expansion of P(a, x), converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), for x >= a + 1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double x, double a, double b) {
  const double tiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double fa, double b, double fb, double m, double fm,
                     double whole, double tol, int depth) {
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::invalid_argument("regularized_gamma_p: need a > 0, x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi_square_sf: df must be > 0");
  if (x <= 0.0) return 1.0;
  if (x < df + 1.0) return 1.0 - gamma_p_series(df / 2.0, x / 2.0);
  return gamma_q_cf(df / 2.0, x / 2.0);
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double regularized_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0) {
    throw std::invalid_argument("regularized_beta: domain error");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double front =
      std::exp(a * std::log(x) + b * std::log(1.0 - x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(x, a, b) / a;
  }
  return 1.0 - std::exp(b * std::log(1.0 - x) + a * std::log(x) - log_beta(b, a)) *
                   beta_cf(1.0 - x, b, a) / b;
}

double f_dist_sf(double x, double d1, double d2) {
  if (x <= 0.0) return 1.0;
  return regularized_beta(d2 / (d2 + d1 * x), d2 / 2.0, d1 / 2.0);
}

double beta_pdf(double x, double a, double b) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x == 0.0) return a < 1.0 ? std::numeric_limits<double>::infinity()
                               : (a > 1.0 ? 0.0 : b);
  if (x == 1.0) return b < 1.0 ? std::numeric_limits<double>::infinity()
                               : (b > 1.0 ? 0.0 : a);
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log(1.0 - x) -
                  log_beta(a, b));
}

double integrate_adaptive(const std::function<double(double)>& f, double lo,
                          double hi, double tol) {
  if (hi <= lo) return 0.0;
  // a fixed initial partition keeps narrow features from slipping between
  // the first sample points
  constexpr int kPanels = 32;
  double h = (hi - lo) / kPanels;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    double a = lo + p * h;
    double b = p + 1 == kPanels ? hi : a + h;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = simpson(f, a, fa, b, fb, m, fm);
    total += adaptive_step(f, a, fa, b, fb, m, fm, whole, tol / kPanels, 36);
  }
  return total;
}

}  // namespace churnnet::mathx
