#include "churnnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "churnnet/mathx.hpp"

namespace churnnet {

namespace {

// Ranks with ties averaged; rank 1 goes to the best value.
std::vector<double> rank_row(std::span<const double> values,
                             bool higher_is_better) {
  std::size_t k = values.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_is_better ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(k, 0.0);
  std::size_t i = 0;
  while (i < k) {
    std::size_t j = i;
    while (j + 1 < k && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

void check_matrix(const RankMatrix& m) {
  if (m.col_count() < 2 || m.row_count() < 2) {
    throw std::invalid_argument("stats: need >= 2 methods and >= 2 datasets");
  }
  if (m.values.size() != m.row_count() * m.col_count()) {
    throw std::invalid_argument("stats: matrix has missing cells");
  }
}

// Nemenyi critical values q_alpha = (studentized range quantile, infinite
// df) / sqrt(2), for k = 2..30. Computed by numerical integration of the
// studentized-range distribution; the alpha = 0.05 column agrees with the
// published tables used in classifier-comparison literature.
constexpr int kNemenyiMaxK = 30;
constexpr double kNemenyi01[] = {
    2.575829304, 2.913494338, 3.113250345, 3.254685972, 3.363740368,
    3.452212823, 3.526470698, 3.590338699, 3.646291548, 3.696020900,
    3.740733168, 3.781318241, 3.818450856, 3.852654477, 3.884343155,
    3.913849887, 3.941446367, 3.967357083, 3.991769594, 4.014842165,
    4.036709531, 4.057487314, 4.077275453, 4.096160904, 4.114219776,
    4.131519061, 4.148118016, 4.164069311, 4.179419957};
constexpr double kNemenyi05[] = {
    1.959963985, 2.343700586, 2.569031773, 2.727774371, 2.849705420,
    2.948320018, 3.030878450, 3.101730341, 3.163683577, 3.218653607,
    3.268003924, 3.312738593, 3.353617752, 3.391230284, 3.426041379,
    3.458424707, 3.488684799, 3.517073009, 3.543799132, 3.569040030,
    3.592946137, 3.615646437, 3.637252332, 3.657860673, 3.677556176,
    3.696413349, 3.714498061, 3.731868817, 3.748577807};
constexpr double kNemenyi10[] = {
    1.644853627, 2.052292730, 2.291341497, 2.459515764, 2.588520602,
    2.692732101, 2.779883608, 2.854606431, 2.919888840, 2.977768251,
    3.029694183, 3.076733468, 3.119693333, 3.159198819, 3.195743433,
    3.229723401, 3.261461490, 3.291223987, 3.319233060, 3.345675925,
    3.370711760, 3.394476997, 3.417089428, 3.438651427, 3.459252506,
    3.478971372, 3.497877580, 3.516032894, 3.533492393};

}  // namespace

std::vector<double> average_ranks(const RankMatrix& matrix,
                                  bool higher_is_better) {
  check_matrix(matrix);
  std::size_t n = matrix.row_count(), k = matrix.col_count();
  std::vector<double> avg(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    std::span<const double> row(matrix.values.data() + r * k, k);
    std::vector<double> ranks = rank_row(row, higher_is_better);
    for (std::size_t c = 0; c < k; ++c) avg[c] += ranks[c];
  }
  for (double& v : avg) v /= static_cast<double>(n);
  return avg;
}

TestResult friedman(const RankMatrix& matrix, bool higher_is_better,
                    bool iman_davenport) {
  check_matrix(matrix);
  double n = static_cast<double>(matrix.row_count());
  double k = static_cast<double>(matrix.col_count());
  std::vector<double> avg = average_ranks(matrix, higher_is_better);
  double sum_sq = 0.0;
  for (double r : avg) sum_sq += r * r;
  double chi2 =
      12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
  chi2 = std::max(chi2, 0.0);
  if (!iman_davenport) {
    return {chi2, mathx::chi_square_sf(chi2, k - 1.0)};
  }
  double denom = n * (k - 1.0) - chi2;
  if (denom <= 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
  double f = (n - 1.0) * chi2 / denom;
  return {f, mathx::f_dist_sf(f, k - 1.0, (k - 1.0) * (n - 1.0))};
}

double nemenyi_critical_value(std::size_t k, double alpha) {
  if (k < 2 || k > kNemenyiMaxK) {
    throw std::invalid_argument("nemenyi: k outside the embedded table (2..30)");
  }
  const double* table = nullptr;
  if (std::fabs(alpha - 0.01) < 1e-12) table = kNemenyi01;
  else if (std::fabs(alpha - 0.05) < 1e-12) table = kNemenyi05;
  else if (std::fabs(alpha - 0.10) < 1e-12) table = kNemenyi10;
  else throw std::invalid_argument("nemenyi: alpha must be 0.01, 0.05 or 0.10");
  return table[k - 2];
}

NemenyiResult nemenyi(const RankMatrix& matrix, double alpha,
                      bool higher_is_better) {
  check_matrix(matrix);
  std::size_t k = matrix.col_count();
  double n = static_cast<double>(matrix.row_count());
  NemenyiResult out;
  out.avg_ranks = average_ranks(matrix, higher_is_better);
  double q = nemenyi_critical_value(k, alpha);
  out.critical_difference =
      q * std::sqrt(static_cast<double>(k) * (static_cast<double>(k) + 1.0) /
                    (6.0 * n));
  out.significant.assign(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      bool sig = std::fabs(out.avg_ranks[i] - out.avg_ranks[j]) >
                 out.critical_difference;
      out.significant[i * k + j] = sig ? 1 : 0;
    }
  }
  return out;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) {
    throw std::invalid_argument("kruskal_wallis: need >= 2 groups");
  }
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("kruskal_wallis: empty group");
    n += g.size();
  }

  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> pooled;
  pooled.reserve(n);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g]) pooled.push_back({v, g});
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const Obs& a, const Obs& b) { return a.value < b.value; });

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].value == pooled[i].value) ++j;
    double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
    double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    for (std::size_t s = i; s <= j; ++s) rank_sum[pooled[s].group] += avg;
    i = j + 1;
  }

  double nn = static_cast<double>(n);
  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (nn * (nn + 1.0)) * h - 3.0 * (nn + 1.0);
  double correction = 1.0 - tie_term / (nn * nn * nn - nn);
  if (correction <= 0.0) {
    return {0.0, 1.0};  // every value identical
  }
  h /= correction;
  h = std::max(h, 0.0);
  double df = static_cast<double>(groups.size()) - 1.0;
  return {h, mathx::chi_square_sf(h, df)};
}

std::string rank_diagram_json(const RankMatrix& matrix, double alpha,
                              bool higher_is_better) {
  NemenyiResult res = nemenyi(matrix, alpha, higher_is_better);
  nlohmann::json j;
  j["methods"] = matrix.methods;
  j["avg_ranks"] = res.avg_ranks;
  j["critical_difference"] = res.critical_difference;
  j["alpha"] = alpha;
  std::vector<std::vector<std::string>> pairs;
  for (std::size_t a = 0; a < matrix.col_count(); ++a) {
    for (std::size_t b = a + 1; b < matrix.col_count(); ++b) {
      if (res.pair_significant(a, b)) {
        pairs.push_back({matrix.methods[a], matrix.methods[b]});
      }
    }
  }
  j["significant_pairs"] = pairs;
  return j.dump(2);
}

}  // namespace churnnet
