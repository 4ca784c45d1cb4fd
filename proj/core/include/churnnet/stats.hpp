#pragma once

#include <string>
#include <vector>

namespace churnnet {

// Datasets x methods table of performance values.
struct RankMatrix {
  std::vector<std::string> datasets;  // rows
  std::vector<std::string> methods;   // columns
  std::vector<double> values;         // row-major

  std::size_t row_count() const { return datasets.size(); }
  std::size_t col_count() const { return methods.size(); }
  double at(std::size_t r, std::size_t c) const {
    return values[r * methods.size() + c];
  }
  double& at(std::size_t r, std::size_t c) {
    return values[r * methods.size() + c];
  }
};

// Per-row ranks (1 = best, ties averaged) averaged over rows.
std::vector<double> average_ranks(const RankMatrix& matrix,
                                  bool higher_is_better);

struct TestResult {
  double statistic;
  double p_value;
};

// Friedman chi-square on average ranks; the Iman-Davenport F correction is
// available behind the flag. Needs >= 2 methods and >= 2 datasets.
TestResult friedman(const RankMatrix& matrix, bool higher_is_better,
                    bool iman_davenport = false);

struct NemenyiResult {
  double critical_difference;
  std::vector<double> avg_ranks;
  // symmetric significance flags, row-major k x k
  std::vector<std::uint8_t> significant;

  bool pair_significant(std::size_t i, std::size_t j) const {
    return significant[i * avg_ranks.size() + j] != 0;
  }
};

// Post-hoc Nemenyi: CD = q_alpha * sqrt(k(k+1)/(6N)). Critical values come
// from the embedded studentized-range table (k <= 30; alpha 0.01/0.05/0.10).
NemenyiResult nemenyi(const RankMatrix& matrix, double alpha,
                      bool higher_is_better);

double nemenyi_critical_value(std::size_t k, double alpha);

// Rank-sum H statistic with tie correction; chi-square p-value. Groups of
// identical values yield statistic 0 and p-value 1.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Data needed to redraw a critical-difference rank diagram.
std::string rank_diagram_json(const RankMatrix& matrix, double alpha,
                              bool higher_is_better);

}  // namespace churnnet
