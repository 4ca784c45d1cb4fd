#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "churnnet/cdr.hpp"
#include "churnnet/graph.hpp"

namespace churnnet {

// Per-customer feature matrix. Rows follow the node index; every cell is
// populated (absent activity encodes as 0, recency as the window length).
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<NodeIndex> rows;
  std::vector<double> values;  // row-major

  std::size_t row_count() const { return rows.size(); }
  std::size_t col_count() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const {
    return values[r * columns.size() + c];
  }
  double& at(std::size_t r, std::size_t c) {
    return values[r * columns.size() + c];
  }
  int column_index(const std::string& name) const;  // -1 if absent

  // Table restricted to the given rows (e.g. the at-risk customer base).
  FeatureTable subset(std::span<const std::size_t> row_indices) const;
};

struct DegreeFeatures {
  std::vector<double> full;
  std::vector<double> churn;
  std::vector<double> nonchurn;
};

struct TriangleFeatures {
  std::vector<double> full;
  std::vector<double> churn;
  std::vector<double> nonchurn;
};

struct LinkFeatures {
  std::vector<double> mode_link;          // 1 = churner majority, ties -> 0
  std::vector<double> count_link_churn;   // weighted neighbor class fractions
  std::vector<double> count_link_nonchurn;
  std::vector<double> binary_link_churn;
  std::vector<double> binary_link_nonchurn;
};

struct RfmFeatures {
  std::vector<double> recency_days;
  std::vector<double> calls_30, calls_60, calls_90;
  std::vector<double> seconds_30, seconds_60, seconds_90;
};

DegreeFeatures degree_features(const CallGraph& graph,
                               std::span<const std::uint8_t> labels);

// Triangles on the undirected simple view of the graph; the churn/nonchurn
// variants require both other corners to carry that label.
TriangleFeatures triangle_features(const CallGraph& graph,
                                   std::span<const std::uint8_t> labels);

// Local clustering coefficient on the undirected view, 0 for degree < 2.
std::vector<double> transitivity(const CallGraph& graph);

LinkFeatures link_based(const CallGraph& graph,
                        std::span<const std::uint8_t> labels);

// Recency / frequency / monetary aggregates over 30/60/90-day lookbacks from
// `reference`. A customer with no activity gets recency = window length in
// days and zero aggregates. Activity counts both call directions.
RfmFeatures rfm_features(std::span<const CdrRecord> records,
                         std::size_t node_count, std::int64_t window_begin,
                         std::int64_t reference);

enum class FeatureMode { network_only, rl_only, all };

const char* to_string(FeatureMode m);
FeatureMode feature_mode_from_string(const std::string& s);

struct NetworkFeatureBlock {
  DegreeFeatures degree;
  TriangleFeatures triangles;
  std::vector<double> transitivity;
  LinkFeatures link;
  RfmFeatures rfm;
};

// Relational-learner score columns appended to the table, named by learner id.
struct RlScoreColumn {
  std::string learner;  // "ci-rc", e.g. "no-nlb"
  std::vector<double> scores;
};

// Assembles the feature table for the requested mode. All blocks must be
// indexed by the same customer set; mismatched sizes throw
// std::invalid_argument, as does rl_only with no score columns.
FeatureTable assemble(const NetworkFeatureBlock& block,
                      std::span<const RlScoreColumn> rl_scores,
                      FeatureMode mode);

void write_feature_csv(const FeatureTable& table, const IdTable& ids,
                       const std::vector<std::uint8_t>* labels,
                       std::ostream& out);

}  // namespace churnnet
