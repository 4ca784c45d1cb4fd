#include "churnnet/features.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "churnnet/csv.hpp"

namespace churnnet {

int FeatureTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> row_indices) const {
  FeatureTable out;
  out.columns = columns;
  out.rows.reserve(row_indices.size());
  out.values.reserve(row_indices.size() * columns.size());
  for (std::size_t r : row_indices) {
    out.rows.push_back(rows[r]);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out.values.push_back(at(r, c));
    }
  }
  return out;
}

DegreeFeatures degree_features(const CallGraph& graph,
                               std::span<const std::uint8_t> labels) {
  if (labels.size() != graph.nodes) {
    throw std::invalid_argument("degree_features: labels must cover all nodes");
  }
  DegreeFeatures f;
  f.full.assign(graph.nodes, 0.0);
  f.churn.assign(graph.nodes, 0.0);
  f.nonchurn.assign(graph.nodes, 0.0);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    auto nbrs = graph.neighbors_of(i);
    f.full[i] = static_cast<double>(nbrs.size());
    double churn = 0.0;
    for (NodeIndex j : nbrs) churn += labels[j] ? 1.0 : 0.0;
    f.churn[i] = churn;
    f.nonchurn[i] = f.full[i] - churn;
  }
  return f;
}

namespace {

// Undirected simple adjacency (sorted neighbor lists, direction ignored).
std::vector<std::vector<NodeIndex>> undirected_view(const CallGraph& g) {
  std::vector<std::vector<NodeIndex>> adj(g.nodes);
  for (NodeIndex i = 0; i < g.nodes; ++i) {
    for (NodeIndex j : g.neighbors_of(i)) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

bool adjacent(const std::vector<NodeIndex>& sorted, NodeIndex x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

}  // namespace

TriangleFeatures triangle_features(const CallGraph& graph,
                                   std::span<const std::uint8_t> labels) {
  if (labels.size() != graph.nodes) {
    throw std::invalid_argument("triangle_features: labels must cover all nodes");
  }
  auto adj = undirected_view(graph);
  TriangleFeatures f;
  f.full.assign(graph.nodes, 0.0);
  f.churn.assign(graph.nodes, 0.0);
  f.nonchurn.assign(graph.nodes, 0.0);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    const auto& nbrs = adj[i];
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
        if (!adjacent(adj[nbrs[a]], nbrs[b])) continue;
        f.full[i] += 1.0;
        bool ca = labels[nbrs[a]] != 0;
        bool cb = labels[nbrs[b]] != 0;
        if (ca && cb) f.churn[i] += 1.0;
        if (!ca && !cb) f.nonchurn[i] += 1.0;
      }
    }
  }
  return f;
}

std::vector<double> transitivity(const CallGraph& graph) {
  auto adj = undirected_view(graph);
  std::vector<double> out(graph.nodes, 0.0);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    std::size_t d = adj[i].size();
    if (d < 2) continue;
    double tri = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        if (adjacent(adj[adj[i][a]], adj[i][b])) tri += 1.0;
      }
    }
    out[i] = tri / (0.5 * static_cast<double>(d) * static_cast<double>(d - 1));
  }
  return out;
}

LinkFeatures link_based(const CallGraph& graph,
                        std::span<const std::uint8_t> labels) {
  if (labels.size() != graph.nodes) {
    throw std::invalid_argument("link_based: labels must cover all nodes");
  }
  LinkFeatures f;
  f.mode_link.assign(graph.nodes, 0.0);
  f.count_link_churn.assign(graph.nodes, 0.0);
  f.count_link_nonchurn.assign(graph.nodes, 0.0);
  f.binary_link_churn.assign(graph.nodes, 0.0);
  f.binary_link_nonchurn.assign(graph.nodes, 0.0);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    auto nbrs = graph.neighbors_of(i);
    auto ws = graph.weights_of(i);
    double w_churn = 0.0, w_total = 0.0;
    std::size_t n_churn = 0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      bool c = labels[nbrs[k]] != 0;
      w_total += ws[k];
      if (c) {
        w_churn += ws[k];
        ++n_churn;
      }
    }
    std::size_t n_non = nbrs.size() - n_churn;
    f.mode_link[i] = n_churn > n_non ? 1.0 : 0.0;  // ties -> non-churner
    if (w_total > 0.0) {
      f.count_link_churn[i] = w_churn / w_total;
      f.count_link_nonchurn[i] = (w_total - w_churn) / w_total;
    }
    f.binary_link_churn[i] = n_churn > 0 ? 1.0 : 0.0;
    f.binary_link_nonchurn[i] = n_non > 0 ? 1.0 : 0.0;
  }
  return f;
}

RfmFeatures rfm_features(std::span<const CdrRecord> records,
                         std::size_t node_count, std::int64_t window_begin,
                         std::int64_t reference) {
  if (reference <= window_begin) {
    throw std::invalid_argument("rfm_features: reference before window start");
  }
  RfmFeatures f;
  double window_days =
      static_cast<double>(reference - window_begin) / kSecondsPerDay;
  f.recency_days.assign(node_count, window_days);
  f.calls_30.assign(node_count, 0.0);
  f.calls_60.assign(node_count, 0.0);
  f.calls_90.assign(node_count, 0.0);
  f.seconds_30.assign(node_count, 0.0);
  f.seconds_60.assign(node_count, 0.0);
  f.seconds_90.assign(node_count, 0.0);

  std::vector<std::int64_t> last(node_count, -1);
  auto bump = [&](NodeIndex who, const CdrRecord& r) {
    last[who] = std::max(last[who], r.start);
    std::int64_t age = reference - r.start;
    double dur = static_cast<double>(r.duration);
    if (age <= 30 * kSecondsPerDay) {
      f.calls_30[who] += 1.0;
      f.seconds_30[who] += dur;
    }
    if (age <= 60 * kSecondsPerDay) {
      f.calls_60[who] += 1.0;
      f.seconds_60[who] += dur;
    }
    if (age <= 90 * kSecondsPerDay) {
      f.calls_90[who] += 1.0;
      f.seconds_90[who] += dur;
    }
  };
  for (const CdrRecord& r : records) {
    if (r.start < window_begin || r.start >= reference) continue;
    bump(r.caller, r);
    bump(r.callee, r);
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    if (last[i] >= 0) {
      f.recency_days[i] =
          static_cast<double>(reference - last[i]) / kSecondsPerDay;
    }
  }
  return f;
}

const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::network_only: return "network_only";
    case FeatureMode::rl_only: return "rl_only";
    case FeatureMode::all: return "all";
  }
  return "?";
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "network_only" || s == "no") return FeatureMode::network_only;
  if (s == "rl_only" || s == "rl") return FeatureMode::rl_only;
  if (s == "all") return FeatureMode::all;
  throw std::invalid_argument("unknown feature mode: " + s);
}

FeatureTable assemble(const NetworkFeatureBlock& block,
                      std::span<const RlScoreColumn> rl_scores,
                      FeatureMode mode) {
  std::size_t n = block.degree.full.size();
  auto check = [&](std::size_t got, const char* what) {
    if (got != n) {
      throw std::invalid_argument(std::string("assemble: block '") + what +
                                  "' has mismatched row count");
    }
  };
  check(block.degree.churn.size(), "degree");
  check(block.triangles.full.size(), "triangles");
  check(block.transitivity.size(), "transitivity");
  check(block.link.mode_link.size(), "link");
  check(block.rfm.recency_days.size(), "rfm");
  for (const RlScoreColumn& col : rl_scores) {
    check(col.scores.size(), col.learner.c_str());
  }
  if (mode == FeatureMode::rl_only && rl_scores.empty()) {
    throw std::invalid_argument("assemble: rl_only with no score columns");
  }

  FeatureTable t;
  std::vector<std::pair<std::string, const std::vector<double>*>> cols;
  if (mode != FeatureMode::rl_only) {
    cols = {
        {"degree_full", &block.degree.full},
        {"degree_churn", &block.degree.churn},
        {"degree_nonchurn", &block.degree.nonchurn},
        {"triangles_full", &block.triangles.full},
        {"triangles_churn", &block.triangles.churn},
        {"triangles_nonchurn", &block.triangles.nonchurn},
        {"transitivity", &block.transitivity},
        {"mode_link", &block.link.mode_link},
        {"count_link_churn", &block.link.count_link_churn},
        {"count_link_nonchurn", &block.link.count_link_nonchurn},
        {"binary_link_churn", &block.link.binary_link_churn},
        {"binary_link_nonchurn", &block.link.binary_link_nonchurn},
        {"recency_days", &block.rfm.recency_days},
        {"calls_30", &block.rfm.calls_30},
        {"calls_60", &block.rfm.calls_60},
        {"calls_90", &block.rfm.calls_90},
        {"seconds_30", &block.rfm.seconds_30},
        {"seconds_60", &block.rfm.seconds_60},
        {"seconds_90", &block.rfm.seconds_90},
    };
  }
  if (mode != FeatureMode::network_only) {
    for (const RlScoreColumn& col : rl_scores) {
      cols.emplace_back(col.learner, &col.scores);
    }
  }

  for (auto& [name, ptr] : cols) t.columns.push_back(name);
  t.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.rows[i] = static_cast<NodeIndex>(i);
  t.values.resize(n * cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      t.values[i * cols.size() + c] = (*cols[c].second)[i];
    }
  }
  return t;
}

void write_feature_csv(const FeatureTable& table, const IdTable& ids,
                       const std::vector<std::uint8_t>* labels,
                       std::ostream& out) {
  out << "customer";
  for (const std::string& c : table.columns) out << ',' << csv::escape(c);
  if (labels) out << ",label";
  out << '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    out << csv::escape(ids.name(table.rows[r]));
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      out << ',' << csv::format_double(table.at(r, c));
    }
    if (labels) out << ',' << ((*labels)[table.rows[r]] ? 1 : 0);
    out << '\n';
  }
}

}  // namespace churnnet
