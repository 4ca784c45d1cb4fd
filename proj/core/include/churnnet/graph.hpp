#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "churnnet/cdr.hpp"

namespace churnnet {

enum class Direction { undirected, outgoing, incoming };
enum class WeightScheme { length, count, average, binary };

const char* to_string(Direction d);
const char* to_string(WeightScheme s);
Direction direction_from_string(const std::string& s);
WeightScheme scheme_from_string(const std::string& s);

namespace defaults {
// One-year-old links keep 1% influence, three-month-old links about 32%.
inline constexpr double kDecayGammaPerWeek = 0.08858929834567401;  // ln(100)/52
}  // namespace defaults

struct DecaySpec {
  bool enabled = false;
  double gamma = defaults::kDecayGammaPerWeek;  // per week
};

enum class SegmentKind : std::uint8_t {
  whole,
  day_of_week,   // param 0..6, 0 = Monday (epoch starts a Monday 00:00)
  part_of_week,  // param 0 = working days Mon-Fri, 1 = weekend
  time_of_day,   // param 0 = Day[8,16), 1 = Evening[16,24), 2 = Night[0,8)
};

struct SegmentTerm {
  SegmentKind kind = SegmentKind::whole;
  int param = 0;
  double coeff = 1.0;
};

struct SegmentSpec {
  std::string name = "whole";
  std::vector<SegmentTerm> terms{SegmentTerm{}};

  static SegmentSpec whole();
  static SegmentSpec day_of_week(int day);
  static SegmentSpec part_of_week(int part);
  static SegmentSpec time_of_day(int slot);
  // e.g. combo("wd+we/3", {{part_of_week,0,1.0},{part_of_week,1,1.0/3.0}})
  static SegmentSpec combo(std::string name, std::vector<SegmentTerm> terms);

  void validate() const;  // throws std::invalid_argument on coeff <= 0
};

// The 21 segmentations used by the architecture grid: whole, the seven days,
// WD/WE, Day/Evening/Night, and the four combinations of each.
std::vector<SegmentSpec> standard_segments();

// Per-record coefficient under the segment; 0 means excluded.
double segment_coefficient(const SegmentSpec& spec, std::int64_t ts,
                           std::int64_t epoch);

struct SegmentedRecords {
  std::vector<CdrRecord> records;
  std::vector<double> coeff;  // same length as records
};

SegmentedRecords segment_records(std::span<const CdrRecord> records,
                                 const SegmentSpec& spec, std::int64_t epoch);

// Sparse weighted call graph in CSR form over the store's full node index.
// Stored edges always have weight > 0; undirected graphs store both (i,j)
// and (j,i) with equal weights.
struct CallGraph {
  std::size_t nodes = 0;
  std::vector<std::size_t> offsets;    // nodes + 1
  std::vector<NodeIndex> neighbors;
  std::vector<double> weights;
  std::vector<std::uint8_t> mutual;    // per edge: calls existed both ways
  Direction direction = Direction::undirected;
  WeightScheme scheme = WeightScheme::length;
  DecaySpec decay;
  std::string segment = "whole";
  bool reciprocal_only = false;

  std::size_t node_count() const { return nodes; }
  std::size_t edge_count() const { return neighbors.size(); }
  std::size_t degree(NodeIndex i) const { return offsets[i + 1] - offsets[i]; }
  std::span<const NodeIndex> neighbors_of(NodeIndex i) const {
    return {neighbors.data() + offsets[i], degree(i)};
  }
  std::span<const double> weights_of(NodeIndex i) const {
    return {weights.data() + offsets[i], degree(i)};
  }
  std::vector<double> weight_sums() const;  // per-node sum over stored edges
};

struct GraphBuildOptions {
  Direction direction = Direction::undirected;
  WeightScheme scheme = WeightScheme::length;
  DecaySpec decay;
  SegmentSpec segment = SegmentSpec::whole();
  bool reciprocal_only = false;
};

// Aggregates the record view over `period` into a call graph. Weight schemes:
//   length  - sum of call seconds per pair
//   count   - number of calls per pair
//   average - mean of min-max normalized length and count over all pairs
//   binary  - 1 iff at least one call (decay has no effect by construction)
// Undirected graphs merge the two ordered pairs by summation before the
// scheme is applied. Decay multiplies each contribution by e^(-gamma*t) with
// t the whole-week age counted back from the end of the period.
CallGraph build_graph(const CdrStore& store, MonthRange period,
                      const GraphBuildOptions& options);

// Weekly decay aggregation: sum of e^(-gamma*t) * w over (t, w) pairs.
// Throws std::invalid_argument for negative week indices or gamma < 0.
double apply_decay(std::span<const std::pair<int, double>> weekly_weights,
                   double gamma);

// Keeps edges whose endpoints called each other in both directions.
CallGraph filter_reciprocal(const CallGraph& graph);

// Fraction of nonzero ordered pairs; throws for fewer than two nodes.
double sparsity(const CallGraph& graph);

// Edge-list CSV (src,dst,weight) plus a JSON sidecar (metadata and node ids)
// for caching built graphs across runs.
void export_graph(const CallGraph& graph, const IdTable& ids,
                  std::ostream& edges_csv, std::ostream& sidecar_json);
CallGraph import_graph(std::istream& edges_csv, std::istream& sidecar_json,
                       IdTable& ids);

}  // namespace churnnet
