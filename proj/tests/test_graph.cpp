#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "churnnet/graph.hpp"
#include "oracles.hpp"

using namespace churnnet;

namespace {

CdrStore store_from(std::vector<CdrRecord> records, std::size_t n_ids) {
  IdTable ids;
  for (std::size_t i = 0; i < n_ids; ++i) ids.intern("C" + std::to_string(i));
  return CdrStore(std::move(ids), std::move(records), 0);
}

double weight_between(const CallGraph& g, NodeIndex i, NodeIndex j) {
  auto nbrs = g.neighbors_of(i);
  auto ws = g.weights_of(i);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    if (nbrs[k] == j) return ws[k];
  }
  return 0.0;
}

}  // namespace

TEST_CASE("weight schemes on two calls A->B") {
  CdrStore store = store_from({{0, 1, 100, 30}, {0, 1, 500, 70}}, 3);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;

  opts.scheme = WeightScheme::length;
  CHECK(weight_between(build_graph(store, {1, 1}, opts), 0, 1) == 100.0);
  opts.scheme = WeightScheme::count;
  CHECK(weight_between(build_graph(store, {1, 1}, opts), 0, 1) == 2.0);
  opts.scheme = WeightScheme::binary;
  CHECK(weight_between(build_graph(store, {1, 1}, opts), 0, 1) == 1.0);
}

TEST_CASE("undirected graphs merge both directions symmetrically") {
  CdrStore store = store_from({{0, 1, 100, 30}, {0, 1, 500, 70}}, 3);
  GraphBuildOptions opts;
  opts.direction = Direction::undirected;
  opts.scheme = WeightScheme::length;
  CallGraph g = build_graph(store, {1, 1}, opts);
  CHECK(weight_between(g, 0, 1) == 100.0);
  CHECK(weight_between(g, 1, 0) == 100.0);
}

TEST_CASE("incoming graphs reverse the edge direction") {
  // A->B and B->A only: incoming graph of A has one edge from B
  CdrStore store = store_from({{0, 1, 100, 30}, {1, 0, 200, 40}}, 3);
  GraphBuildOptions opts;
  opts.direction = Direction::incoming;
  opts.scheme = WeightScheme::length;
  CallGraph g = build_graph(store, {1, 1}, opts);
  REQUIRE(g.degree(0) == 1);
  CHECK(g.neighbors_of(0)[0] == 1);
  CHECK(weight_between(g, 0, 1) == 40.0);  // the B->A call
  CHECK(g.degree(2) == 0);
}

TEST_CASE("undirected symmetry holds on random records") {
  std::mt19937_64 gen(7);
  std::vector<CdrRecord> records;
  for (int k = 0; k < 500; ++k) {
    NodeIndex a = static_cast<NodeIndex>(gen() % 20);
    NodeIndex b = static_cast<NodeIndex>(gen() % 20);
    if (a == b) continue;
    records.push_back({a, b, static_cast<std::int64_t>(gen() % kSecondsPerMonth),
                       static_cast<std::uint32_t>(1 + gen() % 600)});
  }
  CdrStore store = store_from(std::move(records), 20);
  for (WeightScheme ws : {WeightScheme::length, WeightScheme::count,
                          WeightScheme::average, WeightScheme::binary}) {
    GraphBuildOptions opts;
    opts.direction = Direction::undirected;
    opts.scheme = ws;
    CallGraph g = build_graph(store, {1, 1}, opts);
    for (NodeIndex i = 0; i < g.nodes; ++i) {
      auto nbrs = g.neighbors_of(i);
      auto wsv = g.weights_of(i);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        CHECK(weight_between(g, nbrs[k], i) == wsv[k]);
      }
    }
  }
}

TEST_CASE("binary weights equal the indicator of positive counts") {
  std::mt19937_64 gen(11);
  std::vector<CdrRecord> records;
  for (int k = 0; k < 300; ++k) {
    NodeIndex a = static_cast<NodeIndex>(gen() % 15);
    NodeIndex b = static_cast<NodeIndex>(gen() % 15);
    if (a == b) continue;
    records.push_back({a, b, static_cast<std::int64_t>(gen() % kSecondsPerMonth),
                       static_cast<std::uint32_t>(1 + gen() % 100)});
  }
  CdrStore store = store_from(std::move(records), 15);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;
  opts.scheme = WeightScheme::count;
  CallGraph counts = build_graph(store, {1, 1}, opts);
  opts.scheme = WeightScheme::binary;
  CallGraph binary = build_graph(store, {1, 1}, opts);
  REQUIRE(counts.edge_count() == binary.edge_count());
  for (std::size_t e = 0; e < counts.edge_count(); ++e) {
    CHECK(binary.weights[e] == (counts.weights[e] > 0.0 ? 1.0 : 0.0));
  }
}

TEST_CASE("average scheme stays in [0,1]") {
  CdrStore store = store_from(
      {{0, 1, 100, 30}, {0, 1, 200, 40}, {1, 2, 300, 600}, {2, 3, 400, 5}}, 4);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;
  opts.scheme = WeightScheme::average;
  CallGraph g = build_graph(store, {1, 1}, opts);
  for (double w : g.weights) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
  }
}

TEST_CASE("apply_decay identities") {
  std::vector<std::pair<int, double>> weekly{{0, 10.0}, {1, 20.0}, {2, 30.0}};
  CHECK(apply_decay(weekly, 0.0) == doctest::Approx(60.0));  // gamma 0 = sum
  std::vector<std::pair<int, double>> single{{0, 5.0}};
  CHECK(apply_decay(single, 3.7) == doctest::Approx(5.0));  // e^0 = 1
}

TEST_CASE("apply_decay matches the hand-computed year-old link") {
  // weeks {0:10, 52:10} at gamma = ln(100)/52: 10 + 10/100 = 10.1
  std::vector<std::pair<int, double>> weekly{{0, 10.0}, {52, 10.0}};
  double gamma = std::log(100.0) / 52.0;
  CHECK(apply_decay(weekly, gamma) == doctest::Approx(10.1).epsilon(1e-12));
}

TEST_CASE("apply_decay rejects negative weeks") {
  std::vector<std::pair<int, double>> weekly{{-1, 10.0}};
  CHECK_THROWS_AS(apply_decay(weekly, 0.1), std::invalid_argument);
}

TEST_CASE("decay monotonicity in gamma") {
  std::vector<std::pair<int, double>> weekly{{0, 3.0}, {5, 7.0}, {11, 2.0}};
  double prev = apply_decay(weekly, 0.0);
  for (double gamma : {0.05, 0.1, 0.5, 1.0, 2.0}) {
    double cur = apply_decay(weekly, gamma);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("built graphs apply decay by week counted from the period end") {
  // one call in the last week, one exactly four weeks earlier
  std::int64_t end = kSecondsPerMonth;
  std::vector<CdrRecord> records{
      {0, 1, end - 100, 100},
      {0, 1, end - 100 - 4 * kSecondsPerWeek, 100},
  };
  CdrStore store = store_from(std::move(records), 2);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;
  opts.scheme = WeightScheme::length;
  opts.decay = DecaySpec{true, 0.25};
  CallGraph g = build_graph(store, {1, 1}, opts);
  double expected = 100.0 + 100.0 * std::exp(-0.25 * 4.0);
  CHECK(weight_between(g, 0, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("segment membership and coefficients") {
  // epoch starts a Monday; day 5 is Saturday
  SegmentSpec monday = SegmentSpec::day_of_week(0);
  SegmentSpec saturday = SegmentSpec::day_of_week(5);
  std::int64_t sunday_ts = 6 * kSecondsPerDay + 10 * 3600;
  CHECK(segment_coefficient(monday, sunday_ts, 0) == 0.0);
  CHECK(segment_coefficient(SegmentSpec::day_of_week(6), sunday_ts, 0) == 1.0);
  CHECK(segment_coefficient(saturday, 5 * kSecondsPerDay, 0) == 1.0);

  // WD + (1/3) WE
  SegmentSpec combo = SegmentSpec::combo(
      "wd+we/3", {{SegmentKind::part_of_week, 0, 1.0},
                  {SegmentKind::part_of_week, 1, 1.0 / 3.0}});
  std::int64_t tuesday = 1 * kSecondsPerDay + 12 * 3600;
  std::int64_t saturday_ts = 5 * kSecondsPerDay + 12 * 3600;
  CHECK(segment_coefficient(combo, tuesday, 0) == doctest::Approx(1.0));
  CHECK(segment_coefficient(combo, saturday_ts, 0) == doctest::Approx(1.0 / 3.0));

  // time-of-day bins: Day[8,16) Evening[16,24) Night[0,8)
  SegmentSpec day = SegmentSpec::time_of_day(0);
  SegmentSpec evening = SegmentSpec::time_of_day(1);
  SegmentSpec night = SegmentSpec::time_of_day(2);
  CHECK(segment_coefficient(day, 8 * 3600, 0) == 1.0);
  CHECK(segment_coefficient(day, 16 * 3600, 0) == 0.0);
  CHECK(segment_coefficient(evening, 23 * 3600 + 3599, 0) == 1.0);
  CHECK(segment_coefficient(night, 0, 0) == 1.0);
  CHECK(segment_coefficient(night, 7 * 3600 + 3599, 0) == 1.0);
  CHECK(segment_coefficient(night, 8 * 3600, 0) == 0.0);
}

TEST_CASE("segment_records: Monday view of Sunday calls is empty") {
  std::vector<CdrRecord> records;
  for (int k = 0; k < 5; ++k) {
    records.push_back({0, 1, 6 * kSecondsPerDay + k * 3600, 60});  // Sunday
  }
  CdrStore store = store_from(std::move(records), 2);
  SegmentedRecords view =
      segment_records(store.months({1, 1}), SegmentSpec::day_of_week(0), 0);
  CHECK(view.records.empty());
}

TEST_CASE("combo coefficients scale weight contributions") {
  // one Tuesday call worth 3 and one Saturday call worth 3 under the count
  // scheme with WD + (1/3)WE: contributions 3 and 1
  std::vector<CdrRecord> records;
  for (int k = 0; k < 3; ++k) {
    records.push_back({0, 1, 1 * kSecondsPerDay + k * 60, 60});   // Tuesday
    records.push_back({0, 1, 5 * kSecondsPerDay + k * 60, 60});   // Saturday
  }
  CdrStore store = store_from(std::move(records), 2);
  GraphBuildOptions wd_only;
  wd_only.direction = Direction::outgoing;
  wd_only.scheme = WeightScheme::count;
  wd_only.segment = SegmentSpec::combo(
      "wd+we/3", {{SegmentKind::part_of_week, 0, 1.0},
                  {SegmentKind::part_of_week, 1, 1.0 / 3.0}});
  CallGraph g = build_graph(store, {1, 1}, wd_only);
  CHECK(weight_between(g, 0, 1) == doctest::Approx(4.0));  // 3 + 3/3
}

TEST_CASE("half-day-plus-evening halves daytime contributions") {
  std::vector<CdrRecord> records;
  records.push_back({0, 1, 10 * 3600, 60});  // day
  records.push_back({0, 1, 20 * 3600, 60});  // evening
  CdrStore store = store_from(std::move(records), 2);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;
  opts.scheme = WeightScheme::count;
  opts.segment = SegmentSpec::combo(
      "day/2+evening", {{SegmentKind::time_of_day, 0, 0.5},
                        {SegmentKind::time_of_day, 1, 1.0}});
  CallGraph g = build_graph(store, {1, 1}, opts);
  CHECK(weight_between(g, 0, 1) == doctest::Approx(1.5));
}

TEST_CASE("day-of-week views partition the record set") {
  std::mt19937_64 gen(3);
  std::vector<CdrRecord> records;
  for (int k = 0; k < 200; ++k) {
    records.push_back({0, 1,
                       static_cast<std::int64_t>(gen() % kSecondsPerMonth),
                       60});
  }
  CdrStore store = store_from(std::move(records), 2);
  std::size_t total = 0;
  for (int d = 0; d < 7; ++d) {
    total += segment_records(store.months({1, 1}),
                             SegmentSpec::day_of_week(d), 0)
                 .records.size();
  }
  CHECK(total == store.records().size());
}

TEST_CASE("coefficients must be positive") {
  CHECK_THROWS_AS(SegmentSpec::combo("bad", {{SegmentKind::part_of_week, 0, 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("standard segment list matches the grid") {
  CHECK(standard_segments().size() == 21);
}

TEST_CASE("filter_reciprocal basics") {
  CdrStore store = store_from(
      {{0, 1, 100, 60},   // A->B only
       {1, 2, 200, 60},   // B->C and C->B
       {2, 1, 300, 60}},
      3);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;
  opts.scheme = WeightScheme::count;
  CallGraph g = build_graph(store, {1, 1}, opts);
  CallGraph r = filter_reciprocal(g);
  CHECK(weight_between(r, 0, 1) == 0.0);  // removed
  CHECK(weight_between(r, 1, 2) == 1.0);  // retained
  CHECK(weight_between(r, 2, 1) == 1.0);
  CHECK(r.edge_count() <= g.edge_count());
}

TEST_CASE("filter_reciprocal matches a brute-force mutual-pair scan") {
  std::mt19937_64 gen(13);
  std::vector<CdrRecord> records;
  std::set<std::pair<NodeIndex, NodeIndex>> called;
  for (int k = 0; k < 120; ++k) {
    NodeIndex a = static_cast<NodeIndex>(gen() % 20);
    NodeIndex b = static_cast<NodeIndex>(gen() % 20);
    if (a == b) continue;
    records.push_back({a, b, static_cast<std::int64_t>(gen() % kSecondsPerMonth),
                       60});
    called.insert({a, b});
  }
  CdrStore store = store_from(std::move(records), 20);
  GraphBuildOptions opts;
  opts.direction = Direction::outgoing;
  opts.scheme = WeightScheme::count;
  CallGraph g = build_graph(store, {1, 1}, opts);
  CallGraph r = filter_reciprocal(g);
  // oracle: O(E^2)-style scan over the raw ordered pairs
  for (NodeIndex i = 0; i < 20; ++i) {
    for (NodeIndex j = 0; j < 20; ++j) {
      if (i == j) continue;
      bool mutual = called.count({i, j}) && called.count({j, i});
      bool kept = weight_between(r, i, j) > 0.0;
      CHECK(kept == mutual);
    }
  }
}

TEST_CASE("sparsity on small graphs") {
  // complete undirected triangle -> 1.0
  CdrStore store = store_from(
      {{0, 1, 100, 60}, {1, 2, 200, 60}, {0, 2, 300, 60}}, 3);
  GraphBuildOptions opts;
  opts.direction = Direction::undirected;
  opts.scheme = WeightScheme::binary;
  CHECK(sparsity(build_graph(store, {1, 1}, opts)) == doctest::Approx(1.0));

  // empty edge set -> 0
  CdrStore empty_store = store_from({}, 3);
  CHECK(sparsity(build_graph(empty_store, {1, 1}, opts)) == 0.0);

  // path A-B-C -> 4/6
  CdrStore path = store_from({{0, 1, 100, 60}, {1, 2, 200, 60}}, 3);
  CHECK(sparsity(build_graph(path, {1, 1}, opts)) ==
        doctest::Approx(4.0 / 6.0));
}

TEST_CASE("sparsity needs two nodes") {
  CallGraph g;
  g.nodes = 1;
  g.offsets = {0, 0};
  CHECK_THROWS_AS(sparsity(g), std::invalid_argument);
}

TEST_CASE("empty record view builds an empty graph, not an error") {
  CdrStore store = store_from({{0, 1, 100, 60}}, 2);
  GraphBuildOptions opts;
  CallGraph g = build_graph(store, {2, 2}, opts);
  CHECK(g.edge_count() == 0);
}

TEST_CASE("graph export/import round-trips") {
  CdrStore store = store_from(
      {{0, 1, 100, 30}, {1, 0, 200, 50}, {1, 2, 300, 70}}, 3);
  GraphBuildOptions opts;
  opts.direction = Direction::undirected;
  opts.scheme = WeightScheme::length;
  opts.decay = DecaySpec{true, 0.1};
  CallGraph g = build_graph(store, {1, 1}, opts);

  std::ostringstream edges, sidecar;
  export_graph(g, store.ids(), edges, sidecar);
  std::istringstream edges_in(edges.str()), sidecar_in(sidecar.str());
  IdTable ids;
  CallGraph back = import_graph(edges_in, sidecar_in, ids);
  CHECK(back.nodes == g.nodes);
  CHECK(back.direction == g.direction);
  CHECK(back.scheme == g.scheme);
  CHECK(back.decay.enabled == g.decay.enabled);
  CHECK(back.decay.gamma == doctest::Approx(g.decay.gamma));
  REQUIRE(back.edge_count() == g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    CHECK(back.neighbors[e] == g.neighbors[e]);
    CHECK(back.weights[e] == doctest::Approx(g.weights[e]).epsilon(1e-14));
    CHECK(back.mutual[e] == g.mutual[e]);
  }
}
