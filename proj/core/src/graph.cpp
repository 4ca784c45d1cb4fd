#include "churnnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "churnnet/csv.hpp"

namespace churnnet {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::undirected: return "undirected";
    case Direction::outgoing: return "outgoing";
    case Direction::incoming: return "incoming";
  }
  return "?";
}

const char* to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::length: return "length";
    case WeightScheme::count: return "count";
    case WeightScheme::average: return "average";
    case WeightScheme::binary: return "binary";
  }
  return "?";
}

Direction direction_from_string(const std::string& s) {
  if (s == "undirected") return Direction::undirected;
  if (s == "outgoing") return Direction::outgoing;
  if (s == "incoming") return Direction::incoming;
  throw std::invalid_argument("unknown direction: " + s);
}

WeightScheme scheme_from_string(const std::string& s) {
  if (s == "length") return WeightScheme::length;
  if (s == "count") return WeightScheme::count;
  if (s == "average") return WeightScheme::average;
  if (s == "binary") return WeightScheme::binary;
  throw std::invalid_argument("unknown weight scheme: " + s);
}

SegmentSpec SegmentSpec::whole() { return SegmentSpec{}; }

SegmentSpec SegmentSpec::day_of_week(int day) {
  static const char* names[] = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
  if (day < 0 || day > 6) throw std::invalid_argument("day_of_week: 0..6");
  return SegmentSpec{names[day], {{SegmentKind::day_of_week, day, 1.0}}};
}

SegmentSpec SegmentSpec::part_of_week(int part) {
  if (part < 0 || part > 1) throw std::invalid_argument("part_of_week: 0..1");
  return SegmentSpec{part == 0 ? "wd" : "we",
                     {{SegmentKind::part_of_week, part, 1.0}}};
}

SegmentSpec SegmentSpec::time_of_day(int slot) {
  static const char* names[] = {"day", "evening", "night"};
  if (slot < 0 || slot > 2) throw std::invalid_argument("time_of_day: 0..2");
  return SegmentSpec{names[slot], {{SegmentKind::time_of_day, slot, 1.0}}};
}

SegmentSpec SegmentSpec::combo(std::string name, std::vector<SegmentTerm> terms) {
  SegmentSpec spec{std::move(name), std::move(terms)};
  spec.validate();
  return spec;
}

void SegmentSpec::validate() const {
  if (terms.empty()) throw std::invalid_argument("segment: no terms");
  for (const SegmentTerm& t : terms) {
    if (t.coeff <= 0.0) throw std::invalid_argument("segment: coefficient <= 0");
  }
}

std::vector<SegmentSpec> standard_segments() {
  std::vector<SegmentSpec> out;
  out.push_back(SegmentSpec::whole());
  for (int d = 0; d < 7; ++d) out.push_back(SegmentSpec::day_of_week(d));
  for (int p = 0; p < 2; ++p) out.push_back(SegmentSpec::part_of_week(p));
  for (int s = 0; s < 3; ++s) out.push_back(SegmentSpec::time_of_day(s));
  auto wd = [](double c) { return SegmentTerm{SegmentKind::part_of_week, 0, c}; };
  auto we = [](double c) { return SegmentTerm{SegmentKind::part_of_week, 1, c}; };
  out.push_back(SegmentSpec::combo("wd/2+we", {wd(0.5), we(1.0)}));
  out.push_back(SegmentSpec::combo("wd+we/2", {wd(1.0), we(0.5)}));
  out.push_back(SegmentSpec::combo("wd/3+we", {wd(1.0 / 3.0), we(1.0)}));
  out.push_back(SegmentSpec::combo("wd+we/3", {wd(1.0), we(1.0 / 3.0)}));
  auto day = [](double c) { return SegmentTerm{SegmentKind::time_of_day, 0, c}; };
  auto eve = [](double c) { return SegmentTerm{SegmentKind::time_of_day, 1, c}; };
  out.push_back(SegmentSpec::combo("day/2+evening", {day(0.5), eve(1.0)}));
  out.push_back(SegmentSpec::combo("day+evening/2", {day(1.0), eve(0.5)}));
  out.push_back(SegmentSpec::combo("day/3+evening", {day(1.0 / 3.0), eve(1.0)}));
  out.push_back(SegmentSpec::combo("day+evening/3", {day(1.0), eve(1.0 / 3.0)}));
  return out;
}

double segment_coefficient(const SegmentSpec& spec, std::int64_t ts,
                           std::int64_t epoch) {
  std::int64_t rel = ts - epoch;
  if (rel < 0) return 0.0;
  int dow = static_cast<int>((rel / kSecondsPerDay) % 7);
  int hour = static_cast<int>((rel / 3600) % 24);
  double coeff = 0.0;
  for (const SegmentTerm& t : spec.terms) {
    bool match = false;
    switch (t.kind) {
      case SegmentKind::whole:
        match = true;
        break;
      case SegmentKind::day_of_week:
        match = dow == t.param;
        break;
      case SegmentKind::part_of_week:
        match = t.param == 0 ? dow <= 4 : dow >= 5;
        break;
      case SegmentKind::time_of_day:
        if (t.param == 0) match = hour >= 8 && hour < 16;
        else if (t.param == 1) match = hour >= 16;
        else match = hour < 8;
        break;
    }
    if (match) coeff += t.coeff;
  }
  return coeff;
}

SegmentedRecords segment_records(std::span<const CdrRecord> records,
                                 const SegmentSpec& spec, std::int64_t epoch) {
  spec.validate();
  SegmentedRecords out;
  for (const CdrRecord& r : records) {
    double c = segment_coefficient(spec, r.start, epoch);
    if (c > 0.0) {
      out.records.push_back(r);
      out.coeff.push_back(c);
    }
  }
  return out;
}

std::vector<double> CallGraph::weight_sums() const {
  std::vector<double> sums(nodes, 0.0);
  for (NodeIndex i = 0; i < nodes; ++i) {
    double s = 0.0;
    for (double w : weights_of(i)) s += w;
    sums[i] = s;
  }
  return sums;
}

double apply_decay(std::span<const std::pair<int, double>> weekly_weights,
                   double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("apply_decay: gamma < 0");
  double total = 0.0;
  for (const auto& [t, w] : weekly_weights) {
    if (t < 0) throw std::invalid_argument("apply_decay: negative week index");
    total += std::exp(-gamma * static_cast<double>(t)) * w;
  }
  return total;
}

namespace {

struct PairAgg {
  double length = 0.0;
  double count = 0.0;
  std::uint32_t calls = 0;  // raw, undecayed
};

struct EdgeTmp {
  NodeIndex src;
  NodeIndex dst;
  double length;
  double count;
  bool mutual;
};

std::uint64_t pair_key(NodeIndex a, NodeIndex b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

CallGraph assemble_csr(std::size_t nodes, std::vector<EdgeTmp> edges,
                       const GraphBuildOptions& options) {
  // weight per scheme
  std::vector<double> weight(edges.size(), 0.0);
  switch (options.scheme) {
    case WeightScheme::length:
      for (std::size_t i = 0; i < edges.size(); ++i) weight[i] = edges[i].length;
      break;
    case WeightScheme::count:
      for (std::size_t i = 0; i < edges.size(); ++i) weight[i] = edges[i].count;
      break;
    case WeightScheme::binary:
      for (std::size_t i = 0; i < edges.size(); ++i) weight[i] = 1.0;
      break;
    case WeightScheme::average: {
      double lmin = std::numeric_limits<double>::infinity(), lmax = -lmin;
      double cmin = lmin, cmax = -lmin;
      for (const EdgeTmp& e : edges) {
        lmin = std::min(lmin, e.length);
        lmax = std::max(lmax, e.length);
        cmin = std::min(cmin, e.count);
        cmax = std::max(cmax, e.count);
      }
      auto norm = [](double x, double lo, double hi) {
        return hi > lo ? (x - lo) / (hi - lo) : 1.0;
      };
      for (std::size_t i = 0; i < edges.size(); ++i) {
        weight[i] = 0.5 * (norm(edges[i].length, lmin, lmax) +
                           norm(edges[i].count, cmin, cmax));
      }
      break;
    }
  }

  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (edges[a].src != edges[b].src) return edges[a].src < edges[b].src;
    return edges[a].dst < edges[b].dst;
  });

  CallGraph g;
  g.nodes = nodes;
  g.direction = options.direction;
  g.scheme = options.scheme;
  g.decay = options.decay;
  g.segment = options.segment.name;
  g.reciprocal_only = options.reciprocal_only;
  g.offsets.assign(nodes + 1, 0);
  for (std::size_t idx : order) {
    if (weight[idx] <= 0.0) continue;  // zero weight is no edge
    ++g.offsets[edges[idx].src + 1];
  }
  for (std::size_t i = 0; i < nodes; ++i) g.offsets[i + 1] += g.offsets[i];
  g.neighbors.reserve(edges.size());
  g.weights.reserve(edges.size());
  g.mutual.reserve(edges.size());
  for (std::size_t idx : order) {
    if (weight[idx] <= 0.0) continue;
    g.neighbors.push_back(edges[idx].dst);
    g.weights.push_back(weight[idx]);
    g.mutual.push_back(edges[idx].mutual ? 1 : 0);
  }
  return g;
}

}  // namespace

CallGraph build_graph(const CdrStore& store, MonthRange period,
                      const GraphBuildOptions& options) {
  options.segment.validate();
  TimeInterval span = store.span(period);
  std::span<const CdrRecord> view = store.months(period);

  std::unordered_map<std::uint64_t, PairAgg> agg;
  agg.reserve(view.size() / 2 + 1);
  const bool decay_on = options.decay.enabled;
  const double gamma = options.decay.gamma;
  for (const CdrRecord& r : view) {
    double coeff = segment_coefficient(options.segment, r.start, store.epoch());
    if (coeff <= 0.0) continue;
    double mult = coeff;
    if (decay_on) {
      std::int64_t weeks = (span.end - 1 - r.start) / kSecondsPerWeek;
      mult *= std::exp(-gamma * static_cast<double>(weeks));
    }
    PairAgg& a = agg[pair_key(r.caller, r.callee)];
    a.length += mult * static_cast<double>(r.duration);
    a.count += mult;
    a.calls += 1;
  }

  std::vector<EdgeTmp> edges;
  edges.reserve(agg.size());
  auto has_reverse = [&](NodeIndex a, NodeIndex b) {
    auto it = agg.find(pair_key(b, a));
    return it != agg.end() && it->second.calls > 0;
  };

  switch (options.direction) {
    case Direction::outgoing:
      for (const auto& [key, a] : agg) {
        NodeIndex src = static_cast<NodeIndex>(key >> 32);
        NodeIndex dst = static_cast<NodeIndex>(key & 0xffffffffu);
        edges.push_back({src, dst, a.length, a.count, has_reverse(src, dst)});
      }
      break;
    case Direction::incoming:
      for (const auto& [key, a] : agg) {
        NodeIndex caller = static_cast<NodeIndex>(key >> 32);
        NodeIndex callee = static_cast<NodeIndex>(key & 0xffffffffu);
        edges.push_back(
            {callee, caller, a.length, a.count, has_reverse(caller, callee)});
      }
      break;
    case Direction::undirected:
      for (const auto& [key, a] : agg) {
        NodeIndex i = static_cast<NodeIndex>(key >> 32);
        NodeIndex j = static_cast<NodeIndex>(key & 0xffffffffu);
        if (i > j && agg.count(pair_key(j, i))) continue;  // merged via (j,i)
        PairAgg merged = a;
        bool mut = false;
        auto rev = agg.find(pair_key(j, i));
        if (rev != agg.end()) {
          merged.length += rev->second.length;
          merged.count += rev->second.count;
          merged.calls += rev->second.calls;
          mut = a.calls > 0 && rev->second.calls > 0;
        }
        edges.push_back({i, j, merged.length, merged.count, mut});
        edges.push_back({j, i, merged.length, merged.count, mut});
      }
      break;
  }

  CallGraph g = assemble_csr(store.node_count(), std::move(edges), options);
  if (options.reciprocal_only) g = filter_reciprocal(g);
  return g;
}

CallGraph filter_reciprocal(const CallGraph& graph) {
  CallGraph g;
  g.nodes = graph.nodes;
  g.direction = graph.direction;
  g.scheme = graph.scheme;
  g.decay = graph.decay;
  g.segment = graph.segment;
  g.reciprocal_only = true;
  g.offsets.assign(graph.nodes + 1, 0);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    std::size_t kept = 0;
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
      if (graph.mutual[e]) ++kept;
    }
    g.offsets[i + 1] = g.offsets[i] + kept;
  }
  g.neighbors.reserve(g.offsets[graph.nodes]);
  g.weights.reserve(g.offsets[graph.nodes]);
  g.mutual.reserve(g.offsets[graph.nodes]);
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
      if (graph.mutual[e]) {
        g.neighbors.push_back(graph.neighbors[e]);
        g.weights.push_back(graph.weights[e]);
        g.mutual.push_back(1);
      }
    }
  }
  return g;
}

double sparsity(const CallGraph& graph) {
  if (graph.nodes < 2) {
    throw std::invalid_argument("sparsity: needs at least two nodes");
  }
  double pairs = static_cast<double>(graph.nodes) *
                 static_cast<double>(graph.nodes - 1);
  return static_cast<double>(graph.edge_count()) / pairs;
}

void export_graph(const CallGraph& graph, const IdTable& ids,
                  std::ostream& edges_csv, std::ostream& sidecar_json) {
  edges_csv << "src,dst,weight\n";
  for (NodeIndex i = 0; i < graph.nodes; ++i) {
    auto nbrs = graph.neighbors_of(i);
    auto ws = graph.weights_of(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      edges_csv << csv::escape(ids.name(i)) << ','
                << csv::escape(ids.name(nbrs[k])) << ','
                << csv::format_double(ws[k]) << '\n';
    }
  }
  nlohmann::json j;
  j["direction"] = to_string(graph.direction);
  j["scheme"] = to_string(graph.scheme);
  j["decay"] = {{"enabled", graph.decay.enabled}, {"gamma", graph.decay.gamma}};
  j["segment"] = graph.segment;
  j["reciprocal_only"] = graph.reciprocal_only;
  std::vector<std::string> names;
  names.reserve(ids.size());
  for (NodeIndex i = 0; i < ids.size(); ++i) names.push_back(ids.name(i));
  j["nodes"] = names;
  std::vector<int> mutual(graph.mutual.begin(), graph.mutual.end());
  j["mutual"] = mutual;
  sidecar_json << j.dump(2) << '\n';
}

CallGraph import_graph(std::istream& edges_csv, std::istream& sidecar_json,
                       IdTable& ids) {
  nlohmann::json j = nlohmann::json::parse(sidecar_json);
  for (const auto& name : j.at("nodes")) {
    ids.intern(name.get<std::string>());
  }
  CallGraph g;
  g.nodes = ids.size();
  g.direction = direction_from_string(j.at("direction").get<std::string>());
  g.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  g.decay.enabled = j.at("decay").at("enabled").get<bool>();
  g.decay.gamma = j.at("decay").at("gamma").get<double>();
  g.segment = j.at("segment").get<std::string>();
  g.reciprocal_only = j.at("reciprocal_only").get<bool>();

  csv::Reader reader(edges_csv);
  auto header = reader.next();
  if (!header || header->size() != 3) {
    throw std::invalid_argument("import_graph: bad edge csv header");
  }
  struct E { NodeIndex s, d; double w; };
  std::vector<E> edges;
  while (auto row = reader.next()) {
    if (row->size() != 3) throw std::invalid_argument("import_graph: bad row");
    NodeIndex s = ids.find((*row)[0]);
    NodeIndex d = ids.find((*row)[1]);
    if (s == kInvalidNode || d == kInvalidNode) {
      throw std::invalid_argument("import_graph: edge references unknown node");
    }
    edges.push_back({s, d, std::stod((*row)[2])});
  }
  std::vector<int> mutual = j.at("mutual").get<std::vector<int>>();
  if (mutual.size() != edges.size()) {
    throw std::invalid_argument("import_graph: mutual flags do not match edges");
  }
  g.offsets.assign(g.nodes + 1, 0);
  for (const E& e : edges) ++g.offsets[e.s + 1];
  for (std::size_t i = 0; i < g.nodes; ++i) g.offsets[i + 1] += g.offsets[i];
  // exported in CSR order already
  g.neighbors.reserve(edges.size());
  g.weights.reserve(edges.size());
  g.mutual.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    g.neighbors.push_back(edges[i].d);
    g.weights.push_back(edges[i].w);
    g.mutual.push_back(static_cast<std::uint8_t>(mutual[i]));
  }
  return g;
}

}  // namespace churnnet
