#include "churnnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "churnnet/rng.hpp"

namespace churnnet {

void SynthConfig::validate() const {
  if (n_customers < 10) throw std::invalid_argument("synth: need >= 10 customers");
  if (months < 1 || months > kMonthCount) {
    throw std::invalid_argument("synth: months must be 1..6");
  }
  if (churn_rate < 0.0 || churn_rate >= 1.0) {
    throw std::invalid_argument("synth: churn rate must be in [0,1)");
  }
  if (!(sparsity > 0.0 && sparsity < 1.0)) {
    throw std::invalid_argument("synth: sparsity must be in (0,1)");
  }
  if (homophily < 0.0 || homophily > 1.0) {
    throw std::invalid_argument("synth: homophily must be in [0,1]");
  }
  if (!(degree_exponent > 1.0)) {
    throw std::invalid_argument("synth: degree exponent must exceed 1");
  }
  double n = static_cast<double>(n_customers);
  double ties = sparsity * n * (n - 1.0) / 2.0;
  if (ties < n / 2.0) {
    throw std::invalid_argument(
        "synth: sparsity/degree combination unsatisfiable (mean degree < 1)");
  }
}

namespace {

struct Tie {
  NodeIndex a;
  NodeIndex b;
};

// Power-law tie sampling: stub endpoints drawn proportional to Pareto-like
// node weights, duplicate and self pairs rejected.
std::vector<Tie> sample_ties(const SynthConfig& cfg, std::mt19937_64& gen,
                             std::vector<std::vector<NodeIndex>>& adjacency) {
  std::size_t n = cfg.n_customers;
  double want = cfg.sparsity * static_cast<double>(n) *
                static_cast<double>(n - 1) / 2.0;
  std::size_t target = static_cast<std::size_t>(std::llround(want));

  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng::uniform01(gen);
    if (u <= 0.0) u = 0x1.0p-53;
    // Pareto(alpha - 1) weight, capped to keep hubs manageable
    double w = std::pow(u, -1.0 / (cfg.degree_exponent - 1.0));
    acc += std::min(w, std::sqrt(static_cast<double>(n)));
    cumulative[i] = acc;
  }
  auto draw_node = [&]() {
    double u = rng::uniform01(gen) * acc;
    return static_cast<NodeIndex>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
  };

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(target * 2);
  std::vector<Tie> ties;
  ties.reserve(target);
  std::size_t attempts = 0;
  const std::size_t max_attempts = target * 50 + 1000;
  while (ties.size() < target && attempts < max_attempts) {
    ++attempts;
    NodeIndex a = draw_node();
    NodeIndex b = draw_node();
    if (a == b) continue;
    NodeIndex lo = std::min(a, b), hi = std::max(a, b);
    std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | hi;
    if (!seen.insert(key).second) continue;
    ties.push_back({lo, hi});
  }
  if (ties.size() < target) {
    throw std::invalid_argument(
        "synth: could not reach target sparsity with this degree distribution");
  }

  adjacency.assign(n, {});
  for (const Tie& t : ties) {
    adjacency[t.a].push_back(t.b);
    adjacency[t.b].push_back(t.a);
  }
  // no isolated customers: a silent line would read as an instant churner
  for (NodeIndex i = 0; i < n; ++i) {
    if (adjacency[i].empty()) {
      NodeIndex j = static_cast<NodeIndex>(rng::uniform_index(gen, n));
      if (j == i) j = (j + 1) % static_cast<NodeIndex>(n);
      ties.push_back({std::min(i, j), std::max(i, j)});
      adjacency[i].push_back(j);
      adjacency[j].push_back(i);
    }
  }
  return ties;
}

// Timestamp inside [month_begin, limit) honoring the configured day-of-week
// and time-of-day mix. Returns -1 when the window is empty.
std::int64_t sample_timestamp(const SynthConfig& cfg, std::mt19937_64& gen,
                              std::int64_t epoch, std::int64_t month_begin,
                              std::int64_t limit) {
  if (limit <= month_begin) return -1;
  for (int tries = 0; tries < 16; ++tries) {
    // pick a day honoring the weekend share (epoch starts a Monday)
    std::int64_t day0 = (month_begin - epoch) / kSecondsPerDay;
    std::int64_t days = kDaysPerMonth;
    bool weekend = rng::uniform01(gen) < cfg.weekend_fraction;
    std::int64_t day = day0 + static_cast<std::int64_t>(
                                  rng::uniform_index(gen, days));
    int dow = static_cast<int>(day % 7);
    if (weekend != (dow >= 5)) continue;
    // hour slot by time-of-day mix
    double u = rng::uniform01(gen);
    int hour;
    if (u < cfg.tod_mix[0]) {
      hour = 8 + static_cast<int>(rng::uniform_index(gen, 8));
    } else if (u < cfg.tod_mix[0] + cfg.tod_mix[1]) {
      hour = 16 + static_cast<int>(rng::uniform_index(gen, 8));
    } else {
      hour = static_cast<int>(rng::uniform_index(gen, 8));
    }
    std::int64_t ts = epoch + day * kSecondsPerDay + hour * 3600 +
                      static_cast<std::int64_t>(rng::uniform_index(gen, 3600));
    if (ts >= month_begin && ts < limit) return ts;
  }
  // dense fallback near churn boundaries
  std::int64_t span = limit - month_begin;
  return month_begin + static_cast<std::int64_t>(rng::uniform_index(
                           gen, static_cast<std::uint64_t>(span)));
}

std::uint32_t sample_duration(const SynthConfig& cfg, std::mt19937_64& gen) {
  if (rng::uniform01(gen) < cfg.short_call_fraction) {
    return static_cast<std::uint32_t>(1 + rng::uniform_index(gen, 3));
  }
  double d = rng::exponential(gen, cfg.mean_duration_s);
  return static_cast<std::uint32_t>(std::max(4.0, std::round(d)));
}

}  // namespace

SynthResult generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 gen(config.seed);
  std::size_t n = config.n_customers;

  std::vector<std::vector<NodeIndex>> adjacency;
  std::vector<Tie> ties = sample_ties(config, gen, adjacency);

  // Months are generated in order, interleaving churn planting with call
  // generation: month-m churn propagates from month-(m-1) churners along the
  // contacts they actually called, so the relational signal the learners must
  // recover lives on realized edges. Random seeds fill the remainder of the
  // monthly target.
  std::vector<std::int64_t> churndate(n, -1);
  std::vector<NodeIndex> churned_prev;
  std::vector<std::vector<NodeIndex>> prev_contacts(n);
  std::vector<CdrRecord> records;
  records.reserve(ties.size() * static_cast<std::size_t>(
                                    config.calls_per_tie_month * config.months));
  auto active_limit = [&](NodeIndex i, std::int64_t month_end) {
    return churndate[i] < 0 ? month_end : std::min(month_end, churndate[i]);
  };

  for (int m = 1; m <= config.months; ++m) {
    std::int64_t month_begin = config.epoch + (m - 1) * kSecondsPerMonth;
    std::int64_t month_end = month_begin + kSecondsPerMonth;

    std::vector<NodeIndex> active;
    active.reserve(n);
    for (NodeIndex i = 0; i < n; ++i) {
      if (churndate[i] < 0) active.push_back(i);
    }
    std::size_t target = static_cast<std::size_t>(
        std::llround(config.churn_rate * static_cast<double>(active.size())));
    std::vector<NodeIndex> churned_now;
    for (NodeIndex parent : churned_prev) {
      if (churned_now.size() >= target) break;
      if (rng::uniform01(gen) >= config.homophily) continue;
      const auto& contacts = prev_contacts[parent];
      // a few tries to land on a still-active contact; the duplicate entries
      // in the contact list bias the pick toward frequently-called peers
      for (int t = 0; t < 4 && !contacts.empty(); ++t) {
        NodeIndex cand = contacts[rng::uniform_index(gen, contacts.size())];
        if (churndate[cand] < 0) {
          churndate[cand] = month_begin +
                            static_cast<std::int64_t>(
                                rng::uniform_index(gen, kDaysPerMonth)) *
                                kSecondsPerDay;
          churned_now.push_back(cand);
          break;
        }
      }
    }
    while (churned_now.size() < target && !active.empty()) {
      NodeIndex cand = active[rng::uniform_index(gen, active.size())];
      if (churndate[cand] >= 0) continue;
      churndate[cand] = month_begin +
                        static_cast<std::int64_t>(
                            rng::uniform_index(gen, kDaysPerMonth)) *
                            kSecondsPerDay;
      churned_now.push_back(cand);
    }
    churned_prev = std::move(churned_now);

    // calls of month m; nobody places or receives a call at or after their
    // churndate
    std::vector<std::vector<NodeIndex>> contacts(n);
    for (const Tie& tie : ties) {
      std::int64_t limit = std::min(active_limit(tie.a, month_end),
                                    active_limit(tie.b, month_end));
      if (limit <= month_begin) continue;
      double frac = static_cast<double>(limit - month_begin) /
                    static_cast<double>(kSecondsPerMonth);
      int calls = rng::poisson(gen, config.calls_per_tie_month * frac);
      for (int c = 0; c < calls; ++c) {
        std::int64_t ts =
            sample_timestamp(config, gen, config.epoch, month_begin, limit);
        if (ts < 0) continue;
        bool a_calls = rng::uniform01(gen) < 0.5;
        records.push_back(CdrRecord{a_calls ? tie.a : tie.b,
                                    a_calls ? tie.b : tie.a, ts,
                                    sample_duration(config, gen)});
        contacts[tie.a].push_back(tie.b);
        contacts[tie.b].push_back(tie.a);
      }
    }
    prev_contacts = std::move(contacts);
  }

  IdTable ids;
  for (std::size_t i = 0; i < n; ++i) {
    ids.intern("C" + std::to_string(i));
  }
  SynthResult result{CdrStore(std::move(ids), std::move(records), config.epoch),
                     ChurnLabels{}};
  result.ground_truth.window = {config.epoch,
                                config.epoch + config.months * kSecondsPerMonth};
  result.ground_truth.churner.assign(n, 0);
  result.ground_truth.churndate.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (churndate[i] >= 0) {
      result.ground_truth.churner[i] = 1;
      result.ground_truth.churndate[i] = churndate[i];
    }
  }
  return result;
}

SynthDiagnostics verify(const CdrStore& store, const ChurnLabels& truth,
                        const SynthConfig& config) {
  SynthDiagnostics d;
  d.target_churn_rate = config.churn_rate;
  d.target_sparsity = config.sparsity;
  std::size_t n = store.node_count();

  // realized monthly churn over the at-risk base
  std::size_t active = n;
  for (int m = 1; m <= config.months; ++m) {
    TimeInterval span = store.month_span(m);
    std::size_t churned = 0;
    for (NodeIndex i = 0; i < n; ++i) {
      if (truth.churned_in(i, span)) ++churned;
    }
    d.monthly_churn_rate.push_back(
        active > 0 ? static_cast<double>(churned) / static_cast<double>(active)
                   : 0.0);
    active -= churned;
  }

  // tie graph over M1
  std::unordered_set<std::uint64_t> pairs;
  std::vector<std::size_t> degree(n, 0);
  for (const CdrRecord& r : store.month(1)) {
    NodeIndex lo = std::min(r.caller, r.callee);
    NodeIndex hi = std::max(r.caller, r.callee);
    std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | hi;
    if (pairs.insert(key).second) {
      ++degree[lo];
      ++degree[hi];
    }
  }
  d.realized_sparsity = 2.0 * static_cast<double>(pairs.size()) /
                        (static_cast<double>(n) * static_cast<double>(n - 1));
  double dsum = 0.0;
  d.max_degree = 0;
  for (std::size_t deg : degree) {
    dsum += static_cast<double>(deg);
    d.max_degree = std::max(d.max_degree, deg);
  }
  d.mean_degree = dsum / static_cast<double>(n);

  // homophily: churn rate next month among neighbors of churners vs overall
  std::vector<std::vector<NodeIndex>> adj(n);
  for (std::uint64_t key : pairs) {
    NodeIndex a = static_cast<NodeIndex>(key >> 32);
    NodeIndex b = static_cast<NodeIndex>(key & 0xffffffffu);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  double exposed_churn = 0.0, exposed = 0.0;
  double base_churn = 0.0, base = 0.0;
  for (int m = 1; m < config.months; ++m) {
    TimeInterval cur = store.month_span(m);
    TimeInterval next = store.month_span(m + 1);
    for (NodeIndex i = 0; i < n; ++i) {
      if (truth.churned_before(i, next.begin)) continue;  // already gone
      bool neighbor_churned = false;
      for (NodeIndex j : adj[i]) {
        if (truth.churned_in(j, cur)) {
          neighbor_churned = true;
          break;
        }
      }
      bool churns = truth.churned_in(i, next);
      base += 1.0;
      base_churn += churns ? 1.0 : 0.0;
      if (neighbor_churned) {
        exposed += 1.0;
        exposed_churn += churns ? 1.0 : 0.0;
      }
    }
  }
  double base_rate = base > 0.0 ? base_churn / base : 0.0;
  double exposed_rate = exposed > 0.0 ? exposed_churn / exposed : 0.0;
  d.homophily_lift = base_rate > 0.0 ? exposed_rate / base_rate : 0.0;

  auto flag = [&](double realized, double target, const std::string& what) {
    if (target <= 0.0) return;
    double rel = std::fabs(realized - target) / target;
    if (rel > 0.20) {
      d.deviations.push_back(what + " off target by " +
                             std::to_string(rel * 100.0) + "%");
    }
  };
  double mean_rate = 0.0;
  for (double r : d.monthly_churn_rate) mean_rate += r;
  mean_rate /= static_cast<double>(d.monthly_churn_rate.size());
  flag(mean_rate, config.churn_rate, "mean monthly churn rate");
  flag(d.realized_sparsity, config.sparsity, "sparsity");
  return d;
}

std::string SynthDiagnostics::describe() const {
  std::string s = "monthly churn:";
  for (double r : monthly_churn_rate) s += " " + std::to_string(r);
  s += "\nsparsity: " + std::to_string(realized_sparsity) + " (target " +
       std::to_string(target_sparsity) + ")";
  s += "\nmean degree: " + std::to_string(mean_degree) +
       ", max degree: " + std::to_string(max_degree);
  s += "\nhomophily lift: " + std::to_string(homophily_lift);
  for (const std::string& dev : deviations) s += "\nDEVIATION: " + dev;
  return s;
}

}  // namespace churnnet
