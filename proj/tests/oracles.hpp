// Independent reference implementations used as test oracles. These avoid the
// library's CSR representation and sweep code on purpose: everything is a
// direct transcription of the formulas over a map-based adjacency.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "churnnet/graph.hpp"

namespace oracles {

// adjacency[i] -> (neighbor -> weight)
using Adjacency = std::vector<std::map<std::uint32_t, double>>;

Adjacency adjacency_from(const churnnet::CallGraph& graph);

std::vector<double> naive_wvrn(const Adjacency& adj,
                               std::span<const double> state, double prior);

struct NaiveRv {
  double c0 = 0.0;
  double c1 = 0.0;
};
NaiveRv naive_cdrn_rv(const Adjacency& adj, std::span<const double> state,
                      std::span<const std::uint8_t> labels_t);
std::vector<double> naive_cdrn(const Adjacency& adj,
                               std::span<const double> state, NaiveRv rv,
                               double prior);

std::vector<double> naive_nlb(const Adjacency& adj,
                              std::span<const double> state, double beta0,
                              double beta1, double prior);

std::vector<double> naive_spa_rc(const Adjacency& adj,
                                 std::span<const double> state, double d,
                                 double prior);

// O(n^2) pairwise AUC with half-credit ties.
double pairwise_auc(std::span<const double> scores,
                    std::span<const std::uint8_t> labels);

// Sort-and-count lift at a fraction (ties by ascending index).
double sort_count_lift(std::span<const double> scores,
                       std::span<const std::uint8_t> labels, double fraction);

// Exhaustive threshold sweep of the profit measure.
struct NaiveMp {
  double profit;
  double eta;
};
NaiveMp exhaustive_mp(std::span<const double> scores,
                      std::span<const std::uint8_t> labels, double clv,
                      double delta, double phi, double gamma);

// Monte-Carlo EMP: draws from Beta(a,b), optimal threshold per draw.
double monte_carlo_emp(std::span<const double> scores,
                       std::span<const std::uint8_t> labels, double clv,
                       double delta, double phi, double a, double b,
                       std::size_t draws, std::uint64_t seed);

// Direct formula evaluations for the nonparametric tests.
double friedman_chi2(const std::vector<std::vector<double>>& values,
                     bool higher_is_better);
double kruskal_wallis_h(const std::vector<std::vector<double>>& groups);
double nemenyi_cd(std::size_t k, std::size_t n, double q_alpha);

// Random weighted digraph for oracle-equivalence tests; deterministic.
churnnet::CallGraph random_graph(std::size_t nodes, double edge_prob,
                                 bool undirected, std::uint64_t seed);

std::vector<std::uint8_t> random_labels(std::size_t nodes, double rate,
                                        std::uint64_t seed);
std::vector<double> random_scores(std::size_t nodes, std::uint64_t seed);

}  // namespace oracles
