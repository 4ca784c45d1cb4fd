#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "churnnet/cdr.hpp"
#include "churnnet/features.hpp"

namespace churnnet {

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;
  // ridge penalty on standardized columns, intercept unpenalized
  double l2 = 1e-4;
  double coef_bound = 25.0;  // clip under perfect separation
};

struct TrainedModel {
  std::string kind;                     // classifier id
  std::vector<std::string> columns;     // feature signature
  std::vector<double> coefficients;     // [intercept, one per column]
  bool converged = true;
  std::vector<std::string> dropped_columns;  // constant columns, coefficient 0
};

// Low-level penalized IRLS fit; x is row-major n x p (no intercept column),
// y in {0,1}. Returns p+1 coefficients with the intercept first.
struct RawFit {
  std::vector<double> coefficients;
  bool converged = true;
};
RawFit fit_logistic_raw(std::span<const double> x, std::size_t n, std::size_t p,
                        std::span<const std::uint8_t> y,
                        const LogisticOptions& options);

// Pluggable classifier interface. Only logistic regression is built in; other
// classifiers can be added behind this surface.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual TrainedModel fit(const FeatureTable& table,
                           std::span<const std::uint8_t> labels) const = 0;
  virtual std::string kind() const = 0;
};

class LogisticClassifier final : public Classifier {
 public:
  explicit LogisticClassifier(LogisticOptions options = {}) : options_(options) {}
  TrainedModel fit(const FeatureTable& table,
                   std::span<const std::uint8_t> labels) const override;
  std::string kind() const override { return "logistic"; }

 private:
  LogisticOptions options_;
};

TrainedModel fit_logistic(const FeatureTable& table,
                          std::span<const std::uint8_t> labels,
                          const LogisticOptions& options = {});

// Scores in [0,1]; throws std::invalid_argument if the table's column
// signature differs from the one the model was trained on.
std::vector<double> predict(const TrainedModel& model, const FeatureTable& table);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& json_text);

struct OversampleResult {
  FeatureTable table;
  std::vector<std::uint8_t> labels;  // aligned with table rows
};

// Duplicates minority rows (sampled with replacement, seeded) until the
// minority fraction reaches `target_minority_ratio`. Original rows are always
// retained. Throws std::invalid_argument on single-class input or a ratio
// outside (0, 1).
OversampleResult oversample(const FeatureTable& table,
                            std::span<const std::uint8_t> labels,
                            double target_minority_ratio, std::uint64_t seed);

// Out-of-time experiment: train-feature months strictly precede the training
// label month, which precedes the test label month; test features shift the
// train window forward. Feature windows overlapping their label month are a
// hard error.
struct OotSplit {
  MonthRange train_features{1, 3};
  int train_label_month = 4;
  MonthRange test_features{2, 4};
  int test_label_month = 5;
};

struct OotOptions {
  OotSplit split;
  double oversample_ratio = 0.5;
  std::uint64_t seed = 1;
  LogisticOptions logistic;
};

// Builds the feature table for a month range; `label_month` identifies the
// most recent month whose churn events may inform label-dependent features.
using FeatureBuilder =
    std::function<FeatureTable(MonthRange window, int label_month)>;
// Per-month churn event labels over all nodes.
using LabelProvider = std::function<std::vector<std::uint8_t>(int month)>;

struct OotResult {
  TrainedModel model;
  // predictions over the full node index
  std::vector<double> train_scores;
  std::vector<double> test_scores;
  std::vector<std::uint8_t> train_labels;
  std::vector<std::uint8_t> test_labels;
};

OotResult run_oot(const CdrStore& store, const FeatureBuilder& features,
                  const LabelProvider& labels, const Classifier& classifier,
                  const OotOptions& options);

}  // namespace churnnet
