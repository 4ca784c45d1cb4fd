#include "churnnet/classify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "churnnet/rng.hpp"

namespace churnnet {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

RawFit fit_logistic_raw(std::span<const double> x, std::size_t n, std::size_t p,
                        std::span<const std::uint8_t> y,
                        const LogisticOptions& options) {
  if (n < 2) throw std::invalid_argument("fit_logistic: need at least 2 rows");
  if (x.size() != n * p || y.size() != n) {
    throw std::invalid_argument("fit_logistic: shape mismatch");
  }
  bool has0 = false, has1 = false;
  for (std::uint8_t v : y) (v ? has1 : has0) = true;
  if (!has0 || !has1) {
    throw std::invalid_argument("fit_logistic: both classes must be present");
  }

  const std::size_t d = p + 1;  // intercept first
  Eigen::MatrixXd design(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) design(i, j + 1) = x[i * p + j];
  }
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) target(i) = y[i] ? 1.0 : 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  bool converged = false;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd prob(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      w(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-10);
    }
    Eigen::VectorXd grad = design.transpose() * (target - prob);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    for (std::size_t j = 1; j < d; ++j) {
      grad(j) -= options.l2 * beta(j);
      hess(j, j) += options.l2;
    }
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta += step;
    // clip runaway coefficients (perfect separation)
    for (std::size_t j = 0; j < d; ++j) {
      beta(j) = std::clamp(beta(j), -options.coef_bound, options.coef_bound);
    }
    if (step.cwiseAbs().maxCoeff() <= options.tol) {
      converged = true;
      break;
    }
  }

  RawFit fit;
  fit.converged = converged;
  fit.coefficients.assign(beta.data(), beta.data() + d);
  return fit;
}

TrainedModel LogisticClassifier::fit(const FeatureTable& table,
                                     std::span<const std::uint8_t> labels) const {
  return fit_logistic(table, labels, options_);
}

TrainedModel fit_logistic(const FeatureTable& table,
                          std::span<const std::uint8_t> labels,
                          const LogisticOptions& options) {
  std::size_t n = table.row_count();
  if (labels.size() != n) {
    throw std::invalid_argument("fit_logistic: labels/rows mismatch");
  }
  // detect constant columns
  std::vector<bool> keep(table.col_count(), true);
  std::vector<std::string> dropped;
  for (std::size_t c = 0; c < table.col_count(); ++c) {
    double lo = table.at(0, c), hi = lo;
    for (std::size_t r = 1; r < n; ++r) {
      lo = std::min(lo, table.at(r, c));
      hi = std::max(hi, table.at(r, c));
    }
    if (hi == lo) {
      keep[c] = false;
      dropped.push_back(table.columns[c]);
    }
  }
  std::size_t p = 0;
  for (bool k : keep) p += k ? 1 : 0;

  // columns are standardized for the fit so the ridge penalty and the
  // runaway-coefficient bound are scale-free; coefficients map back below
  std::vector<double> mean(p, 0.0), sd(p, 1.0);
  {
    std::size_t out = 0;
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      if (!keep[c]) continue;
      double m = 0.0;
      for (std::size_t r = 0; r < n; ++r) m += table.at(r, c);
      m /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double d = table.at(r, c) - m;
        var += d * d;
      }
      mean[out] = m;
      sd[out] = std::sqrt(var / static_cast<double>(n));
      ++out;
    }
  }
  std::vector<double> x(n * p);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t out = 0;
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      if (keep[c]) {
        x[r * p + out] = (table.at(r, c) - mean[out]) / sd[out];
        ++out;
      }
    }
  }
  RawFit raw = fit_logistic_raw(x, n, p, labels, options);

  TrainedModel model;
  model.kind = "logistic";
  model.columns = table.columns;
  model.converged = raw.converged;
  model.dropped_columns = std::move(dropped);
  model.coefficients.assign(table.col_count() + 1, 0.0);
  double intercept = raw.coefficients[0];
  std::size_t out = 0;
  for (std::size_t c = 0; c < table.col_count(); ++c) {
    if (!keep[c]) continue;
    double slope = raw.coefficients[1 + out] / sd[out];
    model.coefficients[c + 1] = slope;
    intercept -= slope * mean[out];
    ++out;
  }
  model.coefficients[0] = intercept;
  return model;
}

std::vector<double> predict(const TrainedModel& model, const FeatureTable& table) {
  if (model.columns != table.columns) {
    throw std::invalid_argument("predict: feature signature mismatch");
  }
  std::vector<double> scores(table.row_count());
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    double z = model.coefficients[0];
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      z += model.coefficients[c + 1] * table.at(r, c);
    }
    scores[r] = sigmoid(z);
  }
  return scores;
}

std::string model_to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["kind"] = model.kind;
  j["columns"] = model.columns;
  j["coefficients"] = model.coefficients;
  j["converged"] = model.converged;
  j["dropped_columns"] = model.dropped_columns;
  return j.dump(2);
}

TrainedModel model_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  TrainedModel m;
  m.kind = j.at("kind").get<std::string>();
  m.columns = j.at("columns").get<std::vector<std::string>>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.converged = j.at("converged").get<bool>();
  m.dropped_columns = j.at("dropped_columns").get<std::vector<std::string>>();
  return m;
}

OversampleResult oversample(const FeatureTable& table,
                            std::span<const std::uint8_t> labels,
                            double target_minority_ratio, std::uint64_t seed) {
  if (!(target_minority_ratio > 0.0 && target_minority_ratio < 1.0)) {
    throw std::invalid_argument("oversample: ratio must be in (0,1)");
  }
  if (labels.size() != table.row_count()) {
    throw std::invalid_argument("oversample: labels/rows mismatch");
  }
  std::vector<std::size_t> minority, majority;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    (labels[r] ? minority : majority).push_back(r);
  }
  if (minority.size() > majority.size()) std::swap(minority, majority);
  if (minority.empty()) {
    throw std::invalid_argument("oversample: single-class input");
  }

  OversampleResult out;
  out.table.columns = table.columns;
  out.table.rows = table.rows;
  out.table.values = table.values;
  out.labels.assign(labels.begin(), labels.end());

  double need = target_minority_ratio * static_cast<double>(majority.size()) /
                (1.0 - target_minority_ratio);
  std::size_t target = static_cast<std::size_t>(std::ceil(need - 1e-9));
  if (minority.size() >= target) return out;

  std::mt19937_64 gen(seed);
  std::size_t extra = target - minority.size();
  for (std::size_t k = 0; k < extra; ++k) {
    std::size_t r = minority[rng::uniform_index(gen, minority.size())];
    out.table.rows.push_back(table.rows[r]);
    for (std::size_t c = 0; c < table.col_count(); ++c) {
      out.table.values.push_back(table.at(r, c));
    }
    out.labels.push_back(labels[r]);
  }
  return out;
}

OotResult run_oot(const CdrStore& store, const FeatureBuilder& features,
                  const LabelProvider& labels, const Classifier& classifier,
                  const OotOptions& options) {
  const OotSplit& s = options.split;
  if (s.train_features.last >= s.train_label_month ||
      s.test_features.last >= s.test_label_month ||
      s.train_label_month >= s.test_label_month) {
    throw std::runtime_error("run_oot: feature window overlaps label window");
  }
  // leakage guard on actual timestamps
  TimeInterval train_span = store.span(s.train_features);
  TimeInterval train_label_span = store.month_span(s.train_label_month);
  TimeInterval test_span = store.span(s.test_features);
  TimeInterval test_label_span = store.month_span(s.test_label_month);
  if (train_span.end > train_label_span.begin ||
      test_span.end > test_label_span.begin) {
    throw std::runtime_error("run_oot: feature window overlaps label window");
  }

  FeatureTable train_table = features(s.train_features, s.train_features.last);
  std::vector<std::uint8_t> train_y = labels(s.train_label_month);
  if (train_y.size() != train_table.row_count()) {
    throw std::invalid_argument("run_oot: label vector does not match table");
  }

  OversampleResult sampled = oversample(train_table, train_y,
                                        options.oversample_ratio, options.seed);
  OotResult result;
  result.model = classifier.fit(sampled.table, sampled.labels);
  result.train_scores = predict(result.model, train_table);
  result.train_labels = std::move(train_y);

  FeatureTable test_table = features(s.test_features, s.test_features.last);
  result.test_scores = predict(result.model, test_table);
  result.test_labels = labels(s.test_label_month);
  return result;
}

}  // namespace churnnet
