#include "mdcompat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mdcompat/error.hpp"
#include "mdcompat/glm.hpp"

namespace mdcompat {

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::auc: return "auc";
    case Metric::brier: return "brier";
    case Metric::cal_intercept: return "cal_intercept";
    case Metric::cal_slope: return "cal_slope";
  }
  return "auc";
}

Metric parse_metric(std::string_view text) {
  for (auto m : kAllMetrics) {
    if (to_string(m) == text) return m;
  }
  throw ArgumentError("unknown metric '" + std::string(text) + "' (expected auc, brier, cal_intercept or cal_slope)");
}

std::string to_string(Pooling pooling) { return pooling == Pooling::average ? "average" : "stacked"; }

Pooling parse_pooling(std::string_view text) {
  if (text == "average") return Pooling::average;
  if (text == "stacked") return Pooling::stacked;
  throw ArgumentError("unknown pooling '" + std::string(text) + "' (expected average or stacked)");
}

double PerfReport::get(Metric metric) const {
  switch (metric) {
    case Metric::auc: return auc;
    case Metric::brier: return brier;
    case Metric::cal_intercept: return cal_intercept;
    case Metric::cal_slope: return cal_slope;
  }
  return auc;
}

namespace {

void check_inputs(ConstVectorRef probs, ConstVectorRef y) {
  if (probs.size() != y.size()) throw ArgumentError("probabilities and outcomes differ in length");
  if (probs.size() == 0) throw UndefinedMetricError("no rows to evaluate");
}

Index count_events(ConstVectorRef y) {
  Index events = 0;
  for (Index i = 0; i < y.size(); ++i) events += y(i) == 1.0;
  return events;
}

void require_both_classes(ConstVectorRef y, const char* metric) {
  const Index events = count_events(y);
  if (events == 0 || events == y.size()) {
    throw UndefinedMetricError(std::string(metric) + " is undefined when the outcome has a single class");
  }
}

}  // namespace

double auc(ConstVectorRef probs, ConstVectorRef y) {
  check_inputs(probs, y);
  require_both_classes(y, "AUC");
  const Index n = probs.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return probs(a) < probs(b); });
  // Sum of midranks of the events.
  double rank_sum = 0.0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && probs(order[j + 1]) == probs(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k) {
      if (y(order[k]) == 1.0) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double n1 = static_cast<double>(count_events(y));
  const double n0 = static_cast<double>(n) - n1;
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

double brier(ConstVectorRef probs, ConstVectorRef y) {
  check_inputs(probs, y);
  return (probs - y).squaredNorm() / static_cast<double>(probs.size());
}

Calibration calibration(ConstVectorRef probs, ConstVectorRef y) {
  check_inputs(probs, y);
  require_both_classes(y, "calibration");
  VectorXd lp(probs.size());
  for (Index i = 0; i < probs.size(); ++i) {
    lp(i) = logit(std::clamp(probs(i), kProbabilityClamp, 1.0 - kProbabilityClamp));
  }
  Calibration out;
  const LogisticFit slope_fit = fit_logistic(lp, y);
  out.slope = slope_fit.coefficients(1);
  LogisticOptions offset_opts;
  offset_opts.offset = lp;
  const LogisticFit intercept_fit = fit_logistic(MatrixXd(y.size(), 0), y, offset_opts);
  out.intercept = intercept_fit.coefficients(0);
  if (!std::isfinite(out.slope) || !std::isfinite(out.intercept)) {
    throw UndefinedMetricError("calibration fit did not produce finite estimates");
  }
  return out;
}

PerfReport evaluate(ConstMatrixRef probs, ConstVectorRef y, Pooling pooling) {
  if (probs.cols() < 1) throw ArgumentError("evaluate needs at least one probability column");
  if (probs.rows() != y.size()) throw ArgumentError("probability matrix rows differ from outcome length");
  PerfReport report;
  report.n_rows = y.size();
  report.n_events = y.size() == 0 ? 0 : count_events(y);
  report.k_imputations = probs.cols();
  if (pooling == Pooling::stacked && probs.cols() > 1) {
    const Index n = probs.rows();
    VectorXd p(n * probs.cols());
    VectorXd yy(n * probs.cols());
    for (Index k = 0; k < probs.cols(); ++k) {
      p.segment(k * n, n) = probs.col(k);
      yy.segment(k * n, n) = y;
    }
    const Calibration cal = calibration(p, yy);
    report.auc = auc(p, yy);
    report.brier = brier(p, yy);
    report.cal_intercept = cal.intercept;
    report.cal_slope = cal.slope;
    return report;
  }
  // Per-column values are sorted before summing so the average does not
  // depend on column order.
  std::array<std::vector<double>, 4> values;
  for (Index c = 0; c < probs.cols(); ++c) {
    const VectorXd p = probs.col(c);
    const Calibration cal = calibration(p, y);
    values[0].push_back(auc(p, y));
    values[1].push_back(brier(p, y));
    values[2].push_back(cal.intercept);
    values[3].push_back(cal.slope);
  }
  auto mean = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  report.auc = mean(values[0]);
  report.brier = mean(values[1]);
  report.cal_intercept = mean(values[2]);
  report.cal_slope = mean(values[3]);
  return report;
}

}  // namespace mdcompat
