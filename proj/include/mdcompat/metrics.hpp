#pragma once

#include <array>
#include <string>

#include "mdcompat/types.hpp"

namespace mdcompat {

enum class Metric { auc, brier, cal_intercept, cal_slope };

inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::auc, Metric::brier, Metric::cal_intercept,
                                                      Metric::cal_slope};

std::string to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// How performance is combined across k completed datasets.
enum class Pooling { average, stacked };

std::string to_string(Pooling pooling);
Pooling parse_pooling(std::string_view text);

struct PerfReport {
  double auc = 0.0;
  double brier = 0.0;
  double cal_intercept = 0.0;
  double cal_slope = 0.0;
  Index n_rows = 0;
  Index n_events = 0;
  Index k_imputations = 1;

  double get(Metric metric) const;
};

struct Calibration {
  double intercept = 0.0;
  double slope = 1.0;
};

inline constexpr double kProbabilityClamp = 1e-10;

/// Mann-Whitney AUC via midranks; ties count one half.
double auc(ConstVectorRef probs, ConstVectorRef y);
double brier(ConstVectorRef probs, ConstVectorRef y);
/// Slope from y ~ logit(p); intercept from y ~ 1 with logit(p) as offset.
Calibration calibration(ConstVectorRef probs, ConstVectorRef y);

/// Metrics per column, then averaged (or computed once on the stacked columns).
PerfReport evaluate(ConstMatrixRef probs, ConstVectorRef y, Pooling pooling = Pooling::average);

}  // namespace mdcompat
