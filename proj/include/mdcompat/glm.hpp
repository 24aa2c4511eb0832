#pragma once

#include <optional>
#include <span>
#include <string>

#include "mdcompat/types.hpp"

namespace mdcompat {

class Stream;

/// Ordinary least squares fit with an intercept prepended to the design.
struct LinearFit {
  VectorXd coefficients;            // intercept, slopes
  double residual_variance = 0.0;   // RSS / dof
  MatrixXd coefficient_covariance;  // residual_variance * (X'X)^-1
  MatrixXd unscaled_covariance;     // (X'X)^-1
  Index dof = 0;
  Index n = 0;
};

struct LogisticFit {
  VectorXd coefficients;  // intercept, slopes
  MatrixXd coefficient_covariance;
  bool converged = false;
  double ridge_used = 0.0;
  Index n = 0;
  Index iterations = 0;
  /// Max-norm of the gradient of the (penalized) log-likelihood.
  double gradient_norm = 0.0;
};

struct LogisticOptions {
  std::optional<VectorXd> offset;
  /// Estimate only the intercept; the offset enters with its slope fixed at 1.
  bool intercept_only = false;
  /// Fixed ridge penalty on slopes; 0 means unpenalized with automatic fallback.
  double ridge = 0.0;
  /// Starting coefficients; default is logit(prevalence) and zero slopes.
  std::optional<VectorXd> start;
};

inline constexpr double kRidgeFallback = 1e-4;
inline constexpr double kLinearPredictorClamp = 36.0;

double logistic(double eta);
double logit(double p);

/// `names` (optional) labels the design columns in error messages.
LinearFit fit_linear(ConstMatrixRef x, ConstVectorRef y, std::span<const std::string> names = {});

/// Maximum likelihood by IRLS with step-halving. On non-convergence or
/// separation the fit is repeated with a small ridge penalty on the slopes.
LogisticFit fit_logistic(ConstMatrixRef x, ConstVectorRef y, const LogisticOptions& options = {});

/// intercept + X * slopes (+ offset).
VectorXd linear_predictor(ConstVectorRef coefficients, ConstMatrixRef x, const VectorXd* offset = nullptr);

/// logistic(clamp(eta, -36, 36)), so results stay in the open interval (0, 1).
VectorXd predict_probability(ConstVectorRef coefficients, ConstMatrixRef x, const VectorXd* offset = nullptr);
inline VectorXd predict_probability(const LogisticFit& fit, ConstMatrixRef x, const VectorXd* offset = nullptr) {
  return predict_probability(fit.coefficients, x, offset);
}

VectorXd predict_mean(const LinearFit& fit, ConstMatrixRef x);

struct LinearDraw {
  VectorXd coefficients;
  double residual_variance = 0.0;
};

/// sigma*^2 = dof * sigma^2 / chi2(dof); beta* ~ N(beta, sigma*^2 (X'X)^-1).
LinearDraw posterior_draw(const LinearFit& fit, Stream& rng);
/// beta* ~ N(beta, coefficient_covariance), the large-sample approximation.
VectorXd posterior_draw(const LogisticFit& fit, Stream& rng);

}  // namespace mdcompat
