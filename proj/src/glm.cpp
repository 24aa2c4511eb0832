#include "mdcompat/glm.hpp"

#include <algorithm>
#include <cmath>

#include "mdcompat/error.hpp"
#include "mdcompat/rng.hpp"

namespace mdcompat {

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace {

MatrixXd with_intercept(ConstMatrixRef x) {
  MatrixXd d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

std::string column_label(std::span<const std::string> names, Index j) {
  if (j == 0) return "(intercept)";
  if (static_cast<std::size_t>(j - 1) < names.size()) return names[static_cast<std::size_t>(j - 1)];
  return "column " + std::to_string(j);
}


struct IrlsResult {
  VectorXd beta;
  MatrixXd hessian;
  bool converged = false;
  Index iterations = 0;
  double gradient_norm = 0.0;
  double max_abs_eta = 0.0;
};

class LogisticProblem {
 public:
  LogisticProblem(const MatrixXd& design, ConstVectorRef y, const VectorXd* offset, double ridge)
      : design_(design), y_(y), offset_(offset), ridge_(ridge) {}

  VectorXd eta(const VectorXd& beta) const {
    VectorXd e = design_ * beta;
    if (offset_) e += *offset_;
    return e;
  }

  // Penalized log-likelihood plus the residuals and weights at beta, from a
  // single exp per row.
  struct State {
    VectorXd beta;
    double ll = 0.0;
    VectorXd resid;
    VectorXd w;
    double max_abs_eta = 0.0;
  };

  State evaluate(VectorXd beta) const {
    State s;
    const VectorXd e = eta(beta);
    const Index n = e.size();
    s.resid.resize(n);
    s.w.resize(n);
    double ll = 0.0;
    double max_abs = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double a = std::abs(e(i));
      const double t = std::exp(-a);
      const double p = e(i) >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
      ll += y_(i) * e(i) - (std::max(e(i), 0.0) + std::log1p(t));
      s.resid(i) = y_(i) - p;
      s.w(i) = p * (1.0 - p);
      max_abs = std::max(max_abs, a);
    }
    s.ll = ll - 0.5 * ridge_ * beta.tail(beta.size() - 1).squaredNorm();
    s.max_abs_eta = max_abs;
    s.beta = std::move(beta);
    return s;
  }

  VectorXd gradient(const State& s) const {
    VectorXd g = design_.transpose() * s.resid;
    for (Index j = 1; j < s.beta.size(); ++j) g(j) -= ridge_ * s.beta(j);
    return g;
  }

  MatrixXd hessian(const State& s) const {
    MatrixXd h = design_.transpose() * s.w.asDiagonal() * design_;
    for (Index j = 1; j < s.beta.size(); ++j) h(j, j) += ridge_;
    return h;
  }

  IrlsResult solve(VectorXd beta) const {
    constexpr Index kMaxIterations = 100;
    constexpr double kRelTol = 1e-10;
    constexpr double kGradTol = 1e-8;
    IrlsResult res;
    bool settled = false;
    State state = evaluate(std::move(beta));
    VectorXd grad = gradient(state);
    res.gradient_norm = grad.cwiseAbs().maxCoeff();
    for (Index it = 0; it < kMaxIterations && res.gradient_norm >= kGradTol; ++it) {
      Eigen::LDLT<MatrixXd> ldlt(hessian(state));
      const VectorXd step = ldlt.solve(grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) break;

      const double floor = state.ll - 1e-12 * std::abs(state.ll);
      double scale = 1.0;
      State candidate = evaluate(state.beta + step);
      for (int halving = 0; halving < 30 && !(candidate.ll >= floor); ++halving) {
        scale *= 0.5;
        candidate = evaluate(state.beta + scale * step);
      }
      if (!(candidate.ll >= floor)) break;
      const double rel_change = std::abs(candidate.ll - state.ll) / (std::abs(state.ll) + 0.1);
      state = std::move(candidate);
      grad = gradient(state);
      res.gradient_norm = grad.cwiseAbs().maxCoeff();
      res.iterations = it + 1;
      if (rel_change < kRelTol) {
        settled = true;
        break;
      }
    }
    res.converged = settled || res.gradient_norm < kGradTol;
    res.hessian = hessian(state);
    res.max_abs_eta = design_.rows() > 0 ? state.max_abs_eta : 0.0;
    res.beta = std::move(state.beta);
    return res;
  }

 private:
  const MatrixXd& design_;
  ConstVectorRef y_;
  const VectorXd* offset_;
  double ridge_;
};

MatrixXd invert_information(const MatrixXd& hessian) {
  Eigen::LDLT<MatrixXd> ldlt(hessian);
  MatrixXd inv = ldlt.solve(MatrixXd::Identity(hessian.rows(), hessian.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

LinearFit fit_linear(ConstMatrixRef x, ConstVectorRef y, std::span<const std::string> names) {
  if (x.rows() != y.size()) throw ArgumentError("design and response lengths differ");
  const Index p = x.cols() + 1;
  if (x.rows() < p + 1) {
    throw ArgumentError("linear fit needs at least " + std::to_string(p + 1) + " rows, got " +
                        std::to_string(x.rows()));
  }
  if (!x.allFinite() || !y.allFinite()) throw ArgumentError("linear fit inputs contain non-finite values");
  const MatrixXd design = with_intercept(x);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  if (qr.rank() < p) {
    std::string dependent;
    for (Index k = qr.rank(); k < p; ++k) {
      if (!dependent.empty()) dependent += ", ";
      dependent += column_label(names, qr.colsPermutation().indices()(k));
    }
    throw SingularDesignError("singular design: linearly dependent column(s) " + dependent);
  }
  LinearFit fit;
  fit.n = x.rows();
  fit.dof = x.rows() - p;
  fit.coefficients = qr.solve(y);
  const VectorXd resid = y - design * fit.coefficients;
  fit.residual_variance = resid.squaredNorm() / static_cast<double>(fit.dof);
  const MatrixXd xtx = design.transpose() * design;
  MatrixXd inv = xtx.ldlt().solve(MatrixXd::Identity(p, p));
  fit.unscaled_covariance = 0.5 * (inv + inv.transpose());
  fit.coefficient_covariance = fit.residual_variance * fit.unscaled_covariance;
  return fit;
}

LogisticFit fit_logistic(ConstMatrixRef x, ConstVectorRef y, const LogisticOptions& options) {
  const Index n = y.size();
  if (n == 0) throw ArgumentError("logistic fit on an empty design");
  if (!options.intercept_only && x.rows() != n) throw ArgumentError("design and response lengths differ");
  if (options.offset && options.offset->size() != n) throw ArgumentError("offset length differs from response");
  Index events = 0;
  for (Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw ArgumentError("logistic response must be 0/1");
    events += y(i) == 1.0;
  }
  if (events == 0 || events == n) {
    throw DegenerateOutcomeError(std::string("outcome is all ") + (events == 0 ? "0" : "1") +
                                 "; logistic intercept is not finite");
  }
  if (!options.intercept_only && !x.allFinite()) throw ArgumentError("logistic design has non-finite values");

  const MatrixXd design = options.intercept_only ? MatrixXd::Ones(n, 1) : with_intercept(x);
  const VectorXd* offset = options.offset ? &*options.offset : nullptr;

  VectorXd start = VectorXd::Zero(design.cols());
  if (options.start) {
    if (options.start->size() != design.cols()) throw ArgumentError("starting values have the wrong length");
    start = *options.start;
  } else if (!offset) {
    const double prev = static_cast<double>(events) / static_cast<double>(n);
    start(0) = logit(prev);
  }

  auto finish = [&](const IrlsResult& r, double ridge) {
    LogisticFit fit;
    fit.coefficients = r.beta;
    fit.coefficient_covariance = invert_information(r.hessian);
    fit.converged = r.converged;
    fit.ridge_used = ridge;
    fit.n = n;
    fit.iterations = r.iterations;
    fit.gradient_norm = r.gradient_norm;
    return fit;
  };

  if (options.ridge > 0.0) {
    return finish(LogisticProblem(design, y, offset, options.ridge).solve(start), options.ridge);
  }
  IrlsResult plain = LogisticProblem(design, y, offset, 0.0).solve(start);
  // |eta| beyond 30 means fitted probabilities within 1e-13 of 0 or 1: separation.
  const bool separated = plain.max_abs_eta > 30.0 || !plain.beta.allFinite();
  if (plain.converged && !separated) return finish(plain, 0.0);
  if (design.cols() == 1) return finish(plain, 0.0);  // nothing to penalize
  return finish(LogisticProblem(design, y, offset, kRidgeFallback).solve(start), kRidgeFallback);
}

VectorXd linear_predictor(ConstVectorRef coefficients, ConstMatrixRef x, const VectorXd* offset) {
  if (coefficients.size() != x.cols() + 1) {
    throw ArgumentError("model has " + std::to_string(coefficients.size() - 1) + " slopes but design has " +
                        std::to_string(x.cols()) + " columns");
  }
  VectorXd eta = VectorXd::Constant(x.rows(), coefficients(0));
  if (x.cols() > 0) eta.noalias() += x * coefficients.tail(x.cols());
  if (offset) {
    if (offset->size() != x.rows()) throw ArgumentError("offset length differs from design rows");
    eta += *offset;
  }
  return eta;
}

VectorXd predict_probability(ConstVectorRef coefficients, ConstMatrixRef x, const VectorXd* offset) {
  VectorXd eta = linear_predictor(coefficients, x, offset);
  for (Index i = 0; i < eta.size(); ++i) {
    eta(i) = logistic(std::clamp(eta(i), -kLinearPredictorClamp, kLinearPredictorClamp));
  }
  return eta;
}

VectorXd predict_mean(const LinearFit& fit, ConstMatrixRef x) { return linear_predictor(fit.coefficients, x); }

LinearDraw posterior_draw(const LinearFit& fit, Stream& rng) {
  LinearDraw out;
  const double chi = rng.chi_squared(static_cast<double>(fit.dof));
  out.residual_variance = static_cast<double>(fit.dof) * fit.residual_variance / chi;
  out.coefficients = MvnSampler(fit.coefficients, out.residual_variance * fit.unscaled_covariance)(rng);
  return out;
}

VectorXd posterior_draw(const LogisticFit& fit, Stream& rng) {
  return MvnSampler(fit.coefficients, fit.coefficient_covariance)(rng);
}

}  // namespace mdcompat
