#include <doctest.h>

#include <cmath>

#include "mdcompat/error.hpp"
#include "mdcompat/glm.hpp"
#include "mdcompat/metrics.hpp"
#include "support.hpp"

using namespace mdcompat;

namespace {

double brute_force_auc(const VectorXd& p, const VectorXd& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (y(i) != 1.0) continue;
    for (Index j = 0; j < p.size(); ++j) {
      if (y(j) != 0.0) continue;
      pairs += 1.0;
      if (p(i) > p(j)) wins += 1.0;
      else if (p(i) == p(j)) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Well-calibrated data: y ~ Bernoulli(logistic(lp)).
std::pair<VectorXd, VectorXd> calibrated_sample(Index n, Stream& rng) {
  VectorXd lp(n), y(n);
  for (Index i = 0; i < n; ++i) {
    lp(i) = -1.4 + 0.8 * rng.normal();
    y(i) = rng.uniform() < logistic(lp(i)) ? 1.0 : 0.0;
  }
  return {lp, y};
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auc trivial cases") {
  VectorXd y(6);
  y << 1, 0, 1, 0, 0, 1;
  CHECK(auc(y, y) == 1.0);
  CHECK(auc(VectorXd::Constant(6, 0.3), y) == 0.5);
  CHECK(auc(VectorXd(1.0 - y.array()), y) == 0.0);
  CHECK_THROWS_AS(auc(VectorXd::Constant(4, 0.2), VectorXd::Zero(4)), UndefinedMetricError);
}

TEST_CASE("auc equals the pairwise oracle") {
  Stream rng({1, {"auc"}});
  for (int t = 0; t < 1000; ++t) {
    const Index n = 2 + rng.uniform_index(49);
    VectorXd p(n), y(n);
    for (Index i = 0; i < n; ++i) {
      // Coarse grid so ties are common.
      p(i) = static_cast<double>(rng.uniform_index(8)) / 8.0;
      y(i) = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    y(0) = 1.0;
    y(1) = 0.0;
    REQUIRE(std::abs(auc(p, y) - brute_force_auc(p, y)) < 1e-12);
  }
}

TEST_CASE("auc is invariant to increasing transforms") {
  Stream rng({2, {"mono"}});
  auto [lp, y] = calibrated_sample(500, rng);
  VectorXd p = lp.unaryExpr([](double v) { return logistic(v); });
  VectorXd q = p.array().cube() * 3.0 + 0.01;
  CHECK(auc(p, y) == auc(q, y));
  CHECK(auc(p, y) == auc(lp, y));
}

TEST_CASE("brier score") {
  VectorXd y(4);
  y << 1, 0, 0, 0;
  CHECK(brier(y, y) == 0.0);
  CHECK(brier(VectorXd::Constant(4, 0.5), y) == 0.25);
  CHECK(std::abs(brier(VectorXd::Constant(4, 0.25), y) - 0.25 * 0.75) < 1e-15);
}

TEST_CASE("calibration identity on the training predictions") {
  const auto ds = mdtest::simple_cohort(2000, 0.3, 3);
  const auto fit = fit_logistic(ds.predictor_matrix(), ds.outcome());
  const VectorXd p = predict_probability(fit, ds.predictor_matrix());
  const auto cal = calibration(p, ds.outcome());
  CHECK(std::abs(cal.slope - 1.0) < 1e-6);
  CHECK(std::abs(cal.intercept) < 1e-6);
}

TEST_CASE("halved odds shift the calibration intercept by ln 2") {
  Stream rng({4, {"shift"}});
  auto [lp, y] = calibrated_sample(50000, rng);
  const VectorXd p = (lp.array() - std::log(2.0)).matrix().unaryExpr([](double v) { return logistic(v); });
  const auto cal = calibration(p, y);
  // SE of a calibration-in-the-large intercept is about 1 / sqrt(n p (1 - p)).
  CHECK(std::abs(cal.intercept - std::log(2.0)) < 4.0 / std::sqrt(50000 * 0.2 * 0.8));
}

TEST_CASE("doubled linear predictor halves the calibration slope") {
  Stream rng({5, {"slope"}});
  auto [lp, y] = calibrated_sample(50000, rng);
  const VectorXd p = (2.0 * lp).unaryExpr([](double v) { return logistic(v); });
  const auto cal = calibration(p, y);
  CHECK(std::abs(cal.slope - 0.5) < 0.05);
}

TEST_CASE("calibration clamps extreme probabilities") {
  VectorXd p(4), y(4);
  p << 0.0, 1.0, 0.3, 0.7;
  y << 0, 1, 1, 0;
  const auto cal = calibration(p, y);
  CHECK(std::isfinite(cal.slope));
  CHECK(std::isfinite(cal.intercept));
  CHECK_THROWS_AS(calibration(p, VectorXd::Ones(4)), UndefinedMetricError);
}

TEST_CASE("evaluate pools over columns") {
  Stream rng({6, {"eval"}});
  auto [lp, y] = calibrated_sample(400, rng);
  const VectorXd p = lp.unaryExpr([](double v) { return logistic(v); });

  const auto one = evaluate(p, y);
  CHECK(one.auc == auc(p, y));
  CHECK(one.brier == brier(p, y));
  const auto cal = calibration(p, y);
  CHECK(one.cal_slope == cal.slope);
  CHECK(one.cal_intercept == cal.intercept);
  CHECK(one.n_rows == 400);
  CHECK(one.n_events == static_cast<Index>(y.sum()));
  CHECK(one.k_imputations == 1);

  MatrixXd same(400, 3);
  same << p, p, p;
  const auto triple = evaluate(same, y);
  CHECK(std::abs(triple.auc - one.auc) < 1e-15);
  CHECK(std::abs(triple.brier - one.brier) < 1e-15);
  CHECK(std::abs(triple.cal_slope - one.cal_slope) < 1e-14);
  CHECK(triple.k_imputations == 3);

  MatrixXd five(400, 5);
  for (int k = 0; k < 5; ++k) {
    for (Index i = 0; i < 400; ++i) five(i, k) = logistic(lp(i) + 0.3 * rng.normal());
  }
  const auto r = evaluate(five, y);
  CHECK(r.k_imputations == 5);
  MatrixXd shuffled(400, 5);
  const int order[] = {3, 0, 4, 1, 2};
  for (int k = 0; k < 5; ++k) shuffled.col(k) = five.col(order[k]);
  const auto s = evaluate(shuffled, y);
  CHECK(s.auc == r.auc);
  CHECK(s.brier == r.brier);
  CHECK(s.cal_intercept == r.cal_intercept);
  CHECK(s.cal_slope == r.cal_slope);

  double mean_auc = 0.0;
  for (int k = 0; k < 5; ++k) mean_auc += auc(five.col(k), y) / 5.0;
  CHECK(std::abs(r.auc - mean_auc) < 1e-14);

  const auto stacked = evaluate(five, y, Pooling::stacked);
  VectorXd all(2000), yy(2000);
  for (int k = 0; k < 5; ++k) {
    all.segment(k * 400, 400) = five.col(k);
    yy.segment(k * 400, 400) = y;
  }
  CHECK(std::abs(stacked.auc - auc(all, yy)) < 1e-14);
}

TEST_CASE("metric names") {
  for (auto m : kAllMetrics) CHECK(parse_metric(to_string(m)) == m);
  CHECK(parse_pooling("stacked") == Pooling::stacked);
  CHECK_THROWS(parse_metric("accuracy"));
}

}
