#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mdcompat/cpm.hpp"
#include "mdcompat/error.hpp"
#include "support.hpp"

using namespace mdcompat;
using mdtest::TempDir;

namespace {

// Both predictors masked at random, so all four patterns are populated.
Dataset four_patterns(Index n, std::uint64_t seed) {
  auto ds = mdtest::simple_cohort(n, 0.3, seed);
  Stream rng({seed, {"four"}});
  MaskMatrix m = ds.mask();
  for (Index i = 0; i < n; ++i) {
    m(i, 0) = rng.uniform() < 0.6;
    m(i, 1) = rng.uniform() < 0.6;
  }
  return ds.with_mask(m);
}

ValidationHandling vh(const char* text) { return ValidationHandling::parse(text); }

}  // namespace

TEST_SUITE("cpm") {

TEST_CASE("development on a large cohort matches the large-sample oracle") {
  ScenarioConfig cfg;
  Stream orng({1, {"oracle"}});
  const Dataset big = generate_population(cfg, 1000000, orng);
  MatrixXd xb(big.rows(), 2);
  xb << big.values().col(0), big.values().col(1);
  const auto oracle = fit_logistic(xb, big.values().col(3));

  cfg.n_dev = 50000;
  cfg.target_missing = 0.0;
  Stream rng({1, {"dev"}});
  const auto cohort = generate_cohort(cfg, Stage::development, rng);
  Stream drng({1, {"develop"}});
  const auto bundle = develop_cpm(cohort.full_data, DevelopmentMethod::fully_observed, drng);
  const Cpm& cpm = std::get<Cpm>(bundle.model);
  CHECK(cpm.predictors == std::vector<std::string>{"X1", "X2"});
  for (Index j = 1; j <= 2; ++j) {
    CHECK(std::abs(cpm.coefficients(j) - oracle.coefficients(j)) < 4.0 * std::sqrt(cpm.covariance(j, j)));
  }
}

TEST_CASE("all methods agree on data without missing values") {
  const auto ds = mdtest::simple_cohort(1500, 0.4, 2);
  Stream rng({2, {"base"}});
  const VectorXd base = std::get<Cpm>(develop_cpm(ds, DevelopmentMethod::fully_observed, rng).model).coefficients;
  for (auto method : kAllDevelopmentMethods) {
    Stream r({2, {to_string(method)}});
    const auto bundle = develop_cpm(ds, method, r);
    CHECK((bundle.primary_model().coefficients - base).cwiseAbs().maxCoeff() < 1e-8);
    if (method == DevelopmentMethod::psm) CHECK(std::get<PatternSubmodelFamily>(bundle.model).entries.size() == 1);
  }
}

TEST_CASE("packages and metadata of developed bundles") {
  const auto ds = mdtest::mask_x1(mdtest::simple_cohort(1500, 0.4, 3), 0.5, 3);
  Stream rng({3, {"dev"}});
  CHECK_THROWS_AS(develop_cpm(ds, DevelopmentMethod::fully_observed, rng), DevelopmentError);

  const auto mm = develop_cpm(ds, DevelopmentMethod::mean_mode, rng);
  REQUIRE(mm.package);
  CHECK(mm.package->strategy == ImputationStrategy::mean_mode);
  const auto ri = develop_cpm(ds, DevelopmentMethod::regression, rng);
  REQUIRE(ri.package);
  CHECK(ri.package->strategy == ImputationStrategy::regression);
  const auto miy = develop_cpm(ds, DevelopmentMethod::mi_with_y, rng);
  REQUIRE(miy.package);
  CHECK(miy.package->options.include_outcome);
  CHECK(miy.metadata.at("m") == "5");
  const auto cca = develop_cpm(ds, DevelopmentMethod::cca, rng);
  CHECK_FALSE(cca.package);
  CHECK(cca.summaries.strategy == ImputationStrategy::mean_mode);
  CHECK(std::stoi(cca.metadata.at("n_complete_rows")) == ds.rows() - ds.missing_count(0));
}

TEST_CASE("complete case development without complete rows") {
  auto ds = mdtest::simple_cohort(100, 0.0, 4);
  MaskMatrix m = ds.mask();
  for (Index i = 0; i < 100; ++i) m(i, i % 2) = 0;
  Stream rng({4, {"dev"}});
  CHECK_THROWS_AS(develop_cpm(ds.with_mask(m), DevelopmentMethod::cca, rng), DevelopmentError);
}

TEST_CASE("rubin pooling") {
  VectorXd v(3);
  v << 0.2, -1.0, 3.0;
  MatrixXd c = MatrixXd::Identity(3, 3) * 0.1;
  const auto same = rubin_pool({v, v, v}, {c, c, c});
  CHECK((same.coefficients - v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((same.covariance - c).cwiseAbs().maxCoeff() < 1e-15);

  VectorXd a = VectorXd::Zero(2), b = VectorXd::Ones(2);
  MatrixXd z = MatrixXd::Zero(2, 2);
  const auto two = rubin_pool({a, b}, {z, z});
  CHECK(two.coefficients(0) == 0.5);
  // B = 0.5 per entry, total = (1 + 1/2) * 0.5
  CHECK(std::abs(two.covariance(0, 0) - 0.75) < 1e-15);

  const auto one = rubin_pool({v}, {c});
  CHECK((one.coefficients.array() == v.array()).all());
  CHECK((one.covariance.array() == c.array()).all());

  Stream rng({5, {"perm"}});
  std::vector<VectorXd> est;
  std::vector<MatrixXd> cov;
  for (int k = 0; k < 5; ++k) {
    VectorXd e(3);
    for (int j = 0; j < 3; ++j) e(j) = rng.normal();
    est.push_back(e);
    cov.push_back(MatrixXd::Identity(3, 3) * (1.0 + rng.uniform()));
  }
  const auto p1 = rubin_pool(est, cov);
  std::reverse(est.begin(), est.end());
  std::reverse(cov.begin(), cov.end());
  const auto p2 = rubin_pool(est, cov);
  CHECK((p1.coefficients - p2.coefficients).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((p1.covariance - p2.covariance).cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(rubin_pool({v}, {}), ArgumentError);
  CHECK_THROWS_AS(rubin_pool({v, a}, {c, z}), ArgumentError);
}

TEST_CASE("pattern family with four populated patterns") {
  const auto ds = four_patterns(3000, 6);
  const auto family = fit_pattern_family(ds);
  REQUIRE(family.entries.size() == 4);
  for (const auto& [pattern, entry] : family.entries) {
    CHECK(entry.model.has_value());
    CHECK(entry.model->predictors.size() == static_cast<std::size_t>(pattern.observed_count()));
  }
  CHECK(family.fallback.coefficients.size() == 1);
  CHECK(family.full_model().predictors.size() == 2);
}

TEST_CASE("sparse patterns route to the fallback") {
  auto ds = mdtest::simple_cohort(500, 0.0, 7);
  MaskMatrix m = ds.mask();
  m(0, 0) = 0;
  m(1, 0) = 0;
  m(2, 0) = 0;
  ds = ds.with_mask(m);
  const auto family = fit_pattern_family(ds);
  REQUIRE(family.entries.size() == 2);
  const auto& sparse = family.entries.at(MissingnessPattern::from_string("01"));
  CHECK(sparse.n_rows == 3);
  CHECK_FALSE(sparse.model.has_value());
  CHECK(&family.model_for(MissingnessPattern::from_string("01")) == &family.fallback);
  CHECK(&family.model_for(MissingnessPattern::from_string("00")) == &family.fallback);
  // Fallback is the whole-cohort intercept-only model.
  const double prev = ds.outcome().mean();
  CHECK(std::abs(family.fallback.coefficients(0) - std::log(prev / (1 - prev))) < 1e-8);
}

TEST_CASE("pattern routing") {
  const auto ds = four_patterns(3000, 8);
  Stream rng({8, {"dev"}});
  const auto bundle = develop_cpm(ds, DevelopmentMethod::psm, rng);
  const auto& family = std::get<PatternSubmodelFamily>(bundle.model);
  Stream prng({8, {"pred"}});
  const auto pred = predict_bundle(bundle, ds, vh("psm"), prng);
  CHECK(pred.probabilities.rows() == ds.rows());
  CHECK((pred.probabilities.array() > 0).all());
  CHECK((pred.probabilities.array() < 1).all());
  const Cpm& full = family.full_model();
  for (Index i = 0; i < ds.rows(); ++i) {
    if (pattern_of(ds, i).all_observed()) {
      const double lp = full.coefficients(0) + full.coefficients(1) * ds.value(i, 0) + full.coefficients(2) * ds.value(i, 1);
      CHECK(std::abs(pred.probabilities(i, 0) - 1.0 / (1.0 + std::exp(-lp))) < 1e-12);
    }
  }

  // Stored values under masked cells never matter.
  MatrixXd v = ds.values();
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < 2; ++j) {
      if (!ds.observed(i, j)) v(i, j) = 1e6;
    }
  }
  const auto pred2 = predict_bundle(bundle, ds.with_values(v, ds.mask()), vh("psm"), prng);
  CHECK((pred.probabilities.array() == pred2.probabilities.array()).all());

  Stream crng({8, {"cca"}});
  const auto cca_bundle = develop_cpm(ds, DevelopmentMethod::cca, crng);
  CHECK_THROWS_AS(predict_bundle(cca_bundle, ds, vh("psm"), prng), HandlingError);
}

TEST_CASE("prediction under the validation handlings") {
  const auto dev = mdtest::mask_x1(mdtest::simple_cohort(2000, 0.5, 9), 0.5, 9);
  const auto val = mdtest::mask_x1(mdtest::simple_cohort(2000, 0.5, 10), 0.5, 10);
  Stream rng({9, {"dev"}});
  const auto mi = develop_cpm(dev, DevelopmentMethod::mi_no_y, rng);
  const auto cca = develop_cpm(dev, DevelopmentMethod::cca, rng);

  Stream a({9, {"a"}});
  const auto p_cca = predict_bundle(cca, val, vh("cca"), a);
  CHECK(static_cast<Index>(p_cca.rows.size()) == val.rows() - val.missing_count(0));
  CHECK(std::abs(static_cast<double>(p_cca.rows.size()) - 1000.0) < 4.0 * std::sqrt(2000 * 0.25));

  const auto p_mi = predict_bundle(mi, val, vh("mi_no_y:transported"), a);
  CHECK(p_mi.probabilities.cols() == 5);
  CHECK(p_mi.probabilities.rows() == val.rows());
  CHECK((p_mi.probabilities.array() > 0).all());
  CHECK((p_mi.probabilities.array() < 1).all());

  const auto p_ref = predict_bundle(cca, val, vh("mi_with_y:refit"), a);
  CHECK(p_ref.probabilities.cols() == 5);

  CHECK_THROWS_AS(predict_bundle(cca, val, vh("regression:transported"), a), HandlingError);
  CHECK_THROWS_AS(predict_bundle(cca, val, vh("fully_observed"), a), ContractError);

  std::vector<ColumnSpec> no_y = {val.column(0), val.column(1)};
  Dataset deploy(no_y, val.values().leftCols(2), val.mask().leftCols(2));
  CHECK_THROWS_AS(predict_bundle(cca, deploy, vh("mi_with_y:refit"), a), ContractError);
  const auto miy = develop_cpm(dev, DevelopmentMethod::mi_with_y, rng);
  CHECK_THROWS_AS(predict_bundle(miy, deploy, vh("mi_with_y:transported"), a), ContractError);
  CHECK(predict_bundle(miy, deploy, vh("mean_mode"), a).probabilities.rows() == val.rows());
}

TEST_CASE("handling labels and admissibility") {
  CHECK(vh("cca").label() == "cca");
  CHECK(vh("mean_mode").mode == HandlingMode::transported);
  CHECK(vh("regression").mode == HandlingMode::refit);
  CHECK(vh("regression:transported").label() == "regression:transported");
  CHECK_THROWS(vh("psm:refit"));
  CHECK_THROWS(vh("nonsense"));

  // Six handlings are open to every bundle; each imputing method adds its own transport.
  Index total = 0;
  for (auto dev : kAllDevelopmentMethods) total += static_cast<Index>(admitted_handlings(dev, true).size());
  CHECK(total == 7 * 6 + 4);
  CHECK(admitted_handlings(DevelopmentMethod::cca, false).size() == 5);
  CHECK(admissible(DevelopmentMethod::psm, vh("psm")));
  CHECK_FALSE(admissible(DevelopmentMethod::cca, vh("psm")));
  CHECK_FALSE(admissible(DevelopmentMethod::cca, vh("regression:transported")));
  CHECK(admissible(DevelopmentMethod::regression, vh("regression:transported")));
}

TEST_CASE("bundle round trips") {
  const auto ds = four_patterns(2000, 11);
  TempDir dir;
  for (auto method : {DevelopmentMethod::mi_with_y, DevelopmentMethod::psm, DevelopmentMethod::regression}) {
    Stream rng({11, {to_string(method)}});
    const auto bundle = develop_cpm(ds, method, rng);
    const auto path = dir / (to_string(method) + ".json");
    save_bundle(bundle, path);
    const auto back = load_bundle(path);
    CHECK(back.method == method);
    CHECK(back.schema == bundle.schema);
    CHECK(back.metadata == bundle.metadata);
    CHECK((back.primary_model().coefficients.array() == bundle.primary_model().coefficients.array()).all());
    CHECK(encode_bundle(back) == encode_bundle(bundle));
    if (method == DevelopmentMethod::psm) {
      const auto& f1 = std::get<PatternSubmodelFamily>(bundle.model);
      const auto& f2 = std::get<PatternSubmodelFamily>(back.model);
      REQUIRE(f1.entries.size() == f2.entries.size());
      for (const auto& [pattern, entry] : f1.entries) {
        const auto& other = f2.entries.at(pattern);
        CHECK(entry.model.has_value() == other.model.has_value());
        if (entry.model) CHECK((entry.model->coefficients.array() == other.model->coefficients.array()).all());
      }
      CHECK((f1.fallback.coefficients.array() == f2.fallback.coefficients.array()).all());
    }
  }
}

TEST_CASE("unknown bundle version") {
  const auto ds = mdtest::simple_cohort(300, 0.0, 12);
  Stream rng({12, {"dev"}});
  std::string text = encode_bundle(develop_cpm(ds, DevelopmentMethod::cca, rng));
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 19, "\"format_version\": 9");
  CHECK_THROWS_AS(decode_bundle(text), DecodeError);
  CHECK_THROWS_AS(decode_bundle("{"), DecodeError);
  CHECK_THROWS_AS(load_bundle("/nonexistent/bundle.json"), IoError);
}

}
