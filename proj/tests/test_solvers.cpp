#include <cmath>

#include <doctest.h>

#include "cosum/error.hpp"
#include "cosum/solvers.hpp"
#include "support.hpp"

using namespace cosum;
using testing_support::random_counts;
using testing_support::random_labels;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
};

Problem make_problem(std::mt19937_64& rng) {
  const std::size_t n = 20 + rng() % 100, p = 5 + rng() % 150;
  return {rescale_l2(random_counts(rng, n, p, 0.05)), random_labels(rng, n, 0.3)};
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[k - 1] * (1 + 1e-12) + 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lasso objective never rises along the trace") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const Problem pr = make_problem(rng);
    const double lmax = lasso_lambda_max(pr.x, pr.y);
    SolverTrace trace;
    const SparseModel m = fit_lasso(pr.x, pr.y, 0.05 * lmax, SolverConfig{1e-9, 100000}, nullptr, &trace);
    CHECK(m.converged);
    CHECK(trace.objectives.size() > 1);
    CHECK(nonincreasing(trace.objectives));
    const auto beta = m.dense_beta(pr.x.cols());
    CHECK(m.objective == doctest::Approx(lasso_objective(pr.x, pr.y, beta, m.gamma, m.lambda)));
  }
}

TEST_CASE("l1lr objective never rises along the trace") {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 20; ++t) {
    const Problem pr = make_problem(rng);
    const double lmax = l1lr_lambda_max(pr.x, pr.y);
    SolverTrace trace;
    const SparseModel m = fit_l1lr(pr.x, pr.y, 0.05 * lmax, SolverConfig{1e-9, 100000}, nullptr, &trace);
    CHECK(m.converged);
    CHECK(nonincreasing(trace.objectives));
    const KktReport k = l1lr_kkt(pr.x, pr.y, m);
    CHECK(k.intercept_gradient < 1e-5 * lmax);
    CHECK(k.max_active_violation < 1e-5 * lmax);
    CHECK(k.max_inactive_excess < 1e-5 * lmax);
  }
}

TEST_CASE("lambda_max is the exact threshold for the empty model") {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 20; ++t) {
    const Problem pr = make_problem(rng);
    const double lmax = lasso_lambda_max(pr.x, pr.y);
    CHECK(fit_lasso(pr.x, pr.y, lmax * (1 + 1e-9)).support_size() == 0);
    CHECK(fit_lasso(pr.x, pr.y, lmax * 0.99).support_size() > 0);
    const double gmax = l1lr_lambda_max(pr.x, pr.y);
    CHECK(fit_l1lr(pr.x, pr.y, gmax * (1 + 1e-9)).support_size() == 0);
    CHECK(fit_l1lr(pr.x, pr.y, gmax * 0.99).support_size() > 0);
  }
}

TEST_CASE("empty lasso model has the mean intercept") {
  const FeatureMatrix x = FeatureMatrix::from_dense({{1}, {0}, {0}, {0}});
  const std::vector<double> y{1, -1, -1, 1};
  const SparseModel m = fit_lasso(x, y, 100.0);
  CHECK(m.support_size() == 0);
  CHECK(m.gamma == doctest::Approx(0.0));
}

TEST_CASE("warm starts reach the cold-start solution") {
  std::mt19937_64 rng(34);
  const SolverConfig cfg{1e-11, 100000};
  for (int t = 0; t < 10; ++t) {
    const Problem pr = make_problem(rng);
    const double lmax = lasso_lambda_max(pr.x, pr.y);
    const SparseModel start = fit_lasso(pr.x, pr.y, 0.5 * lmax, cfg);
    const SparseModel warm = fit_lasso(pr.x, pr.y, 0.1 * lmax, cfg, &start);
    const SparseModel cold = fit_lasso(pr.x, pr.y, 0.1 * lmax, cfg);
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
    const SparseModel lstart = fit_l1lr(pr.x, pr.y, 0.5 * lmax, cfg);
    const SparseModel lwarm = fit_l1lr(pr.x, pr.y, 0.1 * lmax, cfg, &lstart);
    const SparseModel lcold = fit_l1lr(pr.x, pr.y, 0.1 * lmax, cfg);
    CHECK(lwarm.objective == doctest::Approx(lcold.objective).epsilon(1e-9));
  }
}

TEST_CASE("duplicated columns still converge") {
  const FeatureMatrix x = FeatureMatrix::from_dense(
      {{1, 1, 0}, {1, 1, 1}, {0, 0, 1}, {1, 1, 0}, {0, 0, 0}, {0, 0, 1}});
  const std::vector<double> y{1, 1, -1, 1, -1, -1};
  const SparseModel m = fit_lasso(x, y, 0.01, SolverConfig{1e-12, 100000});
  CHECK(m.converged);
  const KktReport k = lasso_kkt(x, y, m);
  CHECK(k.max_active_violation < 1e-8);
  CHECK(k.max_inactive_excess < 1e-8);
}

TEST_CASE("invalid penalties are rejected") {
  const FeatureMatrix x = FeatureMatrix::from_dense({{1}, {0}});
  const std::vector<double> y{1, -1};
  CHECK_THROWS_AS(fit_lasso(x, y, -1.0), Error);
  CHECK_THROWS_AS(fit_l1lr(x, y, 0.0), Error);
  const std::vector<double> short_y{1};
  CHECK_THROWS_AS(fit_lasso(x, short_y, 1.0), Error);
}

TEST_CASE("max_sweeps caps the solver with a warning") {
  std::mt19937_64 rng(35);
  const Problem pr = make_problem(rng);
  const SparseModel m = fit_lasso(pr.x, pr.y, 1e-6, SolverConfig{1e-15, 2});
  CHECK_FALSE(m.converged);
  CHECK(m.sweeps == 2);
  CHECK_FALSE(m.warnings.empty());
}

TEST_CASE("label targets") {
  const std::vector<std::int8_t> labels{1, -1, 1};
  CHECK(label_targets(labels) == std::vector<double>{1.0, -1.0, 1.0});
}
