#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cosum/rescale.hpp"

namespace cosum {

struct SolverConfig {
  double tol = 1e-7;              // max absolute coefficient change per sweep
  std::size_t max_sweeps = 10000;
};

struct SparseModel {
  std::vector<std::pair<std::size_t, double>> beta;  // nonzeros, ascending column
  double gamma = 0.0;
  double lambda = 0.0;
  double objective = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  std::size_t support_size() const { return beta.size(); }
  std::vector<double> dense_beta(std::size_t p) const;
  double coefficient(std::size_t j) const;
};

// Objective value after every coordinate update (intercept included).
struct SolverTrace {
  std::vector<double> objectives;
};

// Squared-error lasso with an unpenalized intercept:
//   sum_i (y_i - x_i'beta - gamma)^2 + lambda * sum_j |beta_j|
// Cyclic coordinate descent; each update is the exact 1-D minimizer
// beta_j = soft(x_j'r_(j), lambda/2) / ||x_j||^2. Throws on lambda < 0.
SparseModel fit_lasso(const FeatureMatrix& X, std::span<const double> y, double lambda,
                      const SolverConfig& config = {}, const SparseModel* warm_start = nullptr,
                      SolverTrace* trace = nullptr);

// L1-penalized logistic regression, labels in {-1,+1}:
//   sum_i log(1 + exp(-y_i (x_i'beta + gamma))) + lambda * sum_j |beta_j|
// Coordinate descent on a quadratic bound of the loss that holds inside a
// per-coordinate trust region (Genkin-Lewis-Madigan style). Requires lambda > 0.
SparseModel fit_l1lr(const FeatureMatrix& X, std::span<const double> y, double lambda,
                     const SolverConfig& config = {}, const SparseModel* warm_start = nullptr,
                     SolverTrace* trace = nullptr);

double lasso_objective(const FeatureMatrix& X, std::span<const double> y,
                       std::span<const double> beta, double gamma, double lambda);
double l1lr_objective(const FeatureMatrix& X, std::span<const double> y,
                      std::span<const double> beta, double gamma, double lambda);

// Smallest lambda at which beta = 0 is optimal.
double lasso_lambda_max(const FeatureMatrix& X, std::span<const double> y);
double l1lr_lambda_max(const FeatureMatrix& X, std::span<const double> y);

// Optimality residuals at a fitted model.
struct KktReport {
  double intercept_gradient = 0.0;   // |d loss / d gamma|
  double max_active_violation = 0.0;  // max over beta_j != 0 of |grad_j + lambda sign(beta_j)|
  double max_inactive_excess = 0.0;   // max over beta_j == 0 of max(0, |grad_j| - lambda)
};

KktReport lasso_kkt(const FeatureMatrix& X, std::span<const double> y, const SparseModel& model);
KktReport l1lr_kkt(const FeatureMatrix& X, std::span<const double> y, const SparseModel& model);

std::vector<double> label_targets(std::span<const std::int8_t> labels);

}  // namespace cosum
