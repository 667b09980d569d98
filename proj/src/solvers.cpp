#include "cosum/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "cosum/error.hpp"

namespace cosum {

std::vector<double> SparseModel::dense_beta(std::size_t p) const {
  std::vector<double> out(p, 0.0);
  for (const auto& [j, v] : beta) out.at(j) = v;
  return out;
}

double SparseModel::coefficient(std::size_t j) const {
  auto it = std::lower_bound(beta.begin(), beta.end(), j,
                             [](const auto& entry, std::size_t col) { return entry.first < col; });
  if (it == beta.end() || it->first != j) return 0.0;
  return it->second;
}

std::vector<double> label_targets(std::span<const std::int8_t> labels) {
  std::vector<double> y;
  y.reserve(labels.size());
  for (std::int8_t v : labels) {
    if (v != 0) y.push_back(static_cast<double>(v));
  }
  return y;
}

namespace {

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

void check_problem(const FeatureMatrix& X, std::span<const double> y, double lambda) {
  if (y.size() != X.rows()) throw Error("invalid_argument", "target length does not match rows");
  if (X.rows() == 0) throw Error("invalid_argument", "empty design");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error("invalid_argument", "lambda must be finite and nonnegative");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw Error("non_finite", "targets contain NaN or Inf");
  }
  for (double v : X.values()) {
    if (!std::isfinite(v)) throw Error("non_finite", "design contains NaN or Inf");
  }
}

std::vector<double> margins(const FeatureMatrix& X, std::span<const double> beta, double gamma) {
  std::vector<double> eta(X.rows(), gamma);
  for (std::size_t j = 0; j < X.cols(); ++j) {
    if (beta[j] == 0.0) continue;
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k) eta[rows[k]] += vals[k] * beta[j];
  }
  return eta;
}

double l1_norm(std::span<const double> beta) {
  double s = 0.0;
  for (double b : beta) s += std::abs(b);
  return s;
}

SparseModel pack(const std::vector<double>& beta, double gamma, double lambda, double objective,
                 std::size_t sweeps, bool converged) {
  SparseModel m;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) m.beta.emplace_back(j, beta[j]);
  }
  m.gamma = gamma;
  m.lambda = lambda;
  m.objective = objective;
  m.sweeps = sweeps;
  m.converged = converged;
  if (!converged) {
    m.warnings.push_back("solver reached max_sweeps=" + std::to_string(sweeps) +
                         " before converging");
  }
  return m;
}

// log(1 + exp(-r)) without overflow.
double logistic_loss(double r) {
  return r > 0 ? std::log1p(std::exp(-r)) : -r + std::log1p(std::exp(r));
}

// 1 / (1 + exp(r)), i.e. sigma(-r).
double sigma_neg(double r) {
  if (r >= 0) {
    const double e = std::exp(-r);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(r));
}

// Largest value of the logistic curvature 1/(2 + e^s + e^-s) over
// |s - r| <= delta.
double curvature_bound(double r, double delta) {
  const double a = std::abs(r);
  if (a <= delta) return 0.25;
  const double e = std::exp(a - delta);
  return 1.0 / (2.0 + e + 1.0 / e);
}

}  // namespace

double lasso_objective(const FeatureMatrix& X, std::span<const double> y,
                       std::span<const double> beta, double gamma, double lambda) {
  const auto eta = margins(X, beta, gamma);
  double rss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - eta[i];
    rss += r * r;
  }
  return rss + lambda * l1_norm(beta);
}

double l1lr_objective(const FeatureMatrix& X, std::span<const double> y,
                      std::span<const double> beta, double gamma, double lambda) {
  const auto eta = margins(X, beta, gamma);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += logistic_loss(y[i] * eta[i]);
  return loss + lambda * l1_norm(beta);
}

double lasso_lambda_max(const FeatureMatrix& X, std::span<const double> y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double best = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    double dot = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) dot += vals[k] * (y[rows[k]] - mean);
    best = std::max(best, std::abs(dot));
  }
  return 2.0 * best;
}

double l1lr_lambda_max(const FeatureMatrix& X, std::span<const double> y) {
  double p_hat = 0.0;
  for (double v : y) p_hat += v > 0 ? 1.0 : 0.0;
  p_hat /= static_cast<double>(y.size());
  double best = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    double dot = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      dot += vals[k] * ((y[rows[k]] > 0 ? 1.0 : 0.0) - p_hat);
    }
    best = std::max(best, std::abs(dot));
  }
  return best;
}

SparseModel fit_lasso(const FeatureMatrix& X, std::span<const double> y, double lambda,
                      const SolverConfig& config, const SparseModel* warm_start,
                      SolverTrace* trace) {
  check_problem(X, y, lambda);
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  const double half_lambda = lambda / 2.0;

  std::vector<double> z(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (double v : X.column_values(j)) z[j] += v * v;
  }

  std::vector<double> beta(p, 0.0);
  double gamma = 0.0;
  if (warm_start) {
    for (const auto& [j, v] : warm_start->beta) {
      if (j < p) beta[j] = v;
    }
    gamma = warm_start->gamma;
  }
  std::vector<double> r = margins(X, beta, gamma);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - r[i];

  double l1 = l1_norm(beta);
  auto record = [&]() {
    if (!trace) return;
    double rss = 0.0;
    for (double v : r) rss += v * v;
    trace->objectives.push_back(rss + lambda * l1);
  };
  record();

  auto update_intercept = [&]() {
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(n);
    if (mean != 0.0) {
      gamma += mean;
      for (double& v : r) v -= mean;
    }
    record();
    return std::abs(mean);
  };

  auto update = [&](std::size_t j) {
    if (z[j] == 0.0) return 0.0;
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    double rho = z[j] * beta[j];
    for (std::size_t k = 0; k < rows.size(); ++k) rho += vals[k] * r[rows[k]];
    const double next = soft_threshold(rho, half_lambda) / z[j];
    const double delta = next - beta[j];
    if (delta != 0.0) {
      for (std::size_t k = 0; k < rows.size(); ++k) r[rows[k]] -= vals[k] * delta;
      l1 += std::abs(next) - std::abs(beta[j]);
      beta[j] = next;
    }
    record();
    return std::abs(delta);
  };

  auto objective_now = [&]() {
    double rss = 0.0;
    for (double v : r) rss += v * v;
    return rss + lambda * l1;
  };

  // Exact minimization over the current sign pattern, clipped at the first
  // coefficient that would change sign. Ill-conditioned supports make plain
  // coordinate descent crawl; this step lands on the face optimum directly.
  // A column that depends linearly on earlier ones gives a direction along
  // which only the penalty changes; if the penalty decreases along it, the
  // step follows it until a coefficient reaches zero.
  std::vector<double> scatter;
  auto move_to = [&](const std::vector<double>& next_beta) {
    const std::vector<double> saved_beta = beta;
    const std::vector<double> saved_r = r;
    const double saved_gamma = gamma, saved_l1 = l1;
    const double before = objective_now();
    beta = next_beta;
    r = margins(X, beta, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = y[i] - r[i];
      mean += r[i];
    }
    gamma = mean / static_cast<double>(n);
    for (double& v : r) v -= gamma;
    l1 = l1_norm(beta);
    if (!(objective_now() <= before)) {
      beta = saved_beta;
      r = saved_r;
      gamma = saved_gamma;
      l1 = saved_l1;
      return false;
    }
    record();
    return true;
  };

  auto face_step = [&](const std::vector<std::size_t>& active) {
    const std::size_t m = active.size();
    if (m == 0 || m > 2000) return false;
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);

    // Centered Gram matrix from the sparse columns:
    // (x_a - mu_a)'(x_b - mu_b) = x_a'x_b - n mu_a mu_b.
    std::vector<double> mu(m, 0.0), sign(m), gram(m * m), rhs(m);
    for (std::size_t a = 0; a < m; ++a) {
      for (double v : X.column_values(active[a])) mu[a] += v;
      mu[a] /= static_cast<double>(n);
    }
    scatter.assign(n, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      const auto rows_a = X.column_rows(active[a]);
      const auto vals_a = X.column_values(active[a]);
      double dy = 0.0;
      for (std::size_t k = 0; k < rows_a.size(); ++k) {
        scatter[rows_a[k]] = vals_a[k];
        dy += vals_a[k] * (y[rows_a[k]] - ybar);
      }
      sign[a] = beta[active[a]] > 0 ? 1.0 : -1.0;
      rhs[a] = dy - half_lambda * sign[a];
      for (std::size_t b = 0; b <= a; ++b) {
        const auto rows_b = X.column_rows(active[b]);
        const auto vals_b = X.column_values(active[b]);
        double g = 0.0;
        for (std::size_t k = 0; k < rows_b.size(); ++k) g += vals_b[k] * scatter[rows_b[k]];
        g -= static_cast<double>(n) * mu[a] * mu[b];
        gram[a * m + b] = gram[b * m + a] = g;
      }
      for (std::uint32_t i : rows_a) scatter[i] = 0.0;
    }

    std::vector<bool> free(m, true);
    std::vector<double> L(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      double d = gram[a * m + a];
      for (std::size_t k = 0; k < a; ++k) {
        if (free[k]) d -= L[a * m + k] * L[a * m + k];
      }
      if (d > 1e-10 * gram[a * m + a] && gram[a * m + a] > 0.0) {
        L[a * m + a] = std::sqrt(d);
        for (std::size_t b = a + 1; b < m; ++b) {
          double v = gram[b * m + a];
          for (std::size_t k = 0; k < a; ++k) {
            if (free[k]) v -= L[b * m + k] * L[a * m + k];
          }
          L[b * m + a] = v / L[a * m + a];
        }
        continue;
      }
      free[a] = false;
      // x_a = sum_k c_k x_k over earlier free columns.
      std::vector<double> c(a, 0.0);
      for (std::size_t k = 0; k < a; ++k) {
        if (!free[k]) continue;
        double v = gram[k * m + a];
        for (std::size_t l = 0; l < k; ++l) {
          if (free[l]) v -= L[k * m + l] * c[l];
        }
        c[k] = v / L[k * m + k];
      }
      for (std::size_t k = a; k-- > 0;) {
        if (!free[k]) continue;
        double v = c[k];
        for (std::size_t l = k + 1; l < a; ++l) {
          if (free[l]) v -= L[l * m + k] * c[l];
        }
        c[k] = v / L[k * m + k];
      }
      double slope = sign[a];
      for (std::size_t k = 0; k < a; ++k) {
        if (free[k]) slope -= sign[k] * c[k];
      }
      if (std::abs(slope) <= 1e-9) continue;
      // Direction v (v_a = 1, v_k = -c_k) scaled to descend the penalty.
      const double dir = slope > 0 ? -1.0 : 1.0;
      double t = INFINITY;
      std::size_t hit = m;
      auto consider = [&](std::size_t idx, double d_idx) {
        const double b0 = beta[active[idx]];
        if (b0 * d_idx < 0.0 && -b0 / d_idx < t) {
          t = -b0 / d_idx;
          hit = idx;
        }
      };
      consider(a, dir);
      for (std::size_t k = 0; k < a; ++k) {
        if (free[k] && c[k] != 0.0) consider(k, -dir * c[k]);
      }
      if (hit == m) continue;
      std::vector<double> next = beta;
      next[active[a]] += t * dir;
      for (std::size_t k = 0; k < a; ++k) {
        if (free[k]) next[active[k]] -= t * dir * c[k];
      }
      next[active[hit]] = 0.0;
      for (std::size_t k = 0; k <= a; ++k) {
        if ((next[active[k]] > 0) != (sign[k] > 0)) next[active[k]] = 0.0;
      }
      return move_to(next);
    }

    std::vector<double> sol(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      if (!free[a]) continue;
      double v = rhs[a];
      for (std::size_t b = 0; b < m; ++b) {
        if (!free[b]) v -= gram[a * m + b] * beta[active[b]];
      }
      for (std::size_t k = 0; k < a; ++k) {
        if (free[k]) v -= L[a * m + k] * sol[k];
      }
      sol[a] = v / L[a * m + a];
    }
    for (std::size_t a = m; a-- > 0;) {
      if (!free[a]) continue;
      double v = sol[a];
      for (std::size_t k = a + 1; k < m; ++k) {
        if (free[k]) v -= L[k * m + a] * sol[k];
      }
      sol[a] = v / L[a * m + a];
    }
    double t = 1.0;
    std::size_t hit = m;
    for (std::size_t a = 0; a < m; ++a) {
      if (!free[a]) continue;
      const double b0 = beta[active[a]];
      if ((b0 > 0) != (sol[a] > 0) || sol[a] == 0.0) {
        const double ta = b0 / (b0 - sol[a]);
        if (ta < t) {
          t = ta;
          hit = a;
        }
      }
    }
    if (!(t > 0.0)) return false;
    std::vector<double> next = beta;
    for (std::size_t a = 0; a < m; ++a) {
      if (!free[a]) continue;
      const std::size_t j = active[a];
      next[j] = beta[j] + t * (sol[a] - beta[j]);
      if ((next[j] > 0) != (sign[a] > 0)) next[j] = 0.0;
    }
    if (hit < m) next[active[hit]] = 0.0;
    return move_to(next) && hit < m;
  };

  auto polish = [&](std::vector<std::size_t> active) {
    active.erase(std::remove_if(active.begin(), active.end(),
                                [&](std::size_t j) { return beta[j] == 0.0; }),
                 active.end());
    for (int round = 0; round < 4 && face_step(active); ++round) {
      active.erase(std::remove_if(active.begin(), active.end(),
                                  [&](std::size_t j) { return beta[j] == 0.0; }),
                   active.end());
    }
  };

  // Full sweeps alternate with sweeps restricted to the current support;
  // convergence is only declared after a full sweep.
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<std::size_t> active;
  while (sweeps < config.max_sweeps) {
    ++sweeps;
    double change = update_intercept();
    for (std::size_t j = 0; j < p; ++j) change = std::max(change, update(j));
    if (change <= config.tol) {
      converged = true;
      break;
    }
    active.clear();
    for (std::size_t j = 0; j < p; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    std::size_t inner_sweeps = 0, next_polish = 10;
    while (sweeps < config.max_sweeps) {
      ++sweeps;
      double inner = update_intercept();
      for (std::size_t j : active) inner = std::max(inner, update(j));
      if (inner <= config.tol) break;
      if (++inner_sweeps == next_polish) {
        next_polish *= 2;
        polish(active);
      }
    }
  }

  double rss = 0.0;
  for (double v : r) rss += v * v;
  return pack(beta, gamma, lambda, rss + lambda * l1_norm(beta), sweeps, converged);
}

SparseModel fit_l1lr(const FeatureMatrix& X, std::span<const double> y, double lambda,
                     const SolverConfig& config, const SparseModel* warm_start,
                     SolverTrace* trace) {
  check_problem(X, y, lambda);
  if (!(lambda > 0.0)) {
    throw Error("invalid_argument", "l1lr requires lambda > 0 (separable data has no minimizer)");
  }
  for (double v : y) {
    if (v != 1.0 && v != -1.0) throw Error("invalid_argument", "l1lr labels must be -1 or +1");
  }
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  constexpr double kMinRegion = 1e-4;

  std::vector<double> beta(p, 0.0);
  double gamma = 0.0;
  if (warm_start) {
    for (const auto& [j, v] : warm_start->beta) {
      if (j < p) beta[j] = v;
    }
    gamma = warm_start->gamma;
  } else {
    double pos = 0.0;
    for (double v : y) pos += v > 0 ? 1.0 : 0.0;
    if (pos > 0 && pos < static_cast<double>(n)) gamma = std::log(pos / (static_cast<double>(n) - pos));
  }
  // r_i = y_i * (x_i'beta + gamma)
  std::vector<double> r = margins(X, beta, gamma);
  for (std::size_t i = 0; i < n; ++i) r[i] *= y[i];

  std::vector<double> region(p, 1.0);
  double intercept_region = 1.0;
  double l1 = l1_norm(beta);

  auto record = [&]() {
    if (!trace) return;
    double loss = 0.0;
    for (double v : r) loss += logistic_loss(v);
    trace->objectives.push_back(loss + lambda * l1);
  };
  record();

  struct Step {
    double change;
    bool clipped;
  };

  auto update_intercept = [&]() -> Step {
    double grad = 0.0, curv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      grad -= y[i] * sigma_neg(r[i]);
      curv += curvature_bound(r[i], intercept_region);
    }
    double step = curv > 0.0 ? -grad / curv : 0.0;
    const bool clipped = std::abs(step) > intercept_region;
    step = std::clamp(step, -intercept_region, intercept_region);
    if (step != 0.0) {
      gamma += step;
      for (std::size_t i = 0; i < n; ++i) r[i] += y[i] * step;
    }
    intercept_region = std::max({2.0 * std::abs(step), intercept_region / 2.0, kMinRegion});
    record();
    return {std::abs(step), clipped};
  };

  auto update = [&](std::size_t j) -> Step {
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    if (rows.empty()) return {0.0, false};
    const double delta = region[j];
    double grad = 0.0, curv = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t i = rows[k];
      const double x = vals[k];
      grad -= y[i] * x * sigma_neg(r[i]);
      curv += x * x * curvature_bound(r[i], delta * std::abs(x));
    }
    if (curv <= 0.0) return {0.0, false};
    const double target = soft_threshold(curv * beta[j] - grad, lambda) / curv;
    double step = target - beta[j];
    const bool clipped = std::abs(step) > delta;
    step = std::clamp(step, -delta, delta);
    if (step != 0.0) {
      for (std::size_t k = 0; k < rows.size(); ++k) r[rows[k]] += y[rows[k]] * vals[k] * step;
      const double next = beta[j] + step;
      l1 += std::abs(next) - std::abs(beta[j]);
      beta[j] = next;
    }
    region[j] = std::max({2.0 * std::abs(step), delta / 2.0, kMinRegion});
    record();
    return {std::abs(step), clipped};
  };

  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<std::size_t> active;
  auto accumulate = [](Step& total, Step s) {
    total.change = std::max(total.change, s.change);
    total.clipped = total.clipped || (s.clipped && s.change > 0.0);
  };
  while (sweeps < config.max_sweeps) {
    ++sweeps;
    Step total = update_intercept();
    total.clipped = total.clipped && total.change > 0.0;
    for (std::size_t j = 0; j < p; ++j) accumulate(total, update(j));
    if (total.change <= config.tol && !total.clipped) {
      converged = true;
      break;
    }
    active.clear();
    for (std::size_t j = 0; j < p; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    while (sweeps < config.max_sweeps) {
      ++sweeps;
      Step inner = update_intercept();
      for (std::size_t j : active) accumulate(inner, update(j));
      if (inner.change <= config.tol && !inner.clipped) break;
    }
  }

  double loss = 0.0;
  for (double v : r) loss += logistic_loss(v);
  return pack(beta, gamma, lambda, loss + lambda * l1_norm(beta), sweeps, converged);
}

namespace {

KktReport kkt_from_gradient(const FeatureMatrix& X, const SparseModel& model,
                            const std::vector<double>& dloss_deta) {
  KktReport rep;
  double g0 = 0.0;
  for (double v : dloss_deta) g0 += v;
  rep.intercept_gradient = std::abs(g0);
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto rows = X.column_rows(j);
    const auto vals = X.column_values(j);
    double g = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) g += vals[k] * dloss_deta[rows[k]];
    const double b = model.coefficient(j);
    if (b != 0.0) {
      const double s = b > 0 ? 1.0 : -1.0;
      rep.max_active_violation = std::max(rep.max_active_violation, std::abs(g + model.lambda * s));
    } else {
      rep.max_inactive_excess = std::max(rep.max_inactive_excess, std::abs(g) - model.lambda);
    }
  }
  rep.max_inactive_excess = std::max(rep.max_inactive_excess, 0.0);
  return rep;
}

}  // namespace

KktReport lasso_kkt(const FeatureMatrix& X, std::span<const double> y, const SparseModel& model) {
  const auto beta = model.dense_beta(X.cols());
  const auto eta = margins(X, beta, model.gamma);
  std::vector<double> d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = -2.0 * (y[i] - eta[i]);
  return kkt_from_gradient(X, model, d);
}

KktReport l1lr_kkt(const FeatureMatrix& X, std::span<const double> y, const SparseModel& model) {
  const auto beta = model.dense_beta(X.cols());
  const auto eta = margins(X, beta, model.gamma);
  std::vector<double> d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = -y[i] * sigma_neg(y[i] * eta[i]);
  return kkt_from_gradient(X, model, d);
}

}  // namespace cosum
