#include "fflsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fflsim/error.hpp"
#include "fflsim/kernels.hpp"

namespace fflsim {

namespace {

// Weighted objective h(w) = sum_k alpha_k F_k(w) and its gradient.
double weighted_risk(const LossModel& m, const std::vector<LocalDataset>& datasets,
                     const std::vector<double>& alpha, const Vec& w) {
  double total = 0.0;
  for (std::size_t k = 0; k < datasets.size(); ++k)
    if (alpha[k] != 0.0) total += alpha[k] * local_empirical_risk(m, datasets[k], w);
  return total;
}

Vec weighted_grad(const LossModel& m, const std::vector<LocalDataset>& datasets,
                  const std::vector<double>& alpha, const Vec& w) {
  Vec g(w.size(), 0.0);
  for (std::size_t k = 0; k < datasets.size(); ++k)
    if (alpha[k] != 0.0) local_risk_grad_acc(m, datasets[k], w, alpha[k], g);
  return g;
}

// Virtual-intercept feature load into an Eigen vector.
Eigen::VectorXd augmented(const LossModel& m, const DataPoint& p) {
  Eigen::VectorXd x(m.aug_dim());
  for (int j = 0; j < m.feature_dim; ++j) x[j] = p.x[j];
  if (m.intercept) x[m.feature_dim] = 1.0;
  return x;
}

Vec solve_ridge_closed_form(const LossModel& m, const std::vector<LocalDataset>& datasets,
                            const std::vector<double>& alpha, double alpha_sum) {
  const int d = m.aug_dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    if (alpha[k] == 0.0) continue;
    double scale = alpha[k] / static_cast<double>(datasets[k].n());
    for (const auto& p : datasets[k].points) {
      Eigen::VectorXd x = augmented(m, p);
      a.selfadjointView<Eigen::Lower>().rankUpdate(x, scale);
      b += (scale * p.y) * x;
    }
  }
  a.diagonal().array() += alpha_sum * m.reg;
  Eigen::LLT<Eigen::MatrixXd> llt(a.selfadjointView<Eigen::Lower>());
  require(llt.info() == Eigen::Success, Errc::numerical,
          "normal equations are not positive definite");
  Eigen::VectorXd w = llt.solve(b);
  return Vec(w.data(), w.data() + d);
}

Vec solve_smooth_descent(const LossModel& m, const std::vector<LocalDataset>& datasets,
                         const std::vector<double>& alpha, double alpha_sum, double tol,
                         const std::optional<Vec>& warm_start) {
  // Curvature bounds for the weighted objective give the step size and the
  // momentum for accelerated descent with adaptive restart.
  double smooth = alpha_sum * m.reg;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    if (alpha[k] == 0.0) continue;
    double xsq = 0.0;
    for (const auto& p : datasets[k].points) {
      double v = kern::nrm2sq(p.x.data(), p.x.size());
      if (m.intercept) v += 1.0;
      xsq = std::max(xsq, v);
    }
    smooth += alpha[k] * 0.5 * xsq;
  }
  double mu = alpha_sum * m.reg;
  double kappa = smooth / mu;
  double momentum = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
  double step = 1.0 / smooth;

  Vec w = warm_start ? *warm_start : Vec(m.param_dim(), 0.0);
  require(static_cast<int>(w.size()) == m.param_dim(), Errc::dimension_mismatch,
          "warm start dimension mismatch");
  Vec w_prev = w;
  Vec y(w.size());
  for (long it = 0; it < 1000000L; ++it) {
    for (std::size_t j = 0; j < w.size(); ++j)
      y[j] = w[j] + momentum * (w[j] - w_prev[j]);
    Vec gy = weighted_grad(m, datasets, alpha, y);
    w_prev = w;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = y[j] - step * gy[j];
    Vec gw = weighted_grad(m, datasets, alpha, w);
    if (std::sqrt(kern::nrm2sq(gw.data(), gw.size())) <= tol) return w;
    // Momentum restart when the step is no longer a descent direction.
    double along = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) along += gw[j] * (w[j] - w_prev[j]);
    if (along > 0.0) w_prev = w;
  }
  fail(Errc::divergence, "exact solve did not reach the gradient tolerance");
}

}  // namespace

void validate_partition(const Partition& partition, int num_agents) {
  require(!partition.empty(), Errc::invalid_argument, "partition has no clusters");
  std::vector<int> seen(num_agents, 0);
  for (const auto& cluster : partition) {
    require(!cluster.empty(), Errc::invalid_argument, "partition has an empty cluster");
    for (int k : cluster) {
      require(k >= 0 && k < num_agents, Errc::invalid_argument,
              "partition references an unknown agent");
      require(seen[k]++ == 0, Errc::invalid_argument,
              "partition assigns an agent twice");
    }
  }
  for (int k = 0; k < num_agents; ++k)
    require(seen[k] == 1, Errc::invalid_argument, "partition misses an agent");
}

Vec solve_exact(const LossModel& model, const std::vector<LocalDataset>& datasets,
                const std::vector<double>& alpha, double tol,
                const std::optional<Vec>& warm_start) {
  model.validate();
  require(alpha.size() == datasets.size(), Errc::dimension_mismatch,
          "one objective weight per dataset required");
  require(tol > 0.0, Errc::invalid_argument, "tolerance must be positive");
  double alpha_sum = 0.0;
  for (double a : alpha) {
    require(a >= 0.0 && std::isfinite(a), Errc::invalid_argument,
            "objective weights must be nonnegative");
    alpha_sum += a;
  }
  require(alpha_sum > 0.0, Errc::invalid_argument, "objective weights are all zero");
  Vec w = model.kind == LossKind::ridge
              ? solve_ridge_closed_form(model, datasets, alpha, alpha_sum)
              : solve_smooth_descent(model, datasets, alpha, alpha_sum, tol, warm_start);
  Vec g = weighted_grad(model, datasets, alpha, w);
  require(std::sqrt(kern::nrm2sq(g.data(), g.size())) <= tol * 16.0, Errc::numerical,
          "exact solve failed its own gradient check");
  return w;
}

VcgOracle vcg_payments_exact(const Scenario& s, double tol) {
  s.validate();
  const std::size_t K = s.datasets.size();
  VcgOracle out;
  out.tol = tol;
  out.w_global = solve_exact(s.loss, s.datasets, s.weights, tol);
  out.w_minus.resize(K);
  out.payments.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (K == 1) {
      // No other agents: the leave-one-out objective is empty and the payment
      // is zero by convention.
      out.w_minus[k] = out.w_global;
      out.payments[k] = 0.0;
      continue;
    }
    std::vector<double> alpha = s.weights;
    alpha[k] = 0.0;
    out.w_minus[k] = solve_exact(s.loss, s.datasets, alpha, tol, out.w_global);
    double at_global = weighted_risk(s.loss, s.datasets, alpha, out.w_global);
    double at_minus = weighted_risk(s.loss, s.datasets, alpha, out.w_minus[k]);
    out.payments[k] = (at_global - at_minus) / s.weights[k];
  }
  return out;
}

VcgOracle scalable_vcg_exact(const Scenario& s, const Partition& partition, double tol) {
  s.validate();
  const int K = static_cast<int>(s.datasets.size());
  validate_partition(partition, K);
  VcgOracle out;
  out.tol = tol;
  out.w_global = solve_exact(s.loss, s.datasets, s.weights, tol);
  out.cluster_of.assign(K, -1);
  out.w_minus.resize(partition.size());
  for (std::size_t l = 0; l < partition.size(); ++l) {
    std::vector<double> alpha = s.weights;
    for (int k : partition[l]) {
      alpha[k] = 0.0;
      out.cluster_of[k] = static_cast<int>(l);
    }
    double remaining = 0.0;
    for (double a : alpha) remaining += a;
    require(remaining > 0.0, Errc::invalid_argument, "cluster complement empty");
    out.w_minus[l] = solve_exact(s.loss, s.datasets, alpha, tol, out.w_global);
  }
  out.payments.resize(K);
  for (int k = 0; k < K; ++k) {
    const Vec& w_ref = out.w_minus[out.cluster_of[k]];
    double total = 0.0;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      total += s.weights[j] * (local_empirical_risk(s.loss, s.datasets[j], out.w_global) -
                               local_empirical_risk(s.loss, s.datasets[j], w_ref));
    }
    out.payments[k] = total / s.weights[k];
  }
  return out;
}

PaymentAccuracy payment_accuracy_loss(const std::vector<double>& mechanism_payments,
                                      const VcgOracle& oracle) {
  require(mechanism_payments.size() == oracle.payments.size(), Errc::dimension_mismatch,
          "payment vectors cover different agent sets");
  PaymentAccuracy acc;
  acc.per_agent.resize(mechanism_payments.size());
  for (std::size_t k = 0; k < mechanism_payments.size(); ++k) {
    acc.per_agent[k] = std::abs(mechanism_payments[k] - oracle.payments[k]);
    acc.max_abs = std::max(acc.max_abs, acc.per_agent[k]);
  }
  return acc;
}

int classify(const LossModel& model, const Vec& w, const Vec& x) {
  require(model.kind != LossKind::ridge, Errc::unsupported,
          "classification under a regression loss");
  require(static_cast<int>(x.size()) == model.feature_dim, Errc::dimension_mismatch,
          "feature dimension mismatch");
  const int d = model.aug_dim();
  if (model.kind == LossKind::logistic) {
    double z = kern::dot(w.data(), x.data(), x.size());
    if (model.intercept) z += w[model.feature_dim];
    return z > 0.0 ? 1 : 0;
  }
  int best = 0;
  double best_z = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < model.num_classes; ++c) {
    double z = kern::dot(w.data() + c * d, x.data(), x.size());
    if (model.intercept) z += w[c * d + model.feature_dim];
    if (z > best_z) {
      best_z = z;
      best = c;
    }
  }
  return best;
}

OutcomeMetrics evaluate_outcome(const Scenario& s, const Vec& w,
                                const std::vector<double>* payments) {
  s.validate();
  const std::size_t K = s.datasets.size();
  OutcomeMetrics m;
  m.per_agent_risk.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    m.per_agent_risk[k] = local_empirical_risk(s.loss, s.datasets[k], w);
    m.global_loss += s.weights[k] * m.per_agent_risk[k];
  }
  if (s.loss.kind != LossKind::ridge && !s.test_datasets.empty()) {
    m.per_agent_test_accuracy.resize(K);
    double weighted = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& test = s.test_datasets[k];
      require(!test.points.empty(), Errc::empty_dataset, "empty test dataset");
      int hits = 0;
      for (const auto& p : test.points)
        if (classify(s.loss, w, p.x) == static_cast<int>(std::llround(p.y))) ++hits;
      m.per_agent_test_accuracy[k] = hits / static_cast<double>(test.n());
      weighted += s.weights[k] * m.per_agent_test_accuracy[k];
    }
    m.weighted_test_accuracy = weighted;
  }
  if (payments) {
    require(payments->size() == K, Errc::dimension_mismatch,
            "one payment per agent required");
    m.per_agent_overall.resize(K);
    for (std::size_t k = 0; k < K; ++k)
      m.per_agent_overall[k] = overall_loss((*payments)[k], s.loss, s.datasets[k], w);
  }
  return m;
}

}  // namespace fflsim
