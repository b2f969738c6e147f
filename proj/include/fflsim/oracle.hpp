#pragma once
// Ground truth for the mechanisms: exact weighted minimizers, exact (and
// cluster-approximated) VCG payments, and outcome metrics. Everything here is
// brute force and high precision; the engines are judged against it.

#include <optional>
#include <vector>

#include "fflsim/agents.hpp"
#include "fflsim/model.hpp"

namespace fflsim {

// Clustering of agent indices; cluster l is partition[l].
using Partition = std::vector<std::vector<int>>;

void validate_partition(const Partition& partition, int num_agents);

struct VcgOracle {
  Vec w_global;                // minimizer of the full weighted objective
  std::vector<Vec> w_minus;    // leave-one-out minimizers (per agent), or
                               // leave-cluster-out minimizers (per cluster)
  std::vector<double> payments;  // per-agent exact payments
  std::vector<int> cluster_of;   // agent -> cluster index; empty when per-agent
  double tol = 0.0;
};

// Minimizes sum_k alpha_k F_k(w) over the given datasets. Ridge solves the
// normal equations by a dense Cholesky factorization; logistic and softmax run
// accelerated gradient descent to the gradient tolerance.
Vec solve_exact(const LossModel& model, const std::vector<LocalDataset>& datasets,
                const std::vector<double>& alpha, double tol = 1e-12,
                const std::optional<Vec>& warm_start = {});

// Exact payments: one full solve plus one leave-one-out solve per agent.
VcgOracle vcg_payments_exact(const Scenario& s, double tol = 1e-12);

// Cluster-approximated payments: one full solve plus one leave-cluster-out
// solve per cluster; every agent in a cluster shares its reference model.
VcgOracle scalable_vcg_exact(const Scenario& s, const Partition& partition,
                             double tol = 1e-12);

struct PaymentAccuracy {
  std::vector<double> per_agent;  // |mechanism payment - oracle payment|
  double max_abs = 0.0;
};

PaymentAccuracy payment_accuracy_loss(const std::vector<double>& mechanism_payments,
                                      const VcgOracle& oracle);

// Predicted class index at w (classification losses only).
int classify(const LossModel& model, const Vec& w, const Vec& x);

struct OutcomeMetrics {
  double global_loss = 0.0;
  std::vector<double> per_agent_risk;
  // Weighted average test accuracy; absent for regression or when the
  // scenario carries no test split.
  std::optional<double> weighted_test_accuracy;
  std::vector<double> per_agent_test_accuracy;
  std::vector<OverallLoss> per_agent_overall;  // filled only when payments given
};

OutcomeMetrics evaluate_outcome(const Scenario& s, const Vec& w,
                                const std::vector<double>* payments = nullptr);

}  // namespace fflsim
