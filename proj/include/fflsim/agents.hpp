#pragma once
// Agent behavior: how an agent turns its true local gradient into the report
// it sends the server, the stand-alone local-learning baseline, and the
// quasi-linear overall loss (payment plus risk at the outcome).

#include <cstddef>
#include <functional>
#include <vector>

#include "fflsim/model.hpp"

namespace fflsim {

enum class StrategyKind { faithful, amplify, opt_out, custom };

// Hook signature for custom strategies: (round, current model, true gradient).
using ReportHook = std::function<Vec(int, const Vec&, const Vec&)>;

struct AgentStrategy {
  StrategyKind kind = StrategyKind::faithful;
  double gamma = 1.0;  // amplification factor; only read by amplify
  ReportHook hook;     // only read by custom

  static AgentStrategy faithful_agent() { return {}; }
  static AgentStrategy amplified(double gamma);
  static AgentStrategy absent() { return {StrategyKind::opt_out, 1.0, {}}; }
  static AgentStrategy custom_report(ReportHook fn);
  void validate() const;
};

using StrategyProfile = std::vector<AgentStrategy>;

StrategyProfile faithful_profile(std::size_t num_agents);

// J_k = payment + empirical risk at the model the mechanism delivered.
struct OverallLoss {
  double payment = 0.0;
  double empirical_risk_at_outcome = 0.0;
  double total = 0.0;
};

// One round of reporting. Never called for opt-out strategies: absent agents
// are stripped from the scenario before the mechanism starts.
Vec report_gradient(const AgentStrategy& strategy, int round, const Vec& w,
                    const Vec& true_grad);

// Smoothness bound for one agent's regularized empirical risk (same
// construction as certify_constants, restricted to a single dataset).
double local_smoothness(const LossModel& model, const LocalDataset& ds);

// Stand-alone baseline: minimizes F_k by gradient descent with step 1/L_g
// until the gradient norm reaches tol.
Vec local_learning(const LocalDataset& ds, const LossModel& model, double tol,
                   long max_iters = 2000000);

OverallLoss overall_loss(double payment, const LossModel& model,
                         const LocalDataset& ds, const Vec& w_out);

// Result of stripping opt-out agents: the reduced scenario with weights
// renormalized over the remaining agents, their strategies, and the original
// index of each kept agent.
struct ParticipationSplit {
  Scenario reduced;
  StrategyProfile strategies;
  std::vector<int> kept;
};

ParticipationSplit apply_opt_out(const Scenario& s, const StrategyProfile& strategies);

}  // namespace fflsim
