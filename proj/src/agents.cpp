#include "fflsim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fflsim/error.hpp"
#include "fflsim/kernels.hpp"

namespace fflsim {

AgentStrategy AgentStrategy::amplified(double gamma) {
  AgentStrategy s{StrategyKind::amplify, gamma, {}};
  s.validate();
  return s;
}

AgentStrategy AgentStrategy::custom_report(ReportHook fn) {
  AgentStrategy s{StrategyKind::custom, 1.0, std::move(fn)};
  s.validate();
  return s;
}

void AgentStrategy::validate() const {
  if (kind == StrategyKind::amplify)
    require(std::isfinite(gamma) && gamma > 0.0, Errc::invalid_argument,
            "amplification factor must be finite and positive");
  if (kind == StrategyKind::custom)
    require(static_cast<bool>(hook), Errc::invalid_argument,
            "custom strategy needs a report hook");
}

StrategyProfile faithful_profile(std::size_t num_agents) {
  return StrategyProfile(num_agents, AgentStrategy::faithful_agent());
}

Vec report_gradient(const AgentStrategy& strategy, int round, const Vec& w,
                    const Vec& true_grad) {
  switch (strategy.kind) {
    case StrategyKind::faithful:
      return true_grad;
    case StrategyKind::amplify: {
      Vec r = true_grad;
      kern::scal(strategy.gamma, r.data(), r.size());
      return r;
    }
    case StrategyKind::custom: {
      Vec r = strategy.hook(round, w, true_grad);
      require(r.size() == true_grad.size(), Errc::dimension_mismatch,
              "custom report changed the gradient dimension");
      return r;
    }
    case StrategyKind::opt_out:
      break;
  }
  fail(Errc::invalid_argument, "opt-out agents do not report gradients");
}

double local_smoothness(const LossModel& model, const LocalDataset& ds) {
  model.validate();
  require(!ds.points.empty(), Errc::empty_dataset, "agent dataset is empty");
  double xsq = 0.0;
  for (const auto& p : ds.points) {
    double v = kern::nrm2sq(p.x.data(), p.x.size());
    if (model.intercept) v += 1.0;
    xsq = std::max(xsq, v);
  }
  return model.kind == LossKind::ridge ? model.reg + xsq : model.reg + 0.5 * xsq;
}

Vec local_learning(const LocalDataset& ds, const LossModel& model, double tol,
                   long max_iters) {
  require(tol > 0.0, Errc::invalid_argument, "tolerance must be positive");
  double step = 1.0 / local_smoothness(model, ds);
  Vec w(model.param_dim(), 0.0);
  Vec g(w.size());
  for (long it = 0; it < max_iters; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    local_risk_grad_acc(model, ds, w, 1.0, g);
    if (std::sqrt(kern::nrm2sq(g.data(), g.size())) <= tol) return w;
    kern::axpy(-step, g.data(), w.data(), w.size());
  }
  fail(Errc::divergence, "local learning did not reach the gradient tolerance");
}

OverallLoss overall_loss(double payment, const LossModel& model,
                         const LocalDataset& ds, const Vec& w_out) {
  OverallLoss j;
  j.payment = payment;
  j.empirical_risk_at_outcome = local_empirical_risk(model, ds, w_out);
  j.total = j.payment + j.empirical_risk_at_outcome;
  return j;
}

ParticipationSplit apply_opt_out(const Scenario& s, const StrategyProfile& strategies) {
  require(strategies.size() == s.datasets.size(), Errc::dimension_mismatch,
          "one strategy per agent required");
  for (const auto& st : strategies) st.validate();
  ParticipationSplit out;
  out.reduced.loss = s.loss;
  out.reduced.origin = s.origin;
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    if (strategies[k].kind == StrategyKind::opt_out) continue;
    out.kept.push_back(static_cast<int>(k));
    out.strategies.push_back(strategies[k]);
    out.reduced.datasets.push_back(s.datasets[k]);
    if (!s.test_datasets.empty()) out.reduced.test_datasets.push_back(s.test_datasets[k]);
    out.reduced.weights.push_back(s.weights[k]);
    weight_sum += s.weights[k];
    if (s.known) {
      if (!out.reduced.known) out.reduced.known.emplace();
      out.reduced.known->push_back((*s.known)[k]);
    }
  }
  require(!out.kept.empty(), Errc::empty_dataset, "every agent opted out");
  for (auto& w : out.reduced.weights) w /= weight_sum;
  out.reduced.validate();
  return out;
}

}  // namespace fflsim
