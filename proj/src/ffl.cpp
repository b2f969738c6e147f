#include "fflsim/ffl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <utility>

#include "fflsim/error.hpp"
#include "fflsim/kernels.hpp"

namespace fflsim {

namespace {

bool all_finite(const Vec& w) {
  for (double v : w)
    if (!std::isfinite(v)) return false;
  return true;
}

// Smallest nonnegative integer no less than x.
long nonneg_ceil(double x) {
  require(std::isfinite(x), Errc::numerical, "iteration formula is not finite");
  if (x <= 0.0) return 0;
  return static_cast<long>(std::ceil(x));
}

double weighted_risk_excluding(const Scenario& s, int skip, const Vec& w) {
  double total = 0.0;
  for (int j = 0; j < s.num_agents(); ++j)
    if (j != skip) total += s.weights[j] * local_empirical_risk(s.loss, s.datasets[j], w);
  return total;
}

// One round of collection: true gradients -> strategy reports -> weighted
// aggregate. Tracks the largest true gradient norm and enforces the bound.
Vec aggregate_reports(const Scenario& s, const StrategyProfile& strategies, int skip,
                      int round, const Vec& w, double l_f, const char* phase,
                      double& max_true_grad_norm) {
  Vec agg(w.size(), 0.0);
  Vec g(w.size());
  for (int j = 0; j < s.num_agents(); ++j) {
    if (j == skip) continue;
    std::fill(g.begin(), g.end(), 0.0);
    local_risk_grad_acc(s.loss, s.datasets[j], w, 1.0, g);
    double norm = std::sqrt(kern::nrm2sq(g.data(), g.size()));
    if (norm > max_true_grad_norm) max_true_grad_norm = norm;
    if (l_f > 0.0)
      require(norm <= l_f, Errc::gradient_bound,
              "agent " + std::to_string(j) + " exceeded the gradient bound in " + phase +
                  " round " + std::to_string(round));
    Vec report = report_gradient(strategies[j], round, w, g);
    kern::axpy(s.weights[j], report.data(), agg.data(), agg.size());
  }
  return agg;
}

}  // namespace

void FflConfig::validate() const {
  require(eta1 > 0.0 && eta2 > 0.0, Errc::invalid_argument, "step sizes must be positive");
  require(t1 >= 0 && t2 >= 0, Errc::invalid_argument, "iteration counts must be nonnegative");
  require(epsilon > 0.0, Errc::invalid_argument, "payment accuracy target must be positive");
  require(mu > 0.0, Errc::invalid_argument, "strong-convexity constant must be positive");
  require(resolved_phase2_cap() >= t2, Errc::invalid_argument,
          "phase-two cap below the mandatory iteration count");
  require(l_f >= 0.0, Errc::invalid_argument, "gradient bound must be nonnegative");
}

const char* phase2_stop_name(Phase2Stop stop) {
  switch (stop) {
    case Phase2Stop::criterion_met: return "criterion_met";
    case Phase2Stop::cap_reached_criterion_unmet: return "cap_reached_criterion_unmet";
    case Phase2Stop::no_peers: return "no_peers";
    case Phase2Stop::fixed_iterations: return "fixed_iterations";
  }
  fail(Errc::invalid_argument, "bad termination reason");
}

std::pair<Vec, PhaseTrace> phase1_fedavg(const Scenario& s, const StrategyProfile& strategies,
                                         const FflConfig& cfg) {
  cfg.validate();
  s.validate();
  require(strategies.size() == s.datasets.size(), Errc::dimension_mismatch,
          "one strategy per agent required");
  Vec w = cfg.w0.empty() ? Vec(s.loss.param_dim(), 0.0) : cfg.w0;
  require(static_cast<int>(w.size()) == s.loss.param_dim(), Errc::dimension_mismatch,
          "initial model dimension mismatch");
  PhaseTrace trace;
  trace.rows.reserve(cfg.t1);
  for (long t = 0; t < cfg.t1; ++t) {
    Vec agg = aggregate_reports(s, strategies, /*skip=*/-1, static_cast<int>(t), w,
                                cfg.l_f, "phase one", trace.max_true_grad_norm);
    trace.rows.push_back({t, global_risk(s, w),
                          std::sqrt(kern::nrm2sq(agg.data(), agg.size())), 0.0});
    if (cfg.record_iterates) trace.iterates.push_back(w);
    kern::axpy(-cfg.eta1, agg.data(), w.data(), w.size());
    require(all_finite(w), Errc::divergence,
            "phase one diverged at round " + std::to_string(t));
  }
  trace.final_point = w;
  return {std::move(w), std::move(trace)};
}

Phase2Result phase2_payment(const Scenario& s, const StrategyProfile& strategies,
                            const Vec& w_star, const FflConfig& cfg, int k) {
  cfg.validate();
  require(k >= 0 && k < s.num_agents(), Errc::invalid_argument, "agent index out of range");
  Phase2Result res;
  res.trace.final_point = w_star;
  if (s.num_agents() == 1) {
    res.stop = Phase2Stop::no_peers;
    return res;
  }
  const double p_k = s.weights[k];
  const long cap = cfg.resolved_phase2_cap();
  Vec w = w_star;
  for (long t = 0;; ++t) {
    Vec agg = aggregate_reports(s, strategies, k, static_cast<int>(t), w, cfg.l_f,
                                "phase two", res.trace.max_true_grad_norm);
    double aggsq = kern::nrm2sq(agg.data(), agg.size());
    bool more = t <= cfg.t2 || aggsq / (2.0 * cfg.mu) > p_k * cfg.epsilon;
    if (!more) {
      res.stop = Phase2Stop::criterion_met;
      break;
    }
    if (t >= cap) {
      res.stop = Phase2Stop::cap_reached_criterion_unmet;
      break;
    }
    if (cfg.record_iterates) res.trace.iterates.push_back(w);
    double loss_before = weighted_risk_excluding(s, k, w);
    res.payment += cfg.eta2 / p_k * aggsq;
    kern::axpy(-cfg.eta2, agg.data(), w.data(), w.size());
    require(all_finite(w), Errc::divergence, "agent " + std::to_string(k) +
                                                 " phase two diverged at round " +
                                                 std::to_string(t));
    res.trace.rows.push_back({t, loss_before,
                              std::sqrt(aggsq), res.payment});
  }
  res.trace.final_point = std::move(w);
  return res;
}

MechanismRun run_ffl(const Scenario& s, const StrategyProfile& strategies,
                     const FflConfig& cfg, int threads) {
  require(threads >= 1, Errc::invalid_argument, "thread count must be positive");
  for (const auto& st : strategies) {
    st.validate();
    require(st.kind != StrategyKind::opt_out, Errc::invalid_argument,
            "strip opt-out agents before running the mechanism");
  }
  MechanismRun run;
  auto [w_star, trace1] = phase1_fedavg(s, strategies, cfg);
  run.w_star = std::move(w_star);
  run.phase1 = std::move(trace1);

  const int K = s.num_agents();
  run.payments.resize(K);
  run.phase2.resize(K);
  run.termination_reasons.resize(K, Phase2Stop::criterion_met);
  run.trace_of_agent.resize(K);

  auto solve_agent = [&](int k) {
    Phase2Result r = phase2_payment(s, strategies, run.w_star, cfg, k);
    run.payments[k] = r.payment;
    run.phase2[k] = std::move(r.trace);
    run.termination_reasons[k] = r.stop;
    run.trace_of_agent[k] = k;
  };

  if (threads == 1 || K == 1) {
    for (int k = 0; k < K; ++k) solve_agent(k);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int k = next.fetch_add(1); k < K; k = next.fetch_add(1)) solve_agent(k);
    };
    std::vector<std::thread> pool;
    int n_threads = std::min(threads, K);
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  run.max_true_grad_norm = run.phase1.max_true_grad_norm;
  for (const auto& trace : run.phase2)
    run.max_true_grad_norm = std::max(run.max_true_grad_norm, trace.max_true_grad_norm);
  return run;
}

double plan_t2_raw(const ConstantsCertificate& c, int num_agents, double epsilon,
                   double delta_target) {
  require(c.mu > 0.0 && c.l_g > c.mu, Errc::invalid_argument,
          "need 0 < mu < l_g for iteration planning");
  require(c.l_f > 0.0, Errc::invalid_argument, "gradient bound must be positive");
  require(num_agents >= 1, Errc::invalid_argument, "need at least one agent");
  require(epsilon > 0.0, Errc::invalid_argument, "accuracy target must be positive");
  require(delta_target >= 0.0, Errc::invalid_argument,
          "phase-one target must be nonnegative");
  double top = (c.l_f + delta_target * c.mu) * (c.l_f + delta_target * c.mu) * c.l_g;
  double bottom = c.mu * c.mu * num_agents * epsilon;
  return std::log(top / bottom) / std::log(c.l_g / (c.l_g - c.mu));
}

Theorem1Plan plan_hyperparams_theorem1(const ConstantsCertificate& c, int num_agents,
                                       double epsilon, double delta_target,
                                       double g_estimate) {
  require(g_estimate >= 0.0, Errc::invalid_argument,
          "distance estimate must be nonnegative");
  Theorem1Plan plan;
  plan.t2_raw = plan_t2_raw(c, num_agents, epsilon, delta_target);
  plan.feasibility_hi = c.l_g * epsilon * num_agents / (2.0 * c.l_f * c.l_f);
  require(plan.t2_raw <= plan.feasibility_hi, Errc::infeasible,
          "empty feasibility interval: increase K or epsilon");

  FflConfig cfg;
  cfg.eta1 = 1.0 / c.l_g;
  cfg.eta2 = 1.0 / (num_agents * c.l_g);
  if (g_estimate == 0.0) {
    cfg.t1 = 0;
  } else {
    require(delta_target > 0.0, Errc::infeasible,
            "phase-one target of zero needs unbounded iterations; pass a positive target");
    cfg.t1 = nonneg_ceil(2.0 * std::log(num_agents * g_estimate / delta_target) /
                         std::log(1.0 / (1.0 - c.mu / c.l_g)));
  }
  cfg.t2 = nonneg_ceil(plan.t2_raw);
  cfg.epsilon = epsilon;
  cfg.mu = c.mu;
  cfg.l_f = c.l_f;
  plan.config = cfg;
  return plan;
}

}  // namespace fflsim
