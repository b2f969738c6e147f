#include "fflsim/dpffl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
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

long nonneg_ceil(double x) {
  require(std::isfinite(x), Errc::numerical, "iteration formula is not finite");
  if (x <= 0.0) return 0;
  return static_cast<long>(std::ceil(x));
}

}  // namespace

NoiseCalibration calibrate_noise(const ConstantsCertificate& c, int num_agents,
                                 int n_min, long t1, long t2, double alpha, double beta) {
  require(c.l_f > 0.0, Errc::invalid_argument, "gradient bound must be positive");
  require(num_agents >= 1, Errc::invalid_argument, "need at least one agent");
  require(n_min >= 1, Errc::invalid_argument, "smallest dataset size must be positive");
  require(t1 >= 0 && t2 >= 0, Errc::invalid_argument, "iteration counts must be nonnegative");
  require(alpha > 0.0, Errc::invalid_argument, "privacy risk must be positive");
  require(beta > 0.0 && beta < 1.0, Errc::invalid_argument,
          "privacy failure probability must lie in (0,1)");
  const double k = num_agents;
  const double n1 = n_min;
  const double aggregations = static_cast<double>(t1) + k * static_cast<double>(t2);
  require(aggregations > 0.0, Errc::invalid_argument,
          "noise calibration needs at least one aggregation");
  const double log_inv_beta = std::log(1.0 / beta);

  NoiseCalibration cal;
  cal.sigma_sq =
      16.0 * c.l_f * c.l_f * aggregations * log_inv_beta / (k * k * n1 * n1 * alpha * alpha);
  cal.sigma_p_sq = 16.0 * k * log_inv_beta / (n1 * n1 * alpha * alpha);

  // The appendix relates the two variances directly; a transcription error in
  // either closed form would break this identity.
  double relation = cal.sigma_sq * k * k * k / (aggregations * c.l_f * c.l_f);
  require(std::abs(relation - cal.sigma_p_sq) <= 1e-9 * cal.sigma_p_sq, Errc::numerical,
          "noise variance cross-check failed");

  cal.rho_aggregation = 2.0 * c.l_f * c.l_f / (k * k * n1 * n1 * cal.sigma_sq);
  cal.rho_payment = 2.0 / (n1 * n1 * cal.sigma_p_sq);
  cal.rho_total = aggregations * cal.rho_aggregation + k * cal.rho_payment;
  return cal;
}

double zcdp_to_dp_alpha(double rho_total, double beta) {
  require(rho_total >= 0.0, Errc::invalid_argument, "budget must be nonnegative");
  require(beta > 0.0 && beta < 1.0, Errc::invalid_argument,
          "privacy failure probability must lie in (0,1)");
  return rho_total + 2.0 * std::sqrt(rho_total * std::log(1.0 / beta));
}

Partition partition_clusters(int num_agents, int num_clusters, std::uint64_t seed) {
  require(num_agents >= 1, Errc::invalid_argument, "need at least one agent");
  require(num_clusters >= 1 && num_clusters <= num_agents, Errc::invalid_argument,
          "cluster count must lie in [1, K]");
  std::vector<int> order(num_agents);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = RngStream(seed).derive("partition");
  for (int i = num_agents - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  Partition clusters(num_clusters);
  for (int i = 0; i < num_agents; ++i) clusters[i % num_clusters].push_back(order[i]);
  return clusters;
}

int plan_L_theorem3(const ConstantsCertificate& c, int num_agents, double epsilon) {
  require(c.mu > 0.0 && c.l_g > 0.0 && c.l_f > 0.0, Errc::invalid_argument,
          "constants must be positive");
  require(num_agents >= 1, Errc::invalid_argument, "need at least one agent");
  require(epsilon > 0.0, Errc::invalid_argument, "accuracy target must be positive");
  double raw = std::sqrt(c.l_g * (num_agents - 1) / (2.0 * epsilon)) * c.l_f / c.mu;
  long l = std::max(1L, nonneg_ceil(raw));
  return static_cast<int>(std::min<long>(l, num_agents));
}

Vec secure_aggregate(const std::vector<Vec>& reports, const std::vector<double>& weights,
                     double noise_sd, RngStream& rng) {
  require(reports.size() == weights.size(), Errc::dimension_mismatch,
          "one weight per report required");
  require(noise_sd >= 0.0, Errc::invalid_argument, "noise scale must be nonnegative");
  require(!reports.empty() || noise_sd > 0.0, Errc::invalid_argument,
          "nothing to aggregate");
  std::size_t dim = reports.empty() ? 0 : reports.front().size();
  Vec out(dim, 0.0);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    require(reports[i].size() == dim, Errc::dimension_mismatch,
            "report dimension mismatch");
    kern::axpy(weights[i], reports[i].data(), out.data(), dim);
  }
  if (noise_sd > 0.0)
    for (double& v : out) v += noise_sd * rng.gaussian();
  return out;
}

void DpConfig::validate(int num_agents) const {
  require(alpha > 0.0, Errc::invalid_argument, "privacy risk must be positive");
  require(beta > 0.0 && beta < 1.0, Errc::invalid_argument,
          "privacy failure probability must lie in (0,1)");
  require(num_clusters >= 1 && num_clusters <= num_agents, Errc::invalid_argument,
          "cluster count must lie in [1, K]");
  require(eta1 > 0.0 && eta2 > 0.0, Errc::invalid_argument, "step sizes must be positive");
  require(t1 >= 0 && t2 >= 0, Errc::invalid_argument, "iteration counts must be nonnegative");
  require(epsilon > 0.0, Errc::invalid_argument, "approximation target must be positive");
  if (!noise_override)
    require(l_f > 0.0, Errc::invalid_argument,
            "noise calibration needs a positive gradient bound");
}

namespace {

// True gradients -> strategy reports for the listed agents, plus bookkeeping
// for the gradient bound. The reports stay inside the calling engine and are
// only ever combined through secure_aggregate.
std::vector<Vec> collect_reports(const Scenario& s, const StrategyProfile& strategies,
                                 const std::vector<int>& reporters, int round, const Vec& w,
                                 double l_f, const char* phase, double& max_true_grad_norm) {
  std::vector<Vec> reports;
  reports.reserve(reporters.size());
  Vec g(w.size());
  for (int j : reporters) {
    std::fill(g.begin(), g.end(), 0.0);
    local_risk_grad_acc(s.loss, s.datasets[j], w, 1.0, g);
    double norm = std::sqrt(kern::nrm2sq(g.data(), g.size()));
    if (norm > max_true_grad_norm) max_true_grad_norm = norm;
    if (l_f > 0.0)
      require(norm <= l_f, Errc::gradient_bound,
              "agent " + std::to_string(j) + " exceeded the gradient bound in " + phase +
                  " round " + std::to_string(round));
    reports.push_back(report_gradient(strategies[j], round, w, g));
  }
  return reports;
}

}  // namespace

MechanismRun run_dpffl(const Scenario& s, const StrategyProfile& strategies,
                       const DpConfig& cfg, int threads) {
  s.validate();
  const int K = s.num_agents();
  cfg.validate(K);
  require(threads >= 1, Errc::invalid_argument, "thread count must be positive");
  require(strategies.size() == s.datasets.size(), Errc::dimension_mismatch,
          "one strategy per agent required");
  for (const auto& st : strategies) {
    st.validate();
    require(st.kind != StrategyKind::opt_out, Errc::invalid_argument,
            "strip opt-out agents before running the mechanism");
  }

  ConstantsCertificate bound_only;
  bound_only.l_f = cfg.l_f;
  const NoiseCalibration noise =
      cfg.noise_override ? *cfg.noise_override
                         : calibrate_noise(bound_only, K, s.min_samples(), cfg.t1, cfg.t2,
                                           cfg.alpha, cfg.beta);
  const double sigma = std::sqrt(noise.sigma_sq);
  const double sigma_p = std::sqrt(noise.sigma_p_sq);

  const Partition clusters = partition_clusters(K, cfg.num_clusters, cfg.seed);
  const RngStream root(cfg.seed);

  MechanismRun run;
  run.noisy = true;
  run.seed = cfg.seed;
  run.noise_streams.push_back("partition");

  // Phase I: noisy federated descent on the full objective.
  std::vector<int> everyone(K);
  std::iota(everyone.begin(), everyone.end(), 0);
  {
    RngStream phase1_rng = root.derive("p1");
    run.noise_streams.push_back("p1");
    Vec w(s.loss.param_dim(), 0.0);
    run.phase1.rows.reserve(cfg.t1);
    for (long t = 0; t < cfg.t1; ++t) {
      std::vector<Vec> reports =
          collect_reports(s, strategies, everyone, static_cast<int>(t), w, cfg.l_f,
                          "phase one", run.phase1.max_true_grad_norm);
      Vec agg = secure_aggregate(reports, s.weights, sigma, phase1_rng);
      run.phase1.rows.push_back({t, global_risk(s, w),
                                 std::sqrt(kern::nrm2sq(agg.data(), agg.size())), 0.0});
      if (cfg.record_iterates) run.phase1.iterates.push_back(w);
      kern::axpy(-cfg.eta1, agg.data(), w.data(), w.size());
      require(all_finite(w), Errc::divergence,
              "phase one diverged at round " + std::to_string(t));
    }
    run.phase1.final_point = std::move(w);
  }
  run.w_star = run.phase1.final_point;

  // Phase II: per-cluster leave-cluster-out descent, exactly t2 iterations.
  const int L = static_cast<int>(clusters.size());
  run.phase2.resize(L);
  run.termination_reasons.assign(L, Phase2Stop::fixed_iterations);
  run.trace_of_agent.assign(K, -1);
  for (int l = 0; l < L; ++l) {
    for (int k : clusters[l]) run.trace_of_agent[k] = l;
    run.noise_streams.push_back("p2/" + std::to_string(l));
  }

  auto solve_cluster = [&](int l) {
    std::vector<int> outside;
    std::vector<double> outside_weights;
    for (int j = 0; j < K; ++j)
      if (run.trace_of_agent[j] != l) {
        outside.push_back(j);
        outside_weights.push_back(s.weights[j]);
      }
    RngStream cluster_rng = root.derive("p2").derive(static_cast<std::uint64_t>(l));
    PhaseTrace& trace = run.phase2[l];
    trace.rows.reserve(cfg.t2);
    Vec w = run.w_star;
    for (long t = 0; t < cfg.t2; ++t) {
      std::vector<Vec> reports =
          collect_reports(s, strategies, outside, static_cast<int>(t), w, cfg.l_f,
                          "phase two", trace.max_true_grad_norm);
      Vec agg = secure_aggregate(reports, outside_weights, sigma, cluster_rng);
      double loss = 0.0;
      for (std::size_t i = 0; i < outside.size(); ++i)
        loss += outside_weights[i] *
                local_empirical_risk(s.loss, s.datasets[outside[i]], w);
      trace.rows.push_back({t, loss, std::sqrt(kern::nrm2sq(agg.data(), agg.size())), 0.0});
      if (cfg.record_iterates) trace.iterates.push_back(w);
      kern::axpy(-cfg.eta2, agg.data(), w.data(), w.size());
      require(all_finite(w), Errc::divergence, "cluster " + std::to_string(l) +
                                                   " phase two diverged at round " +
                                                   std::to_string(t));
    }
    trace.final_point = std::move(w);
  };

  if (threads == 1 || L == 1) {
    for (int l = 0; l < L; ++l) solve_cluster(l);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int l = next.fetch_add(1); l < L; l = next.fetch_add(1)) solve_cluster(l);
    };
    std::vector<std::thread> pool;
    int n_threads = std::min(threads, L);
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Payments: every agent is scored against its own cluster's reference model,
  // with independent per-agent noise streams.
  std::vector<double> risk_at_star(K);
  for (int j = 0; j < K; ++j)
    risk_at_star[j] = local_empirical_risk(s.loss, s.datasets[j], run.w_star);
  run.payments.resize(K);
  for (int k = 0; k < K; ++k) {
    const Vec& w_ref = run.phase2[run.trace_of_agent[k]].final_point;
    double base = 0.0;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      base += s.weights[j] / s.weights[k] *
              (risk_at_star[j] - local_empirical_risk(s.loss, s.datasets[j], w_ref));
    }
    run.noise_streams.push_back("pay/" + std::to_string(k));
    if (sigma_p > 0.0) {
      RngStream pay_rng = root.derive("pay").derive(static_cast<std::uint64_t>(k));
      base += sigma_p * pay_rng.gaussian();
    }
    run.payments[k] = base;
  }

  run.max_true_grad_norm = run.phase1.max_true_grad_norm;
  for (const auto& trace : run.phase2)
    run.max_true_grad_norm = std::max(run.max_true_grad_norm, trace.max_true_grad_norm);
  return run;
}

Prop9Plan plan_tradeoff_prop9(const ConstantsCertificate& c, int num_agents, int n_min,
                              int dim, double alpha, double beta, double eta2,
                              double epsilon) {
  require(c.mu > 0.0 && c.l_g > 0.0 && c.l_f > 0.0, Errc::invalid_argument,
          "constants must be positive");
  require(num_agents >= 2, Errc::invalid_argument, "tradeoff planning needs K >= 2");
  require(n_min >= 1, Errc::invalid_argument, "smallest dataset size must be positive");
  require(dim >= 1, Errc::invalid_argument, "model dimension must be positive");
  require(alpha > 0.0, Errc::invalid_argument, "privacy risk must be positive");
  require(beta > 0.0 && beta < 1.0, Errc::invalid_argument,
          "privacy failure probability must lie in (0,1)");
  require(epsilon > 0.0, Errc::invalid_argument, "approximation target must be positive");
  require(eta2 > 0.0 && eta2 <= 1.0 / ((num_agents - 1) * c.l_g), Errc::invalid_argument,
          "phase-two step size exceeds 1/((K-1) L_g)");

  const double k = num_agents;
  const double n1 = n_min;
  Prop9Plan plan;
  plan.c = 1.0 - (k - 1.0) * c.mu * eta2;
  require(plan.c > 0.0 && plan.c < 1.0, Errc::invalid_argument,
          "contraction factor outside (0,1)");
  plan.a = 8.0 * eta2 * dim * c.l_f * c.l_f * (k + 1.0) * std::log(1.0 / beta) /
           (c.mu * k * k * (k - 1.0) * n1 * n1 * alpha * alpha);
  plan.b = (k - 1.0) * c.l_f * c.l_f / (2.0 * c.mu);

  const double log_inv_c = std::log(1.0 / plan.c);
  const double raw = std::log(plan.b * log_inv_c / plan.a) / log_inv_c;
  plan.t = nonneg_ceil(raw);
  // Past the clamp the first-term formula no longer applies; the zero-iteration
  // error is bounded by b alone.
  plan.bound = plan.t > 0
                   ? plan.a * (1.0 + std::log(plan.b * log_inv_c / plan.a)) / log_inv_c +
                         epsilon
                   : plan.b + epsilon;
  return plan;
}

}  // namespace fflsim
