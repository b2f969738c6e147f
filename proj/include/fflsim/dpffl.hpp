#pragma once
// Cluster-based private mechanism: noisy federated descent, leave-cluster-out
// payment models, Gaussian payment noise, concentrated-DP accounting, and the
// privacy/accuracy/iteration tradeoff planner.

#include <cstdint>
#include <optional>
#include <vector>

#include "fflsim/ffl.hpp"
#include "fflsim/model.hpp"
#include "fflsim/oracle.hpp"
#include "fflsim/rng.hpp"

namespace fflsim {

struct NoiseCalibration {
  double sigma_sq = 0.0;    // per-aggregation gradient-noise variance
  double sigma_p_sq = 0.0;  // payment-noise variance
  // Concentrated-DP bookkeeping: cost of one noisy aggregation, one noisy
  // payment, and the composed total over the whole run.
  double rho_aggregation = 0.0;
  double rho_payment = 0.0;
  double rho_total = 0.0;
};

// Closed-form variances for the target (alpha, beta); n_min is the smallest
// local dataset size. Cross-checks the two printed forms against each other.
NoiseCalibration calibrate_noise(const ConstantsCertificate& c, int num_agents,
                                 int n_min, long t1, long t2, double alpha, double beta);

// Converts a composed concentrated-DP budget to its (alpha, beta)-DP level.
double zcdp_to_dp_alpha(double rho_total, double beta);

// Seeded shuffle then round-robin: cluster sizes differ by at most one.
Partition partition_clusters(int num_agents, int num_clusters, std::uint64_t seed);

// Smallest cluster count keeping the cluster approximation error within
// epsilon, capped at the number of agents and floored at one.
int plan_L_theorem3(const ConstantsCertificate& c, int num_agents, double epsilon);

// Simulated trusted aggregator: weighted sum of the reports plus a single
// Gaussian noise vector; individual reports never leave this call.
Vec secure_aggregate(const std::vector<Vec>& reports, const std::vector<double>& weights,
                     double noise_sd, RngStream& rng);

struct DpConfig {
  double alpha = 0.0;       // privacy risk
  double beta = 0.0;        // privacy failure probability
  int num_clusters = 0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  long t1 = 0;
  long t2 = 0;
  double epsilon = 0.0;     // cluster-approximation target
  std::uint64_t seed = 0;
  double l_f = 0.0;         // gradient bound; drives calibration and is enforced
  bool record_iterates = false;
  // Bypass calibration with exact variances (e.g. zero noise in degenerate
  // equivalence tests).
  std::optional<NoiseCalibration> noise_override;

  void validate(int num_agents) const;
};

// Full private mechanism run. Phase II solves one subproblem per cluster with
// exactly t2 iterations; payments follow the cluster reference models, with
// i.i.d. per-agent payment noise. Streams are keyed by purpose and index, so
// results are independent of thread scheduling.
MechanismRun run_dpffl(const Scenario& s, const StrategyProfile& strategies,
                       const DpConfig& cfg, int threads = 1);

struct Prop9Plan {
  long t = 0;          // shared Phase-I / Phase-II iteration count
  double bound = 0.0;  // expected payment accuracy loss bound
  double a = 0.0;      // formula intermediates, kept for audit
  double b = 0.0;
  double c = 0.0;
};

Prop9Plan plan_tradeoff_prop9(const ConstantsCertificate& c, int num_agents, int n_min,
                              int dim, double alpha, double beta, double eta2,
                              double epsilon);

}  // namespace fflsim
