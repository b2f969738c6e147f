#pragma once
// The two-phase payment mechanism: Phase I federated gradient descent to the
// shared model, Phase II per-agent leave-one-out descent that accumulates each
// agent's payment incrementally. Deterministic given the scenario.

#include <cstdint>
#include <string>
#include <vector>

#include "fflsim/agents.hpp"
#include "fflsim/model.hpp"

namespace fflsim {

struct FflConfig {
  double eta1 = 0.0;    // Phase-I step size
  double eta2 = 0.0;    // Phase-II step size
  long t1 = 0;          // Phase-I iteration count
  long t2 = 0;          // Phase-II mandatory iteration parameter
  double epsilon = 0.0;  // payment accuracy target in the stop criterion
  double mu = 0.0;       // strong-convexity constant in the stop criterion
  long phase2_cap = -1;  // hard cap on Phase-II steps; -1 -> 100*t2 + 1000
  Vec w0;                // initial model; empty -> zeros
  double l_f = 0.0;      // if > 0, enforce this bound on true gradient norms
  bool record_iterates = false;

  long resolved_phase2_cap() const { return phase2_cap < 0 ? 100 * t2 + 1000 : phase2_cap; }
  void validate() const;
};

struct TraceRow {
  long round = 0;
  double loss = 0.0;          // objective of the phase at the pre-update point
  double grad_norm = 0.0;     // norm of the aggregated reported gradient
  double running_payment = 0.0;  // zero throughout Phase I
};

struct PhaseTrace {
  std::vector<TraceRow> rows;
  std::vector<Vec> iterates;  // pre-update points; filled when record_iterates
  Vec final_point;
  double max_true_grad_norm = 0.0;  // largest true per-agent gradient seen
};

enum class Phase2Stop {
  criterion_met,                 // ran >= t2+1 steps and the criterion holds
  cap_reached_criterion_unmet,   // hard cap hit first; payment still returned
  no_peers,                      // single agent: empty leave-one-out objective
  fixed_iterations,              // exact-iteration phases with no criterion
};
const char* phase2_stop_name(Phase2Stop stop);

struct MechanismRun {
  Vec w_star;
  std::vector<double> payments;  // per agent
  PhaseTrace phase1;
  std::vector<PhaseTrace> phase2;          // per agent, or per cluster for the
                                           // cluster-based mechanism
  std::vector<Phase2Stop> termination_reasons;  // aligned with phase2
  std::vector<int> trace_of_agent;  // agent -> phase2 trace index
  double max_true_grad_norm = 0.0;  // largest true per-agent gradient seen
  bool noisy = false;
  std::uint64_t seed = 0;                 // noise seed; unused when !noisy
  std::vector<std::string> noise_streams;  // derivation labels of every stream
};

// Phase I: t1 rounds of w <- w - eta1 * sum_k p_k g~_k(w), where g~_k is what
// agent k's strategy reports for its true local gradient.
std::pair<Vec, PhaseTrace> phase1_fedavg(const Scenario& s, const StrategyProfile& strategies,
                                         const FflConfig& cfg);

struct Phase2Result {
  double payment = 0.0;
  PhaseTrace trace;
  Phase2Stop stop = Phase2Stop::criterion_met;
};

// Phase II for one agent: leave-one-out descent from w_star accumulating the
// payment; runs t2+1 mandatory steps, then continues until the gradient
// criterion certifies the payment, bounded by the hard cap.
Phase2Result phase2_payment(const Scenario& s, const StrategyProfile& strategies,
                            const Vec& w_star, const FflConfig& cfg, int k);

// Full mechanism. Opt-out strategies must be stripped beforehand (apply_opt_out);
// threads > 1 parallelizes the per-agent Phase-II subproblems with results
// bit-identical to the sequential order.
MechanismRun run_ffl(const Scenario& s, const StrategyProfile& strategies,
                     const FflConfig& cfg, int threads = 1);

// Iteration planning from the convergence analysis. t2_raw is the formula
// value before the nonnegative ceiling; the interval [t2_raw, feasibility_hi]
// must be nonempty for the accuracy guarantee to apply.
struct Theorem1Plan {
  FflConfig config;
  double t2_raw = 0.0;
  double feasibility_hi = 0.0;
};

// Raw iteration-count formula for the payment phase (before the ceiling).
double plan_t2_raw(const ConstantsCertificate& c, int num_agents, double epsilon,
                   double delta_target);

Theorem1Plan plan_hyperparams_theorem1(const ConstantsCertificate& c, int num_agents,
                                       double epsilon, double delta_target,
                                       double g_estimate);

}  // namespace fflsim
