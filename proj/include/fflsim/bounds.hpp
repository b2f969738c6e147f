#pragma once
// Closed-form evaluators for the analytic risk and faithfulness bounds, plus
// the distribution-distance and expected-risk machinery they depend on for
// scenarios generated from known distributions.

#include <string>
#include <utility>
#include <vector>

#include "fflsim/distributions.hpp"
#include "fflsim/model.hpp"
#include "fflsim/oracle.hpp"

namespace fflsim {

// Shared inputs of the estimation-error terms.
struct RiskInputs {
  ConstantsCertificate constants;  // mu and l_ell drive the bounds; l_f the
                                   // privacy-cost terms
  std::vector<double> weights;     // p_k
  std::vector<int> sample_counts;  // n_k
  int dim = 0;                     // model dimension d
  double delta = 0.0;              // confidence parameter

  int num_agents() const { return static_cast<int>(weights.size()); }
  void validate() const;
};

// Evaluated bound with enough context to audit and serialize.
struct BoundReport {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  double value = 0.0;
  std::string note;  // validity caveat, e.g. "holds with probability 1-delta"
};

// Estimation-error bound at the shared optimum: sum_k (p_k^2/n_k) *
// l_ell^2 d log(2d/delta) / (4 mu).
double bound_prop1(const RiskInputs& in);

// Local-learning specialization for one agent: l_ell^2 d log(2d/delta) /
// (4 mu n_k).
double bound_corollary1(const RiskInputs& in, int k);

// Integrated absolute difference between two joint densities of the known
// linear-model family (uniform inputs, truncated-normal noise).
double l1_distance(const LinearModelDistribution& p, const LinearModelDistribution& q);

// || sum_j (left_j - right_j) P_j || for two mixture-coefficient vectors over
// the same family; the pairwise distance and every bound below route through
// this single quadrature path.
double l1_mixture_distance(const KnownDistributions& dists,
                           const std::vector<double>& left,
                           const std::vector<double>& right);

// Risk bound of joining the weighted pool for one agent: estimation term plus
// twice the distance from the agent's distribution to the pool mixture.
double bound_prop2(const RiskInputs& in, const KnownDistributions& dists, int k);

// Same under gradient amplification by gamma, which reweights the pool.
double bound_prop3(const RiskInputs& in, const KnownDistributions& dists, int k,
                   double gamma);

// Social risk bound of per-cluster learning; the all-singletons and
// one-big-cluster partitions specialize to the local and federated bounds.
double bound_cluster_rb(const RiskInputs& in, const KnownDistributions& dists,
                        const Partition& partition);
double bound_social_local(const RiskInputs& in);
double bound_social_federated(const RiskInputs& in, const KnownDistributions& dists);

// Printed local-minus-federated gap for the symmetric case (equal weights and
// counts): (K-1) l_ell^2 d log(2Kd/delta)/(4 mu n) - (2/K) sum_k ||P_k - mean||.
double bound_social_gap_equal(const RiskInputs& in, const KnownDistributions& dists);

// Exact quadratic form of an expected risk E(w) = 0.5 w^T h w - b^T w + c
// for the known family under the squared loss with ridge regularization.
struct QuadraticRisk {
  std::vector<double> h;  // row-major dim x dim
  Vec b;
  double c = 0.0;

  double value(const Vec& w) const;
  Vec minimizer() const;
  double min_value() const;
};

// Direct evaluation from distribution moments; the quadratic is recovered
// exactly from a handful of evaluations.
double expected_risk_value(const LossModel& model, const LinearModelDistribution& dist,
                           const Vec& w);
QuadraticRisk expected_risk_quadratic(const LossModel& model,
                                      const LinearModelDistribution& dist);

struct ParticipationBounds {
  double rb_local = 0.0;  // stand-alone risk bound for the agent
  double rb_ffl = 0.0;    // mechanism risk bound; approximate per the source
};

// Both participation bounds for agent k; the expected-risk minima inside them
// come from the exact quadratic forms above.
ParticipationBounds bound_participation(const RiskInputs& in, const LossModel& model,
                                        const KnownDistributions& dists, int k);

// Geometric Phase-I contribution (2 l_g / mu) (1 - mu/l_g)^{t1} * initial_gap,
// shared by the outcome risk bound and the participation comparison.
double phase1_contraction_term(double l_g, double mu, long t1, double initial_gap);

// Outcome risk bound of the mechanism's model: doubled estimation term plus
// the Phase-I contraction term.
double bound_phi(const RiskInputs& in, double l_g, long t1, double initial_gap);

// Deviation-gain level implied by a payment accuracy target and the outcome
// risk bound: 2 epsilon + K phi.
double faithfulness_epsilon(double epsilon, int num_agents, double phi);

// Outcome risk bound of the private mechanism, up to the unspecified leading
// constant c1.
double bound_dp_risk(const RiskInputs& in, double alpha, double beta, double c1 = 1.0);

}  // namespace fflsim
