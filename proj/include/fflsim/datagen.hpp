#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fflsim/model.hpp"
#include "fflsim/rng.hpp"

// Scenario generators.  Everything is driven by named counter-based streams,
// so a (spec, seed) pair maps to one byte-identical Scenario.

namespace fflsim {

// Rejection sampler; refuses distributions whose acceptance probability is
// below 1e-6 instead of spinning.
double sample_truncated_normal(double mean, double sd, double lo, double hi, RngStream& rng);

// Two agents share x ~ U[0,1] and y = -2x + 1 + noise; they differ only in
// the mean of the truncated-normal noise.  Known distributions are attached
// so the analytic bounds apply.
struct TwoAgentRegressionSpec {
  int n1 = 50;
  int n2 = 400;
  double noise_mean1 = 0.0;  // the heterogeneity knob
  double noise_mean2 = 0.0;
  double noise_sd = 2.0;
  double trunc_lo = -3.0;
  double trunc_hi = 3.0;
  double reg = 0.1;
  std::uint64_t seed = 0;
};
Scenario gen_two_agent_regression(const TwoAgentRegressionSpec& spec);

// A labelled pool with a held-out split, fed to the label-skew allocator.
struct ClassDataset {
  std::vector<DataPoint> train;
  std::vector<DataPoint> test;
  int feature_dim = 0;
  int num_classes = 0;
};

struct GaussianMixtureSpec {
  int num_classes = 10;
  int feature_dim = 20;
  int n_train = 5000;
  int n_test = 2000;
  double mean_scale = 0.8;  // class-mean radius
  double noise_sd = 0.35;   // per-coordinate spread
  std::uint64_t seed = 0;
};
ClassDataset gen_gaussian_mixture(const GaussianMixtureSpec& spec);

// IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian headers);
// pixel bytes are scaled to [0, 1].
ClassDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

// Label-skew allocation: a sample with label y initially belongs to agent
// y mod min(C, K) and is kept there with probability delta, otherwise it
// moves to a uniformly random agent (the original owner included).  The test
// split runs through the same allocator.  delta = 1 gives pure class silos,
// delta = 0 is uniform.
struct LabelSkewSpec {
  int num_agents = 10;
  double delta = 0.05;  // retention probability; larger means more skew
  double reg = 0.1;
  bool intercept = true;
  bool equal_weights = true;  // false: p_k proportional to n_k
  std::uint64_t seed = 0;
};
Scenario gen_label_skew(const LabelSkewSpec& spec, const ClassDataset& source);

// JSON round-trip with the generating spec and seed attached.
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace fflsim
