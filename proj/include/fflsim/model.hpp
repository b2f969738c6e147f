#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fflsim/distributions.hpp"

// Strongly convex empirical-risk models: ridge regression, l2-regularized
// logistic regression, l2-regularized softmax.  Every per-sample loss is
// reg-strongly-convex and l_g-smooth, which the engines and planners rely on.

namespace fflsim {

using Vec = std::vector<double>;

struct DataPoint {
  Vec x;
  double y = 0.0;  // regression target, or class index for classification
};

struct LocalDataset {
  int owner = 0;
  std::vector<DataPoint> points;
  int n() const { return static_cast<int>(points.size()); }
};

enum class LossKind { ridge, logistic, softmax };

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

struct LossModel {
  LossKind kind = LossKind::ridge;
  double reg = 0.0;        // l2 strength; equals the strong-convexity modulus mu
  int feature_dim = 0;     // raw feature dimension d_x
  int num_classes = 1;     // softmax only (logistic is the 2-class special case)
  bool intercept = false;  // append a constant-1 coordinate to every x

  int aug_dim() const { return feature_dim + (intercept ? 1 : 0); }
  int param_dim() const {
    return kind == LossKind::softmax ? aug_dim() * num_classes : aug_dim();
  }
  void validate() const;
  void check_point(const DataPoint& p) const;
};

double per_sample_loss(const LossModel& model, const Vec& w, const DataPoint& p);
Vec per_sample_grad(const LossModel& model, const Vec& w, const DataPoint& p);
// acc += weight * grad(loss(w; p)); the allocation-free form the engines use.
void per_sample_grad_acc(const LossModel& model, const Vec& w, const DataPoint& p,
                         double weight, Vec& acc);

double local_empirical_risk(const LossModel& model, const LocalDataset& ds, const Vec& w);
Vec local_risk_grad(const LossModel& model, const LocalDataset& ds, const Vec& w);
void local_risk_grad_acc(const LossModel& model, const LocalDataset& ds, const Vec& w,
                         double weight, Vec& acc);

struct Scenario {
  LossModel loss;
  std::vector<LocalDataset> datasets;
  std::vector<double> weights;  // p_k > 0, sum to 1
  std::vector<LocalDataset> test_datasets;     // optional mirrored split
  std::optional<KnownDistributions> known;     // enables analytic bounds
  // Generating spec and seed, carried through serialization for audit.
  std::vector<std::pair<std::string, std::string>> origin;

  int num_agents() const { return static_cast<int>(datasets.size()); }
  int total_samples() const;
  int min_samples() const;  // n_(1)
  void validate() const;
};

// Weighted objective F(w) = sum_k p_k F_k(w) and its gradient.
double global_risk(const Scenario& s, const Vec& w);
Vec global_risk_grad(const Scenario& s, const Vec& w);

struct ConstantsCertificate {
  double mu = 0.0;    // strong convexity = reg
  double l_g = 0.0;   // smoothness of every per-sample loss
  double l_ell = 0.0; // max per-sample gradient norm at the reference point
  double l_f = 0.0;   // configured trajectory gradient bound
};

// Largest ||grad of a single sample's loss|| over all datasets at w.
double max_sample_grad_norm(const Scenario& s, const Vec& w);

// mu and l_g follow from the model and the feature norms; l_ell is estimated
// at w_ref (pass the computed optimum; if absent an internal descent to
// moderate tolerance finds one); l_f is taken from configuration.
ConstantsCertificate certify_constants(const LossModel& model, const Scenario& s,
                                       double l_f, const std::optional<Vec>& w_ref = {});

}  // namespace fflsim
