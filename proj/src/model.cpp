#include "fflsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fflsim/error.hpp"
#include "fflsim/kernels.hpp"

namespace fflsim {

namespace {

// w . x~ for one class block; the intercept coordinate is virtual.
inline double predict(const LossModel& m, const double* w_block, const DataPoint& p) {
  double z = kern::dot(w_block, p.x.data(), p.x.size());
  if (m.intercept) z += w_block[m.feature_dim];
  return z;
}

inline void add_scaled_point(const LossModel& m, double coeff, const DataPoint& p,
                             double* acc_block) {
  kern::axpy(coeff, p.x.data(), acc_block, p.x.size());
  if (m.intercept) acc_block[m.feature_dim] += coeff;
}

int class_label(const LossModel& m, const DataPoint& p) {
  double r = std::round(p.y);
  require(std::abs(p.y - r) < 1e-9, Errc::invalid_argument,
          "classification label is not an integer");
  int c = static_cast<int>(r);
  int num = m.kind == LossKind::logistic ? 2 : m.num_classes;
  require(c >= 0 && c < num, Errc::invalid_argument, "class label out of range");
  return c;
}

/* log(1 + e^z) without overflow for large z */
inline double log1p_exp(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double max_feature_norm_sq(const Scenario& s) {
  double best = 0.0;
  for (const auto& ds : s.datasets)
    for (const auto& p : ds.points) {
      double v = kern::nrm2sq(p.x.data(), p.x.size());
      if (s.loss.intercept) v += 1.0;
      best = std::max(best, v);
    }
  return best;
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::ridge: return "ridge";
    case LossKind::logistic: return "logistic";
    case LossKind::softmax: return "softmax";
  }
  fail(Errc::invalid_argument, "bad loss kind");
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "ridge") return LossKind::ridge;
  if (name == "logistic") return LossKind::logistic;
  if (name == "softmax") return LossKind::softmax;
  fail(Errc::config, "unknown loss kind: " + name);
}

void LossModel::validate() const {
  require(reg > 0.0, Errc::invalid_argument, "regularization must be positive");
  require(feature_dim > 0, Errc::invalid_argument, "feature_dim must be positive");
  if (kind == LossKind::softmax)
    require(num_classes >= 2, Errc::invalid_argument, "softmax needs >= 2 classes");
}

void LossModel::check_point(const DataPoint& p) const {
  require(static_cast<int>(p.x.size()) == feature_dim, Errc::dimension_mismatch,
          "data point feature dimension mismatch");
  for (double v : p.x)
    require(std::isfinite(v), Errc::invalid_argument, "non-finite feature value");
  require(std::isfinite(p.y), Errc::invalid_argument, "non-finite label");
}

double per_sample_loss(const LossModel& m, const Vec& w, const DataPoint& p) {
  require(static_cast<int>(w.size()) == m.param_dim(), Errc::dimension_mismatch,
          "parameter dimension mismatch");
  require(static_cast<int>(p.x.size()) == m.feature_dim, Errc::dimension_mismatch,
          "feature dimension mismatch");
  double reg_term = 0.5 * m.reg * kern::nrm2sq(w.data(), w.size());
  switch (m.kind) {
    case LossKind::ridge: {
      double r = predict(m, w.data(), p) - p.y;
      return 0.5 * r * r + reg_term;
    }
    case LossKind::logistic: {
      double z = predict(m, w.data(), p);
      int y = class_label(m, p);
      return log1p_exp(z) - (y == 1 ? z : 0.0) + reg_term;
    }
    case LossKind::softmax: {
      int y = class_label(m, p);
      int d = m.aug_dim();
      double zmax = -std::numeric_limits<double>::infinity();
      double zy = 0.0;
      std::vector<double> z(m.num_classes);
      for (int c = 0; c < m.num_classes; ++c) {
        z[c] = predict(m, w.data() + c * d, p);
        zmax = std::max(zmax, z[c]);
        if (c == y) zy = z[c];
      }
      double sum = 0.0;
      for (int c = 0; c < m.num_classes; ++c) sum += std::exp(z[c] - zmax);
      return zmax + std::log(sum) - zy + reg_term;
    }
  }
  fail(Errc::invalid_argument, "bad loss kind");
}

void per_sample_grad_acc(const LossModel& m, const Vec& w, const DataPoint& p,
                         double weight, Vec& acc) {
  require(static_cast<int>(w.size()) == m.param_dim(), Errc::dimension_mismatch,
          "parameter dimension mismatch");
  require(acc.size() == w.size(), Errc::dimension_mismatch, "accumulator dimension mismatch");
  switch (m.kind) {
    case LossKind::ridge: {
      double r = predict(m, w.data(), p) - p.y;
      add_scaled_point(m, weight * r, p, acc.data());
      break;
    }
    case LossKind::logistic: {
      double z = predict(m, w.data(), p);
      int y = class_label(m, p);
      add_scaled_point(m, weight * (sigmoid(z) - y), p, acc.data());
      break;
    }
    case LossKind::softmax: {
      int y = class_label(m, p);
      int d = m.aug_dim();
      std::vector<double> z(m.num_classes);
      double zmax = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < m.num_classes; ++c) {
        z[c] = predict(m, w.data() + c * d, p);
        zmax = std::max(zmax, z[c]);
      }
      double sum = 0.0;
      for (int c = 0; c < m.num_classes; ++c) {
        z[c] = std::exp(z[c] - zmax);
        sum += z[c];
      }
      for (int c = 0; c < m.num_classes; ++c) {
        double prob = z[c] / sum;
        add_scaled_point(m, weight * (prob - (c == y ? 1.0 : 0.0)), p, acc.data() + c * d);
      }
      break;
    }
  }
  kern::axpy(weight * m.reg, w.data(), acc.data(), w.size());
}

Vec per_sample_grad(const LossModel& m, const Vec& w, const DataPoint& p) {
  Vec g(w.size(), 0.0);
  per_sample_grad_acc(m, w, p, 1.0, g);
  return g;
}

double local_empirical_risk(const LossModel& m, const LocalDataset& ds, const Vec& w) {
  require(!ds.points.empty(), Errc::empty_dataset, "empty local dataset");
  double sum = 0.0;
  for (const auto& p : ds.points) sum += per_sample_loss(m, w, p);
  return sum / static_cast<double>(ds.points.size());
}

void local_risk_grad_acc(const LossModel& m, const LocalDataset& ds, const Vec& w,
                         double weight, Vec& acc) {
  require(!ds.points.empty(), Errc::empty_dataset, "empty local dataset");
  double per_point = weight / static_cast<double>(ds.points.size());
  // Regularizer gradient folded in once rather than per sample.
  switch (m.kind) {
    case LossKind::ridge:
      for (const auto& p : ds.points) {
        double r = predict(m, w.data(), p) - p.y;
        add_scaled_point(m, per_point * r, p, acc.data());
      }
      break;
    case LossKind::logistic:
      for (const auto& p : ds.points) {
        double z = predict(m, w.data(), p);
        add_scaled_point(m, per_point * (sigmoid(z) - class_label(m, p)), p, acc.data());
      }
      break;
    case LossKind::softmax: {
      int d = m.aug_dim();
      std::vector<double> z(m.num_classes);
      for (const auto& p : ds.points) {
        int y = class_label(m, p);
        double zmax = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < m.num_classes; ++c) {
          z[c] = predict(m, w.data() + c * d, p);
          zmax = std::max(zmax, z[c]);
        }
        double sum = 0.0;
        for (int c = 0; c < m.num_classes; ++c) {
          z[c] = std::exp(z[c] - zmax);
          sum += z[c];
        }
        for (int c = 0; c < m.num_classes; ++c)
          add_scaled_point(m, per_point * (z[c] / sum - (c == y ? 1.0 : 0.0)), p,
                           acc.data() + c * d);
      }
      break;
    }
  }
  kern::axpy(weight * m.reg, w.data(), acc.data(), w.size());
}

Vec local_risk_grad(const LossModel& m, const LocalDataset& ds, const Vec& w) {
  Vec g(w.size(), 0.0);
  local_risk_grad_acc(m, ds, w, 1.0, g);
  return g;
}

int Scenario::total_samples() const {
  int n = 0;
  for (const auto& ds : datasets) n += ds.n();
  return n;
}

int Scenario::min_samples() const {
  int n = std::numeric_limits<int>::max();
  for (const auto& ds : datasets) n = std::min(n, ds.n());
  return datasets.empty() ? 0 : n;
}

void Scenario::validate() const {
  loss.validate();
  require(!datasets.empty(), Errc::empty_dataset, "scenario has no agents");
  require(weights.size() == datasets.size(), Errc::dimension_mismatch,
          "one weight per agent required");
  double sum = 0.0;
  for (double p : weights) {
    require(p > 0.0, Errc::invalid_argument, "agent weights must be positive");
    sum += p;
  }
  require(std::abs(sum - 1.0) < 1e-9, Errc::invalid_argument, "agent weights must sum to 1");
  for (const auto& ds : datasets) {
    require(!ds.points.empty(), Errc::empty_dataset, "agent dataset is empty");
    for (const auto& p : ds.points) loss.check_point(p);
  }
  if (!test_datasets.empty())
    require(test_datasets.size() == datasets.size(), Errc::dimension_mismatch,
            "test split must mirror the agent list");
  if (known)
    require(known->size() == datasets.size(), Errc::dimension_mismatch,
            "one known distribution per agent required");
}

double global_risk(const Scenario& s, const Vec& w) {
  double total = 0.0;
  for (std::size_t k = 0; k < s.datasets.size(); ++k)
    total += s.weights[k] * local_empirical_risk(s.loss, s.datasets[k], w);
  return total;
}

Vec global_risk_grad(const Scenario& s, const Vec& w) {
  Vec g(w.size(), 0.0);
  for (std::size_t k = 0; k < s.datasets.size(); ++k)
    local_risk_grad_acc(s.loss, s.datasets[k], w, s.weights[k], g);
  return g;
}

double max_sample_grad_norm(const Scenario& s, const Vec& w) {
  double best = 0.0;
  for (const auto& ds : s.datasets)
    for (const auto& p : ds.points) {
      Vec g = per_sample_grad(s.loss, w, p);
      best = std::max(best, std::sqrt(kern::nrm2sq(g.data(), g.size())));
    }
  return best;
}

ConstantsCertificate certify_constants(const LossModel& model, const Scenario& s,
                                       double l_f, const std::optional<Vec>& w_ref) {
  model.validate();
  s.validate();
  require(l_f > 0.0, Errc::invalid_argument, "l_f must be positive");
  double xsq = max_feature_norm_sq(s);
  ConstantsCertificate cert;
  cert.mu = model.reg;
  // Hessian of the data term is bounded by ||x~||^2 (ridge) or ||x~||^2 / 2
  // (sigmoid/softmax curvature never exceeds 1/2).
  cert.l_g = model.kind == LossKind::ridge ? model.reg + xsq : model.reg + 0.5 * xsq;
  Vec ref;
  if (w_ref) {
    ref = *w_ref;
    require(static_cast<int>(ref.size()) == model.param_dim(), Errc::dimension_mismatch,
            "w_ref dimension mismatch");
  } else {
    // No optimum supplied: plain descent to a moderate tolerance is enough
    // for an l_ell estimate.
    ref.assign(model.param_dim(), 0.0);
    double step = 1.0 / cert.l_g;
    for (int it = 0; it < 20000; ++it) {
      Vec g = global_risk_grad(s, ref);
      double gn = std::sqrt(kern::nrm2sq(g.data(), g.size()));
      if (gn < 1e-9) break;
      kern::axpy(-step, g, ref);
    }
  }
  cert.l_ell = max_sample_grad_norm(s, ref);
  cert.l_f = l_f;
  return cert;
}

}  // namespace fflsim
