#pragma once

#include <vector>

// Known joint distributions P_k(x, y) for scenarios where analytic risk
// bounds apply: x uniform on [0,1], y = slope*x + offset + noise with the
// noise truncated normal.  Closed-form moments back the quadrature tests.

namespace fflsim {

struct TruncatedNormal {
  double mean = 0.0;
  double sd = 1.0;
  double lo = 0.0;
  double hi = 0.0;

  // Mass of the parent normal inside [lo, hi].
  double acceptance() const;
  // Density at t (0 outside the interval).
  double density(double t) const;
  double moment_mean() const;
  double moment_var() const;
  double moment_second() const;  // E[t^2]
};

struct LinearModelDistribution {
  double slope = 0.0;
  double offset = 0.0;
  TruncatedNormal noise;
};

// Per-agent known distributions; index parallel to Scenario::datasets.
using KnownDistributions = std::vector<LinearModelDistribution>;

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace fflsim
