#pragma once

#include <functional>

// 1-D integration utilities behind the analytic-bound machinery: composite
// Gauss-Legendre for smooth moment integrals, adaptive Simpson for the
// |f - g| densities whose kinks defeat fixed rules.

namespace fflsim {

// Composite Gauss-Legendre (16-point panels).
double integrate_gl(const std::function<double(double)>& f, double lo, double hi,
                    int panels = 8);

// Adaptive Simpson to the requested absolute tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-10);

}  // namespace fflsim
