#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Dense double-precision kernels underneath every gradient/payment loop.
// Two implementations: a scalar reference and an AVX2+FMA variant, selected
// once at startup (CPU detection, overridable via FFLSIM_KERNELS=scalar|avx2
// or set_isa()).  The variants differ in summation order, so they agree only
// to rounding; the equivalence tests pin that down.

namespace fflsim::kern {

enum class Isa { scalar, avx2 };

Isa active_isa();
void set_isa(Isa isa);         // test hook; throws if the ISA is unavailable
bool avx2_available();
std::string isa_name(Isa isa);

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);
// sum_i a[i]^2
double nrm2sq(const double* a, std::size_t n);
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a.data(), b.data(), a.size());
}
inline double nrm2sq(const std::vector<double>& a) { return nrm2sq(a.data(), a.size()); }
inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  axpy(alpha, x.data(), y.data(), x.size());
}
inline void scal(double alpha, std::vector<double>& x) { scal(alpha, x.data(), x.size()); }

}  // namespace fflsim::kern
