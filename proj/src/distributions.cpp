#include "fflsim/distributions.hpp"

#include <cmath>
#include <numbers>

#include "fflsim/error.hpp"

namespace fflsim {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double TruncatedNormal::acceptance() const {
  require(sd > 0.0, Errc::invalid_argument, "truncated normal: sd must be positive");
  require(hi > lo, Errc::invalid_argument, "truncated normal: empty interval");
  return normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
}

double TruncatedNormal::density(double t) const {
  if (t < lo || t > hi) return 0.0;
  double z = acceptance();
  return normal_pdf((t - mean) / sd) / (sd * z);
}

double TruncatedNormal::moment_mean() const {
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  double z = acceptance();
  return mean + sd * (normal_pdf(a) - normal_pdf(b)) / z;
}

double TruncatedNormal::moment_var() const {
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  double z = acceptance();
  double ratio = (a * normal_pdf(a) - b * normal_pdf(b)) / z;
  double shift = (normal_pdf(a) - normal_pdf(b)) / z;
  return sd * sd * (1.0 + ratio - shift * shift);
}

double TruncatedNormal::moment_second() const {
  double m = moment_mean();
  return moment_var() + m * m;
}

}  // namespace fflsim
