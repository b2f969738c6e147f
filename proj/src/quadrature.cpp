#include "fflsim/quadrature.hpp"

#include <array>
#include <cmath>

#include "fflsim/error.hpp"

namespace fflsim {

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499,
};
constexpr std::array<double, 8> kWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541,
};

double gl_panel(const std::function<double(double)>& f, double a, double b) {
  double mid = 0.5 * (a + b);
  double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i)
    sum += kWeights[i] * (f(mid - half * kNodes[i]) + f(mid + half * kNodes[i]));
  return half * sum;
}

double simpson(const std::function<double(double)>& f, double a, double fa, double m,
               double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double m,
             double fm, double b, double fb, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, lm, flm, m, fm);
  double right = simpson(f, m, fm, rm, frm, b, fb);
  double delta = left + right - whole;
  if (depth <= 0) fail(Errc::numerical, "adaptive quadrature failed to converge");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_gl(const std::function<double(double)>& f, double lo, double hi,
                    int panels) {
  require(panels > 0, Errc::invalid_argument, "panels must be positive");
  if (lo == hi) return 0.0;
  double width = (hi - lo) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i)
    total += gl_panel(f, lo + i * width, lo + (i + 1) * width);
  return total;
}

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  if (lo == hi) return 0.0;
  double m = 0.5 * (lo + hi);
  double fa = f(lo), fm = f(m), fb = f(hi);
  double whole = simpson(f, lo, fa, m, fm, hi, fb);
  return adapt(f, lo, fa, m, fm, hi, fb, whole, tol, 60);
}

}  // namespace fflsim
