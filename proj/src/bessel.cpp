#include "omflow/sde.hpp"

#include <cmath>

namespace omflow {

namespace {

// J_nu(x) (x/2)^{-nu} Gamma(nu + 1) = sum_m (-x^2/4)^m / (m! (nu+1)_m); same sign
// as J_nu for x > 0.
double reduced_bessel(double nu, double x) {
  const double q = -0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m < 500; ++m) {
    term *= q / (m * (nu + m));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && m > 2.0 * std::abs(x)) break;
  }
  return sum;
}

}  // namespace

double bessel_first_zero(double nu) {
  if (!(nu > -1.0) || nu > 20.0) throw UnsupportedDimension("Bessel order out of the supported range");
  double lo = 0.1;
  double flo = reduced_bessel(nu, lo);
  double hi = lo;
  for (;;) {
    hi = lo + 0.1;
    const double fhi = reduced_bessel(nu, hi);
    if ((flo > 0.0) != (fhi > 0.0)) break;
    lo = hi;
    flo = fhi;
    if (lo > 40.0) throw NoConvergence("no Bessel zero found below 40");
  }
  while (hi - lo > 1e-14 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fmid = reduced_bessel(nu, mid);
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double lambda1_dirichlet(int n) {
  if (n < 1 || n > 10) {
    throw UnsupportedDimension("lambda1 is available for dimensions 1..10, got " + std::to_string(n));
  }
  const double j = bessel_first_zero(0.5 * n - 1.0);
  return 0.5 * j * j;
}

}  // namespace omflow
