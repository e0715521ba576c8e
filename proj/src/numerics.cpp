#include "qbranch/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace qbranch {

LogWeight log_binomial_coeff(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) {
    throw std::domain_error("log_binomial_coeff: need 0 <= k <= n");
  }
  double value = std::lgamma(static_cast<double>(n) + 1.0) -
                 std::lgamma(static_cast<double>(k) + 1.0) -
                 std::lgamma(static_cast<double>(n - k) + 1.0);
  return LogWeight{value};
}

double binomial_pmf(long long n, long long k, double beta) {
  if (n < 0 || k < 0 || k > n) {
    throw std::domain_error("binomial_pmf: need 0 <= k <= n");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::domain_error("binomial_pmf: beta outside [0, 1]");
  }
  if (beta == 0.0) return k == 0 ? 1.0 : 0.0;
  if (beta == 1.0) return k == n ? 1.0 : 0.0;
  double lw = log_binomial_coeff(n, k).value +
              static_cast<double>(k) * std::log(beta) +
              static_cast<double>(n - k) * std::log1p(-beta);
  return std::exp(lw);
}

double multinomial_pmf(long long n, const std::array<long long, 3>& counts,
                       const std::array<double, 3>& probs) {
  if (n < 0) throw std::domain_error("multinomial_pmf: negative n");
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw std::domain_error("multinomial_pmf: negative count");
    total += c;
  }
  if (total != n) throw std::domain_error("multinomial_pmf: counts must sum to n");
  double lw = std::lgamma(static_cast<double>(n) + 1.0);
  for (int i = 0; i < 3; ++i) {
    double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::domain_error("multinomial_pmf: probability outside [0, 1]");
    }
    lw -= std::lgamma(static_cast<double>(counts[i]) + 1.0);
    if (counts[i] > 0) {
      if (p == 0.0) return 0.0;  // counts[i] == 0 with p == 0 contributes 0^0 == 1
      lw += static_cast<double>(counts[i]) * std::log(p);
    }
  }
  return std::exp(lw);
}

double laguerre_gen(int n, double alpha, double x) {
  if (n < 0) throw std::domain_error("laguerre_gen: negative order");
  double prev = 1.0;  // L^alpha_0
  if (n == 0) return prev;
  double cur = 1.0 + alpha - x;  // L^alpha_1
  for (int m = 1; m < n; ++m) {
    double next =
        ((2.0 * m + 1.0 + alpha - x) * cur - (m + alpha) * prev) / (m + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double minimize_scalar(const std::function<double(double)>& objective,
                       double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::domain_error("minimize_scalar: need lo < hi");
  if (!(tol > 0.0)) throw std::domain_error("minimize_scalar: need tol > 0");
  constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  auto eval = [&](double x) {
    double v = objective(x);
    if (!std::isfinite(v)) {
      throw std::runtime_error("minimize_scalar: objective not finite");
    }
    return v;
  };
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  // The bracket shrinks by 1/phi each step, so 400 iterations cover any
  // representable interval long before the guard trips.
  for (int iter = 0; iter < 400 && b - a > tol; ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    }
  }
  return 0.5 * (a + b);
}

std::complex<double> complex_real_power(std::complex<double> base,
                                        double exponent) {
  if (base.real() == 0.0 && base.imag() == 0.0) {
    if (exponent <= 0.0) {
      throw std::domain_error("complex_real_power: zero base needs exponent > 0");
    }
    return {0.0, 0.0};
  }
  return std::exp(exponent * std::log(base));
}

}  // namespace qbranch
