#pragma once

#include <array>
#include <complex>
#include <functional>

namespace qbranch {

// Natural log of a nonnegative weight; combinatorial factors are carried in
// this form so that n up to 10^6 never overflows.
struct LogWeight {
  double value;
};

// ln C(n, k).  Throws std::domain_error unless 0 <= k <= n.
LogWeight log_binomial_coeff(long long n, long long k);

// C(n, k) beta^k (1 - beta)^(n - k), assembled in log space.  beta in {0, 1}
// is handled exactly with the 0^0 == 1 convention.
double binomial_pmf(long long n, long long k, double beta);

// n! / (c0! c1! c2!) * p0^c0 p1^c1 p2^c2 for counts summing to n.
double multinomial_pmf(long long n, const std::array<long long, 3>& counts,
                       const std::array<double, 3>& probs);

// Generalized Laguerre polynomial L^alpha_n(x) via the forward three-term
// recurrence (m+1) L_{m+1} = (2m + 1 + alpha - x) L_m - (m + alpha) L_{m-1}.
double laguerre_gen(int n, double alpha, double x);

// Deterministic golden-section minimizer on [lo, hi]; returns the midpoint of
// the final bracket, which is within tol of the located minimum.
double minimize_scalar(const std::function<double(double)>& objective,
                       double lo, double hi, double tol);

// Principal-branch base^exponent for complex base and real exponent.  A zero
// base with exponent <= 0 is a domain error.
std::complex<double> complex_real_power(std::complex<double> base,
                                        double exponent);

// Compensated (Kahan) accumulator; keeps long sums accurate and makes the
// result independent of how partial sums are grouped across chunks.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }

  double value() const { return sum; }
};

}  // namespace qbranch
