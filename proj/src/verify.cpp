#include "qbranch/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "qbranch/fitting.hpp"
#include "qbranch/numerics.hpp"
#include "qbranch/rabi.hpp"
#include "qbranch/splitter.hpp"

namespace qbranch {
namespace {

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

std::string describe(const char* field, double a, double b) {
  std::ostringstream os;
  os << field << ": " << a << " vs " << b;
  return os.str();
}

bool stats_close(const OccupationStats& a, const OccupationStats& b, double tol,
                 std::string* why) {
  if (!close_rel(a.mean_r, b.mean_r, tol)) { *why = describe("mean_r", a.mean_r, b.mean_r); return false; }
  if (!close_rel(a.mean_t, b.mean_t, tol)) { *why = describe("mean_t", a.mean_t, b.mean_t); return false; }
  if (!close_rel(a.mean_rt, b.mean_rt, tol)) { *why = describe("mean_rt", a.mean_rt, b.mean_rt); return false; }
  if (!close_rel(a.var_r, b.var_r, tol)) { *why = describe("var_r", a.var_r, b.var_r); return false; }
  if (!close_rel(a.var_t, b.var_t, tol)) { *why = describe("var_t", a.var_t, b.var_t); return false; }
  if (!close_rel(a.cov_rt, b.cov_rt, tol)) { *why = describe("cov_rt", a.cov_rt, b.cov_rt); return false; }
  return true;
}

std::string label(double r, double loss, int n) {
  std::ostringstream os;
  os << "r=" << r << " loss=" << loss << " n=" << n;
  return os.str();
}

// --- suite 1: every stats route agrees on every grid point ----------------

VerifyCheck route_agreement(bool quick, bool inject) {
  VerifyCheck check{"splitter route agreement", true, ""};
  std::vector<double> r_grid =
      quick ? std::vector<double>{0.3, 0.7}
            : std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> loss_grid{0.0, 0.15, 0.3};
  int n_hi = quick ? 8 : 12;
  constexpr double kTol = 1e-10;
  for (double r : r_grid) {
    for (double loss : loss_grid) {
      SplitterChannels ch{r * (1.0 - loss), (1.0 - r) * (1.0 - loss), loss};
      for (int n = 1; n <= n_hi; ++n) {
        OccupationStats closed = stats_lossy_closed(n, ch);
        OccupationStats multi = stats_partition_multinomial(n, ch);
        OccupationStats enumd = stats_enumerate(n, ch);
        std::string why;
        if (!stats_close(closed, multi, kTol, &why)) {
          check.passed = false;
          check.detail = "closed vs multinomial at " + label(r, loss, n) + ", " + why;
          return check;
        }
        if (!stats_close(closed, enumd, kTol, &why)) {
          check.passed = false;
          check.detail = "closed vs enumerate at " + label(r, loss, n) + ", " + why;
          return check;
        }
        if (loss == 0.0) {
          OccupationStats binom = stats_partition_binomial(n, SplitterSpec{r, 1.0 - r});
          if (inject) binom.var_r += 1e-6;
          if (!stats_close(closed, binom, kTol, &why)) {
            check.passed = false;
            check.detail = "closed vs binomial at " + label(r, loss, n) + ", " + why;
            return check;
          }
        } else {
          // Two-way sums still cover the lossy marginals: each detected count
          // is binomial against everything-else.
          OccupationStats br = stats_partition_binomial(n, SplitterSpec{ch.r_eff, 1.0 - ch.r_eff});
          OccupationStats bt = stats_partition_binomial(n, SplitterSpec{1.0 - ch.t_eff, ch.t_eff});
          if (inject) br.var_r += 1e-6;
          if (!close_rel(br.mean_r, closed.mean_r, kTol) ||
              !close_rel(br.var_r, closed.var_r, kTol)) {
            check.passed = false;
            check.detail = "binomial marginal (r) at " + label(r, loss, n) + ", " +
                           describe("var_r", br.var_r, closed.var_r);
            return check;
          }
          if (!close_rel(bt.mean_t, closed.mean_t, kTol) ||
              !close_rel(bt.var_t, closed.var_t, kTol)) {
            check.passed = false;
            check.detail = "binomial marginal (t) at " + label(r, loss, n) + ", " +
                           describe("var_t", bt.var_t, closed.var_t);
            return check;
          }
        }
      }
    }
  }
  return check;
}

// --- suite 2: detector asymmetry shows up only in the variances -----------

VerifyCheck lossy_asymmetry(bool, bool) {
  VerifyCheck check{"lossy variance asymmetry", true, ""};
  SplitterChannels ch = derive_channels(SplitterSpec{0.5, 0.5},
                                        EfficiencySpec{0.1, 0.2, 1.0},
                                        Convention::kScatteredOnly);
  constexpr double kTol = 1e-12;
  if (!close_rel(ch.r_eff, 0.45, kTol) || !close_rel(ch.t_eff, 0.40, kTol) ||
      !close_rel(ch.loss, 0.15, kTol)) {
    check.passed = false;
    check.detail = describe("channels", ch.r_eff, 0.45);
    return check;
  }
  OccupationStats closed = stats_lossy_closed(5, ch);
  OccupationStats multi = stats_partition_multinomial(5, ch);
  OccupationStats enumd = stats_enumerate(5, ch);
  for (const OccupationStats& s : {closed, multi, enumd}) {
    if (!close_rel(s.var_r, 1.2375, kTol) || !close_rel(s.var_t, 1.20, kTol)) {
      check.passed = false;
      check.detail = describe("var_r/var_t", s.var_r, s.var_t);
      return check;
    }
  }
  if (std::fabs(closed.var_r - closed.var_t) < 1e-3) {
    check.passed = false;
    check.detail = "asymmetric efficiencies failed to split the variances";
  }
  return check;
}

// --- suite 3: every model collapses to the bare oscillation ----------------

VerifyCheck closed_reductions(bool quick, bool) {
  VerifyCheck check{"closed-form reductions", true, ""};
  constexpr double kTol = 1e-10;
  RabiParams undamped{1.0, 0.7, 1.0};
  int points = quick ? 60 : 200;
  for (int i = 0; i <= points; ++i) {
    double t = 25.0 * static_cast<double>(i) / static_cast<double>(points);
    double want = closed_pg(1.0, t);
    double got = approx_pg(undamped, t);
    if (std::fabs(got - want) > kTol) {
      check.passed = false;
      check.detail = "approx at beta=1, " + describe("t", t, got - want);
      return check;
    }
  }
  DpGrid grid = build_dp_grid(undamped, 4, quick ? 50 : 200);
  for (int j = 1; j <= grid.depth; ++j) {
    for (long long k = 0; k <= grid.n_max; ++k) {
      if (std::fabs(grid.at(j, k) - grid.at(0, k)) > kTol) {
        check.passed = false;
        check.detail = "grid row " + std::to_string(j) + " drifted at beta=1";
        return check;
      }
    }
  }
  DistParams undamped_dist{1.0, 0.7, 1.0};
  DistTable table = build_dist_table(undamped_dist, 25.0);
  for (int i = 0; i <= points; ++i) {
    double t = 25.0 * static_cast<double>(i) / static_cast<double>(points);
    double diff = dist_pg_from_table(table, t) - closed_pg(1.0, t);
    if (std::fabs(diff) > kTol) {
      check.passed = false;
      check.detail = "dist at eta=1, " + describe("t", t, diff);
      return check;
    }
  }
  return check;
}

// --- suite 4: first refinement row vs the direct one-event sum -------------

double direct_one_event(long long n, double beta, double theta) {
  double sum = 0.0;
  double coef = 1.0;  // running C(n, k)
  for (long long k = 0; k <= n; ++k) {
    double w = coef * std::pow(beta, static_cast<double>(k)) *
               std::pow(1.0 - beta, static_cast<double>(n - k));
    double s0 = std::sin(theta * static_cast<double>(k));
    double p0 = s0 * s0;
    double rest = theta * static_cast<double>(n - k);
    double c = std::cos(rest);
    double s = std::sin(rest);
    sum += w * (p0 * c * c + (1.0 - p0) * s * s);
    coef = coef * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  return sum;
}

VerifyCheck one_event_row(bool quick, bool) {
  VerifyCheck check{"one-event row agreement", true, ""};
  long long n_hi = quick ? 40 : 100;
  for (double beta : {0.3, 0.6, 0.995}) {
    for (double theta : {0.7, 0.2}) {
      RabiParams p{1.0, theta, beta};
      DpGrid grid = build_dp_grid(p, 1, n_hi, /*full_sums=*/true);
      for (long long n = 0; n <= n_hi; ++n) {
        double want = direct_one_event(n, beta, theta);
        double got = grid.at(1, n);
        if (std::fabs(got - want) > 1e-12) {
          check.passed = false;
          check.detail = "beta=" + std::to_string(beta) +
                         " theta=" + std::to_string(theta) +
                         " n=" + std::to_string(n) + ", " +
                         describe("p", got, want);
          return check;
        }
      }
    }
  }
  return check;
}

// --- suite 5: weight normalization and numerics spot identities ------------

VerifyCheck numerics_identities(bool quick, bool) {
  VerifyCheck check{"numerics identities", true, ""};
  std::vector<long long> n_grid =
      quick ? std::vector<long long>{10, 500} : std::vector<long long>{10, 100, 1000, 10000};
  for (long long n : n_grid) {
    // Every mass term carries the rounding error of a log-space exponent of
    // magnitude up to lgamma(n + 1), so the achievable deficit grows with it.
    double tol = 1e-12 + 1e-15 * std::lgamma(static_cast<double>(n) + 1.0);
    for (double beta : {0.0, 0.001, 0.5, 0.995, 1.0}) {
      KahanSum total;
      for (long long k = 0; k <= n; ++k) total.add(binomial_pmf(n, k, beta));
      if (std::fabs(total.value() - 1.0) > tol) {
        check.passed = false;
        check.detail = "binomial mass n=" + std::to_string(n) +
                       " beta=" + std::to_string(beta) + ", " +
                       describe("mass", total.value(), 1.0);
        return check;
      }
    }
  }
  long long n_multi = quick ? 12 : 30;
  for (const std::array<double, 3>& probs :
       {std::array<double, 3>{0.45, 0.40, 0.15}, std::array<double, 3>{0.2, 0.5, 0.3}}) {
    KahanSum total;
    for (long long j = 0; j <= n_multi; ++j) {
      for (long long k = 0; k + j <= n_multi; ++k) {
        total.add(multinomial_pmf(n_multi, {j, k, n_multi - j - k}, probs));
      }
    }
    if (std::fabs(total.value() - 1.0) > 1e-12) {
      check.passed = false;
      check.detail = "multinomial mass sums to " + std::to_string(total.value());
      return check;
    }
  }
  for (int n = 0; n <= 50; ++n) {
    if (!close_rel(laguerre_gen(n, 1.0, 0.0), static_cast<double>(n + 1), 1e-12)) {
      check.passed = false;
      check.detail = "laguerre_gen(n,1,0) != n+1 at n=" + std::to_string(n);
      return check;
    }
  }
  for (const std::complex<double>& base :
       {std::complex<double>{0.5, 0.5}, std::complex<double>{-0.3, 0.8},
        std::complex<double>{1.2, -0.1}}) {
    std::complex<double> by_mult{1.0, 0.0};
    for (int e = 1; e <= 8; ++e) {
      by_mult *= base;
      std::complex<double> by_pow = complex_real_power(base, static_cast<double>(e));
      if (std::abs(by_pow - by_mult) > 1e-12 * std::max(1.0, std::abs(by_mult))) {
        check.passed = false;
        check.detail = "complex power mismatch at exponent " + std::to_string(e);
        return check;
      }
    }
  }
  return check;
}

// --- suite 6: the modal-window truncation changes nothing observable -------

VerifyCheck truncation_vs_full(bool quick, bool) {
  VerifyCheck check{"refinement-sum truncation", true, ""};
  long long n_max = quick ? 120 : 300;
  for (double beta : {0.5, 0.995}) {
    RabiParams p{1.0, 0.7, beta};
    DpGrid trimmed = build_dp_grid(p, 3, n_max, /*full_sums=*/false);
    DpGrid full = build_dp_grid(p, 3, n_max, /*full_sums=*/true);
    for (size_t i = 0; i < trimmed.pg.size(); ++i) {
      if (std::fabs(trimmed.pg[i] - full.pg[i]) > 1e-12) {
        check.passed = false;
        check.detail = "beta=" + std::to_string(beta) + " cell " +
                       std::to_string(i) + " moved by " +
                       std::to_string(trimmed.pg[i] - full.pg[i]);
        return check;
      }
    }
  }
  return check;
}

// --- suite 7: node recursion vs explicit branch enumeration ----------------

double dist_brute(const DistParams& p, double t) {
  struct Branch {
    double weight;
    double prep_time;
    bool excited;
  };
  auto pg_of = [&](const Branch& b, double at) {
    double s = std::sin(p.omega * (at - b.prep_time));
    double v = s * s;
    return b.excited ? v : 1.0 - v;
  };
  std::vector<Branch> branches{{1.0, 0.0, true}};
  long long count = static_cast<long long>(std::floor(t / p.delta_t));
  for (long long j = 1; j <= count; ++j) {
    double tj = static_cast<double>(j) * p.delta_t;
    std::vector<Branch> next;
    next.reserve(branches.size() * 3);
    for (const Branch& b : branches) {
      double pg = pg_of(b, tj);
      next.push_back({b.weight * p.eta, b.prep_time, b.excited});
      next.push_back({b.weight * (1.0 - p.eta) * pg, tj, false});
      next.push_back({b.weight * (1.0 - p.eta) * (1.0 - pg), tj, true});
    }
    branches.swap(next);
  }
  KahanSum total;
  for (const Branch& b : branches) total.add(b.weight * pg_of(b, t));
  return total.value();
}

VerifyCheck dist_vs_brute(bool quick, bool) {
  VerifyCheck check{"record-keeping recursion vs branch enumeration", true, ""};
  struct Case {
    DistParams params;
    double t;
  };
  std::vector<Case> cases{
      {{2.0, 0.17, 0.99}, 0.50},
      {{2.0, 0.17, 0.90}, 1.30},
      {{1.0, 0.30, 0.95}, 2.90},
      {{1.0, 0.25, 0.70}, 2.60},
  };
  if (!quick) {
    cases.push_back({{2.0, 0.17, 0.99}, 1.69});
    cases.push_back({{0.8, 0.40, 0.85}, 4.10});
  }
  for (const Case& c : cases) {
    double got = dist_pg(c.params, c.t);
    double want = dist_brute(c.params, c.t);
    if (std::fabs(got - want) > 1e-10) {
      check.passed = false;
      check.detail = "eta=" + std::to_string(c.params.eta) +
                     " t=" + std::to_string(c.t) + ", " + describe("p", got, want);
      return check;
    }
  }
  return check;
}

// --- suite 8: the refined oscillation only loses envelope, never gains -----

VerifyCheck monotone_damping(bool quick, bool) {
  VerifyCheck check{"monotone envelope decay", true, ""};
  RabiParams p{1.0, 0.7, 0.995};
  int samples = quick ? 200 : 400;
  ProbabilityTrace tr = trace(Model::kIndist, p, kDefaultDepth, 40.0, samples);
  std::vector<double> peaks;
  for (size_t i = 1; i + 1 < tr.samples.size(); ++i) {
    double prev = tr.samples[i - 1].second;
    double cur = tr.samples[i].second;
    double next = tr.samples[i + 1].second;
    if (cur >= prev && cur >= next) peaks.push_back(cur);
  }
  if (peaks.size() < 4) {
    check.passed = false;
    check.detail = "found only " + std::to_string(peaks.size()) + " peaks";
    return check;
  }
  for (size_t i = 1; i < peaks.size(); ++i) {
    if (peaks[i] > peaks[i - 1] + 1e-6) {
      check.passed = false;
      check.detail = "peak " + std::to_string(i) + " grew by " +
                     std::to_string(peaks[i] - peaks[i - 1]);
      return check;
    }
  }
  return check;
}

// --- suite 9: small-angle damping follows the quadratic law ----------------

VerifyCheck quadratic_law(bool quick, bool) {
  VerifyCheck check{"quadratic damping law", true, ""};
  std::vector<double> beta_grid = quick ? std::vector<double>{0.995}
                                        : std::vector<double>{0.99, 0.995};
  std::vector<double> angle_grid = quick ? std::vector<double>{0.02}
                                         : std::vector<double>{0.01, 0.02, 0.05};
  for (double beta : beta_grid) {
    for (double angle : angle_grid) {
      RabiParams p{1.0, angle, beta};
      double gq = gamma_quadratic(p);
      double t_max = 1.5 / gq;
      ProbabilityTrace tr = trace(Model::kApprox, p, 0, t_max, 4000);
      DampingFit fit = fit_gamma(tr, p.omega, FitWindow{0.0, t_max}, p.omega);
      if (!fit.converged || std::fabs(fit.gamma / gq - 1.0) > 0.1) {
        check.passed = false;
        check.detail = "beta=" + std::to_string(beta) +
                       " angle=" + std::to_string(angle) + ", " +
                       describe("gamma", fit.gamma, gq);
        return check;
      }
    }
  }
  return check;
}

}  // namespace

std::vector<VerifyCheck> run_verification(bool quick, bool inject_perturbation) {
  std::vector<VerifyCheck> checks;
  checks.push_back(route_agreement(quick, inject_perturbation));
  checks.push_back(lossy_asymmetry(quick, inject_perturbation));
  checks.push_back(closed_reductions(quick, inject_perturbation));
  checks.push_back(one_event_row(quick, inject_perturbation));
  checks.push_back(numerics_identities(quick, inject_perturbation));
  checks.push_back(truncation_vs_full(quick, inject_perturbation));
  checks.push_back(dist_vs_brute(quick, inject_perturbation));
  checks.push_back(monotone_damping(quick, inject_perturbation));
  checks.push_back(quadratic_law(quick, inject_perturbation));
  return checks;
}

}  // namespace qbranch
