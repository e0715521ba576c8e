#include "qbranch/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>

#include "qbranch/numerics.hpp"

namespace qbranch {
namespace {

constexpr double kPi = 3.141592653589793;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double model_damped(double omega, double gamma, double t) {
  return 0.5 * (1.0 - std::exp(-gamma * t) * std::cos(2.0 * omega * t));
}

DampingFit fit_gamma(const ProbabilityTrace& trace, double omega,
                     FitWindow window, double gamma_hi) {
  if (!(omega > 0.0)) throw std::domain_error("fit_gamma: need omega > 0");
  if (!(gamma_hi > 0.0)) throw std::domain_error("fit_gamma: need gamma_hi > 0");
  if (!(window.t_min >= 0.0 && window.t_min < window.t_max)) {
    throw std::domain_error("fit_gamma: need 0 <= t_min < t_max");
  }
  std::vector<std::pair<double, double>> inside;
  inside.reserve(trace.samples.size());
  for (const auto& [t, p] : trace.samples) {
    if (t >= window.t_min && t <= window.t_max) inside.emplace_back(t, p);
  }
  if (inside.size() < 8) {
    throw std::domain_error("fit_gamma: fewer than 8 samples in the window");
  }
  auto rms = [&](double gamma) {
    KahanSum acc;
    for (const auto& [t, p] : inside) {
      double r = p - model_damped(omega, gamma, t);
      acc.add(r * r);
    }
    return std::sqrt(acc.value() / static_cast<double>(inside.size()));
  };
  double tol = 1e-9 * gamma_hi;
  double gamma = minimize_scalar(rms, 0.0, gamma_hi, tol);
  // A genuine interior minimum clears both boundaries by more than the final
  // bracket width; anything else was pinned by the search interval.
  bool converged = gamma > 2.0 * tol && gamma < gamma_hi - 2.0 * tol;
  return DampingFit{gamma, omega, rms(gamma), window, converged};
}

std::pair<double, double> fit_exponent(const std::vector<int>& levels,
                                       const std::vector<double>& gammas) {
  if (levels.empty() || levels.size() != gammas.size()) {
    throw std::domain_error("fit_exponent: levels/gammas size mismatch");
  }
  size_t ref = levels.size();
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0) throw std::domain_error("fit_exponent: negative level");
    if (!(gammas[i] > 0.0)) {
      throw std::domain_error("fit_exponent: gammas must be positive");
    }
    if (levels[i] == 0) ref = i;
  }
  if (ref == levels.size()) {
    throw std::domain_error("fit_exponent: levels must include 0");
  }
  double g0 = gammas[ref];
  double sxx = 0.0;
  double sxy = 0.0;
  for (size_t i = 0; i < levels.size(); ++i) {
    double x = std::log1p(static_cast<double>(levels[i]));
    double y = std::log(gammas[i] / g0);
    sxx += x * x;
    sxy += x * y;
  }
  if (sxx == 0.0) return {kNan, kNan};  // only level 0: slope undefined
  double slope = sxy / sxx;
  double srr = 0.0;
  for (size_t i = 0; i < levels.size(); ++i) {
    double x = std::log1p(static_cast<double>(levels[i]));
    double y = std::log(gammas[i] / g0);
    double r = y - slope * x;
    srr += r * r;
  }
  size_t m = levels.size();
  double stderr_slope =
      m > 1 ? std::sqrt(srr / (static_cast<double>(m - 1) * sxx)) : kNan;
  return {slope, stderr_slope};
}

EidResult eid_sweep(const RabiParams& base, int depth,
                    const std::vector<int>& levels,
                    const std::vector<FitWindow>& windows,
                    int samples_per_period) {
  validate(base);
  if (depth < 0) throw std::domain_error("eid_sweep: negative depth");
  if (levels.empty()) throw std::domain_error("eid_sweep: no levels");
  if (!windows.empty() && windows.size() != levels.size()) {
    throw std::domain_error("eid_sweep: need one window per level (or none)");
  }
  if (samples_per_period < 2) {
    throw std::domain_error("eid_sweep: need samples_per_period >= 2");
  }
  size_t ref = levels.size();
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0) throw std::domain_error("eid_sweep: negative level");
    if (levels[i] == 0) ref = i;
  }
  if (ref == levels.size()) {
    throw std::domain_error("eid_sweep: levels must include 0");
  }
  size_t count = levels.size();
  std::vector<double> omegas(count);
  for (size_t i = 0; i < count; ++i) {
    omegas[i] = freq_ladder(base.omega, levels[i]);
    if (!(omegas[i] > 0.0)) {
      throw std::domain_error("eid_sweep: ladder frequency not positive at level " +
                              std::to_string(levels[i]));
    }
  }
  EidResult result;
  result.levels = levels;
  result.gammas.assign(count, 0.0);
  result.ratios.assign(count, 0.0);
  result.converged.assign(count, false);
  std::vector<int> status(count, 0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(count); ++i) {
    try {
      double omega_n = omegas[static_cast<size_t>(i)];
      FitWindow w = windows.empty() ? FitWindow{0.0, 4.0 * kPi / omega_n}
                                    : windows[static_cast<size_t>(i)];
      int samples = std::max(
          8, static_cast<int>(std::llround(static_cast<double>(samples_per_period) *
                                           w.t_max * omega_n / kPi)));
      RabiParams p{omega_n, base.delta_t, base.beta};
      ProbabilityTrace tr = trace(Model::kIndist, p, depth, w.t_max, samples);
      DampingFit fit = fit_gamma(tr, omega_n, w, omega_n);
      result.gammas[static_cast<size_t>(i)] = fit.gamma;
      status[static_cast<size_t>(i)] = fit.converged ? 1 : 0;
    } catch (...) {
      // Exceptions must not unwind out of the parallel region; surface the
      // first one after the loop.
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  bool all_converged = true;
  for (size_t i = 0; i < count; ++i) {
    result.converged[i] = status[i] != 0;
    all_converged = all_converged && result.converged[i];
  }
  double g0 = result.gammas[ref];
  for (size_t i = 0; i < count; ++i) {
    result.ratios[i] = g0 > 0.0 ? result.gammas[i] / g0 : kNan;
  }
  if (all_converged) {
    auto [slope, err] = fit_exponent(levels, result.gammas);
    result.exponent = slope;
    result.exponent_stderr = err;
  } else {
    result.exponent = kNan;
    result.exponent_stderr = kNan;
  }
  return result;
}

}  // namespace qbranch
