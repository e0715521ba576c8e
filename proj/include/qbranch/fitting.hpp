#pragma once

#include <utility>
#include <vector>

#include "qbranch/rabi.hpp"

namespace qbranch {

struct FitWindow {
  double t_min;
  double t_max;
};

// Result of a one-parameter damping fit; converged is false when the located
// minimum sits against either end of the [0, gamma_hi] search interval.
struct DampingFit {
  double gamma;
  double omega;
  double rms;
  FitWindow window;
  bool converged;
};

// Per-level sweep over the sideband ladder.  ratios[i] = gammas[i] / gamma at
// level 0; exponent and its standard error come from the log-log fit of the
// ratios against 1 + level (NaN when undefined or any level left unconverged).
struct EidResult {
  std::vector<int> levels;
  std::vector<double> gammas;
  std::vector<double> ratios;
  std::vector<bool> converged;
  double exponent;
  double exponent_stderr;
};

// Damped-envelope reference curve (1/2)(1 - e^{-gamma t} cos(2 omega t)).
double model_damped(double omega, double gamma, double t);

// Fit gamma alone by minimizing the RMS residual of model_damped against the
// trace samples inside the window (amplitude and offset stay at 1/2).  Needs
// at least 8 samples in the window.
DampingFit fit_gamma(const ProbabilityTrace& trace, double omega,
                     FitWindow window, double gamma_hi);

// Straight-line fit through the origin of ln(gamma_n / gamma_0) against
// ln(1 + n); returns {slope, standard error}.  With only level 0 present the
// slope is undefined and both values are NaN.
std::pair<double, double> fit_exponent(const std::vector<int>& levels,
                                       const std::vector<double>& gammas);

// Trace + fit each requested ladder level at its own frequency
// freq_ladder(base.omega, level).  Levels must include 0 (the ratio
// reference).  windows may be empty (a [0, 4 periods] window per level) or
// give one window per level; sampling density is samples_per_period points
// per half-oscillation period pi / omega_n.  Levels are evaluated in
// parallel; each level's result lands in its own slot, so the output is
// independent of thread count.
EidResult eid_sweep(const RabiParams& base, int depth,
                    const std::vector<int>& levels,
                    const std::vector<FitWindow>& windows,
                    int samples_per_period);

}  // namespace qbranch
