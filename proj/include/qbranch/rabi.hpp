#pragma once

#include <utility>
#include <variant>
#include <vector>

namespace qbranch {

// Drive frequency, node spacing, and per-node survival probability of the
// indistinguishable-record model.  beta == 1 removes every branching event.
struct RabiParams {
  double omega;
  double delta_t;
  double beta;
};

// Same geometry for the distinguishable-record model, whose per-node garbled
// fraction is 1 - eta.
struct DistParams {
  double omega;
  double delta_t;
  double eta;
};

void validate(const RabiParams& params);
void validate(const DistParams& params);

// Ground-state probability at the grid nodes: at(j, k) is the value after j
// refinement rows at time k * delta_t.  Row 0 is the bare oscillation.
struct DpGrid {
  int depth;
  long long n_max;
  std::vector<double> pg;  // (depth + 1) rows of (n_max + 1) columns

  double at(int j, long long k) const {
    return pg[static_cast<size_t>(j) * static_cast<size_t>(n_max + 1) +
              static_cast<size_t>(k)];
  }
};

// (t, p_g) samples at strictly increasing times.
struct ProbabilityTrace {
  std::vector<std::pair<double, double>> samples;
};

enum class Model { kClosed, kIndist, kApprox, kDist };

inline constexpr int kDefaultDepth = 5;
// Grid cells and node tables above these caps are refused rather than built.
inline constexpr long long kMaxGridCells = 1LL << 26;
inline constexpr long long kMaxDistNodes = 1LL << 16;

// Undamped two-level oscillation sin^2(omega * t).
double closed_pg(double omega, double t);

// Fill the refinement table.  Each row mixes the previous row over a binomial
// number of elapsed events; with full_sums the mixture keeps every term,
// otherwise terms more than a factor 1e18 below the modal weight are dropped.
// build_dp_grid fills the columns of a row in parallel; the serial variant is
// the reference loop.  Cells depend only on same-or-lower column indices of
// the previous row, so both variants (and any n_max extension) agree bit for
// bit.
DpGrid build_dp_grid(const RabiParams& params, int depth, long long n_max,
                     bool full_sums = false);
DpGrid build_dp_grid_serial(const RabiParams& params, int depth, long long n_max,
                            bool full_sums = false);

// Ground-state probability of the indistinguishable-record model at time t:
// the depth-row grid evaluated at n = t / (beta * delta_t) with linear
// interpolation between the bracketing columns.
double indist_pg(const RabiParams& params, int depth, double t);

// Truncated closed-form approximation (1/4)(2 - z+^p - z-^p) with
// z = 1 - beta (1 - e^{-+ 2 i omega delta_t}) and p = t / (beta * delta_t).
double approx_pg(const RabiParams& params, double t);

// Small-(omega delta_t) damping rate 2 (1 - beta) omega^2 delta_t implied by
// the truncated approximation.
double gamma_quadratic(const RabiParams& params);

// Sideband frequency ladder omega_n for vibrational level n at Lamb-Dicke
// parameter 0.202.
double freq_ladder(double omega, int level);

// Node values D[j] = p_{j-1}(j * delta_t) of the distinguishable-record
// recursion.  D[j] does not depend on the horizon the table was built for, so
// one table serves every evaluation time up to that horizon.
struct DistTable {
  DistParams params;
  std::vector<double> node;  // node[0] unused
};

DistTable build_dist_table(const DistParams& params, double t_max);
double dist_pg_from_table(const DistTable& table, double t);
double dist_pg(const DistParams& params, double t);

// Uniform trace over [0, t_max] with `samples` points (endpoints included).
// depth is only read by Model::kIndist; kDist expects DistParams, the others
// RabiParams.
ProbabilityTrace trace(Model model,
                       const std::variant<RabiParams, DistParams>& params,
                       int depth, double t_max, int samples);

}  // namespace qbranch
