#include "qbranch/rabi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qbranch/errors.hpp"
#include "qbranch/numerics.hpp"

namespace qbranch {
namespace {

// Mixture terms whose binomial log-weight sits more than this far below the
// modal log-weight are dropped (ln 1e-18).
constexpr double kLogTail = -41.44653167389282;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " not finite");
  }
}

// cos^2/sin^2 mixture of one previous-row value across an elapsed phase.
double mix(double p_prev, double angle) {
  double c = std::cos(angle);
  double s = std::sin(angle);
  return p_prev * c * c + (1.0 - p_prev) * s * s;
}

// One refinement cell at column n: the previous row mixed over the binomial
// number k of elapsed events.  The binomial weight is unimodal in k, so
// scanning outward from the mode keeps exactly the terms above the cutoff.
double dp_cell(const double* prev, const std::vector<double>& lfact,
               double omega_dt, double beta, long long n, bool full_sums) {
  if (beta >= 1.0) return prev[n];
  if (beta <= 0.0) return mix(prev[0], omega_dt * static_cast<double>(n));
  double lbeta = std::log(beta);
  double l1mb = std::log1p(-beta);
  auto lw = [&](long long k) {
    return lfact[static_cast<size_t>(n)] - lfact[static_cast<size_t>(k)] -
           lfact[static_cast<size_t>(n - k)] +
           static_cast<double>(k) * lbeta + static_cast<double>(n - k) * l1mb;
  };
  long long k_lo = 0;
  long long k_hi = n;
  if (!full_sums) {
    long long mode = std::llround(beta * static_cast<double>(n));
    mode = std::clamp(mode, 0LL, n);
    double cutoff = lw(mode) + kLogTail;
    k_lo = mode;
    while (k_lo > 0 && lw(k_lo - 1) >= cutoff) --k_lo;
    k_hi = mode;
    while (k_hi < n && lw(k_hi + 1) >= cutoff) ++k_hi;
  }
  KahanSum acc;
  for (long long k = k_lo; k <= k_hi; ++k) {
    double w = std::exp(lw(k));
    acc.add(w * mix(prev[k], omega_dt * static_cast<double>(n - k)));
  }
  return std::clamp(acc.value(), 0.0, 1.0);
}

DpGrid make_grid(const RabiParams& params, int depth, long long n_max,
                 bool full_sums, bool parallel) {
  validate(params);
  if (depth < 0) throw std::domain_error("build_dp_grid: negative depth");
  if (n_max < 1) throw std::domain_error("build_dp_grid: need n_max >= 1");
  long long cells = (static_cast<long long>(depth) + 1) * (n_max + 1);
  if (cells > kMaxGridCells) {
    throw resource_error("build_dp_grid: table of " + std::to_string(cells) +
                         " cells exceeds cap " + std::to_string(kMaxGridCells));
  }
  DpGrid grid{depth, n_max, std::vector<double>(static_cast<size_t>(cells))};
  double omega_dt = params.omega * params.delta_t;
  for (long long k = 0; k <= n_max; ++k) {
    double s = std::sin(omega_dt * static_cast<double>(k));
    grid.pg[static_cast<size_t>(k)] = s * s;
  }
  std::vector<double> lfact(static_cast<size_t>(n_max) + 1);
  for (long long i = 0; i <= n_max; ++i) {
    lfact[static_cast<size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
  }
  for (int j = 1; j <= depth; ++j) {
    const double* prev =
        grid.pg.data() + static_cast<size_t>(j - 1) * static_cast<size_t>(n_max + 1);
    double* cur =
        grid.pg.data() + static_cast<size_t>(j) * static_cast<size_t>(n_max + 1);
    if (parallel) {
#pragma omp parallel for schedule(static)
      for (long long n = 0; n <= n_max; ++n) {
        cur[n] = dp_cell(prev, lfact, omega_dt, params.beta, n, full_sums);
      }
    } else {
      for (long long n = 0; n <= n_max; ++n) {
        cur[n] = dp_cell(prev, lfact, omega_dt, params.beta, n, full_sums);
      }
    }
  }
  return grid;
}

// Depth-row value at fractional column n_star, linearly interpolated.
double grid_interp(const DpGrid& grid, double n_star) {
  long long i0 = static_cast<long long>(std::floor(n_star));
  i0 = std::clamp(i0, 0LL, grid.n_max - 1);
  double frac = n_star - static_cast<double>(i0);
  double p0 = grid.at(grid.depth, i0);
  double p1 = grid.at(grid.depth, i0 + 1);
  return p0 + frac * (p1 - p0);
}

}  // namespace

void validate(const RabiParams& params) {
  require_finite(params.omega, "omega");
  require_finite(params.delta_t, "delta_t");
  require_finite(params.beta, "beta");
  if (!(params.omega > 0.0)) throw std::invalid_argument("omega must be > 0");
  if (!(params.delta_t > 0.0)) throw std::invalid_argument("delta_t must be > 0");
  if (!(params.beta > 0.0 && params.beta <= 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1]");
  }
}

void validate(const DistParams& params) {
  require_finite(params.omega, "omega");
  require_finite(params.delta_t, "delta_t");
  require_finite(params.eta, "eta");
  if (!(params.omega > 0.0)) throw std::invalid_argument("omega must be > 0");
  if (!(params.delta_t > 0.0)) throw std::invalid_argument("delta_t must be > 0");
  if (!(params.eta >= 0.0 && params.eta <= 1.0)) {
    throw std::invalid_argument("eta must lie in [0, 1]");
  }
}

double closed_pg(double omega, double t) {
  if (!(omega > 0.0)) throw std::domain_error("closed_pg: need omega > 0");
  if (t < 0.0) throw std::domain_error("closed_pg: negative time");
  double s = std::sin(omega * t);
  return s * s;
}

DpGrid build_dp_grid(const RabiParams& params, int depth, long long n_max,
                     bool full_sums) {
  return make_grid(params, depth, n_max, full_sums, /*parallel=*/true);
}

DpGrid build_dp_grid_serial(const RabiParams& params, int depth, long long n_max,
                            bool full_sums) {
  return make_grid(params, depth, n_max, full_sums, /*parallel=*/false);
}

double indist_pg(const RabiParams& params, int depth, double t) {
  validate(params);
  if (t < 0.0) throw std::domain_error("indist_pg: negative time");
  double n_star = t / (params.beta * params.delta_t);
  long long n_max = static_cast<long long>(std::floor(n_star)) + 1;
  DpGrid grid = build_dp_grid(params, depth, n_max);
  return grid_interp(grid, n_star);
}

double approx_pg(const RabiParams& params, double t) {
  validate(params);
  if (t < 0.0) throw std::domain_error("approx_pg: negative time");
  double theta = 2.0 * params.omega * params.delta_t;
  std::complex<double> z_plus = 1.0 - params.beta * (1.0 - std::polar(1.0, -theta));
  std::complex<double> z_minus = 1.0 - params.beta * (1.0 - std::polar(1.0, theta));
  double power = t / (params.beta * params.delta_t);
  std::complex<double> sum =
      complex_real_power(z_plus, power) + complex_real_power(z_minus, power);
  if (std::fabs(sum.imag()) >= 1e-10) {
    throw std::runtime_error("approx_pg: conjugate pair lost its symmetry");
  }
  return 0.25 * (2.0 - sum.real());
}

double gamma_quadratic(const RabiParams& params) {
  validate(params);
  return 2.0 * (1.0 - params.beta) * params.omega * params.omega * params.delta_t;
}

double freq_ladder(double omega, int level) {
  if (!(omega > 0.0)) throw std::domain_error("freq_ladder: need omega > 0");
  if (level < 0) throw std::domain_error("freq_ladder: negative level");
  constexpr double kLambDicke = 0.202;
  constexpr double kX = kLambDicke * kLambDicke;
  double front = kLambDicke * std::exp(-0.5 * kX);
  return omega * front * laguerre_gen(level, 1.0, kX) /
         std::sqrt(static_cast<double>(level) + 1.0);
}

DistTable build_dist_table(const DistParams& params, double t_max) {
  validate(params);
  if (t_max < 0.0) throw std::domain_error("build_dist_table: negative horizon");
  long long n = static_cast<long long>(std::floor(t_max / params.delta_t));
  if (n > kMaxDistNodes) {
    throw resource_error("build_dist_table: " + std::to_string(n) +
                         " nodes exceeds cap " + std::to_string(kMaxDistNodes));
  }
  DistTable table{params, std::vector<double>(static_cast<size_t>(n) + 1, 0.0)};
  // Rolling rows: prev holds p_{j-1} at the grid times, cur receives p_j.
  std::vector<double> prev(static_cast<size_t>(n) + 1);
  std::vector<double> cur(static_cast<size_t>(n) + 1);
  for (long long m = 0; m <= n; ++m) {
    double s = std::sin(params.omega * (static_cast<double>(m) * params.delta_t));
    prev[static_cast<size_t>(m)] = s * s;
  }
  for (long long j = 1; j <= n; ++j) {
    double node = prev[static_cast<size_t>(j)];
    table.node[static_cast<size_t>(j)] = node;
    for (long long m = j; m <= n; ++m) {
      double angle =
          params.omega * (static_cast<double>(m - j) * params.delta_t);
      cur[static_cast<size_t>(m)] =
          params.eta * prev[static_cast<size_t>(m)] +
          (1.0 - params.eta) * mix(node, angle);
    }
    std::swap(prev, cur);
  }
  return table;
}

double dist_pg_from_table(const DistTable& table, double t) {
  if (t < 0.0) throw std::domain_error("dist_pg_from_table: negative time");
  const DistParams& p = table.params;
  long long count = static_cast<long long>(std::floor(t / p.delta_t));
  if (count >= static_cast<long long>(table.node.size())) {
    throw std::domain_error("dist_pg_from_table: time beyond table horizon");
  }
  double value = closed_pg(p.omega, t);
  for (long long j = 1; j <= count; ++j) {
    double angle = p.omega * (t - static_cast<double>(j) * p.delta_t);
    value = p.eta * value +
            (1.0 - p.eta) * mix(table.node[static_cast<size_t>(j)], angle);
  }
  return value;
}

double dist_pg(const DistParams& params, double t) {
  return dist_pg_from_table(build_dist_table(params, t), t);
}

ProbabilityTrace trace(Model model,
                       const std::variant<RabiParams, DistParams>& params,
                       int depth, double t_max, int samples) {
  if (!(t_max > 0.0)) throw std::domain_error("trace: need t_max > 0");
  if (samples < 2) throw std::domain_error("trace: need samples >= 2");
  ProbabilityTrace tr;
  tr.samples.reserve(static_cast<size_t>(samples));
  auto time_at = [&](int i) {
    return t_max * (static_cast<double>(i) / static_cast<double>(samples - 1));
  };
  switch (model) {
    case Model::kClosed: {
      const auto& p = std::get<RabiParams>(params);
      validate(p);
      for (int i = 0; i < samples; ++i) {
        double t = time_at(i);
        tr.samples.emplace_back(t, closed_pg(p.omega, t));
      }
      break;
    }
    case Model::kIndist: {
      const auto& p = std::get<RabiParams>(params);
      validate(p);
      if (depth < 0) throw std::domain_error("trace: negative depth");
      long long n_max = static_cast<long long>(
                            std::ceil(t_max / (p.beta * p.delta_t))) + 1;
      DpGrid grid = build_dp_grid(p, depth, n_max);
      for (int i = 0; i < samples; ++i) {
        double t = time_at(i);
        tr.samples.emplace_back(t, grid_interp(grid, t / (p.beta * p.delta_t)));
      }
      break;
    }
    case Model::kApprox: {
      const auto& p = std::get<RabiParams>(params);
      validate(p);
      for (int i = 0; i < samples; ++i) {
        double t = time_at(i);
        tr.samples.emplace_back(t, approx_pg(p, t));
      }
      break;
    }
    case Model::kDist: {
      const auto& p = std::get<DistParams>(params);
      DistTable table = build_dist_table(p, t_max);
      for (int i = 0; i < samples; ++i) {
        double t = time_at(i);
        tr.samples.emplace_back(t, dist_pg_from_table(table, t));
      }
      break;
    }
  }
  return tr;
}

}  // namespace qbranch
