// Timing comparison of the parallel kernels against their serial reference
// implementations.  The two are required to agree bit for bit, so the bench
// doubles as a consistency check; any mismatch exits nonzero.
//
// RUN: bench_kernels [small]
//   small — trimmed problem sizes, used as a smoke test by the test suite.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "qbranch/rabi.hpp"
#include "qbranch/splitter.hpp"

using namespace qbranch;

namespace {

double best_of_3(const std::function<void()>& work) {
  double best = 1e300;
  for (int i = 0; i < 3; ++i) {
    auto start = std::chrono::steady_clock::now();
    work();
    double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (s < best) best = s;
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  bool small = argc > 1 && std::strcmp(argv[1], "small") == 0;
  const long long n_max = small ? 2000 : 20000;
  const int enum_n = small ? 9 : 12;
  bool ok = true;

  {
    RabiParams p{1.0, 0.3, 0.9};
    DpGrid par{};
    DpGrid ser{};
    double t_par = best_of_3([&] { par = build_dp_grid(p, 5, n_max); });
    double t_ser = best_of_3([&] { ser = build_dp_grid_serial(p, 5, n_max); });
    bool equal = par.pg == ser.pg;
    ok = ok && equal;
    std::printf("refinement grid  depth=5 n_max=%-6lld serial %8.3f ms  "
                "parallel %8.3f ms  speedup %.2fx  bitwise %s\n",
                n_max, t_ser * 1e3, t_par * 1e3, t_ser / t_par,
                equal ? "equal" : "DIFFERENT");
  }

  {
    SplitterChannels ch{0.45, 0.40, 0.15};
    OccupationStats par{};
    OccupationStats ser{};
    // One pass is short; repeat to give the clock something to measure.
    const int reps = 10;
    double t_par = best_of_3([&] {
      for (int i = 0; i < reps; ++i) par = stats_enumerate(enum_n, ch);
    });
    double t_ser = best_of_3([&] {
      for (int i = 0; i < reps; ++i) ser = stats_enumerate_serial(enum_n, ch);
    });
    bool equal = par.mean_r == ser.mean_r && par.mean_t == ser.mean_t &&
                 par.mean_rt == ser.mean_rt && par.var_r == ser.var_r &&
                 par.var_t == ser.var_t && par.cov_rt == ser.cov_rt;
    ok = ok && equal;
    std::printf("outcome sums     n=%-2d x%-2d        serial %8.3f ms  "
                "parallel %8.3f ms  speedup %.2fx  bitwise %s\n",
                enum_n, reps, t_ser * 1e3, t_par * 1e3, t_ser / t_par,
                equal ? "equal" : "DIFFERENT");
  }

  if (!ok) {
    std::printf("bench: parallel and serial kernels disagree\n");
    return 1;
  }
  return 0;
}
