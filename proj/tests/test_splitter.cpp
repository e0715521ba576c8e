#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "qbranch/errors.hpp"
#include "qbranch/numerics.hpp"
#include "qbranch/splitter.hpp"

using namespace qbranch;

namespace {

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

void check_stats_close(const OccupationStats& a, const OccupationStats& b,
                       double tol) {
  CHECK(close_rel(a.mean_r, b.mean_r, tol));
  CHECK(close_rel(a.mean_t, b.mean_t, tol));
  CHECK(close_rel(a.mean_rt, b.mean_rt, tol));
  CHECK(close_rel(a.var_r, b.var_r, tol));
  CHECK(close_rel(a.var_t, b.var_t, tol));
  CHECK(close_rel(a.cov_rt, b.cov_rt, tol));
}

}  // namespace

TEST_CASE("channel derivation: balanced lossless case") {
  SplitterChannels ch = derive_channels(SplitterSpec{0.5, 0.5}, EfficiencySpec{},
                                        Convention::kAllPrepared);
  CHECK(ch.r_eff == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ch.t_eff == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ch.loss == doctest::Approx(0.0));
}

TEST_CASE("channel derivation: asymmetric detectors, scattered-only") {
  SplitterChannels ch =
      derive_channels(SplitterSpec{0.5, 0.5}, EfficiencySpec{0.1, 0.2, 1.0},
                      Convention::kScatteredOnly);
  CHECK(ch.r_eff == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(ch.t_eff == doctest::Approx(0.40).epsilon(1e-12));
  CHECK(ch.loss == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("channel derivation: subensemble weight under all-prepared") {
  SplitterChannels ch =
      derive_channels(SplitterSpec{0.3, 0.7}, EfficiencySpec{0.0, 0.0, 0.8},
                      Convention::kAllPrepared);
  CHECK(ch.r_eff == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(ch.t_eff == doctest::Approx(0.56).epsilon(1e-12));
  CHECK(ch.loss == doctest::Approx(0.20).epsilon(1e-12));
}

TEST_CASE("channel validation rejects out-of-range inputs") {
  CHECK_THROWS_AS(validate(SplitterSpec{1.2, -0.2}), std::invalid_argument);
  CHECK_THROWS_AS(validate(SplitterSpec{0.4, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(validate(EfficiencySpec{-0.1, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(SplitterChannels{0.5, 0.4, 0.2}), std::invalid_argument);
}

TEST_CASE("lossless closed form: balanced splitter, three photons") {
  OccupationStats s = stats_lossless_closed(3, SplitterSpec{0.5, 0.5});
  CHECK(s.mean_r == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(s.mean_t == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(s.mean_rt == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(s.var_r == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.var_t == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.cov_rt == doctest::Approx(-0.75).epsilon(1e-12));
}

TEST_CASE("lossless closed form: mean reflected count scales with n") {
  CHECK(stats_lossless_closed(10, SplitterSpec{0.3, 0.7}).mean_r ==
        doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("binomial partition sums reproduce the closed form") {
  for (double r : {0.3, 0.5}) {
    for (long long n : {3LL, 10LL}) {
      check_stats_close(stats_partition_binomial(n, SplitterSpec{r, 1.0 - r}),
                        stats_lossless_closed(n, SplitterSpec{r, 1.0 - r}), 1e-12);
    }
  }
}

TEST_CASE("multinomial partition: asymmetric-loss variances") {
  SplitterChannels ch{0.45, 0.40, 0.15};
  OccupationStats s = stats_partition_multinomial(5, ch);
  CHECK(s.var_r == doctest::Approx(1.2375).epsilon(1e-12));
  CHECK(s.var_t == doctest::Approx(1.20).epsilon(1e-12));
  check_stats_close(s, stats_lossy_closed(5, ch), 1e-12);
}

TEST_CASE("degenerate channel routes everything to one detector") {
  SplitterChannels ch{1.0, 0.0, 0.0};
  for (const OccupationStats& s :
       {stats_lossy_closed(2, ch), stats_partition_multinomial(2, ch),
        stats_enumerate(2, ch)}) {
    CHECK(s.mean_r == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.mean_t == doctest::Approx(0.0));
    CHECK(s.mean_rt == doctest::Approx(0.0));
    CHECK(s.var_r == doctest::Approx(0.0));
    CHECK(s.var_t == doctest::Approx(0.0));
    CHECK(s.cov_rt == doctest::Approx(0.0));
  }
}

TEST_CASE("outcome weights: lossless table is lexicographic and normalized") {
  OutcomeWeights w = density_weights(3, SplitterChannels{0.5, 0.5, 0.0});
  REQUIRE(w.entries.size() == 8);
  CHECK(std::is_sorted(w.entries.begin(), w.entries.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; }));
  CHECK(w.entries[0].first == "rrr");
  CHECK(w.entries[1].first == "rrt");
  CHECK(w.entries[1].second == doctest::Approx(0.125).epsilon(1e-12));
  KahanSum total;
  for (const auto& [sym, weight] : w.entries) total.add(weight);
  CHECK(std::fabs(total.value() - 1.0) <= 1e-12);
}

TEST_CASE("outcome weights: lossy table uses the three-letter alphabet") {
  OutcomeWeights w = density_weights(2, SplitterChannels{0.45, 0.40, 0.15});
  REQUIRE(w.entries.size() == 9);
  CHECK(w.entries[0].first == "ll");
  CHECK(w.entries[0].second == doctest::Approx(0.0225).epsilon(1e-12));
  CHECK(w.entries[5].first == "rt");
  CHECK(w.entries[5].second == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(std::is_sorted(w.entries.begin(), w.entries.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; }));
  KahanSum total;
  for (const auto& [sym, weight] : w.entries) total.add(weight);
  CHECK(std::fabs(total.value() - 1.0) <= 1e-12);
}

TEST_CASE("enumeration caps are enforced as resource errors") {
  SplitterChannels lossless{0.5, 0.5, 0.0};
  SplitterChannels lossy{0.45, 0.40, 0.15};
  CHECK_THROWS_AS(density_weights(17, lossless), resource_error);
  CHECK_THROWS_AS(density_weights(13, lossy), resource_error);
  CHECK_THROWS_AS(stats_enumerate(17, lossless), resource_error);
  CHECK_THROWS_AS(stats_enumerate(13, lossy), resource_error);
  CHECK_NOTHROW(stats_enumerate(16, lossless));
  CHECK_NOTHROW(stats_enumerate(12, lossy));
}

TEST_CASE("all four stats routes agree across the parameter grid") {
  for (double r : {0.1, 0.5, 0.9}) {
    for (int n = 1; n <= 12; ++n) {
      SplitterSpec spec{r, 1.0 - r};
      SplitterChannels ch{r, 1.0 - r, 0.0};
      OccupationStats closed = stats_lossless_closed(n, spec);
      check_stats_close(stats_partition_binomial(n, spec), closed, 1e-10);
      check_stats_close(stats_partition_multinomial(n, ch), closed, 1e-10);
      check_stats_close(stats_enumerate(n, ch), closed, 1e-10);
    }
  }
}

TEST_CASE("parallel and serial enumeration agree bit for bit") {
  SplitterChannels lossy{0.37, 0.41, 0.22};
  for (int n : {1, 5, 10, 12}) {
    OccupationStats par = stats_enumerate(n, lossy);
    OccupationStats ser = stats_enumerate_serial(n, lossy);
    CHECK(par.mean_r == ser.mean_r);
    CHECK(par.mean_t == ser.mean_t);
    CHECK(par.mean_rt == ser.mean_rt);
    CHECK(par.var_r == ser.var_r);
    CHECK(par.var_t == ser.var_t);
    CHECK(par.cov_rt == ser.cov_rt);
  }
}
