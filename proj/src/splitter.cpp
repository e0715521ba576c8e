#include "qbranch/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qbranch/errors.hpp"
#include "qbranch/numerics.hpp"

namespace qbranch {
namespace {

constexpr double kSumTol = 1e-12;

// Snap values that floating-point assembly left a hair outside [0, 1] back
// onto the nearest bound.
double snap01(double x) {
  if (std::fabs(x) < kSumTol) return 0.0;
  if (std::fabs(x - 1.0) < kSumTol) return 1.0;
  return x;
}

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " outside [0, 1]");
  }
}

// Running partial moments of one contiguous block of outcome indices.
struct MomentBlock {
  KahanSum r, t, rt, rr, tt;
};

struct EnumLayout {
  int base;
  long long total;
  std::array<char, 3> symbols;
  std::array<double, 3> probs;
};

EnumLayout enum_layout(int n, const SplitterChannels& channels) {
  validate(channels);
  if (n < 1) throw std::domain_error("enumeration: need n >= 1");
  EnumLayout lay{};
  if (channels.loss == 0.0) {
    if (n > kMaxEnumLossless) {
      throw resource_error("enumeration: n > " + std::to_string(kMaxEnumLossless) +
                           " for two-way outcomes");
    }
    lay.base = 2;
    lay.symbols = {'r', 't', '\0'};
    lay.probs = {channels.r_eff, channels.t_eff, 0.0};
  } else {
    if (n > kMaxEnumLossy) {
      throw resource_error("enumeration: n > " + std::to_string(kMaxEnumLossy) +
                           " for three-way outcomes");
    }
    lay.base = 3;
    lay.symbols = {'l', 'r', 't', };
    lay.probs = {channels.loss, channels.r_eff, channels.t_eff};
  }
  lay.total = 1;
  for (int i = 0; i < n; ++i) lay.total *= lay.base;
  return lay;
}

// Powers of each channel probability by repeated multiplication; shared by
// every enumeration path so weights round identically everywhere.
struct PowTables {
  std::vector<double> r, t, l;
};

PowTables pow_tables(int n, const SplitterChannels& channels) {
  PowTables pw;
  pw.r.resize(n + 1);
  pw.t.resize(n + 1);
  pw.l.resize(n + 1);
  pw.r[0] = pw.t[0] = pw.l[0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    pw.r[i] = pw.r[i - 1] * channels.r_eff;
    pw.t[i] = pw.t[i - 1] * channels.t_eff;
    pw.l[i] = pw.l[i - 1] * channels.loss;
  }
  return pw;
}

void accumulate_block(long long first, long long last, int n,
                      const EnumLayout& lay, const PowTables& pw,
                      MomentBlock* out) {
  for (long long idx = first; idx < last; ++idx) {
    long long v = idx;
    int count_r = 0;
    int count_t = 0;
    for (int pos = 0; pos < n; ++pos) {
      int d = static_cast<int>(v % lay.base);
      v /= lay.base;
      if (lay.base == 2) {
        count_t += d;  // digit 0 -> 'r', digit 1 -> 't'
      } else {
        count_r += (d == 1);
        count_t += (d == 2);
      }
    }
    if (lay.base == 2) count_r = n - count_t;
    int count_l = n - count_r - count_t;
    double w = pw.r[count_r] * pw.t[count_t] * pw.l[count_l];
    double j = static_cast<double>(count_r);
    double k = static_cast<double>(count_t);
    out->r.add(w * j);
    out->t.add(w * k);
    out->rt.add(w * j * k);
    out->rr.add(w * j * j);
    out->tt.add(w * k * k);
  }
}

// Both enumeration entry points run this same chunked accumulation and fold
// the chunk partials in index order, so the parallel result is bit-identical
// to the serial one at any thread count.
OccupationStats enumerate_impl(int n, const SplitterChannels& channels,
                               bool parallel) {
  EnumLayout lay = enum_layout(n, channels);
  PowTables pw = pow_tables(n, channels);
  constexpr int kChunks = 64;
  long long chunk = (lay.total + kChunks - 1) / kChunks;
  std::vector<MomentBlock> blocks(kChunks);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int b = 0; b < kChunks; ++b) {
      long long first = static_cast<long long>(b) * chunk;
      long long last = std::min(lay.total, first + chunk);
      if (first < last) accumulate_block(first, last, n, lay, pw, &blocks[b]);
    }
  } else {
    for (int b = 0; b < kChunks; ++b) {
      long long first = static_cast<long long>(b) * chunk;
      long long last = std::min(lay.total, first + chunk);
      if (first < last) accumulate_block(first, last, n, lay, pw, &blocks[b]);
    }
  }
  KahanSum r, t, rt, rr, tt;
  for (const MomentBlock& b : blocks) {
    r.add(b.r.value());
    t.add(b.t.value());
    rt.add(b.rt.value());
    rr.add(b.rr.value());
    tt.add(b.tt.value());
  }
  OccupationStats s{};
  s.mean_r = r.value();
  s.mean_t = t.value();
  s.mean_rt = rt.value();
  s.var_r = rr.value() - s.mean_r * s.mean_r;
  s.var_t = tt.value() - s.mean_t * s.mean_t;
  s.cov_rt = rt.value() - s.mean_r * s.mean_t;
  return s;
}

}  // namespace

void validate(const SplitterSpec& spec) {
  require_unit(spec.reflect, "reflect");
  require_unit(spec.transmit, "transmit");
  if (std::fabs(spec.reflect + spec.transmit - 1.0) > kSumTol) {
    throw std::invalid_argument("splitter: reflect + transmit must equal 1");
  }
}

void validate(const EfficiencySpec& eff) {
  require_unit(eff.eps_r, "eps_r");
  require_unit(eff.eps_t, "eps_t");
  require_unit(eff.w_b, "w_b");
}

void validate(const SplitterChannels& channels) {
  require_unit(channels.r_eff, "r_eff");
  require_unit(channels.t_eff, "t_eff");
  require_unit(channels.loss, "loss");
  if (std::fabs(channels.r_eff + channels.t_eff + channels.loss - 1.0) > kSumTol) {
    throw std::invalid_argument("channels: r_eff + t_eff + loss must equal 1");
  }
}

SplitterChannels derive_channels(const SplitterSpec& spec,
                                 const EfficiencySpec& eff,
                                 Convention convention) {
  validate(spec);
  validate(eff);
  SplitterChannels ch{};
  if (convention == Convention::kAllPrepared) {
    ch.r_eff = eff.w_b * (1.0 - eff.eps_r) * spec.reflect;
    ch.t_eff = eff.w_b * (1.0 - eff.eps_t) * spec.transmit;
    ch.loss = 1.0 - eff.w_b * (1.0 - eff.eps_r * spec.reflect -
                               eff.eps_t * spec.transmit);
  } else {
    ch.r_eff = (1.0 - eff.eps_r) * spec.reflect;
    ch.t_eff = (1.0 - eff.eps_t) * spec.transmit;
    ch.loss = eff.eps_r * spec.reflect + eff.eps_t * spec.transmit;
  }
  ch.r_eff = snap01(ch.r_eff);
  ch.t_eff = snap01(ch.t_eff);
  ch.loss = snap01(ch.loss);
  validate(ch);
  return ch;
}

OccupationStats stats_lossless_closed(long long n, const SplitterSpec& spec) {
  validate(spec);
  if (n < 1) throw std::domain_error("stats_lossless_closed: need n >= 1");
  double nn = static_cast<double>(n);
  double rt = spec.reflect * spec.transmit;
  OccupationStats s{};
  s.mean_r = nn * spec.reflect;
  s.mean_t = nn * spec.transmit;
  s.mean_rt = nn * (nn - 1.0) * rt;
  s.var_r = nn * rt;
  s.var_t = nn * rt;
  s.cov_rt = -nn * rt;
  return s;
}

OccupationStats stats_lossy_closed(long long n, const SplitterChannels& channels) {
  validate(channels);
  if (n < 1) throw std::domain_error("stats_lossy_closed: need n >= 1");
  double nn = static_cast<double>(n);
  OccupationStats s{};
  s.mean_r = nn * channels.r_eff;
  s.mean_t = nn * channels.t_eff;
  s.mean_rt = nn * (nn - 1.0) * channels.r_eff * channels.t_eff;
  s.var_r = nn * channels.r_eff * (channels.t_eff + channels.loss);
  s.var_t = nn * channels.t_eff * (channels.r_eff + channels.loss);
  s.cov_rt = -nn * channels.r_eff * channels.t_eff;
  return s;
}

OccupationStats stats_partition_binomial(long long n, const SplitterSpec& spec) {
  validate(spec);
  if (n < 1) throw std::domain_error("stats_partition_binomial: need n >= 1");
  double nn = static_cast<double>(n);
  double mu_r = nn * spec.reflect;
  double mu_t = nn * spec.transmit;
  KahanSum mean_r, mean_t, mean_rt, var_r, var_t, cov_rt;
  for (long long k = 0; k <= n; ++k) {
    double w = binomial_pmf(n, k, spec.reflect);
    double j = static_cast<double>(k);
    double m = static_cast<double>(n - k);
    mean_r.add(w * j);
    mean_t.add(w * m);
    mean_rt.add(w * j * m);
    var_r.add(w * (j - mu_r) * (j - mu_r));
    var_t.add(w * (m - mu_t) * (m - mu_t));
    cov_rt.add(w * (j - mu_r) * (m - mu_t));
  }
  OccupationStats s{};
  s.mean_r = mean_r.value();
  s.mean_t = mean_t.value();
  s.mean_rt = mean_rt.value();
  s.var_r = var_r.value();
  s.var_t = var_t.value();
  s.cov_rt = cov_rt.value();
#ifdef QBRANCH_FAULT_INJECT
  // Checker self-test build: shift one moment so `verify` must report a
  // named failure.
  s.var_r += 1e-6;
#endif
  return s;
}

OccupationStats stats_partition_multinomial(long long n,
                                            const SplitterChannels& channels) {
  validate(channels);
  if (n < 1) throw std::domain_error("stats_partition_multinomial: need n >= 1");
  double nn = static_cast<double>(n);
  double mu_r = nn * channels.r_eff;
  double mu_t = nn * channels.t_eff;
  std::array<double, 3> probs{channels.r_eff, channels.t_eff, channels.loss};
  KahanSum mean_r, mean_t, mean_rt, var_r, var_t, cov_rt;
  for (long long j = 0; j <= n; ++j) {
    for (long long k = 0; k + j <= n; ++k) {
      long long l = n - j - k;
      double w = multinomial_pmf(n, {j, k, l}, probs);
      double jj = static_cast<double>(j);
      double kk = static_cast<double>(k);
      mean_r.add(w * jj);
      mean_t.add(w * kk);
      mean_rt.add(w * jj * kk);
      var_r.add(w * (jj - mu_r) * (jj - mu_r));
      var_t.add(w * (kk - mu_t) * (kk - mu_t));
      cov_rt.add(w * (jj - mu_r) * (kk - mu_t));
    }
  }
  OccupationStats s{};
  s.mean_r = mean_r.value();
  s.mean_t = mean_t.value();
  s.mean_rt = mean_rt.value();
  s.var_r = var_r.value();
  s.var_t = var_t.value();
  s.cov_rt = cov_rt.value();
  return s;
}

OutcomeWeights density_weights(int n, const SplitterChannels& channels) {
  EnumLayout lay = enum_layout(n, channels);
  PowTables pw = pow_tables(n, channels);
  OutcomeWeights out{n, {}};
  out.entries.reserve(static_cast<size_t>(lay.total));
  std::string sym(static_cast<size_t>(n), '?');
  // Ascending index with the most significant digit written first is already
  // lexicographic order for both symbol alphabets.
  for (long long idx = 0; idx < lay.total; ++idx) {
    long long v = idx;
    int count_r = 0;
    int count_t = 0;
    for (int pos = n - 1; pos >= 0; --pos) {
      int d = static_cast<int>(v % lay.base);
      v /= lay.base;
      sym[static_cast<size_t>(pos)] = lay.symbols[static_cast<size_t>(d)];
      if (lay.base == 2) {
        count_t += d;
      } else {
        count_r += (d == 1);
        count_t += (d == 2);
      }
    }
    if (lay.base == 2) count_r = n - count_t;
    int count_l = n - count_r - count_t;
    out.entries.emplace_back(sym, pw.r[count_r] * pw.t[count_t] * pw.l[count_l]);
  }
  return out;
}

OccupationStats stats_enumerate(int n, const SplitterChannels& channels) {
  return enumerate_impl(n, channels, /*parallel=*/true);
}

OccupationStats stats_enumerate_serial(int n, const SplitterChannels& channels) {
  return enumerate_impl(n, channels, /*parallel=*/false);
}

}  // namespace qbranch
