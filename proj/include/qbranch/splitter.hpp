#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qbranch {

// Reflection/transmission probabilities of the bare splitter; must satisfy
// reflect + transmit == 1 (within 1e-12) with both in [0, 1].
struct SplitterSpec {
  double reflect;
  double transmit;
};

// Detector failure probabilities and the weight of the subensemble whose
// photons reach the splitter at all.
struct EfficiencySpec {
  double eps_r = 0.0;
  double eps_t = 0.0;
  double w_b = 1.0;
};

// Effective per-photon routing after folding in the efficiencies; the three
// fields sum to 1.
struct SplitterChannels {
  double r_eff;
  double t_eff;
  double loss;
};

// kAllPrepared counts every prepared photon in the denominator; kScatteredOnly
// conditions on the photon having reached the splitter.
enum class Convention { kAllPrepared, kScatteredOnly };

// First and second moments of the two detected occupation numbers.
struct OccupationStats {
  double mean_r;
  double mean_t;
  double mean_rt;
  double var_r;
  double var_t;
  double cov_rt;
};

// Per-outcome weights for n photons.  Outcome strings use symbols 'r' and 't'
// when loss == 0 and 'l', 'r', 't' otherwise; entries are in lexicographic
// order by outcome string.
struct OutcomeWeights {
  int n;
  std::vector<std::pair<std::string, double>> entries;
};

// Enumeration grows as 2^n (lossless) or 3^n (lossy); anything above these
// caps is refused as a resource error.
inline constexpr int kMaxEnumLossless = 16;
inline constexpr int kMaxEnumLossy = 12;

void validate(const SplitterSpec& spec);
void validate(const EfficiencySpec& eff);
void validate(const SplitterChannels& channels);

// Fold efficiencies into effective channel probabilities under the chosen
// normalization convention.
SplitterChannels derive_channels(const SplitterSpec& spec,
                                 const EfficiencySpec& eff,
                                 Convention convention);

// Closed-form moments for n photons on a lossless splitter.
OccupationStats stats_lossless_closed(long long n, const SplitterSpec& spec);

// Closed-form moments for n photons routed over (r_eff, t_eff, loss); reduces
// to stats_lossless_closed when loss == 0.
OccupationStats stats_lossy_closed(long long n, const SplitterChannels& channels);

// Moments as explicit binomial sums over the two-way (reflect, transmit)
// partition of n photons.
OccupationStats stats_partition_binomial(long long n, const SplitterSpec& spec);

// Moments as explicit trinomial sums over the (r_eff, t_eff, loss) partition.
OccupationStats stats_partition_multinomial(long long n,
                                            const SplitterChannels& channels);

// The full outcome-by-outcome weight table for n photons.
OutcomeWeights density_weights(int n, const SplitterChannels& channels);

// Moments accumulated over every outcome string.  stats_enumerate runs the
// outcome blocks in parallel; stats_enumerate_serial is the plain loop kept
// as a reference.  Both fold identical per-block partial sums in a fixed
// order, so their results agree bit for bit.
OccupationStats stats_enumerate(int n, const SplitterChannels& channels);
OccupationStats stats_enumerate_serial(int n, const SplitterChannels& channels);

}  // namespace qbranch
