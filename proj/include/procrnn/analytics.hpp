#pragma once

#include <span>
#include <vector>

namespace procrnn {

/// Plug-in mutual information, in bits, between tokens d positions apart.
/// Joint and marginal distributions are estimated from the same pair table,
/// which keeps the estimate non-negative. Requires 1 <= d < stream length.
double mutual_information(std::span<const int> stream, int d);

/// Same, but only pairs whose two positions fall inside the same trace are
/// counted. trace_lens partitions the stream into consecutive traces.
/// Throws when no trace is long enough to contribute a single pair.
double mutual_information_within(std::span<const int> stream, std::span<const int> trace_lens,
                                 int d);

struct MiCurve {
    std::vector<int> distances;  // 1..d_max
    std::vector<double> mi_bits;
};

/// Least-squares decay fits on (distance, value) points with value > 0.
/// Both models are fitted in log space on the same response, so the
/// residual sums are directly comparable:
///   exponential: log v = a - rate * d
///   power law:   log v = a + exponent * log d
struct DecayFit {
    bool fitted = false;  // false when fewer than 3 positive points exist
    double exp_rate = 0.0;
    double exp_residual = 0.0;
    double power_exponent = 0.0;
    double power_residual = 0.0;
    int points_used = 0;
};

DecayFit fit_decay(std::span<const int> distances, std::span<const double> values);

/// Mutual information for every separation 1..d_max plus the decay fit.
/// Requires d_max < stream length.
MiCurve mi_curve(std::span<const int> stream, int d_max);

struct ZipfResult {
    std::vector<double> rel_freqs;  // descending, rank r is rel_freqs[r-1]
    double slope = 0.0;             // log-log regression slope
};

/// Rank-frequency profile of a token stream: relative frequencies in
/// descending order and the slope of log(freq) against log(rank).
ZipfResult zipf(std::span<const int> stream);

struct KsResult {
    double d = 0.0;  // max distance between the two cumulative profiles
    double p = 1.0;  // asymptotic two-sample p-value
};

/// Two-sample Kolmogorov-Smirnov test over categorical count vectors. Both
/// vectors must describe the same type universe in the same (reference rank)
/// order. The p-value uses the asymptotic Kolmogorov distribution with
/// effective sample size n_a*n_b/(n_a+n_b), n_a and n_b being the total
/// counts.
KsResult ks_two_sample(std::span<const double> counts_a, std::span<const double> counts_b);

}  // namespace procrnn
