#include "procrnn/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "procrnn/errors.hpp"

namespace procrnn {

namespace {

// Accumulates (token, token-at-distance-d) pair counts and derives the
// plug-in mutual information with marginals taken from the pair table
// itself, which guarantees a non-negative estimate.
class PairTable {
public:
    void add(int a, int b) {
        ++joint_[(static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
                 static_cast<uint32_t>(b)];
        ++left_[a];
        ++right_[b];
        ++total_;
    }

    int64_t total() const { return total_; }

    double mi_bits() const {
        if (total_ == 0) throw Error("mutual_information: no pairs to estimate from");
        const double n = static_cast<double>(total_);
        double mi = 0.0;
        for (const auto& [key, count] : joint_) {
            const int a = static_cast<int>(key >> 32);
            const int b = static_cast<int>(key & 0xFFFFFFFFu);
            const double p_ab = count / n;
            const double p_a = left_.at(a) / n;
            const double p_b = right_.at(b) / n;
            mi += p_ab * std::log2(p_ab / (p_a * p_b));
        }
        // Clamp tiny negative rounding residue from the log sums.
        return std::max(mi, 0.0);
    }

private:
    std::unordered_map<uint64_t, int64_t> joint_;
    std::unordered_map<int, int64_t> left_, right_;
    int64_t total_ = 0;
};

}  // namespace

double mutual_information(std::span<const int> stream, int d) {
    if (d < 1) throw Error("mutual_information: distance must be at least 1");
    if (stream.size() <= static_cast<size_t>(d))
        throw Error("mutual_information: stream of " + std::to_string(stream.size()) +
                    " tokens has no pairs at distance " + std::to_string(d));
    PairTable table;
    for (size_t k = 0; k + d < stream.size(); ++k) table.add(stream[k], stream[k + d]);
    return table.mi_bits();
}

double mutual_information_within(std::span<const int> stream, std::span<const int> trace_lens,
                                 int d) {
    if (d < 1) throw Error("mutual_information: distance must be at least 1");
    size_t claimed = 0;
    for (const int len : trace_lens) {
        if (len < 0) throw Error("mutual_information: negative trace length");
        claimed += static_cast<size_t>(len);
    }
    if (claimed != stream.size())
        throw Error("mutual_information: trace lengths do not partition the stream");

    PairTable table;
    size_t base = 0;
    for (const int len : trace_lens) {
        for (size_t k = 0; k + d < static_cast<size_t>(len); ++k)
            table.add(stream[base + k], stream[base + k + d]);
        base += static_cast<size_t>(len);
    }
    if (table.total() == 0)
        throw Error("mutual_information: no trace is longer than distance " + std::to_string(d));
    return table.mi_bits();
}

namespace {

// Ordinary least squares y = a + b*x; returns (slope, residual sum of squares).
std::pair<double, double> ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    if (sxx == 0.0) throw Error("fit: degenerate regressor (all x equal)");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (intercept + slope * xs[k]);
        rss += r * r;
    }
    return {slope, rss};
}

}  // namespace

DecayFit fit_decay(std::span<const int> distances, std::span<const double> values) {
    if (distances.size() != values.size())
        throw Error("fit_decay: distances and values must have equal length");

    std::vector<double> d_lin, d_log, log_v;
    for (size_t k = 0; k < values.size(); ++k) {
        if (values[k] <= 0.0) continue;  // log-space fit can only use positive values
        if (distances[k] < 1) throw Error("fit_decay: distances must be at least 1");
        d_lin.push_back(static_cast<double>(distances[k]));
        d_log.push_back(std::log(static_cast<double>(distances[k])));
        log_v.push_back(std::log(values[k]));
    }

    DecayFit fit;
    fit.points_used = static_cast<int>(d_lin.size());
    if (fit.points_used < 3) return fit;  // not enough signal; caller reports the skip

    const auto [exp_slope, exp_rss] = ols(d_lin, log_v);
    const auto [pow_slope, pow_rss] = ols(d_log, log_v);
    fit.fitted = true;
    fit.exp_rate = -exp_slope;  // log v = a - rate*d
    fit.exp_residual = exp_rss;
    fit.power_exponent = pow_slope;
    fit.power_residual = pow_rss;
    return fit;
}

MiCurve mi_curve(std::span<const int> stream, int d_max) {
    if (d_max < 1) throw Error("mi_curve: d_max must be at least 1");
    if (static_cast<size_t>(d_max) >= stream.size())
        throw Error("mi_curve: d_max " + std::to_string(d_max) +
                    " must be smaller than the stream length " + std::to_string(stream.size()));
    MiCurve curve;
    for (int d = 1; d <= d_max; ++d) {
        curve.distances.push_back(d);
        curve.mi_bits.push_back(mutual_information(stream, d));
    }
    return curve;
}

ZipfResult zipf(std::span<const int> stream) {
    if (stream.empty()) throw Error("zipf: empty stream");
    std::unordered_map<int, int64_t> counts;
    for (const int token : stream) ++counts[token];

    std::vector<int64_t> sorted;
    sorted.reserve(counts.size());
    for (const auto& [token, count] : counts) sorted.push_back(count);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    ZipfResult result;
    const double n = static_cast<double>(stream.size());
    for (const int64_t count : sorted) result.rel_freqs.push_back(count / n);

    if (sorted.size() == 1) {
        result.slope = 0.0;  // a single rank has no slope; by convention 0
        return result;
    }
    std::vector<double> log_rank, log_freq;
    for (size_t r = 0; r < result.rel_freqs.size(); ++r) {
        log_rank.push_back(std::log(static_cast<double>(r + 1)));
        log_freq.push_back(std::log(result.rel_freqs[r]));
    }
    result.slope = ols(log_rank, log_freq).first;
    return result;
}

KsResult ks_two_sample(std::span<const double> counts_a, std::span<const double> counts_b) {
    if (counts_a.size() != counts_b.size())
        throw Error("ks_two_sample: count vectors describe different type universes (" +
                    std::to_string(counts_a.size()) + " vs " + std::to_string(counts_b.size()) +
                    " types)");
    if (counts_a.empty()) throw Error("ks_two_sample: empty count vectors");

    double n_a = 0.0, n_b = 0.0;
    for (const double c : counts_a) {
        if (c < 0.0) throw Error("ks_two_sample: negative count");
        n_a += c;
    }
    for (const double c : counts_b) {
        if (c < 0.0) throw Error("ks_two_sample: negative count");
        n_b += c;
    }
    if (n_a == 0.0 || n_b == 0.0) throw Error("ks_two_sample: a sample has zero total count");

    KsResult result;
    double cum_a = 0.0, cum_b = 0.0;
    for (size_t k = 0; k < counts_a.size(); ++k) {
        cum_a += counts_a[k] / n_a;
        cum_b += counts_b[k] / n_b;
        result.d = std::max(result.d, std::abs(cum_a - cum_b));
    }

    if (result.d == 0.0) {
        result.p = 1.0;
        return result;
    }
    const double n_eff = n_a * n_b / (n_a + n_b);
    const double lambda = std::sqrt(n_eff) * result.d;
    // Kolmogorov tail: Q(lambda) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
    double q = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        q += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    result.p = std::clamp(2.0 * q, 0.0, 1.0);
    return result;
}

}  // namespace procrnn
