#pragma once

// Shared utilities for the unit and acceptance tests. Deliberately free of
// any test-framework dependency so both binaries can include it.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "procrnn/lstm.hpp"
#include "procrnn/nncore.hpp"

namespace testutil {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("procrnn_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// n_traces copies of the deterministic cycle S0 -> S1 -> ... -> S{k-1} -> [EOC].
inline std::vector<std::vector<std::string>> cyclic_token_traces(int n_traces, int n_states) {
    std::vector<std::string> one;
    for (int s = 0; s < n_states; ++s) one.push_back("S" + std::to_string(s));
    one.push_back("[EOC]");
    return std::vector<std::vector<std::string>>(n_traces, one);
}

/// Two-branch generator A -> (B with prob 0.8 | C with prob 0.2) -> D -> [EOC].
inline std::vector<std::vector<std::string>> branching_token_traces(int n_traces,
                                                                    uint64_t seed) {
    procrnn::Rng rng(seed);
    std::vector<std::vector<std::string>> traces;
    traces.reserve(n_traces);
    for (int k = 0; k < n_traces; ++k) {
        const std::string x = rng.uniform() < 0.8 ? "B" : "C";
        traces.push_back({"A", x, "D", "[EOC]"});
    }
    return traces;
}

/// Canonical CSV form of activity-only token traces (one event per token).
inline std::string traces_to_csv(const std::vector<std::vector<std::string>>& token_traces) {
    std::string out = "case_id,activity,lifecycle,resource,group,timestamp\n";
    for (size_t t = 0; t < token_traces.size(); ++t)
        for (const auto& token : token_traces[t]) {
            if (token == "[EOC]") continue;  // the encoder re-appends it
            out += "c" + std::to_string(t) + "," + token + ",,,,\n";
        }
    return out;
}

/// Reference optimal-string-alignment distance, written top-down with
/// memoization so it shares no code shape with the production routine.
inline int osa_oracle(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, int> memo;
    // cost to align the first i tokens of a with the first j of b
    std::function<int(int, int)> go = [&](int i, int j) -> int {
        if (i == 0) return j;
        if (j == 0) return i;
        const auto key = std::make_pair(i, j);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        int best = go(i - 1, j) + 1;                               // delete
        best = std::min(best, go(i, j - 1) + 1);                   // insert
        best = std::min(best, go(i - 1, j - 1) +                   // substitute
                                  (a[i - 1] == b[j - 1] ? 0 : 1));
        if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
            best = std::min(best, go(i - 2, j - 2) + 1);           // transpose
        memo[key] = best;
        return best;
    };
    return go(static_cast<int>(a.size()), static_cast<int>(b.size()));
}

/// Max relative error between analytic gradients and central finite
/// differences of the mean window loss, over every trainable parameter.
/// The incoming state and (optional) dropout masks are held fixed, matching
/// the truncated-backpropagation semantics of the backward pass.
inline double gradient_check_max_rel_err(procrnn::NetworkParams& params,
                                         const procrnn::NetworkState& state0,
                                         const std::vector<int>& input_ids,
                                         const std::vector<int>& target_ids, int t_steps,
                                         int batch,
                                         const procrnn::DropoutMasks* masks = nullptr,
                                         double h = 1e-5) {
    using namespace procrnn;
    const auto loss_at = [&]() {
        NetworkState s = state0;
        const Activations acts = forward_unrolled(params, s, input_ids, t_steps, batch, masks);
        return window_loss(acts, target_ids);
    };

    NetworkState s = state0;
    const Activations acts = forward_unrolled(params, s, input_ids, t_steps, batch, masks);
    NetworkParams grads = params.zeros_like();
    backward_unrolled(params, acts, target_ids, masks, grads);

    auto p_spans = params.param_spans();
    auto g_spans = grads.param_spans();
    double max_rel = 0.0;
    for (size_t si = 0; si < p_spans.size(); ++si) {
        for (size_t k = 0; k < p_spans[si].size(); ++k) {
            const double saved = p_spans[si][k];
            p_spans[si][k] = saved + h;
            const double up = loss_at();
            p_spans[si][k] = saved - h;
            const double down = loss_at();
            p_spans[si][k] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = g_spans[si][k];
            const double denom =
                std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
            max_rel = std::max(max_rel, std::fabs(numeric - analytic) / denom);
        }
    }
    return max_rel;
}

/// Captures everything written to a std::ostream for the lifetime of the
/// object (used to inspect CLI stdout/stderr in-process).
class CaptureStream {
public:
    explicit CaptureStream(std::ostream& stream)
        : stream_(stream), old_(stream.rdbuf(buffer_.rdbuf())) {}
    ~CaptureStream() { stream_.rdbuf(old_); }

    std::string text() const { return buffer_.str(); }

private:
    std::ostream& stream_;
    std::ostringstream buffer_;
    std::streambuf* old_;
};

}  // namespace testutil
