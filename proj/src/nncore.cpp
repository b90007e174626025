#include "procrnn/nncore.hpp"

#include <algorithm>
#include <cmath>

#include "procrnn/errors.hpp"

namespace procrnn {

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t rotl64(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
    // splitmix64 expansion is the recommended way to fill xoshiro state;
    // it guarantees a non-zero state for every seed.
    uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

uint64_t Rng::next_u64() {
    const uint64_t result = rotl64(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Rng Rng::derive(uint64_t stream_id) const {
    // Mix parent seed and stream id through splitmix64 twice so that
    // (seed, id) pairs land far apart even for small consecutive ids.
    uint64_t mix = seed_ ^ (0xA0761D6478BD642FULL * (stream_id + 1));
    splitmix64(mix);
    return Rng(splitmix64(mix));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> sigmoid(const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (size_t k = 0; k < x.size(); ++k) out[k] = sigmoid(x[k]);
    return out;
}

void softmax_inplace(std::span<double> x) {
    if (x.empty()) throw Error("softmax: empty input");
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : x) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : x) v /= sum;
}

std::vector<double> softmax(const std::vector<double>& x) {
    std::vector<double> out = x;
    softmax_inplace(out);
    return out;
}

double cross_entropy(std::span<const double> probs, int target_id) {
    if (target_id < 0 || static_cast<size_t>(target_id) >= probs.size())
        throw Error("cross_entropy: target id " + std::to_string(target_id) +
                    " out of range for " + std::to_string(probs.size()) + " classes");
    return -std::log(std::max(probs[target_id], 1e-12));
}

Matrix init_uniform(Rng& rng, int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform_signed(scale);
    return m;
}

std::vector<double> dropout_mask(Rng& rng, int len, double p_drop) {
    if (p_drop < 0.0 || p_drop >= 1.0)
        throw Error("dropout_mask: drop probability must be in [0, 1)");
    std::vector<double> mask(len, 1.0);
    if (p_drop == 0.0) return mask;
    const double keep_inv = 1.0 / (1.0 - p_drop);
    for (double& v : mask) v = (rng.uniform() < p_drop) ? 0.0 : keep_inv;
    return mask;
}

double global_norm(const std::vector<std::span<const double>>& parts) {
    double sq = 0.0;
    for (const auto& part : parts)
        for (double v : part) sq += v * v;
    return std::sqrt(sq);
}

double clip_by_global_norm(const std::vector<std::span<double>>& grads, double max_norm) {
    if (max_norm <= 0.0) throw Error("clip_by_global_norm: max_norm must be positive");
    std::vector<std::span<const double>> views(grads.begin(), grads.end());
    const double norm = global_norm(views);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (const auto& g : grads)
            for (double& v : g) v *= scale;
    }
    return norm;
}

int argmax(std::span<const double> x) {
    if (x.empty()) throw Error("argmax: empty input");
    int best = 0;
    for (int k = 1; k < static_cast<int>(x.size()); ++k)
        if (x[k] > x[best]) best = k;
    return best;
}

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    uint64_t hash = 0xCBF29CE484222325ULL;
    for (size_t k = 0; k < len; ++k) {
        hash ^= bytes[k];
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

}  // namespace procrnn
