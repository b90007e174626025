#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace procrnn {

/// Dense row-major matrix of doubles. Deliberately minimal: the network code
/// only needs sized storage, element access and raw row pointers.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// Deterministic 64-bit generator (xoshiro256** seeded via splitmix64).
/// Standard-library distributions are implementation-defined, so uniform
/// draws are derived directly from the raw bits to keep every run
/// bit-reproducible across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform double in [-scale, scale).
    double uniform_signed(double scale) { return (2.0 * uniform() - 1.0) * scale; }

    /// Independent child generator for a named stream. Children with
    /// different ids (or from different parents) do not share sequences.
    Rng derive(uint64_t stream_id) const;

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t s_[4];
};

/// Logistic function 1/(1+exp(-x)), applied elementwise.
double sigmoid(double x);
std::vector<double> sigmoid(const std::vector<double>& x);

/// Numerically stable softmax (max-subtracted), applied in place.
void softmax_inplace(std::span<double> x);
std::vector<double> softmax(const std::vector<double>& x);

/// Negative natural log-likelihood of the target class: -log(max(p, 1e-12)).
double cross_entropy(std::span<const double> probs, int target_id);

/// Matrix with entries drawn i.i.d. uniform over [-scale, scale).
Matrix init_uniform(Rng& rng, int rows, int cols, double scale);

/// Inverted dropout mask: each entry is 0 with probability p_drop, else
/// 1/(1-p_drop) so the expected value of a masked activation is unchanged.
/// p_drop == 0 yields all ones.
std::vector<double> dropout_mask(Rng& rng, int len, double p_drop);

/// Euclidean norm over the concatenation of all spans.
double global_norm(const std::vector<std::span<const double>>& parts);

/// Scales all spans by max_norm/norm when the global norm exceeds max_norm;
/// otherwise leaves them untouched. Returns the pre-clip norm.
double clip_by_global_norm(const std::vector<std::span<double>>& grads, double max_norm);

/// Index of the largest value; ties resolve to the lowest index.
int argmax(std::span<const double> x);

/// FNV-1a 64-bit hash of a byte buffer (used for input-content fingerprints).
uint64_t fnv1a64(const void* data, size_t len);

}  // namespace procrnn
