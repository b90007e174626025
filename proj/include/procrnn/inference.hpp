#pragma once

#include <span>
#include <string>
#include <vector>

#include "procrnn/lstm.hpp"
#include "procrnn/vocab.hpp"

namespace procrnn {

/// How generated continuations pick the next token: the most probable one
/// (deterministic) or a draw from the predicted distribution.
enum class SampleMode { Argmax, Sample };

/// Incremental single-stream evaluator (batch 1, dropout off). Produces the
/// same numbers as the batched training forward pass, bit for bit.
class StreamingNet {
public:
    explicit StreamingNet(const NetworkParams& params);

    void reset();

    /// Consumes one input token and returns the next-token distribution.
    const std::vector<double>& step(int input_id);

    const std::vector<double>& probs() const { return probs_; }

private:
    const NetworkParams& params_;
    CellState state0_, state1_;
    std::vector<double> probs_;
};

/// Feeds the prefix through a fresh network state and returns the
/// distribution over the next token. Out-of-vocabulary prefix tokens map to
/// the unknown sentinel (with a warning on stderr); the prefix must be
/// non-empty.
std::vector<double> predict_next(const NetworkParams& params, const Vocabulary& in_vocab,
                                 std::span<const std::string> prefix);

struct Hallucination {
    std::vector<std::string> seed;       // tokens fed before generation
    std::vector<std::string> generated;  // includes the end-of-case token when reached
    bool hit_cap = false;                // stopped by max_len, not end-of-case
};

/// Lets the network continue a seed sequence on its own output: each chosen
/// token is fed back as the next input. Generation stops after max_len
/// tokens or, when stop_at_eoc is set, once the end-of-case token is
/// emitted (the terminal token is kept). Requires the checkpoint's input
/// and output vocabularies to be the same token set, since outputs are fed
/// back as inputs.
Hallucination hallucinate(const NetworkParams& params, const Vocabulary& vocab,
                          std::span<const std::string> seed, SampleMode mode, int max_len,
                          bool stop_at_eoc, const std::string& eoc_token, Rng& rng);

/// Optimal-string-alignment distance over token sequences (substitution,
/// insertion, deletion, adjacent transposition), normalized by the longer
/// length. Two empty sequences have distance 0.
double damerau_levenshtein_normed(std::span<const int> a, std::span<const int> b);
double damerau_levenshtein_normed(std::span<const std::string> a,
                                  std::span<const std::string> b);

struct RemainderResult {
    std::vector<std::string> predicted;  // without the end-of-case token
    std::vector<std::string> actual;     // without the end-of-case token
    double distance = 0.0;               // normalized edit distance
    bool capped = false;                 // generation stopped by the cap
};

/// Feeds prefix_len tokens of an encoded trace (which ends with the
/// end-of-case token) and lets the network generate the rest, then scores
/// the prediction against the trace's actual remainder by normalized edit
/// distance. max_len caps the generated remainder. prefix_len must be at
/// least 1 and smaller than the trace's event-token count.
RemainderResult predict_remainder(const NetworkParams& params, const Vocabulary& vocab,
                                  const std::vector<std::string>& trace_tokens, int prefix_len,
                                  SampleMode mode, int max_len, const std::string& eoc_token,
                                  Rng& rng);

}  // namespace procrnn
