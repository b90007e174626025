#include "procrnn/inference.hpp"

#include <algorithm>
#include <iostream>
#include <unordered_map>

#include "procrnn/errors.hpp"

namespace procrnn {

StreamingNet::StreamingNet(const NetworkParams& params)
    : params_(params),
      state0_(CellState::zeros(params.hidden_size())),
      state1_(CellState::zeros(params.hidden_size())),
      probs_(params.vocab_out(), 0.0) {
    if (params.layers.size() != 2) throw Error("StreamingNet: expected 2 recurrent layers");
}

void StreamingNet::reset() {
    const int m = params_.hidden_size();
    state0_ = CellState::zeros(m);
    state1_ = CellState::zeros(m);
}

const std::vector<double>& StreamingNet::step(int input_id) {
    if (input_id < 0 || input_id >= params_.vocab_in())
        throw Error("StreamingNet: input id " + std::to_string(input_id) +
                    " out of vocabulary range");
    const int m = params_.hidden_size();
    std::span<const double> x(params_.embedding.row(input_id), static_cast<size_t>(m));
    state0_ = cell_forward(params_.layers[0], state0_, x);
    state1_ = cell_forward(params_.layers[1], state1_, state0_.h);
    for (int r = 0; r < params_.vocab_out(); ++r) {
        double acc = params_.out_b[r];
        const double* wr = params_.out_w.row(r);
        for (int k = 0; k < m; ++k) acc += wr[k] * state1_.h[k];
        probs_[r] = acc;
    }
    softmax_inplace(probs_);
    return probs_;
}

std::vector<double> predict_next(const NetworkParams& params, const Vocabulary& in_vocab,
                                 std::span<const std::string> prefix) {
    if (prefix.empty()) throw Error("predict_next: prefix must be non-empty");
    if (in_vocab.size() != params.vocab_in())
        throw Error("predict_next: vocabulary size does not match the network");

    std::vector<int> prefix_ids;
    int oov = 0;
    if (in_vocab.has_unknown()) {
        prefix_ids = ids_or_unknown(in_vocab, prefix, &oov);
    } else {
        prefix_ids = ids(in_vocab, prefix);
    }
    if (oov > 0)
        std::cerr << "warning: " << oov << " out-of-vocabulary prefix token(s) mapped to "
                  << Vocabulary::kUnknownToken << "\n";

    StreamingNet net(params);
    for (const int id : prefix_ids) net.step(id);
    return net.probs();
}

namespace {

int sample_from(const std::vector<double>& probs, Rng& rng) {
    const double r = rng.uniform();
    double cdf = 0.0;
    for (size_t k = 0; k < probs.size(); ++k) {
        cdf += probs[k];
        if (r < cdf) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;  // guards against cdf rounding below 1
}

}  // namespace

Hallucination hallucinate(const NetworkParams& params, const Vocabulary& vocab,
                          std::span<const std::string> seed, SampleMode mode, int max_len,
                          bool stop_at_eoc, const std::string& eoc_token, Rng& rng) {
    if (seed.empty()) throw Error("hallucinate: seed must be non-empty");
    if (max_len < 0) throw Error("hallucinate: max_len must be non-negative");
    // Generated tokens are fed back as inputs, so one id space must serve
    // both roles.
    if (params.vocab_in() != params.vocab_out())
        throw Error("hallucinate: network input and output vocabularies differ (" +
                    std::to_string(params.vocab_in()) + " vs " +
                    std::to_string(params.vocab_out()) +
                    "); self-feedback needs a shared token space");
    if (vocab.size() != params.vocab_in())
        throw Error("hallucinate: vocabulary size does not match the network");

    Hallucination result;
    result.seed.assign(seed.begin(), seed.end());

    StreamingNet net(params);
    for (const auto& token : seed) net.step(vocab.id(token));

    for (int n = 0; n < max_len; ++n) {
        const std::vector<double>& probs = net.probs();
        const int chosen = (mode == SampleMode::Argmax)
                               ? argmax(probs)
                               : sample_from(probs, rng);
        const std::string& token = vocab.token(chosen);
        result.generated.push_back(token);
        if (stop_at_eoc && token == eoc_token) return result;
        net.step(chosen);
    }
    // The loop ran to the cap without an end-of-case stop.
    result.hit_cap = true;
    return result;
}

double damerau_levenshtein_normed(std::span<const int> a, std::span<const int> b) {
    const size_t n = a.size();
    const size_t m = b.size();
    if (n == 0 && m == 0) return 0.0;
    if (n == 0 || m == 0) return 1.0;  // all insertions: d = max(n, m)

    // Optimal string alignment over three rolling rows: d[i-2], d[i-1], d[i].
    std::vector<size_t> prev2(m + 1), prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;

    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            const size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            const size_t del = prev[j] + 1;
            const size_t ins = cur[j - 1] + 1;
            size_t best = std::min({subst, del, ins});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
                best = std::min(best, prev2[j - 2] + 1);
            cur[j] = best;
        }
        std::swap(prev2, prev);
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

double damerau_levenshtein_normed(std::span<const std::string> a,
                                  std::span<const std::string> b) {
    // Intern the tokens so the core works over cheap integer comparisons.
    std::unordered_map<std::string, int> intern;
    const auto to_ids = [&](std::span<const std::string> tokens) {
        std::vector<int> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens)
            out.push_back(intern.emplace(t, static_cast<int>(intern.size())).first->second);
        return out;
    };
    const std::vector<int> ia = to_ids(a);
    const std::vector<int> ib = to_ids(b);
    return damerau_levenshtein_normed(std::span<const int>(ia), std::span<const int>(ib));
}

RemainderResult predict_remainder(const NetworkParams& params, const Vocabulary& vocab,
                                  const std::vector<std::string>& trace_tokens, int prefix_len,
                                  SampleMode mode, int max_len, const std::string& eoc_token,
                                  Rng& rng) {
    if (trace_tokens.empty() || trace_tokens.back() != eoc_token)
        throw Error("predict_remainder: trace tokens must end with the end-of-case token");
    const int event_tokens = static_cast<int>(trace_tokens.size()) - 1;
    if (prefix_len < 1 || prefix_len >= static_cast<int>(trace_tokens.size()))
        throw Error("predict_remainder: prefix_len must be in [1, " +
                    std::to_string(trace_tokens.size() - 1) + "] for a trace of " +
                    std::to_string(event_tokens) + " event tokens");

    const std::span<const std::string> prefix(trace_tokens.data(),
                                              static_cast<size_t>(prefix_len));
    const Hallucination h =
        hallucinate(params, vocab, prefix, mode, max_len, true, eoc_token, rng);

    RemainderResult result;
    result.capped = h.hit_cap;
    result.predicted = h.generated;
    if (!result.predicted.empty() && result.predicted.back() == eoc_token)
        result.predicted.pop_back();
    result.actual.assign(trace_tokens.begin() + prefix_len, trace_tokens.end() - 1);
    result.distance = damerau_levenshtein_normed(std::span<const std::string>(result.predicted),
                                                 std::span<const std::string>(result.actual));
    return result;
}

}  // namespace procrnn
