#include "procrnn/training.hpp"

#include <cmath>
#include <future>
#include <numeric>

#include "procrnn/errors.hpp"

namespace procrnn {

double learning_rate(int epoch, const TrainingConfig& cfg) {
    if (epoch < 1) throw Error("learning_rate: epochs are 1-based");
    if (epoch <= cfg.full_lr_epochs) return cfg.base_lr;
    return cfg.base_lr * std::pow(cfg.lr_decay, epoch - cfg.full_lr_epochs);
}

namespace {

void validate_config(const TrainingConfig& cfg) {
    if (cfg.hidden_size <= 0 || cfg.unroll_steps <= 0 || cfg.batch_size <= 0)
        throw Error("training config: hidden_size, unroll_steps and batch_size must be positive");
    if (cfg.epochs < 1) throw Error("training config: epochs must be at least 1");
    if (cfg.base_lr <= 0.0 || cfg.lr_decay <= 0.0)
        throw Error("training config: base_lr and lr_decay must be positive");
    if (cfg.max_grad_norm <= 0.0) throw Error("training config: max_grad_norm must be positive");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
        throw Error("training config: dropout must be in [0, 1)");
    if (cfg.init_scale < 0.0) throw Error("training config: init_scale must be non-negative");
}

std::vector<int> flatten(const std::vector<std::vector<int>>& traces) {
    std::vector<int> out;
    size_t total = 0;
    for (const auto& t : traces) total += t.size();
    out.reserve(total);
    for (const auto& t : traces) out.insert(out.end(), t.begin(), t.end());
    return out;
}

// The label for position p is the next token of the target stream; the last
// position wraps to the stream start so every input position has a label.
std::vector<int> next_token_labels(const std::vector<int>& target_stream) {
    const size_t n = target_stream.size();
    std::vector<int> labels(n);
    for (size_t p = 0; p < n; ++p) labels[p] = target_stream[(p + 1) % n];
    return labels;
}

}  // namespace

void BatchStream::window(int w, int unroll_steps, std::vector<int>& inputs_out,
                         std::vector<int>& targets_out) const {
    if (w < 0 || w >= windows(unroll_steps)) throw Error("BatchStream::window: index out of range");
    inputs_out.resize(static_cast<size_t>(unroll_steps) * batch_size);
    targets_out.resize(static_cast<size_t>(unroll_steps) * batch_size);
    for (int t = 0; t < unroll_steps; ++t) {
        for (int b = 0; b < batch_size; ++b) {
            const size_t pos = static_cast<size_t>(b) * segment_len +
                               static_cast<size_t>(w) * unroll_steps + t;
            inputs_out[static_cast<size_t>(t) * batch_size + b] = inputs[pos];
            targets_out[static_cast<size_t>(t) * batch_size + b] = targets[pos];
        }
    }
}

BatchStream make_stream(const std::vector<std::vector<int>>& input_traces,
                        const std::vector<std::vector<int>>& target_traces, int batch_size,
                        int unroll_steps) {
    if (batch_size <= 0 || unroll_steps <= 0)
        throw Error("make_stream: batch_size and unroll_steps must be positive");

    const std::vector<int> input_stream = flatten(input_traces);
    const std::vector<int> target_stream = flatten(target_traces);
    if (input_stream.size() != target_stream.size())
        throw Error("make_stream: input and target streams must have equal length");
    if (input_stream.empty()) throw Error("make_stream: empty token stream");

    const std::vector<int> labels = next_token_labels(target_stream);

    const size_t segment_len = input_stream.size() / batch_size;
    if (segment_len < static_cast<size_t>(unroll_steps))
        throw Error("make_stream: stream of " + std::to_string(input_stream.size()) +
                    " tokens is too short for batch_size " + std::to_string(batch_size) +
                    " and unroll_steps " + std::to_string(unroll_steps));

    BatchStream stream;
    stream.batch_size = batch_size;
    stream.segment_len = static_cast<int>(segment_len);
    const size_t used = segment_len * batch_size;
    stream.inputs.assign(input_stream.begin(), input_stream.begin() + used);
    stream.targets.assign(labels.begin(), labels.begin() + used);
    return stream;
}

double precision(const NetworkParams& params,
                 const std::vector<std::vector<int>>& input_traces,
                 const std::vector<std::vector<int>>& target_traces,
                 const PrecisionOptions& opts) {
    const std::vector<int> input_stream = flatten(input_traces);
    const std::vector<int> target_stream = flatten(target_traces);
    if (input_stream.size() != target_stream.size())
        throw Error("precision: input and target streams must have equal length");
    if (input_stream.empty()) throw Error("precision: empty token stream");
    const std::vector<int> labels = next_token_labels(target_stream);

    const int m = params.hidden_size();
    CellState s0 = CellState::zeros(m);
    CellState s1 = CellState::zeros(m);
    std::vector<double> logits(params.vocab_out());

    size_t correct = 0;
    size_t pos = 0;
    for (const auto& trace : input_traces) {
        if (opts.reset_state_per_trace) {
            s0 = CellState::zeros(m);
            s1 = CellState::zeros(m);
        }
        for (const int id : trace) {
            if (id < 0 || id >= params.vocab_in())
                throw Error("precision: input id out of vocabulary range");
            std::span<const double> x(params.embedding.row(id), static_cast<size_t>(m));
            s0 = cell_forward(params.layers[0], s0, x);
            s1 = cell_forward(params.layers[1], s1, s0.h);
            for (int r = 0; r < params.vocab_out(); ++r) {
                double acc = params.out_b[r];
                const double* wr = params.out_w.row(r);
                for (int k = 0; k < m; ++k) acc += wr[k] * s1.h[k];
                logits[r] = acc;
            }
            const int predicted = argmax(logits);
            if (predicted == labels[pos] && predicted != opts.unknown_id) ++correct;
            ++pos;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(input_stream.size());
}

TrainResult train(const std::vector<std::vector<int>>& input_traces,
                  const std::vector<std::vector<int>>& target_traces, int vocab_in, int vocab_out,
                  const TrainingConfig& cfg, const TrainOptions& opts) {
    validate_config(cfg);
    const BatchStream stream = make_stream(input_traces, target_traces, cfg.batch_size,
                                           cfg.unroll_steps);
    const int num_windows = stream.windows(cfg.unroll_steps);

    const Rng root(cfg.seed);
    Rng init_rng = root.derive(1);
    Rng dropout_rng = root.derive(2);

    TrainResult result;
    result.params = NetworkParams::init(init_rng, vocab_in, vocab_out, cfg.hidden_size,
                                        cfg.peepholes, cfg.init_scale, cfg.forget_bias);
    NetworkParams grads = result.params.zeros_like();

    std::vector<int> window_inputs, window_targets;
    const bool use_dropout = cfg.dropout > 0.0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = learning_rate(epoch, cfg);
        NetworkState state = NetworkState::zeros(cfg.hidden_size, cfg.batch_size);
        double loss_sum = 0.0;

        for (int w = 0; w < num_windows; ++w) {
            stream.window(w, cfg.unroll_steps, window_inputs, window_targets);

            DropoutMasks masks;
            if (use_dropout)
                masks = DropoutMasks::make(dropout_rng, cfg.unroll_steps, cfg.hidden_size,
                                           cfg.batch_size, cfg.dropout);
            const DropoutMasks* masks_ptr = use_dropout ? &masks : nullptr;

            const Activations acts = forward_unrolled(result.params, state, window_inputs,
                                                      cfg.unroll_steps, cfg.batch_size, masks_ptr);
            grads.zero();
            const double loss = backward_unrolled(result.params, acts, window_targets, masks_ptr,
                                                  grads);
            if (!std::isfinite(loss))
                throw Error("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch) + ", window " + std::to_string(w));
            loss_sum += loss;

            clip_by_global_norm(grads.param_spans(), cfg.max_grad_norm);

            auto params_spans = result.params.param_spans();
            auto grad_spans = grads.param_spans();
            for (size_t s = 0; s < params_spans.size(); ++s) {
                double* p = params_spans[s].data();
                const double* g = grad_spans[s].data();
                const size_t len = params_spans[s].size();
                for (size_t k = 0; k < len; ++k) p[k] -= lr * g[k];
            }
        }
        result.final_loss = loss_sum / num_windows;

        if (opts.track_curve) {
            EpochPoint point;
            point.epoch = epoch;
            point.train_precision = precision(result.params, input_traces, target_traces,
                                              {false, opts.unknown_id});
            if (opts.val_input_traces && opts.val_target_traces) {
                point.val_precision = precision(result.params, *opts.val_input_traces,
                                                *opts.val_target_traces,
                                                {false, opts.unknown_id});
                point.has_val = true;
            }
            result.curve.push_back(point);
        }
    }
    return result;
}

namespace {

struct FoldOutcome {
    double train_precision = 0.0;
    double val_precision = 0.0;
};

FoldOutcome run_fold(const EncodedLog& encoded, const std::vector<int>& order, size_t val_begin,
                     size_t val_end, const TrainingConfig& fold_cfg) {
    std::vector<std::vector<std::string>> train_inputs, train_targets;
    std::vector<std::vector<std::string>> val_inputs, val_targets;
    for (size_t k = 0; k < order.size(); ++k) {
        const int trace = order[k];
        if (k >= val_begin && k < val_end) {
            val_inputs.push_back(encoded.input_tokens[trace]);
            val_targets.push_back(encoded.target_tokens[trace]);
        } else {
            train_inputs.push_back(encoded.input_tokens[trace]);
            train_targets.push_back(encoded.target_tokens[trace]);
        }
    }

    // Vocabularies come from the training traces only; the unknown sentinel
    // absorbs tokens seen only in the validation fold.
    const Vocabulary in_vocab = with_unknown(build_vocabulary(train_inputs));
    const Vocabulary out_vocab = with_unknown(build_vocabulary(train_targets));

    std::vector<std::vector<int>> train_in_ids, train_tgt_ids, val_in_ids, val_tgt_ids;
    for (const auto& t : train_inputs) train_in_ids.push_back(ids(in_vocab, t));
    for (const auto& t : train_targets) train_tgt_ids.push_back(ids(out_vocab, t));
    for (const auto& t : val_inputs) val_in_ids.push_back(ids_or_unknown(in_vocab, t));
    for (const auto& t : val_targets) val_tgt_ids.push_back(ids_or_unknown(out_vocab, t));

    TrainOptions opts;
    opts.track_curve = false;
    opts.unknown_id = out_vocab.unknown_id();
    const TrainResult trained = train(train_in_ids, train_tgt_ids, in_vocab.size(),
                                      out_vocab.size(), fold_cfg, opts);

    FoldOutcome outcome;
    const PrecisionOptions prec_opts{false, out_vocab.unknown_id()};
    outcome.train_precision = precision(trained.params, train_in_ids, train_tgt_ids, prec_opts);
    outcome.val_precision = precision(trained.params, val_in_ids, val_tgt_ids, prec_opts);
    return outcome;
}

double sample_sd(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / (static_cast<double>(xs.size()) - 1.0));
}

}  // namespace

EvalReport cross_validate(const EventLog& log, const TokenSchema& schema,
                          const TrainingConfig& cfg, int jobs) {
    validate_config(cfg);
    const size_t n = log.traces.size();
    if (cfg.folds < 2) throw Error("cross_validate: need at least 2 folds");
    if (n < static_cast<size_t>(cfg.folds))
        throw Error("cross_validate: " + std::to_string(n) + " traces cannot fill " +
                    std::to_string(cfg.folds) + " folds");
    if (jobs < 1) throw Error("cross_validate: jobs must be at least 1");

    const EncodedLog encoded = encode(log, schema);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Rng root(cfg.seed);
    if (cfg.shuffle_traces) {
        Rng shuffle_rng = root.derive(3);
        for (size_t k = n - 1; k > 0; --k) {
            const size_t j = shuffle_rng.next_u64() % (k + 1);
            std::swap(order[k], order[j]);
        }
    }

    std::vector<TrainingConfig> fold_cfgs(cfg.folds, cfg);
    for (int k = 0; k < cfg.folds; ++k) fold_cfgs[k].seed = root.derive(100 + k).seed();

    std::vector<FoldOutcome> outcomes(cfg.folds);
    for (int base = 0; base < cfg.folds; base += jobs) {
        const int wave_end = std::min(cfg.folds, base + jobs);
        std::vector<std::future<FoldOutcome>> futures;
        for (int k = base; k < wave_end; ++k) {
            const size_t val_begin = n * k / cfg.folds;
            const size_t val_end = n * (k + 1) / cfg.folds;
            futures.push_back(std::async(std::launch::async, run_fold, std::cref(encoded),
                                         std::cref(order), val_begin, val_end,
                                         fold_cfgs[k]));
        }
        for (int k = base; k < wave_end; ++k) outcomes[k] = futures[k - base].get();
    }

    EvalReport report;
    report.folds = cfg.folds;
    for (const auto& o : outcomes) {
        report.train_precision.push_back(o.train_precision);
        report.val_precision.push_back(o.val_precision);
    }
    report.train_mean = std::accumulate(report.train_precision.begin(),
                                        report.train_precision.end(), 0.0) / cfg.folds;
    report.val_mean = std::accumulate(report.val_precision.begin(), report.val_precision.end(),
                                      0.0) / cfg.folds;
    report.train_sd = sample_sd(report.train_precision, report.train_mean);
    report.val_sd = sample_sd(report.val_precision, report.val_mean);
    return report;
}

}  // namespace procrnn
