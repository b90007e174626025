#pragma once

#include <cstdint>
#include <vector>

#include "procrnn/eventlog.hpp"
#include "procrnn/lstm.hpp"
#include "procrnn/vocab.hpp"

namespace procrnn {

/// Hyperparameters of one training run. Defaults are the baseline
/// configuration used throughout: width 125, 20-step unroll, batch 20,
/// 100 epochs with the learning rate held at 1.0 for the first 50 and
/// geometrically decayed afterwards.
struct TrainingConfig {
    int hidden_size = 125;
    int unroll_steps = 20;
    int batch_size = 20;
    int epochs = 100;
    int full_lr_epochs = 50;
    double base_lr = 1.0;
    double lr_decay = 0.75;
    double init_scale = 0.10;
    double max_grad_norm = 5.0;
    double dropout = 0.20;
    double forget_bias = 0.10;
    bool peepholes = false;
    uint64_t seed = 42;
    bool shuffle_traces = false;
    int folds = 10;
};

/// Stepped decay schedule: base_lr for the first full_lr_epochs epochs,
/// then base_lr * lr_decay^(epoch - full_lr_epochs). Epochs are 1-based.
double learning_rate(int epoch, const TrainingConfig& cfg);

/// Token streams cut into batch_size contiguous segments for parallel
/// windowed training. Targets are the inputs' aligned next-token stream:
/// the token following each position in the concatenated target stream,
/// with the final position wrapping to the stream start.
struct BatchStream {
    std::vector<int> inputs;   // batch_size * segment_len, segment-major
    std::vector<int> targets;  // aligned with inputs
    int batch_size = 0;
    int segment_len = 0;

    int windows(int unroll_steps) const { return segment_len / unroll_steps; }

    /// Fills timestep-major window w: out[t*batch + b] for t in [0, unroll).
    void window(int w, int unroll_steps, std::vector<int>& inputs_out,
                std::vector<int>& targets_out) const;
};

/// Concatenates per-trace id streams and cuts them into batch_size segments
/// of equal length (the remainder is dropped). input and target streams must
/// be position-aligned; pass the same container twice when they coincide.
/// Throws Error when the stream is too short for even one window.
BatchStream make_stream(const std::vector<std::vector<int>>& input_traces,
                        const std::vector<std::vector<int>>& target_traces, int batch_size,
                        int unroll_steps);

struct PrecisionOptions {
    bool reset_state_per_trace = false;
    int unknown_id = -1;  // predictions of this id never count as correct
};

/// Fraction of positions whose argmax next-token prediction matches the
/// aligned target. The network is run as a single stream (batch 1, no
/// dropout) with state carried across trace boundaries unless reset
/// per trace is requested; the final position's target wraps to the
/// stream start, so every position yields exactly one scored prediction.
double precision(const NetworkParams& params,
                 const std::vector<std::vector<int>>& input_traces,
                 const std::vector<std::vector<int>>& target_traces,
                 const PrecisionOptions& opts = {});

struct EpochPoint {
    int epoch = 0;
    double train_precision = 0.0;
    double val_precision = 0.0;
    bool has_val = false;
};

struct TrainOptions {
    /// Evaluate precision after every epoch (clean pass, dropout off).
    bool track_curve = true;
    /// Optional held-out streams evaluated alongside the training ones.
    const std::vector<std::vector<int>>* val_input_traces = nullptr;
    const std::vector<std::vector<int>>* val_target_traces = nullptr;
    int unknown_id = -1;
};

struct TrainResult {
    NetworkParams params;
    std::vector<EpochPoint> curve;  // empty unless track_curve
    double final_loss = 0.0;        // mean window loss of the last epoch
};

/// Trains a fresh network with plain SGD on mean cross-entropy: truncated
/// backpropagation over unroll_steps windows, gradient clipping by global
/// norm, inverted dropout on the non-recurrent connections, recurrent state
/// carried across windows within an epoch and reset at each epoch start.
/// Throws Error if the loss turns non-finite (divergence).
TrainResult train(const std::vector<std::vector<int>>& input_traces,
                  const std::vector<std::vector<int>>& target_traces, int vocab_in, int vocab_out,
                  const TrainingConfig& cfg, const TrainOptions& opts = {});

/// Cross-validation summary. Standard deviations are sample deviations
/// over the folds.
struct EvalReport {
    std::vector<double> train_precision;
    std::vector<double> val_precision;
    double train_mean = 0.0, train_sd = 0.0;
    double val_mean = 0.0, val_sd = 0.0;
    int folds = 0;
};

/// k-fold cross-validation over traces: contiguous fold partitions (after an
/// optional seeded shuffle), per-fold vocabularies built from the training
/// traces only with out-of-vocabulary validation tokens mapped to the
/// unknown sentinel. jobs > 1 trains folds in parallel threads; results are
/// identical regardless of jobs.
EvalReport cross_validate(const EventLog& log, const TokenSchema& schema,
                          const TrainingConfig& cfg, int jobs = 1);

}  // namespace procrnn
