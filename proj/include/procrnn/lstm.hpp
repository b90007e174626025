#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "procrnn/nncore.hpp"

namespace procrnn {

/// Weights of one recurrent cell layer with hidden width m. Gate inputs are
/// the concatenation [h_prev, x] (both length m), or with peepholes enabled
/// [c, h_prev, x] for the forget/input/output gates — the output gate peeks
/// at the current cell state, the other two at the previous one. The
/// candidate weights always take [h_prev, x].
struct LayerParams {
    Matrix w_f, w_i, w_c, w_o;  // m x 2m, or m x 3m for f/i/o with peepholes
    std::vector<double> b_f, b_i, b_c, b_o;  // length m
    bool peepholes = false;

    int hidden_size() const { return w_c.rows; }

    static LayerParams init(Rng& rng, int hidden, bool peepholes, double scale,
                            double forget_bias);
};

/// Recurrent state of one layer for a single sample.
struct CellState {
    std::vector<double> c, h;

    static CellState zeros(int hidden) { return {std::vector<double>(hidden, 0.0),
                                                 std::vector<double>(hidden, 0.0)}; }
};

/// Gate activations of one cell step (single sample), exposed for tests.
struct CellTrace {
    std::vector<double> f, i, cbar, o, tanh_c;
};

/// One step of the cell for a single sample. Writes the updated state and,
/// when trace is non-null, the gate activations.
CellState cell_forward(const LayerParams& params, const CellState& state_in,
                       std::span<const double> x, CellTrace* trace = nullptr);

/// Full next-token network: trainable input embedding, two stacked recurrent
/// layers of the same width, and a linear projection to output-class logits.
struct NetworkParams {
    Matrix embedding;                 // vocab_in x hidden
    std::vector<LayerParams> layers;  // always 2
    Matrix out_w;                     // vocab_out x hidden
    std::vector<double> out_b;        // vocab_out
    bool peepholes = false;

    int hidden_size() const { return embedding.cols; }
    int vocab_in() const { return embedding.rows; }
    int vocab_out() const { return out_w.rows; }

    static NetworkParams init(Rng& rng, int vocab_in, int vocab_out, int hidden, bool peepholes,
                              double scale, double forget_bias);

    /// Zero-valued parameter set of the same shape (gradient accumulator).
    NetworkParams zeros_like() const;
    void zero();

    /// Mutable views over every trainable array, in a fixed order (used for
    /// clipping, the optimizer step and serialization).
    std::vector<std::span<double>> param_spans();
    std::vector<std::span<const double>> param_spans() const;
};

/// Batched recurrent state: one (c, h) pair of m x B matrices per layer.
struct NetworkState {
    std::vector<Matrix> c, h;  // per layer

    static NetworkState zeros(int hidden, int batch, int num_layers = 2);
};

/// Per-timestep dropout masks (inverted scaling) for the three
/// non-recurrent sites: embedding output, between the layers, and before
/// the output projection. Each matrix is m x B.
struct DropoutMasks {
    std::vector<Matrix> embed, between, top;  // each of length T

    static DropoutMasks make(Rng& rng, int t_steps, int hidden, int batch, double p_drop);
};

/// Everything the backward pass needs from one timestep.
struct StepActivations {
    struct Layer {
        Matrix x;  // layer input after dropout, m x B
        Matrix f, i, cbar, o, c, tanh_c, h;  // gate/state values, m x B
    };
    std::array<Layer, 2> layer;
    Matrix top_dropped;  // second layer output after dropout, m x B
    Matrix probs;        // vocab_out x B
};

struct Activations {
    int t_steps = 0, batch = 0, hidden = 0, vocab_out = 0;
    std::vector<int> input_ids;       // t_steps * batch, timestep-major
    NetworkState initial;             // states before step 0 (for backward)
    std::vector<StepActivations> steps;
};

/// Runs the network over a window of t_steps timesteps for a batch of
/// parallel streams. input_ids[t*batch + b] is the input token of stream b
/// at step t. The state is consumed and replaced with the post-window state
/// (values carry across windows; gradients never do). masks == nullptr
/// disables dropout (evaluation mode).
Activations forward_unrolled(const NetworkParams& params, NetworkState& state,
                             std::span<const int> input_ids, int t_steps, int batch,
                             const DropoutMasks* masks = nullptr);

/// Mean cross-entropy over all t_steps * batch predictions.
double window_loss(const Activations& acts, std::span<const int> target_ids);

/// Backpropagation through the unrolled window. Accumulates parameter
/// gradients of the mean cross-entropy into grads (which must have the same
/// shape as params and be zeroed by the caller) and returns the loss. When
/// the window was run with dropout, pass the same masks.
double backward_unrolled(const NetworkParams& params, const Activations& acts,
                         std::span<const int> target_ids, const DropoutMasks* masks,
                         NetworkParams& grads);

/// Writes per-step hidden and cell state vectors as JSON lines
/// {"step":t,"layer":l,"h":[...],"c":[...]}. Requires batch == 1.
void export_states(const Activations& acts, std::ostream& out);

/// Versioned binary checkpoint: magic, format version, a JSON header with
/// dimensions plus an arbitrary metadata object, then raw little-endian
/// doubles. Loading validates magic, version and dimension consistency.
void save_checkpoint(const NetworkParams& params, const std::string& metadata_json,
                     std::ostream& out);
struct Checkpoint {
    NetworkParams params;
    std::string metadata_json;
};
Checkpoint load_checkpoint(std::istream& in);

}  // namespace procrnn
