#include "procrnn/lstm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "procrnn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace procrnn {

namespace {

std::vector<double> init_vector(Rng& rng, int len, double scale) {
    std::vector<double> v(len);
    for (double& x : v) x = rng.uniform_signed(scale);
    return v;
}

// z = b (broadcast over columns) + sum over parts of W_part * U_part, where
// W is m x (parts * m) and each U is m x B. The accumulation order (bias
// first, then parts in order with k ascending) is fixed so that batched and
// single-sample evaluation produce bit-identical results.
void gate_preactivation(const Matrix& w, const std::vector<const Matrix*>& parts,
                        const std::vector<double>& b, Matrix& z) {
    const int m = w.rows;
    const int batch = parts[0]->cols;
    for (int r = 0; r < m; ++r) {
        double* zr = z.row(r);
        for (int j = 0; j < batch; ++j) zr[j] = b[r];
        const double* wr = w.row(r);
        int offset = 0;
        for (const Matrix* u : parts) {
            for (int k = 0; k < m; ++k) {
                const double wv = wr[offset + k];
                const double* uk = u->row(k);
                for (int j = 0; j < batch; ++j) zr[j] += wv * uk[j];
            }
            offset += m;
        }
    }
}

void sigmoid_inplace_matrix(Matrix& z) {
    for (double& v : z.data) v = sigmoid(v);
}

void tanh_inplace_matrix(Matrix& z) {
    for (double& v : z.data) v = std::tanh(v);
}

// out(k, j) += sum_r w(r, col_offset + k) * d(r, j)
void add_wt_times(const Matrix& w, int col_offset, const Matrix& d, Matrix& out) {
    const int m = out.rows;
    const int batch = d.cols;
    for (int r = 0; r < d.rows; ++r) {
        const double* wr = w.row(r);
        const double* dr = d.row(r);
        for (int k = 0; k < m; ++k) {
            const double wv = wr[col_offset + k];
            double* ok = out.row(k);
            for (int j = 0; j < batch; ++j) ok[j] += wv * dr[j];
        }
    }
}

// dw(r, col_offset + k) += sum_j d(r, j) * u(k, j)
void add_outer(const Matrix& d, const Matrix& u, int col_offset, Matrix& dw) {
    const int batch = d.cols;
    for (int r = 0; r < d.rows; ++r) {
        const double* dr = d.row(r);
        double* dwr = dw.row(r);
        for (int k = 0; k < u.rows; ++k) {
            const double* uk = u.row(k);
            double acc = 0.0;
            for (int j = 0; j < batch; ++j) acc += dr[j] * uk[j];
            dwr[col_offset + k] += acc;
        }
    }
}

}  // namespace

LayerParams LayerParams::init(Rng& rng, int hidden, bool peepholes, double scale,
                              double forget_bias) {
    if (hidden <= 0) throw Error("layer init: hidden size must be positive");
    const int gate_width = (peepholes ? 3 : 2) * hidden;
    LayerParams p;
    p.peepholes = peepholes;
    p.w_f = init_uniform(rng, hidden, gate_width, scale);
    p.w_i = init_uniform(rng, hidden, gate_width, scale);
    p.w_c = init_uniform(rng, hidden, 2 * hidden, scale);
    p.w_o = init_uniform(rng, hidden, gate_width, scale);
    p.b_f = init_vector(rng, hidden, scale);
    p.b_i = init_vector(rng, hidden, scale);
    p.b_c = init_vector(rng, hidden, scale);
    p.b_o = init_vector(rng, hidden, scale);
    // Bias the forget gate towards remembering at the start of training.
    for (double& v : p.b_f) v += forget_bias;
    return p;
}

CellState cell_forward(const LayerParams& params, const CellState& state_in,
                       std::span<const double> x, CellTrace* trace) {
    const int m = params.hidden_size();
    if (static_cast<int>(x.size()) != m ||
        static_cast<int>(state_in.c.size()) != m ||
        static_cast<int>(state_in.h.size()) != m)
        throw Error("cell_forward: input/state size does not match hidden size");

    // Preactivation with the same accumulation order as the batched path:
    // bias, then each concatenated block with ascending index.
    const auto preact = [&](const Matrix& w, bool peek_c, const std::vector<double>& c_part,
                            const std::vector<double>& b, int row) {
        double acc = b[row];
        const double* wr = w.row(row);
        int offset = 0;
        if (params.peepholes && peek_c) {
            for (int k = 0; k < m; ++k) acc += wr[k] * c_part[k];
            offset = m;
        }
        for (int k = 0; k < m; ++k) acc += wr[offset + k] * state_in.h[k];
        offset += m;
        for (int k = 0; k < m; ++k) acc += wr[offset + k] * x[k];
        return acc;
    };

    CellState out;
    out.c.resize(m);
    out.h.resize(m);
    std::vector<double> f(m), i(m), cbar(m), o(m), tanh_c(m);

    for (int r = 0; r < m; ++r) {
        f[r] = sigmoid(preact(params.w_f, true, state_in.c, params.b_f, r));
        i[r] = sigmoid(preact(params.w_i, true, state_in.c, params.b_i, r));
        cbar[r] = std::tanh(preact(params.w_c, false, state_in.c, params.b_c, r));
        out.c[r] = f[r] * state_in.c[r] + i[r] * cbar[r];
    }
    for (int r = 0; r < m; ++r) {
        // The output gate peeks at the freshly computed cell state.
        o[r] = sigmoid(preact(params.w_o, true, out.c, params.b_o, r));
        tanh_c[r] = std::tanh(out.c[r]);
        out.h[r] = o[r] * tanh_c[r];
    }

    if (trace) *trace = CellTrace{std::move(f), std::move(i), std::move(cbar), std::move(o),
                                  std::move(tanh_c)};
    return out;
}

NetworkParams NetworkParams::init(Rng& rng, int vocab_in, int vocab_out, int hidden,
                                  bool peepholes, double scale, double forget_bias) {
    if (vocab_in <= 0 || vocab_out <= 0 || hidden <= 0)
        throw Error("network init: dimensions must be positive");
    NetworkParams p;
    p.peepholes = peepholes;
    p.embedding = init_uniform(rng, vocab_in, hidden, scale);
    p.layers.push_back(LayerParams::init(rng, hidden, peepholes, scale, forget_bias));
    p.layers.push_back(LayerParams::init(rng, hidden, peepholes, scale, forget_bias));
    p.out_w = init_uniform(rng, vocab_out, hidden, scale);
    p.out_b = init_vector(rng, vocab_out, scale);
    return p;
}

NetworkParams NetworkParams::zeros_like() const {
    NetworkParams g = *this;
    g.zero();
    return g;
}

void NetworkParams::zero() {
    for (auto s : param_spans()) std::fill(s.begin(), s.end(), 0.0);
}

std::vector<std::span<double>> NetworkParams::param_spans() {
    std::vector<std::span<double>> spans;
    spans.emplace_back(embedding.data);
    for (auto& layer : layers) {
        spans.emplace_back(layer.w_f.data);
        spans.emplace_back(layer.w_i.data);
        spans.emplace_back(layer.w_c.data);
        spans.emplace_back(layer.w_o.data);
        spans.emplace_back(layer.b_f);
        spans.emplace_back(layer.b_i);
        spans.emplace_back(layer.b_c);
        spans.emplace_back(layer.b_o);
    }
    spans.emplace_back(out_w.data);
    spans.emplace_back(out_b);
    return spans;
}

std::vector<std::span<const double>> NetworkParams::param_spans() const {
    auto mutable_spans = const_cast<NetworkParams*>(this)->param_spans();
    return {mutable_spans.begin(), mutable_spans.end()};
}

NetworkState NetworkState::zeros(int hidden, int batch, int num_layers) {
    NetworkState s;
    for (int l = 0; l < num_layers; ++l) {
        s.c.emplace_back(hidden, batch);
        s.h.emplace_back(hidden, batch);
    }
    return s;
}

DropoutMasks DropoutMasks::make(Rng& rng, int t_steps, int hidden, int batch, double p_drop) {
    DropoutMasks masks;
    const auto draw = [&] {
        Matrix m(hidden, batch);
        m.data = dropout_mask(rng, hidden * batch, p_drop);
        return m;
    };
    for (int t = 0; t < t_steps; ++t) {
        masks.embed.push_back(draw());
        masks.between.push_back(draw());
        masks.top.push_back(draw());
    }
    return masks;
}

Activations forward_unrolled(const NetworkParams& params, NetworkState& state,
                             std::span<const int> input_ids, int t_steps, int batch,
                             const DropoutMasks* masks) {
    const int m = params.hidden_size();
    const int v_out = params.vocab_out();
    if (params.layers.size() != 2) throw Error("forward: expected exactly 2 recurrent layers");
    if (t_steps <= 0 || batch <= 0) throw Error("forward: t_steps and batch must be positive");
    if (static_cast<int>(input_ids.size()) != t_steps * batch)
        throw Error("forward: input_ids must hold t_steps*batch ids");
    if (state.c.size() != 2 || state.c[0].rows != m || state.c[0].cols != batch)
        throw Error("forward: state shape does not match network");
    if (masks && static_cast<int>(masks->embed.size()) < t_steps)
        throw Error("forward: dropout masks cover fewer steps than the window");

    Activations acts;
    acts.t_steps = t_steps;
    acts.batch = batch;
    acts.hidden = m;
    acts.vocab_out = v_out;
    acts.input_ids.assign(input_ids.begin(), input_ids.end());
    acts.initial = state;
    acts.steps.resize(t_steps);

    Matrix zf(m, batch), zi(m, batch), zc(m, batch), zo(m, batch);

    for (int t = 0; t < t_steps; ++t) {
        StepActivations& step = acts.steps[t];

        // Embedding lookup, transposed into column-per-sample layout.
        Matrix x(m, batch);
        for (int j = 0; j < batch; ++j) {
            const int id = input_ids[t * batch + j];
            if (id < 0 || id >= params.vocab_in())
                throw Error("forward: input id " + std::to_string(id) +
                            " out of range for vocabulary of " +
                            std::to_string(params.vocab_in()));
            const double* e = params.embedding.row(id);
            for (int r = 0; r < m; ++r) x(r, j) = e[r];
        }
        if (masks)
            for (size_t k = 0; k < x.data.size(); ++k) x.data[k] *= masks->embed[t].data[k];

        for (int l = 0; l < 2; ++l) {
            const LayerParams& lp = params.layers[l];
            StepActivations::Layer& la = step.layer[l];
            la.x = std::move(x);
            Matrix& c_prev = state.c[l];
            Matrix& h_prev = state.h[l];

            std::vector<const Matrix*> gate_in;
            if (params.peepholes) gate_in = {&c_prev, &h_prev, &la.x};
            else gate_in = {&h_prev, &la.x};

            gate_preactivation(lp.w_f, gate_in, lp.b_f, zf);
            gate_preactivation(lp.w_i, gate_in, lp.b_i, zi);
            gate_preactivation(lp.w_c, {&h_prev, &la.x}, lp.b_c, zc);
            sigmoid_inplace_matrix(zf);
            sigmoid_inplace_matrix(zi);
            tanh_inplace_matrix(zc);
            la.f = zf;
            la.i = zi;
            la.cbar = zc;

            la.c = Matrix(m, batch);
            for (size_t k = 0; k < la.c.data.size(); ++k)
                la.c.data[k] = la.f.data[k] * c_prev.data[k] + la.i.data[k] * la.cbar.data[k];

            std::vector<const Matrix*> o_in;
            if (params.peepholes) o_in = {&la.c, &h_prev, &la.x};  // peeks at current cell
            else o_in = {&h_prev, &la.x};
            gate_preactivation(lp.w_o, o_in, lp.b_o, zo);
            sigmoid_inplace_matrix(zo);
            la.o = zo;

            la.tanh_c = la.c;
            tanh_inplace_matrix(la.tanh_c);
            la.h = Matrix(m, batch);
            for (size_t k = 0; k < la.h.data.size(); ++k)
                la.h.data[k] = la.o.data[k] * la.tanh_c.data[k];

            state.c[l] = la.c;
            state.h[l] = la.h;

            x = la.h;  // input of the next layer (or the projection)
            if (masks) {
                const Matrix& mask = (l == 0) ? masks->between[t] : masks->top[t];
                for (size_t k = 0; k < x.data.size(); ++k) x.data[k] *= mask.data[k];
            }
        }
        step.top_dropped = std::move(x);
        x = Matrix();

        // Output projection and per-column softmax.
        step.probs = Matrix(v_out, batch);
        for (int r = 0; r < v_out; ++r) {
            double* pr = step.probs.row(r);
            const double* wr = params.out_w.row(r);
            for (int j = 0; j < batch; ++j) pr[j] = params.out_b[r];
            for (int k = 0; k < m; ++k) {
                const double wv = wr[k];
                const double* hk = step.top_dropped.row(k);
                for (int j = 0; j < batch; ++j) pr[j] += wv * hk[j];
            }
        }
        for (int j = 0; j < batch; ++j) {
            double mx = step.probs(0, j);
            for (int r = 1; r < v_out; ++r) mx = std::max(mx, step.probs(r, j));
            double sum = 0.0;
            for (int r = 0; r < v_out; ++r) {
                double& p = step.probs(r, j);
                p = std::exp(p - mx);
                sum += p;
            }
            for (int r = 0; r < v_out; ++r) step.probs(r, j) /= sum;
        }
    }
    return acts;
}

double window_loss(const Activations& acts, std::span<const int> target_ids) {
    if (static_cast<int>(target_ids.size()) != acts.t_steps * acts.batch)
        throw Error("window_loss: target_ids must hold t_steps*batch ids");
    double sum = 0.0;
    for (int t = 0; t < acts.t_steps; ++t) {
        const Matrix& probs = acts.steps[t].probs;
        for (int j = 0; j < acts.batch; ++j) {
            const int target = target_ids[t * acts.batch + j];
            if (target < 0 || target >= acts.vocab_out)
                throw Error("window_loss: target id out of range");
            sum += -std::log(std::max(probs(target, j), 1e-12));
        }
    }
    return sum / (static_cast<double>(acts.t_steps) * acts.batch);
}

double backward_unrolled(const NetworkParams& params, const Activations& acts,
                         std::span<const int> target_ids, const DropoutMasks* masks,
                         NetworkParams& grads) {
    const int m = acts.hidden;
    const int batch = acts.batch;
    const int t_steps = acts.t_steps;
    const int v_out = acts.vocab_out;
    const double loss = window_loss(acts, target_ids);
    const double inv_n = 1.0 / (static_cast<double>(t_steps) * batch);

    std::array<Matrix, 2> dh_next{Matrix(m, batch), Matrix(m, batch)};
    std::array<Matrix, 2> dc_next{Matrix(m, batch), Matrix(m, batch)};

    Matrix dlogits(v_out, batch), dtop(m, batch), dh(m, batch), dc(m, batch);
    Matrix dzf(m, batch), dzi(m, batch), dzc(m, batch), dzo(m, batch), dx(m, batch);

    for (int t = t_steps - 1; t >= 0; --t) {
        const StepActivations& step = acts.steps[t];

        // d(mean CE)/d(logits) = (probs - onehot) / (T*B)
        for (int r = 0; r < v_out; ++r)
            for (int j = 0; j < batch; ++j) dlogits(r, j) = step.probs(r, j) * inv_n;
        for (int j = 0; j < batch; ++j)
            dlogits(target_ids[t * batch + j], j) -= inv_n;

        add_outer(dlogits, step.top_dropped, 0, grads.out_w);
        for (int r = 0; r < v_out; ++r) {
            const double* dr = dlogits.row(r);
            double acc = 0.0;
            for (int j = 0; j < batch; ++j) acc += dr[j];
            grads.out_b[r] += acc;
        }
        dtop.fill(0.0);
        add_wt_times(params.out_w, 0, dlogits, dtop);

        // Walk the two layers top-down; dx of a layer feeds the one below.
        for (int l = 1; l >= 0; --l) {
            const StepActivations::Layer& la = step.layer[l];
            const LayerParams& lp = params.layers[l];
            LayerParams& lg = grads.layers[l];
            const Matrix& c_prev = (t > 0) ? acts.steps[t - 1].layer[l].c : acts.initial.c[l];
            const Matrix& h_prev = (t > 0) ? acts.steps[t - 1].layer[l].h : acts.initial.h[l];

            // Gradient reaching this layer's hidden output.
            if (l == 1) {
                for (size_t k = 0; k < dh.data.size(); ++k) {
                    const double mask = masks ? masks->top[t].data[k] : 1.0;
                    dh.data[k] = dtop.data[k] * mask + dh_next[1].data[k];
                }
            } else {
                for (size_t k = 0; k < dh.data.size(); ++k) {
                    const double mask = masks ? masks->between[t].data[k] : 1.0;
                    dh.data[k] = dx.data[k] * mask + dh_next[0].data[k];
                }
            }

            for (size_t k = 0; k < dc.data.size(); ++k) {
                const double o = la.o.data[k];
                const double th = la.tanh_c.data[k];
                dzo.data[k] = dh.data[k] * th * o * (1.0 - o);
                dc.data[k] = dh.data[k] * o * (1.0 - th * th) + dc_next[l].data[k];
            }
            if (params.peepholes) add_wt_times(lp.w_o, 0, dzo, dc);

            for (size_t k = 0; k < dc.data.size(); ++k) {
                const double f = la.f.data[k];
                const double i = la.i.data[k];
                const double cb = la.cbar.data[k];
                dzf.data[k] = dc.data[k] * c_prev.data[k] * f * (1.0 - f);
                dzi.data[k] = dc.data[k] * cb * i * (1.0 - i);
                dzc.data[k] = dc.data[k] * i * (1.0 - cb * cb);
            }

            // Cell-state gradient flowing to the previous step.
            dc_next[l].fill(0.0);
            for (size_t k = 0; k < dc.data.size(); ++k)
                dc_next[l].data[k] = dc.data[k] * la.f.data[k];
            if (params.peepholes) {
                add_wt_times(lp.w_f, 0, dzf, dc_next[l]);
                add_wt_times(lp.w_i, 0, dzi, dc_next[l]);
            }

            // Parameter gradients. Block offsets inside the concatenated
            // gate input: [c?, h_prev, x].
            const int h_off = params.peepholes ? m : 0;
            const int x_off = h_off + m;
            if (params.peepholes) {
                add_outer(dzf, c_prev, 0, lg.w_f);
                add_outer(dzi, c_prev, 0, lg.w_i);
                add_outer(dzo, la.c, 0, lg.w_o);
            }
            add_outer(dzf, h_prev, h_off, lg.w_f);
            add_outer(dzf, la.x, x_off, lg.w_f);
            add_outer(dzi, h_prev, h_off, lg.w_i);
            add_outer(dzi, la.x, x_off, lg.w_i);
            add_outer(dzc, h_prev, 0, lg.w_c);
            add_outer(dzc, la.x, m, lg.w_c);
            add_outer(dzo, h_prev, h_off, lg.w_o);
            add_outer(dzo, la.x, x_off, lg.w_o);
            for (int r = 0; r < m; ++r) {
                double af = 0.0, ai = 0.0, ac = 0.0, ao = 0.0;
                for (int j = 0; j < batch; ++j) {
                    af += dzf(r, j);
                    ai += dzi(r, j);
                    ac += dzc(r, j);
                    ao += dzo(r, j);
                }
                lg.b_f[r] += af;
                lg.b_i[r] += ai;
                lg.b_c[r] += ac;
                lg.b_o[r] += ao;
            }

            // Recurrent gradient to the previous step's hidden state.
            dh_next[l].fill(0.0);
            add_wt_times(lp.w_f, h_off, dzf, dh_next[l]);
            add_wt_times(lp.w_i, h_off, dzi, dh_next[l]);
            add_wt_times(lp.w_c, 0, dzc, dh_next[l]);
            add_wt_times(lp.w_o, h_off, dzo, dh_next[l]);

            // Gradient to this layer's input.
            dx.fill(0.0);
            add_wt_times(lp.w_f, x_off, dzf, dx);
            add_wt_times(lp.w_i, x_off, dzi, dx);
            add_wt_times(lp.w_c, m, dzc, dx);
            add_wt_times(lp.w_o, x_off, dzo, dx);
        }

        // dx now holds the gradient at the embedding output; scatter it into
        // the embedding rows through the embedding dropout mask.
        for (int j = 0; j < batch; ++j) {
            const int id = acts.input_ids[t * batch + j];
            double* er = grads.embedding.row(id);
            for (int r = 0; r < m; ++r) {
                const double mask = masks ? masks->embed[t](r, j) : 1.0;
                er[r] += dx(r, j) * mask;
            }
        }
    }
    return loss;
}

void export_states(const Activations& acts, std::ostream& out) {
    if (acts.batch != 1) throw Error("export_states: requires batch == 1");
    for (int t = 0; t < acts.t_steps; ++t) {
        for (int l = 0; l < 2; ++l) {
            const StepActivations::Layer& la = acts.steps[t].layer[l];
            nlohmann::ordered_json line;
            line["step"] = t;
            line["layer"] = l;
            line["h"] = la.h.data;
            line["c"] = la.c.data;
            out << line.dump() << '\n';
        }
    }
    if (!out) throw IoError("export_states: failed to write output");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'R', 'N', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    if (!in) throw Error(std::string("checkpoint: truncated while reading ") + what);
    return value;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, const std::string& metadata_json,
                     std::ostream& out) {
    nlohmann::ordered_json header;
    header["hidden"] = params.hidden_size();
    header["vocab_in"] = params.vocab_in();
    header["vocab_out"] = params.vocab_out();
    header["peepholes"] = params.peepholes;
    header["layers"] = static_cast<int>(params.layers.size());
    if (metadata_json.empty()) {
        header["metadata"] = nullptr;
    } else {
        try {
            header["metadata"] = nlohmann::ordered_json::parse(metadata_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(std::string("checkpoint: metadata is not valid JSON: ") + e.what());
        }
    }
    const std::string header_text = header.dump();

    out.write(kMagic, sizeof(kMagic));
    write_le(out, kVersion);
    write_le(out, static_cast<uint64_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto span : params.param_spans())
        out.write(reinterpret_cast<const char*>(span.data()),
                  static_cast<std::streamsize>(span.size() * sizeof(double)));
    if (!out) throw IoError("checkpoint: failed to write output");
}

Checkpoint load_checkpoint(std::istream& in) {
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("checkpoint: bad magic, not a checkpoint file");
    const auto version = read_le<uint32_t>(in, "version");
    if (version != kVersion)
        throw Error("checkpoint: unsupported format version " + std::to_string(version));
    const auto header_len = read_le<uint64_t>(in, "header length");
    if (header_len == 0 || header_len > 100'000'000)
        throw Error("checkpoint: implausible header length");

    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw Error("checkpoint: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("checkpoint: bad header JSON: ") + e.what());
    }

    const int hidden = header.at("hidden").get<int>();
    const int vocab_in = header.at("vocab_in").get<int>();
    const int vocab_out = header.at("vocab_out").get<int>();
    const bool peepholes = header.at("peepholes").get<bool>();
    const int layers = header.at("layers").get<int>();
    if (hidden <= 0 || vocab_in <= 0 || vocab_out <= 0)
        throw Error("checkpoint: non-positive dimensions in header");
    if (layers != 2) throw Error("checkpoint: expected 2 recurrent layers, header says " +
                                 std::to_string(layers));

    Checkpoint ckpt;
    // Build a zeroed parameter set of the right shape, then fill it in the
    // serialization order. A throwaway generator provides the shape only.
    Rng shape_rng(0);
    ckpt.params = NetworkParams::init(shape_rng, vocab_in, vocab_out, hidden, peepholes, 0.0, 0.0);
    for (auto span : ckpt.params.param_spans()) {
        in.read(reinterpret_cast<char*>(span.data()),
                static_cast<std::streamsize>(span.size() * sizeof(double)));
        if (!in) throw Error("checkpoint: truncated parameter data");
    }
    in.peek();
    if (!in.eof()) throw Error("checkpoint: trailing bytes after parameter data");

    if (header.contains("metadata") && !header.at("metadata").is_null())
        ckpt.metadata_json = header.at("metadata").dump();
    return ckpt;
}

}  // namespace procrnn
