#include "procrnn/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "procrnn/analytics.hpp"
#include "procrnn/errors.hpp"
#include "procrnn/eventlog.hpp"
#include "procrnn/inference.hpp"
#include "procrnn/lstm.hpp"
#include "procrnn/training.hpp"
#include "procrnn/vocab.hpp"

namespace procrnn {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Operator mistakes that are not CLI11 parse errors (bad file combinations,
/// mismatched artifacts). Mapped to exit code 2 like other usage problems.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what) {}
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct DataOptions {
    std::string path;
    std::string format = "auto";  // auto | xes | csv
};

struct SchemaOptions {
    bool lifecycle = false;
    std::string resource_mode = "none";       // none | predictor | both
    std::string resource_field = "resource";  // resource | group
    std::string separator = "---";
    std::string eoc = "[EOC]";
    bool durations = false;
    double quantum_minutes = 1.0;
};

struct TrainingOptions {
    TrainingConfig cfg;
};

void add_data_flags(CLI::App* cmd, DataOptions& opts) {
    cmd->add_option("--data", opts.path, "Event log file (XES or CSV)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--format", opts.format, "Input format (default: by file extension)")
        ->check(CLI::IsMember({"auto", "xes", "csv"}));
}

void add_schema_flags(CLI::App* cmd, SchemaOptions& opts) {
    cmd->add_flag("--lifecycle", opts.lifecycle, "Append the lifecycle transition to each token");
    cmd->add_option("--resource-mode", opts.resource_mode,
                    "Role of the organizational attribute: none, predictor (input-only), both")
        ->check(CLI::IsMember({"none", "predictor", "both"}));
    cmd->add_option("--resource-field", opts.resource_field,
                    "Which organizational attribute to use")
        ->check(CLI::IsMember({"resource", "group"}));
    cmd->add_option("--separator", opts.separator, "Separator between token components");
    cmd->add_option("--eoc", opts.eoc, "End-of-case token");
    cmd->add_flag("--durations", opts.durations,
                  "Encode activity durations (Start/Complete pairs) as repeated tokens");
    cmd->add_option("--quantum-minutes", opts.quantum_minutes,
                    "Duration quantum in minutes for --durations")
        ->check(CLI::PositiveNumber);
}

void add_training_flags(CLI::App* cmd, TrainingConfig& cfg) {
    cmd->add_option("--hidden", cfg.hidden_size, "Hidden/embedding width")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--unroll", cfg.unroll_steps, "Timesteps per training window")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--batch", cfg.batch_size, "Parallel stream segments")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--full-lr-epochs", cfg.full_lr_epochs,
                    "Epochs before the learning-rate decay starts");
    cmd->add_option("--lr", cfg.base_lr, "Base learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--lr-decay", cfg.lr_decay, "Per-epoch decay factor after --full-lr-epochs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--init-scale", cfg.init_scale, "Uniform init range half-width");
    cmd->add_option("--clip-norm", cfg.max_grad_norm, "Global gradient-norm clip")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--dropout", cfg.dropout, "Drop probability on non-recurrent connections");
    cmd->add_option("--forget-bias", cfg.forget_bias, "Constant added to the forget-gate bias");
    cmd->add_flag("--peepholes", cfg.peepholes, "Let gates see the cell state");
    cmd->add_option("--seed", cfg.seed, "Master random seed");
}

TokenSchema to_schema(const SchemaOptions& opts) {
    TokenSchema schema;
    schema.use_lifecycle = opts.lifecycle;
    if (opts.resource_mode == "predictor") schema.resource_mode = ResourceMode::PredictorOnly;
    else if (opts.resource_mode == "both") schema.resource_mode = ResourceMode::PredictorAndPredictand;
    else schema.resource_mode = ResourceMode::None;
    schema.resource_field =
        opts.resource_field == "group" ? ResourceField::Group : ResourceField::Resource;
    schema.separator = opts.separator;
    schema.eoc_token = opts.eoc;
    return schema;
}

json schema_to_json(const SchemaOptions& opts) {
    return json{{"lifecycle", opts.lifecycle},
                {"resource_mode", opts.resource_mode},
                {"resource_field", opts.resource_field},
                {"separator", opts.separator},
                {"eoc", opts.eoc},
                {"durations", opts.durations},
                {"quantum_minutes", opts.quantum_minutes}};
}

json training_to_json(const TrainingConfig& cfg) {
    return json{{"hidden", cfg.hidden_size},
                {"unroll", cfg.unroll_steps},
                {"batch", cfg.batch_size},
                {"epochs", cfg.epochs},
                {"full_lr_epochs", cfg.full_lr_epochs},
                {"lr", cfg.base_lr},
                {"lr_decay", cfg.lr_decay},
                {"init_scale", cfg.init_scale},
                {"clip_norm", cfg.max_grad_norm},
                {"dropout", cfg.dropout},
                {"forget_bias", cfg.forget_bias},
                {"peepholes", cfg.peepholes},
                {"seed", cfg.seed},
                {"shuffle", cfg.shuffle_traces},
                {"folds", cfg.folds}};
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed while reading " + path);
    return std::move(buf).str();
}

std::string hash_hex(const std::string& content) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(content.data(), content.size())));
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

/// Tracks inputs (with content hashes) and produced files, then writes the
/// manifest that makes the run reproducible: command, full resolved config,
/// input fingerprints. Deliberately contains no clock or host values.
class Manifest {
public:
    Manifest(std::string command, fs::path out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)) {
        fs::create_directories(out_dir_);
    }

    const fs::path& out_dir() const { return out_dir_; }

    void set_config(json config) { config_ = std::move(config); }

    std::string read_input(const std::string& path) {
        std::string content = read_file(path);
        inputs_[path] = hash_hex(content);
        return content;
    }

    std::ofstream create(const std::string& name) {
        outputs_.push_back(name);
        return open_output(out_dir_ / name);
    }

    void write() {
        json doc;
        doc["tool"] = "procrnn";
        doc["manifest_version"] = 1;
        doc["command"] = command_;
        doc["config"] = config_;
        doc["inputs"] = inputs_;
        doc["outputs"] = outputs_;
        auto out = open_output(out_dir_ / "manifest.json");
        out << doc.dump(2) << '\n';
        if (!out) throw IoError("failed to write manifest.json");
    }

private:
    std::string command_;
    fs::path out_dir_;
    json config_;
    json inputs_ = json::object();
    std::vector<std::string> outputs_;
};

EventLog parse_log(const DataOptions& opts, const std::string& content) {
    std::string format = opts.format;
    if (format == "auto") {
        std::string ext = fs::path(opts.path).extension().string();
        for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".xes") format = "xes";
        else if (ext == ".csv") format = "csv";
        else
            throw UsageError("cannot infer format of " + opts.path +
                             " (extension \"" + ext + "\"); pass --format xes|csv");
    }
    std::istringstream in(content);
    return format == "xes" ? parse_xes(in, opts.path) : parse_csv(in, opts.path);
}

/// Input and target token streams of a dataset under the chosen schema.
struct TokenizedLog {
    std::vector<std::vector<std::string>> inputs;
    std::vector<std::vector<std::string>> targets;
    std::vector<std::string> case_ids;
};

TokenizedLog tokenize(const EventLog& log, const SchemaOptions& opts) {
    TokenizedLog tokens;
    for (const auto& trace : log.traces) tokens.case_ids.push_back(trace.case_id);
    if (opts.durations) {
        const auto quantum_ms = static_cast<int64_t>(std::llround(opts.quantum_minutes * 60'000));
        tokens.inputs = encode_durations(log, quantum_ms, opts.eoc);
        tokens.targets = tokens.inputs;
    } else {
        EncodedLog encoded = encode(log, to_schema(opts));
        tokens.inputs = std::move(encoded.input_tokens);
        tokens.targets = std::move(encoded.target_tokens);
    }
    return tokens;
}

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string token;
    while (in >> token) out.push_back(token);
    return out;
}

Checkpoint load_checkpoint_file(const std::string& path, Manifest& manifest) {
    std::istringstream in(manifest.read_input(path));
    return load_checkpoint(in);
}

Vocabulary load_vocab_file(const std::string& path, Manifest& manifest) {
    std::istringstream in(manifest.read_input(path));
    return load_vocabulary(in);
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

struct TrainCmd {
    DataOptions data;
    SchemaOptions schema;
    TrainingConfig training;
    std::string out_dir;

    int run() const {
        Manifest manifest("train", out_dir);
        manifest.set_config(json{{"data", data.path},
                                 {"format", data.format},
                                 {"schema", schema_to_json(schema)},
                                 {"training", training_to_json(training)}});

        const EventLog log = parse_log(data, manifest.read_input(data.path));
        const TokenizedLog tokens = tokenize(log, schema);

        // The unknown sentinel is part of every trained vocabulary so that
        // later prediction on unseen data has somewhere to map new tokens.
        const Vocabulary in_vocab = with_unknown(build_vocabulary(tokens.inputs));
        const Vocabulary out_vocab = with_unknown(build_vocabulary(tokens.targets));

        std::vector<std::vector<int>> input_ids, target_ids;
        for (const auto& t : tokens.inputs) input_ids.push_back(ids(in_vocab, t));
        for (const auto& t : tokens.targets) target_ids.push_back(ids(out_vocab, t));

        TrainOptions opts;
        opts.track_curve = true;
        opts.unknown_id = out_vocab.unknown_id();
        const TrainResult result = train(input_ids, target_ids, in_vocab.size(), out_vocab.size(),
                                         training, opts);

        {
            auto out = manifest.create("checkpoint.bin");
            json meta{{"schema", schema_to_json(schema)}, {"training", training_to_json(training)}};
            save_checkpoint(result.params, meta.dump(), out);
        }
        {
            auto out = manifest.create("vocab.json");
            save_vocabulary(in_vocab, out);
        }
        const bool same_vocab = in_vocab.id_to_token == out_vocab.id_to_token;
        if (!same_vocab) {
            auto out = manifest.create("target_vocab.json");
            save_vocabulary(out_vocab, out);
        }
        {
            auto out = manifest.create("curve.csv");
            out << "epoch,train_precision,validation_precision\n";
            for (const auto& point : result.curve) {
                out << point.epoch << ',' << format_double(point.train_precision) << ',';
                if (point.has_val) out << format_double(point.val_precision);
                out << '\n';
            }
        }
        {
            // The learned embedding, one row per input token, for external
            // visualization tools.
            auto out = manifest.create("embedding.csv");
            out << "token";
            for (int c = 0; c < result.params.hidden_size(); ++c) out << ",e" << c;
            out << '\n';
            for (int r = 0; r < in_vocab.size(); ++r) {
                const std::string& token = in_vocab.id_to_token[r];
                const bool quote = token.find_first_of(",\"\r\n") != std::string::npos;
                if (quote) {
                    out << '"';
                    for (char c : token) {
                        if (c == '"') out << '"';
                        out << c;
                    }
                    out << '"';
                } else {
                    out << token;
                }
                for (int c = 0; c < result.params.hidden_size(); ++c)
                    out << ',' << format_double(result.params.embedding(r, c));
                out << '\n';
            }
        }
        manifest.write();

        const double final_precision =
            result.curve.empty() ? 0.0 : result.curve.back().train_precision;
        std::cout << "trained " << training.epochs << " epochs on "
                  << log.traces.size() << " traces (" << in_vocab.size()
                  << " input tokens); final training precision "
                  << format_double(final_precision) << "\n";
        return 0;
    }
};

struct CrossvalCmd {
    DataOptions data;
    SchemaOptions schema;
    TrainingConfig training;
    std::string out_dir;
    int jobs = 1;

    int run() const {
        if (schema.durations)
            throw UsageError("crossval does not support --durations; duration streams have no "
                             "per-trace target form distinct from inputs");
        Manifest manifest("crossval", out_dir);
        manifest.set_config(json{{"data", data.path},
                                 {"format", data.format},
                                 {"schema", schema_to_json(schema)},
                                 {"training", training_to_json(training)},
                                 {"jobs", jobs}});

        const EventLog log = parse_log(data, manifest.read_input(data.path));
        if (log.traces.size() < static_cast<size_t>(training.folds))
            throw UsageError(std::to_string(log.traces.size()) + " trace(s) cannot fill " +
                             std::to_string(training.folds) + " folds; lower --folds");
        const EvalReport report = cross_validate(log, to_schema(schema), training, jobs);

        {
            auto out = manifest.create("report.json");
            json doc{{"folds", report.folds},
                     {"train_precision", report.train_precision},
                     {"validation_precision", report.val_precision},
                     {"train_mean", report.train_mean},
                     {"train_sd", report.train_sd},
                     {"validation_mean", report.val_mean},
                     {"validation_sd", report.val_sd}};
            out << doc.dump(2) << '\n';
        }
        {
            auto out = manifest.create("folds.csv");
            out << "fold,train_precision,validation_precision\n";
            for (int k = 0; k < report.folds; ++k)
                out << (k + 1) << ',' << format_double(report.train_precision[k]) << ','
                    << format_double(report.val_precision[k]) << '\n';
        }
        manifest.write();

        std::cout << "cross-validation over " << report.folds << " folds: validation precision "
                  << format_double(report.val_mean) << " +- " << format_double(report.val_sd)
                  << "\n";
        return 0;
    }
};

struct PredictCmd {
    std::string checkpoint_path;
    std::string vocab_path;
    std::string target_vocab_path;
    std::string prefix_text;
    std::string states_path;
    std::string out_dir;
    int top = 10;

    int run() const {
        Manifest manifest("predict", out_dir);
        const Checkpoint ckpt = load_checkpoint_file(checkpoint_path, manifest);
        const Vocabulary in_vocab = load_vocab_file(vocab_path, manifest);
        const Vocabulary out_vocab =
            target_vocab_path.empty() ? in_vocab : load_vocab_file(target_vocab_path, manifest);

        if (in_vocab.size() != ckpt.params.vocab_in())
            throw UsageError("vocabulary (" + std::to_string(in_vocab.size()) +
                             " tokens) does not match checkpoint input size " +
                             std::to_string(ckpt.params.vocab_in()));
        if (out_vocab.size() != ckpt.params.vocab_out())
            throw UsageError("target vocabulary (" + std::to_string(out_vocab.size()) +
                             " tokens) does not match checkpoint output size " +
                             std::to_string(ckpt.params.vocab_out()));

        const std::vector<std::string> prefix = split_tokens(prefix_text);
        if (prefix.empty()) throw UsageError("--prefix must contain at least one token");

        manifest.set_config(json{{"checkpoint", checkpoint_path},
                                 {"vocab", vocab_path},
                                 {"target_vocab", target_vocab_path},
                                 {"prefix", prefix},
                                 {"top", top},
                                 {"states", states_path}});

        const std::vector<double> probs = predict_next(ckpt.params, in_vocab, prefix);

        std::vector<int> order(probs.size());
        for (size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (probs[a] != probs[b]) return probs[a] > probs[b];
            return a < b;
        });

        json dist = json::array();
        const int limit = std::min<int>(top, static_cast<int>(probs.size()));
        for (int k = 0; k < limit; ++k)
            dist.push_back(json{{"token", out_vocab.id_to_token[order[k]]},
                                {"p", probs[order[k]]}});
        json doc{{"prefix", prefix}, {"distribution", dist}};

        if (!states_path.empty()) {
            // Re-run the prefix through the batched forward pass (bit-equal
            // to the streaming one) to collect per-step states.
            int oov = 0;
            const std::vector<int> prefix_ids =
                in_vocab.has_unknown() ? ids_or_unknown(in_vocab, prefix, &oov)
                                       : ids(in_vocab, prefix);
            NetworkState state = NetworkState::zeros(ckpt.params.hidden_size(), 1);
            const Activations acts = forward_unrolled(ckpt.params, state, prefix_ids,
                                                      static_cast<int>(prefix_ids.size()), 1);
            auto out = manifest.create(states_path);
            export_states(acts, out);
        }
        manifest.write();

        std::cout << doc.dump(2) << '\n';
        return 0;
    }
};

struct HallucinateCmd {
    std::string checkpoint_path;
    std::string vocab_path;
    std::string seed_tokens_text;
    std::string mode = "sample";
    std::string eoc = "[EOC]";
    std::string out_dir;
    int count = 20;
    int max_len = 1000;
    bool stop_at_eoc = false;
    uint64_t seed = 42;

    int run() const {
        if (count < 0) throw UsageError("--count must be non-negative");
        Manifest manifest("hallucinate", out_dir);
        const Checkpoint ckpt = load_checkpoint_file(checkpoint_path, manifest);
        const Vocabulary vocab = load_vocab_file(vocab_path, manifest);

        if (ckpt.params.vocab_in() != ckpt.params.vocab_out())
            throw UsageError("checkpoint has distinct input/output vocabularies (" +
                             std::to_string(ckpt.params.vocab_in()) + " vs " +
                             std::to_string(ckpt.params.vocab_out()) +
                             "); self-feedback generation is not possible");
        if (vocab.size() != ckpt.params.vocab_in())
            throw UsageError("vocabulary (" + std::to_string(vocab.size()) +
                             " tokens) does not match checkpoint size " +
                             std::to_string(ckpt.params.vocab_in()));

        std::vector<std::string> seed_tokens = split_tokens(seed_tokens_text);
        if (seed_tokens.empty()) seed_tokens.push_back(vocab.id_to_token[0]);

        manifest.set_config(json{{"checkpoint", checkpoint_path},
                                 {"vocab", vocab_path},
                                 {"seed_tokens", seed_tokens},
                                 {"mode", mode},
                                 {"eoc", eoc},
                                 {"count", count},
                                 {"max_len", max_len},
                                 {"stop_at_eoc", stop_at_eoc},
                                 {"seed", seed}});

        const SampleMode sample_mode =
            mode == "argmax" ? SampleMode::Argmax : SampleMode::Sample;
        const Rng root(seed);

        auto out = manifest.create("hallucinations.txt");
        for (int k = 0; k < count; ++k) {
            Rng line_rng = root.derive(static_cast<uint64_t>(k));
            const Hallucination h =
                hallucinate(ckpt.params, vocab, seed_tokens, sample_mode, max_len, stop_at_eoc,
                            eoc, line_rng);
            bool first = true;
            for (const auto& token : h.seed) {
                if (!first) out << ' ';
                out << token;
                first = false;
            }
            for (const auto& token : h.generated) out << ' ' << token;
            out << '\n';
        }
        manifest.write();
        std::cout << "wrote " << count << " hallucination(s)\n";
        return 0;
    }
};

struct RemainderCmd {
    DataOptions data;
    SchemaOptions schema;
    std::string checkpoint_path;
    std::string vocab_path;
    std::string mode = "argmax";
    std::string out_dir;
    int prefix_len = 2;
    double cap_multiplier = 10.0;
    uint64_t seed = 42;

    int run() const {
        if (prefix_len < 1) throw UsageError("--prefix-len must be at least 1");
        if (cap_multiplier <= 0.0) throw UsageError("--cap-multiplier must be positive");

        Manifest manifest("remainder", out_dir);
        const Checkpoint ckpt = load_checkpoint_file(checkpoint_path, manifest);
        const Vocabulary vocab = load_vocab_file(vocab_path, manifest);
        if (ckpt.params.vocab_in() != ckpt.params.vocab_out())
            throw UsageError("checkpoint has distinct input/output vocabularies; remainder "
                             "prediction feeds outputs back as inputs");
        if (vocab.size() != ckpt.params.vocab_in())
            throw UsageError("vocabulary (" + std::to_string(vocab.size()) +
                             " tokens) does not match checkpoint size " +
                             std::to_string(ckpt.params.vocab_in()));

        manifest.set_config(json{{"data", data.path},
                                 {"format", data.format},
                                 {"schema", schema_to_json(schema)},
                                 {"checkpoint", checkpoint_path},
                                 {"vocab", vocab_path},
                                 {"prefix_len", prefix_len},
                                 {"mode", mode},
                                 {"cap_multiplier", cap_multiplier},
                                 {"seed", seed}});

        const EventLog log = parse_log(data, manifest.read_input(data.path));
        const TokenizedLog tokens = tokenize(log, schema);

        size_t total_tokens = 0;
        for (const auto& t : tokens.inputs) total_tokens += t.size();
        const double mean_len = static_cast<double>(total_tokens) /
                                static_cast<double>(std::max<size_t>(tokens.inputs.size(), 1));
        const int cap = static_cast<int>(std::ceil(cap_multiplier * mean_len));

        const SampleMode sample_mode =
            mode == "argmax" ? SampleMode::Argmax : SampleMode::Sample;
        const Rng root(seed);

        auto csv = manifest.create("remainder.csv");
        csv << "case_id,prefix_len,distance,capped\n";

        size_t scored = 0, skipped = 0, capped = 0;
        double dist_sum = 0.0, dist_sq_sum = 0.0;
        for (size_t k = 0; k < tokens.inputs.size(); ++k) {
            const auto& trace_tokens = tokens.inputs[k];
            if (trace_tokens.size() <= static_cast<size_t>(prefix_len)) {
                ++skipped;  // prefix would swallow the whole trace
                continue;
            }
            int oov = 0;
            if (vocab.has_unknown()) ids_or_unknown(vocab, trace_tokens, &oov);
            Rng trace_rng = root.derive(k);
            const RemainderResult r = predict_remainder(ckpt.params, vocab, trace_tokens,
                                                        prefix_len, sample_mode, cap,
                                                        schema.eoc, trace_rng);
            ++scored;
            if (r.capped) ++capped;
            dist_sum += r.distance;
            dist_sq_sum += r.distance * r.distance;
            csv << tokens.case_ids[k] << ',' << prefix_len << ','
                << format_double(r.distance) << ',' << (r.capped ? 1 : 0) << '\n';
        }

        const double mean = scored ? dist_sum / static_cast<double>(scored) : 0.0;
        double sd = 0.0;
        if (scored > 1) {
            const double var =
                (dist_sq_sum - static_cast<double>(scored) * mean * mean) /
                (static_cast<double>(scored) - 1.0);
            sd = std::sqrt(std::max(var, 0.0));
        }
        {
            auto out = manifest.create("summary.json");
            json doc{{"traces", tokens.inputs.size()},
                     {"scored", scored},
                     {"skipped", skipped},
                     {"capped", capped},
                     {"mean_distance", mean},
                     {"sd_distance", sd}};
            out << doc.dump(2) << '\n';
        }
        manifest.write();

        std::cout << "scored " << scored << " trace(s), skipped " << skipped
                  << "; mean normalized edit distance " << format_double(mean) << "\n";
        return 0;
    }
};

struct StatsCmd {
    DataOptions data;
    SchemaOptions schema;
    std::string compare_path;
    std::string out_dir;
    int d_max = 20;

    int run() const {
        if (d_max < 1) throw UsageError("--d-max must be at least 1");
        Manifest manifest("stats", out_dir);
        manifest.set_config(json{{"data", data.path},
                                 {"format", data.format},
                                 {"schema", schema_to_json(schema)},
                                 {"d_max", d_max},
                                 {"compare", compare_path}});

        const EventLog log = parse_log(data, manifest.read_input(data.path));
        const TokenizedLog tokens = tokenize(log, schema);
        const Vocabulary vocab = build_vocabulary(tokens.inputs);

        std::vector<int> stream;
        for (const auto& t : tokens.inputs) {
            const std::vector<int> trace_ids = ids(vocab, t);
            stream.insert(stream.end(), trace_ids.begin(), trace_ids.end());
        }
        if (static_cast<size_t>(d_max) >= stream.size())
            throw UsageError("--d-max " + std::to_string(d_max) +
                             " is not smaller than the token stream length " +
                             std::to_string(stream.size()));

        const MiCurve curve = mi_curve(stream, d_max);
        const DecayFit fit = fit_decay(curve.distances, curve.mi_bits);
        const ZipfResult zipf_result = zipf(stream);

        {
            auto out = manifest.create("mi.csv");
            out << "distance,mi_bits\n";
            for (size_t k = 0; k < curve.distances.size(); ++k)
                out << curve.distances[k] << ',' << format_double(curve.mi_bits[k]) << '\n';
        }
        {
            auto out = manifest.create("zipf.csv");
            out << "rank,rel_freq\n";
            for (size_t r = 0; r < zipf_result.rel_freqs.size(); ++r)
                out << (r + 1) << ',' << format_double(zipf_result.rel_freqs[r]) << '\n';
        }

        json doc;
        doc["tokens"] = stream.size();
        doc["types"] = vocab.size();
        if (fit.fitted) {
            doc["mi_fit"] = json{{"points_used", fit.points_used},
                                 {"exp_rate", fit.exp_rate},
                                 {"exp_residual", fit.exp_residual},
                                 {"power_exponent", fit.power_exponent},
                                 {"power_residual", fit.power_residual},
                                 {"better_model",
                                  fit.exp_residual <= fit.power_residual ? "exponential"
                                                                         : "power"}};
        } else {
            doc["mi_fit"] = nullptr;
            doc["mi_fit_note"] = "fewer than 3 positive mutual-information points; fit skipped";
        }
        doc["zipf_slope"] = zipf_result.slope;

        if (!compare_path.empty()) {
            const std::string content = manifest.read_input(compare_path);
            std::vector<std::string> other_tokens;
            std::string ext = fs::path(compare_path).extension().string();
            for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (ext == ".xes" || ext == ".csv") {
                DataOptions other{compare_path, ext.substr(1)};
                const TokenizedLog other_log = tokenize(parse_log(other, content), schema);
                for (const auto& t : other_log.inputs)
                    other_tokens.insert(other_tokens.end(), t.begin(), t.end());
            } else {
                other_tokens = split_tokens(content);
            }
            if (other_tokens.empty())
                throw UsageError("comparison input " + compare_path + " contains no tokens");

            // Align both samples over the reference universe in rank order.
            std::vector<double> counts_a(vocab.size(), 0.0);
            for (int k = 0; k < vocab.size(); ++k)
                counts_a[k] = static_cast<double>(vocab.counts[k]);
            std::vector<double> counts_b(vocab.size(), 0.0);
            for (const auto& token : other_tokens) {
                if (!vocab.contains(token))
                    throw UsageError("comparison token \"" + token +
                                     "\" does not occur in the reference data; the two type "
                                     "universes differ");
                counts_b[vocab.id(token)] += 1.0;
            }
            const KsResult ks = ks_two_sample(counts_a, counts_b);
            double total_a = 0.0, total_b = 0.0;
            for (double c : counts_a) total_a += c;
            for (double c : counts_b) total_b += c;
            json freq_table = json::array();
            for (int k = 0; k < vocab.size(); ++k)
                freq_table.push_back(json{{"token", vocab.id_to_token[k]},
                                          {"reference_freq", counts_a[k] / total_a},
                                          {"comparison_freq", counts_b[k] / total_b}});
            doc["ks"] = json{{"d", ks.d},
                             {"p", ks.p},
                             {"reference_tokens", stream.size()},
                             {"comparison_tokens", other_tokens.size()},
                             {"frequencies", freq_table}};
        }

        {
            auto out = manifest.create("stats.json");
            out << doc.dump(2) << '\n';
        }
        manifest.write();

        std::cout << doc.dump(2) << '\n';
        return 0;
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    static const char* kName = "procrnn";
    argv.push_back(kName);
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Recurrent next-event prediction for business-process event logs"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "TOML/INI file with per-subcommand [sections] of option defaults; "
                   "command-line flags win");

    const char* out_env = std::getenv("PROCRNN_OUT_DIR");
    const std::string default_out = out_env ? out_env : ".";

    TrainCmd train_cmd;
    train_cmd.out_dir = default_out;
    auto* train_app = app.add_subcommand("train", "Train a next-token network on an event log");
    add_data_flags(train_app, train_cmd.data);
    add_schema_flags(train_app, train_cmd.schema);
    add_training_flags(train_app, train_cmd.training);
    train_app->add_option("--out", train_cmd.out_dir, "Output directory");

    CrossvalCmd crossval_cmd;
    crossval_cmd.out_dir = default_out;
    auto* crossval_app =
        app.add_subcommand("crossval", "k-fold cross-validated precision on an event log");
    add_data_flags(crossval_app, crossval_cmd.data);
    add_schema_flags(crossval_app, crossval_cmd.schema);
    add_training_flags(crossval_app, crossval_cmd.training);
    crossval_app->add_option("--folds", crossval_cmd.training.folds, "Number of folds")
        ->check(CLI::Range(2, 1000));
    crossval_app->add_flag("--shuffle", crossval_cmd.training.shuffle_traces,
                           "Shuffle traces (seeded) before the contiguous fold split");
    crossval_app->add_option("--jobs", crossval_cmd.jobs, "Folds trained in parallel")
        ->check(CLI::PositiveNumber);
    crossval_app->add_option("--out", crossval_cmd.out_dir, "Output directory");

    PredictCmd predict_cmd;
    predict_cmd.out_dir = default_out;
    auto* predict_app =
        app.add_subcommand("predict", "Next-token distribution after a token prefix");
    predict_app->add_option("--checkpoint", predict_cmd.checkpoint_path, "Trained checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    predict_app->add_option("--vocab", predict_cmd.vocab_path, "Input vocabulary JSON")
        ->required()
        ->check(CLI::ExistingFile);
    predict_app->add_option("--target-vocab", predict_cmd.target_vocab_path,
                            "Target vocabulary JSON (when it differs from --vocab)")
        ->check(CLI::ExistingFile);
    predict_app->add_option("--prefix", predict_cmd.prefix_text,
                            "Whitespace-separated prefix tokens")
        ->required();
    predict_app->add_option("--top", predict_cmd.top, "Entries to print")
        ->check(CLI::PositiveNumber);
    predict_app->add_option("--export-states", predict_cmd.states_path,
                            "Write per-step hidden/cell states (JSON lines) to this file");
    predict_app->add_option("--out", predict_cmd.out_dir, "Output directory");

    HallucinateCmd hallucinate_cmd;
    hallucinate_cmd.out_dir = default_out;
    auto* hallucinate_app = app.add_subcommand(
        "hallucinate", "Generate sequences by feeding the network its own predictions");
    hallucinate_app
        ->add_option("--checkpoint", hallucinate_cmd.checkpoint_path, "Trained checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    hallucinate_app->add_option("--vocab", hallucinate_cmd.vocab_path, "Vocabulary JSON")
        ->required()
        ->check(CLI::ExistingFile);
    hallucinate_app->add_option("--count,-n", hallucinate_cmd.count, "Sequences to generate");
    hallucinate_app->add_option("--max-len", hallucinate_cmd.max_len,
                                "Generation cap per sequence")
        ->check(CLI::PositiveNumber);
    hallucinate_app
        ->add_option("--mode", hallucinate_cmd.mode, "argmax (deterministic) or sample")
        ->check(CLI::IsMember({"argmax", "sample"}));
    hallucinate_app->add_option("--seed-tokens", hallucinate_cmd.seed_tokens_text,
                                "Seed token sequence (default: the most frequent token)");
    hallucinate_app->add_flag("--stop-at-eoc", hallucinate_cmd.stop_at_eoc,
                              "Stop each sequence at the first end-of-case token");
    hallucinate_app->add_option("--eoc", hallucinate_cmd.eoc, "End-of-case token");
    hallucinate_app->add_option("--seed", hallucinate_cmd.seed, "Random seed (sample mode)");
    hallucinate_app->add_option("--out", hallucinate_cmd.out_dir, "Output directory");

    RemainderCmd remainder_cmd;
    remainder_cmd.out_dir = default_out;
    auto* remainder_app = app.add_subcommand(
        "remainder", "Predict how running cases finish and score against the log");
    add_data_flags(remainder_app, remainder_cmd.data);
    add_schema_flags(remainder_app, remainder_cmd.schema);
    remainder_app
        ->add_option("--checkpoint", remainder_cmd.checkpoint_path, "Trained checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    remainder_app->add_option("--vocab", remainder_cmd.vocab_path, "Vocabulary JSON")
        ->required()
        ->check(CLI::ExistingFile);
    remainder_app->add_option("--prefix-len", remainder_cmd.prefix_len,
                              "Tokens of each trace fed before generation");
    remainder_app->add_option("--mode", remainder_cmd.mode, "argmax or sample")
        ->check(CLI::IsMember({"argmax", "sample"}));
    remainder_app->add_option("--cap-multiplier", remainder_cmd.cap_multiplier,
                              "Generation cap as a multiple of the mean trace length");
    remainder_app->add_option("--seed", remainder_cmd.seed, "Random seed (sample mode)");
    remainder_app->add_option("--out", remainder_cmd.out_dir, "Output directory");

    StatsCmd stats_cmd;
    stats_cmd.out_dir = default_out;
    auto* stats_app = app.add_subcommand(
        "stats", "Sequence statistics: mutual-information decay, rank-frequency profile");
    add_data_flags(stats_app, stats_cmd.data);
    add_schema_flags(stats_app, stats_cmd.schema);
    stats_app->add_option("--d-max", stats_cmd.d_max, "Largest token separation for the decay curve");
    stats_app->add_option("--compare", stats_cmd.compare_path,
                          "Second dataset (event log or token-lines file) for a two-sample "
                          "Kolmogorov-Smirnov comparison")
        ->check(CLI::ExistingFile);
    stats_app->add_option("--out", stats_cmd.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (train_app->parsed()) return train_cmd.run();
        if (crossval_app->parsed()) return crossval_cmd.run();
        if (predict_app->parsed()) return predict_cmd.run();
        if (hallucinate_app->parsed()) return hallucinate_cmd.run();
        if (remainder_app->parsed()) return remainder_cmd.run();
        if (stats_app->parsed()) return stats_cmd.run();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EncodingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace procrnn
