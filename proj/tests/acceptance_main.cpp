// Acceptance gate for the next-event engine. Each numbered check prints one
// [PASS]/[FAIL]/[WAIVED] line with its measured values; the binary exits
// nonzero when any check fails. Heavier checks share trained artifacts:
// the branching-generator network feeds checks 7 and 8, the cyclic-process
// network feeds check 8's deterministic half.

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "procrnn/analytics.hpp"
#include "procrnn/cli.hpp"
#include "procrnn/errors.hpp"
#include "procrnn/eventlog.hpp"
#include "procrnn/inference.hpp"
#include "procrnn/lstm.hpp"
#include "procrnn/nncore.hpp"
#include "procrnn/training.hpp"
#include "procrnn/vocab.hpp"

#include "helpers.hpp"

using namespace procrnn;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << id << ". " << name << ": " << detail
              << std::endl;
    if (!pass) ++g_failures;
}

void waive(int id, const std::string& name, const std::string& detail) {
    std::cout << "[WAIVED] " << id << ". " << name << ": " << detail << std::endl;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

/// One event per non-terminal token; the encoder re-appends the terminal.
EventLog tokens_to_log(const std::vector<std::vector<std::string>>& token_traces) {
    EventLog log;
    for (size_t t = 0; t < token_traces.size(); ++t) {
        Trace trace;
        trace.case_id = "case" + std::to_string(t);
        for (const auto& token : token_traces[t])
            if (token != "[EOC]") trace.events.push_back(Event{token, {}, {}, {}, {}});
        log.traces.push_back(std::move(trace));
    }
    return log;
}

std::vector<std::vector<int>> to_ids(const Vocabulary& vocab,
                                     const std::vector<std::vector<std::string>>& traces) {
    std::vector<std::vector<int>> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back(ids(vocab, t));
    return out;
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle
// ---------------------------------------------------------------------------

void check_gradients() {
    const int m = 8, t_steps = 5, batch = 2, v = 6;
    double worst = 0.0;
    for (const bool peepholes : {false, true}) {
        Rng rng(peepholes ? 404 : 403);
        NetworkParams params = NetworkParams::init(rng, v, v, m, peepholes, 0.3, 0.1);
        NetworkState state0 = NetworkState::zeros(m, batch);
        for (auto* group : {&state0.c, &state0.h})
            for (Matrix& mat : *group)
                for (double& x : mat.data) x = rng.uniform_signed(0.5);
        std::vector<int> in(t_steps * batch), tgt(t_steps * batch);
        for (int& id : in) id = static_cast<int>(rng.next_u64() % v);
        for (int& id : tgt) id = static_cast<int>(rng.next_u64() % v);
        worst = std::max(worst, testutil::gradient_check_max_rel_err(params, state0, in, tgt,
                                                                     t_steps, batch));
    }
    report(1, "gradient oracle", worst < 1e-4,
           "max relative error vs central differences " + fmt(worst) +
               " (tolerance 1e-4, plain and peephole cells)");
}

// ---------------------------------------------------------------------------
// 2. Edit-distance oracle
// ---------------------------------------------------------------------------

void check_edit_distance() {
    const auto start = Clock::now();
    std::vector<std::vector<int>> all;
    all.push_back({});
    for (int len = 1; len <= 6; ++len) {
        const size_t first = all.size() - (len == 1 ? 1 : 0);
        // extend every sequence of length len-1 by each of the 3 symbols
        std::vector<std::vector<int>> next;
        for (const auto& seq : all)
            if (static_cast<int>(seq.size()) == len - 1)
                for (int s = 0; s < 3; ++s) {
                    std::vector<int> e = seq;
                    e.push_back(s);
                    next.push_back(std::move(e));
                }
        (void)first;
        all.insert(all.end(), next.begin(), next.end());
    }

    size_t pairs = 0, mismatches = 0;
    for (const auto& a : all)
        for (const auto& b : all) {
            const double got =
                damerau_levenshtein_normed(std::span<const int>(a), std::span<const int>(b));
            const size_t longer = std::max(a.size(), b.size());
            const double want =
                longer == 0 ? 0.0
                            : static_cast<double>(testutil::osa_oracle(a, b)) /
                                  static_cast<double>(longer);
            if (got != want) ++mismatches;
            ++pairs;
        }
    report(2, "edit-distance oracle", mismatches == 0,
           std::to_string(pairs) + " pairs (length <= 6, 3 symbols), " +
               std::to_string(mismatches) + " mismatches, " + fmt(seconds_since(start)) + " s");
}

// ---------------------------------------------------------------------------
// 3. Bayes-rate convergence (also measures training throughput for check 5)
// ---------------------------------------------------------------------------

struct BayesOutcome {
    double tokens_per_second = 0.0;
};

BayesOutcome check_bayes_rate() {
    const auto traces = testutil::branching_token_traces(2000, 12345);
    const EventLog log = tokens_to_log(traces);

    TrainingConfig cfg;  // baseline defaults, scaled down
    cfg.hidden_size = 32;
    cfg.unroll_steps = 10;

    const auto start = Clock::now();
    const EvalReport result = cross_validate(log, TokenSchema{}, cfg);
    const double elapsed = seconds_since(start);

    // every fold trains on ~90% of the 8000-token stream for cfg.epochs epochs
    size_t total_tokens = 0;
    for (const auto& t : traces) total_tokens += t.size();
    const size_t fold_stream = total_tokens - total_tokens / cfg.folds;
    const size_t window_tokens =
        (fold_stream / cfg.batch_size / cfg.unroll_steps) *
        static_cast<size_t>(cfg.batch_size) * static_cast<size_t>(cfg.unroll_steps);
    const double trained_tokens = static_cast<double>(window_tokens) * cfg.epochs * cfg.folds;

    // Bayes-optimal precision from the generator itself: the branch token is
    // predictable with probability max(p, 1-p), the other three positions of
    // every trace (branch->D, D->end, end->next start) are deterministic.
    const double p_branch = 0.8;
    const double bayes = (std::max(p_branch, 1.0 - p_branch) + 3.0) / 4.0;

    const double diff = std::fabs(result.val_mean - bayes);
    report(3, "Bayes-rate convergence", diff <= 0.02,
           "10-fold validation mean " + fmt(result.val_mean) + " (sd " + fmt(result.val_sd) +
               ") vs Bayes optimum " + fmt(bayes) + ", |diff| " + fmt(diff) +
               " (tolerance 0.02), " + fmt(elapsed) + " s");

    BayesOutcome outcome;
    outcome.tokens_per_second = trained_tokens / elapsed;
    return outcome;
}

// ---------------------------------------------------------------------------
// 4. Deterministic-process mastery
// ---------------------------------------------------------------------------

struct CyclicOutcome {
    NetworkParams params;
    Vocabulary vocab;
    std::vector<std::vector<std::string>> traces;
    bool trained_ok = false;
};

CyclicOutcome check_cyclic_mastery() {
    CyclicOutcome outcome;
    outcome.traces = testutil::cyclic_token_traces(500, 6);
    outcome.vocab = build_vocabulary(outcome.traces);
    const auto id_traces = to_ids(outcome.vocab, outcome.traces);

    TrainingConfig cfg;  // baseline defaults, scaled down
    cfg.hidden_size = 32;
    cfg.unroll_steps = 10;

    const auto start = Clock::now();
    TrainResult result = train(id_traces, id_traces, outcome.vocab.size(),
                               outcome.vocab.size(), cfg);
    const double elapsed = seconds_since(start);

    int first_hit = -1;
    for (const EpochPoint& pt : result.curve)
        if (pt.train_precision >= 0.99) {
            first_hit = pt.epoch;
            break;
        }
    const double final_precision =
        result.curve.empty() ? 0.0 : result.curve.back().train_precision;
    outcome.params = std::move(result.params);
    outcome.trained_ok = final_precision >= 0.99;

    report(4, "deterministic-process mastery", outcome.trained_ok,
           "6-state cycle training precision " + fmt(final_precision) + " at epoch " +
               std::to_string(cfg.epochs) +
               (first_hit > 0 ? " (>= 0.99 since epoch " + std::to_string(first_hit) + ")"
                              : " (never reached 0.99)") +
               ", " + fmt(elapsed) + " s");
    return outcome;
}

// ---------------------------------------------------------------------------
// 5. Reference-log reproduction (conditional on the logs being present)
// ---------------------------------------------------------------------------

void check_reference_logs(double tokens_per_second) {
    struct Target {
        const char* env;
        double expected;
        double tolerance;
    };
    const Target targets[] = {{"PROCRNN_BPI2012A", 0.832, 0.03},
                              {"PROCRNN_BPI2013I", 0.735, 0.05}};

    const std::string throughput =
        "measured training throughput " + fmt(tokens_per_second) + " tokens/s";

    bool any_present = false;
    bool all_pass = true;
    std::string detail;
    for (const Target& target : targets) {
        const char* path = std::getenv(target.env);
        if (!path || !std::filesystem::exists(path)) continue;
        any_present = true;

        std::ifstream in(path, std::ios::binary);
        std::string ext = std::filesystem::path(path).extension().string();
        for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const EventLog log = ext == ".csv" ? parse_csv(in, path) : parse_xes(in, path);

        TokenSchema schema;
        schema.use_lifecycle = true;
        const TrainingConfig cfg;  // full baseline: m=125, T=20, B=20, 100 epochs
        const EvalReport result = cross_validate(log, schema, cfg);
        const double diff = std::fabs(result.val_mean - target.expected);
        if (diff > target.tolerance) all_pass = false;
        detail += std::string(target.env) + " validation mean " + fmt(result.val_mean) +
                  " vs " + fmt(target.expected) + " +- " + fmt(target.tolerance) + "; ";
    }

    if (!any_present) {
        waive(5, "reference-log reproduction",
              "no reference logs provided (set PROCRNN_BPI2012A / PROCRNN_BPI2013I to "
              "activity-filtered XES or CSV files); " +
                  throughput);
        return;
    }
    report(5, "reference-log reproduction", all_pass, detail + throughput);
}

// ---------------------------------------------------------------------------
// 6. Schedule exactness
// ---------------------------------------------------------------------------

void check_schedule() {
    const TrainingConfig cfg;  // base 1.0, decay 0.75 after epoch 50
    bool exact = true;
    for (int e = 1; e <= 50; ++e) exact = exact && learning_rate(e, cfg) == 1.0;
    for (int e = 51; e <= 100; ++e)
        exact = exact && learning_rate(e, cfg) == std::pow(0.75, e - 50);
    exact = exact && learning_rate(51, cfg) == 0.75 && learning_rate(52, cfg) == 0.5625;
    report(6, "schedule exactness", exact,
           "learning rate is exactly 1.0 through epoch 50 and 0.75^(e-50) after");
}

// ---------------------------------------------------------------------------
// 7. Hallucination realism (shares the branching generator with check 3)
// ---------------------------------------------------------------------------

struct BranchingNet {
    NetworkParams params;
    Vocabulary vocab;
    std::vector<std::vector<std::string>> traces;
};

BranchingNet train_branching_net() {
    BranchingNet net;
    net.traces = testutil::branching_token_traces(2000, 12345);
    net.vocab = build_vocabulary(net.traces);
    const auto id_traces = to_ids(net.vocab, net.traces);

    TrainingConfig cfg;
    cfg.hidden_size = 32;
    cfg.unroll_steps = 10;
    TrainOptions opts;
    opts.track_curve = false;
    net.params = train(id_traces, id_traces, net.vocab.size(), net.vocab.size(), cfg, opts)
                     .params;
    return net;
}

void check_hallucination_realism(const BranchingNet& net) {
    const int n = 100000;
    std::vector<double> reference(net.vocab.size());
    for (int k = 0; k < net.vocab.size(); ++k)
        reference[k] = static_cast<double>(net.vocab.counts[k]);

    const auto frequencies = [&](SampleMode mode, uint64_t seed) {
        Rng rng(seed);
        const Hallucination h = hallucinate(net.params, net.vocab, std::vector<std::string>{"A"},
                                            mode, n, false, "[EOC]", rng);
        std::vector<double> counts(net.vocab.size(), 0.0);
        for (const auto& token : h.generated) counts[net.vocab.id(token)] += 1.0;
        return counts;
    };

    const KsResult sampled = ks_two_sample(reference, frequencies(SampleMode::Sample, 777));
    const KsResult degenerate = ks_two_sample(reference, frequencies(SampleMode::Argmax, 778));

    const bool pass = sampled.p > 0.05 && degenerate.p < 0.05;
    report(7, "hallucination realism", pass,
           "sampled 1e5 tokens: KS D " + fmt(sampled.d) + " p " + fmt(sampled.p) +
               " (require > 0.05); argmax: D " + fmt(degenerate.d) + " p " +
               fmt(degenerate.p) + " (require < 0.05)");
}

// ---------------------------------------------------------------------------
// 8. Remainder prediction sanity
// ---------------------------------------------------------------------------

void check_remainder_sanity(const CyclicOutcome& cyclic, const BranchingNet& branching) {
    // Deterministic half: a mastered cycle must reproduce every suffix.
    double cyclic_sum = 0.0;
    {
        Rng rng(31);
        for (const auto& trace : cyclic.traces) {
            const RemainderResult r = predict_remainder(cyclic.params, cyclic.vocab, trace, 2,
                                                        SampleMode::Argmax, 70, "[EOC]", rng);
            cyclic_sum += r.distance;
        }
    }
    const double cyclic_mean = cyclic_sum / static_cast<double>(cyclic.traces.size());

    // Stochastic half: the network against a predictor that knows only the
    // log's token frequencies (i.i.d. draws until end-of-case or the cap).
    size_t total_tokens = 0;
    for (const auto& t : branching.traces) total_tokens += t.size();
    const double mean_len =
        static_cast<double>(total_tokens) / static_cast<double>(branching.traces.size());
    const int cap = static_cast<int>(std::ceil(10.0 * mean_len));

    std::vector<double> cumulative;
    double total_count = 0.0;
    for (int k = 0; k < branching.vocab.size(); ++k)
        total_count += static_cast<double>(branching.vocab.counts[k]);
    double acc = 0.0;
    for (int k = 0; k < branching.vocab.size(); ++k) {
        acc += static_cast<double>(branching.vocab.counts[k]) / total_count;
        cumulative.push_back(acc);
    }
    const auto draw = [&](Rng& rng) {
        const double u = rng.uniform();
        for (size_t k = 0; k < cumulative.size(); ++k)
            if (u < cumulative[k]) return static_cast<int>(k);
        return static_cast<int>(cumulative.size()) - 1;
    };

    double net_sum = 0.0, baseline_sum = 0.0;
    Rng net_rng(1001), base_rng(1002);
    for (const auto& trace : branching.traces) {
        const RemainderResult r = predict_remainder(branching.params, branching.vocab, trace, 2,
                                                    SampleMode::Argmax, cap, "[EOC]", net_rng);
        net_sum += r.distance;

        std::vector<std::string> generated;
        while (static_cast<int>(generated.size()) < cap) {
            const std::string& token = branching.vocab.id_to_token[draw(base_rng)];
            if (token == "[EOC]") break;
            generated.push_back(token);
        }
        baseline_sum += damerau_levenshtein_normed(
            std::span<const std::string>(generated),
            std::span<const std::string>(r.actual));
    }
    const double n = static_cast<double>(branching.traces.size());
    const double net_mean = net_sum / n;
    const double baseline_mean = baseline_sum / n;

    const bool pass = cyclic_mean == 0.0 && net_mean < baseline_mean;
    report(8, "remainder prediction sanity", pass,
           "deterministic prefix-2 mean distance " + fmt(cyclic_mean) +
               " (require exactly 0); stochastic: network " + fmt(net_mean) +
               " vs frequency-only baseline " + fmt(baseline_mean) + " (require strictly below)");
}

// ---------------------------------------------------------------------------
// 9. Statistics oracles
// ---------------------------------------------------------------------------

void check_statistics_oracles() {
    // exactly one bit between alternating tokens
    std::vector<int> alternating(1001);
    for (size_t k = 0; k < alternating.size(); ++k) alternating[k] = static_cast<int>(k % 2);
    const double mi_alt = mutual_information(alternating, 1);
    const bool alt_ok = std::fabs(mi_alt - 1.0) <= 1e-9;

    // an i.i.d. stream carries (almost) none
    Rng rng(2024);
    std::vector<int> iid(1000000);
    for (int& x : iid) x = static_cast<int>(rng.next_u64() % 4);
    const double mi_iid = mutual_information(iid, 1);
    const bool iid_ok = mi_iid < 0.01;

    // exact 1/rank corpus regresses to slope -1
    std::vector<int> corpus;
    for (int r = 1; r <= 10; ++r)
        for (int k = 0; k < 2520 / r; ++k) corpus.push_back(r);
    const double slope = zipf(corpus).slope;
    const bool zipf_ok = std::fabs(slope + 1.0) <= 1e-3;

    // exponential fit recovers the decay rate of I = exp(-d/5)
    std::vector<int> distances;
    std::vector<double> values;
    for (int d = 1; d <= 20; ++d) {
        distances.push_back(d);
        values.push_back(std::exp(-d / 5.0));
    }
    const DecayFit fit = fit_decay(distances, values);
    const bool fit_ok = fit.fitted && std::fabs(fit.exp_rate - 0.2) <= 1e-6;

    report(9, "statistics oracles", alt_ok && iid_ok && zipf_ok && fit_ok,
           "alternating MI " + fmt(mi_alt) + " bit (1.0 +- 1e-9); i.i.d. MI " + fmt(mi_iid) +
               " (< 0.01); 1/rank slope " + fmt(slope) + " (-1 +- 1e-3); exp-decay rate " +
               fmt(fit.exp_rate) + " (0.2 +- 1e-6)");
}

// ---------------------------------------------------------------------------
// 10. Determinism of the command-line surface
// ---------------------------------------------------------------------------

int run_quietly(const std::vector<std::string>& args) {
    testutil::CaptureStream out(std::cout);
    testutil::CaptureStream err(std::cerr);
    return run_cli(args);
}

void check_cli_determinism() {
    testutil::TempDir dir;
    const std::string data = dir.file("log.csv");
    testutil::write_file(data, testutil::traces_to_csv(testutil::cyclic_token_traces(12, 6)));

    const auto train_args = [&](const std::string& out) {
        return std::vector<std::string>{"train", "--data", data, "--hidden", "8",
                                        "--unroll", "5",  "--batch", "2",    "--epochs",
                                        "3",       "--out", out};
    };
    bool ok = run_quietly(train_args(dir.file("a"))) == 0 &&
              run_quietly(train_args(dir.file("b"))) == 0;

    std::string mismatched;
    for (const char* name :
         {"checkpoint.bin", "vocab.json", "curve.csv", "embedding.csv", "manifest.json"})
        if (ok && testutil::read_file(dir.file("a") + "/" + std::string(name)) !=
                      testutil::read_file(dir.file("b") + "/" + std::string(name)))
            mismatched += std::string(name) + " ";

    const auto sample_args = [&](const std::string& src, const std::string& out) {
        return std::vector<std::string>{
            "hallucinate", "--checkpoint", src + "/checkpoint.bin", "--vocab",
            src + "/vocab.json", "-n", "5", "--max-len", "20", "--seed", "11", "--out", out};
    };
    ok = ok && run_quietly(sample_args(dir.file("a"), dir.file("h1"))) == 0 &&
         run_quietly(sample_args(dir.file("a"), dir.file("h2"))) == 0;
    if (ok && testutil::read_file(dir.file("h1") + "/hallucinations.txt") !=
                  testutil::read_file(dir.file("h2") + "/hallucinations.txt"))
        mismatched += "hallucinations.txt ";

    const auto stats_args = [&](const std::string& out) {
        return std::vector<std::string>{"stats", "--data", data, "--d-max", "6", "--out", out};
    };
    ok = ok && run_quietly(stats_args(dir.file("s1"))) == 0 &&
         run_quietly(stats_args(dir.file("s2"))) == 0;
    if (ok && testutil::read_file(dir.file("s1") + "/stats.json") !=
                  testutil::read_file(dir.file("s2") + "/stats.json"))
        mismatched += "stats.json ";

    report(10, "command determinism", ok && mismatched.empty(),
           ok ? (mismatched.empty()
                     ? "train, hallucinate and stats reruns are byte-identical"
                     : "reruns differ in: " + mismatched)
              : "a command exited nonzero");
}

}  // namespace

int main() {
    const auto start = Clock::now();
    try {
        check_gradients();
        check_edit_distance();
        const BayesOutcome bayes = check_bayes_rate();
        const CyclicOutcome cyclic = check_cyclic_mastery();
        check_reference_logs(bayes.tokens_per_second);
        check_schedule();
        const BranchingNet branching = train_branching_net();
        check_hallucination_realism(branching);
        check_remainder_sanity(cyclic, branching);
        check_statistics_oracles();
        check_cli_determinism();
    } catch (const std::exception& e) {
        std::cout << "[FAIL] acceptance run aborted: " << e.what() << std::endl;
        ++g_failures;
    }

    std::cout << (g_failures == 0 ? "all acceptance checks passed"
                                  : std::to_string(g_failures) + " acceptance check(s) failed")
              << " (" << fmt(seconds_since(start)) << " s total)" << std::endl;
    return g_failures == 0 ? 0 : 1;
}
