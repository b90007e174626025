#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "procrnn/cli.hpp"
#include "procrnn/lstm.hpp"
#include "procrnn/vocab.hpp"

#include "helpers.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    CliResult result;
    {
        testutil::CaptureStream cout_cap(std::cout);
        testutil::CaptureStream cerr_cap(std::cerr);
        result.code = procrnn::run_cli(args);
        result.out = cout_cap.text();
        result.err = cerr_cap.text();
    }
    return result;
}

std::string write_dataset(const testutil::TempDir& dir, const std::string& name = "log.csv") {
    const std::string path = dir.file(name);
    testutil::write_file(path, testutil::traces_to_csv(testutil::cyclic_token_traces(12, 6)));
    return path;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

/// One trained model shared by the checkpoint-consuming commands.
/// Members initialize in declaration order, so the training run happens once
/// when the static below is first touched.
struct TrainedArtifacts {
    testutil::TempDir dir;
    std::string data = write_dataset(dir);
    std::string out = (dir.path() / "model").string();
    int train_code = run({"train", "--data", data, "--hidden", "8", "--unroll", "5", "--batch",
                          "2", "--epochs", "3", "--out", out})
                         .code;
    std::string checkpoint = out + "/checkpoint.bin";
    std::string vocab = out + "/vocab.json";
};

const TrainedArtifacts& artifacts() {
    static const TrainedArtifacts a;
    return a;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train writes the advertised artifacts") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);
    const std::string out = (dir.path() / "run").string();

    const CliResult r = run({"train", "--data", data, "--hidden", "8", "--unroll", "5",
                             "--batch", "2", "--epochs", "3", "--out", out});
    CHECK(r.code == 0);
    CHECK(r.out.find("trained 3 epochs") != std::string::npos);

    for (const char* name :
         {"checkpoint.bin", "vocab.json", "curve.csv", "embedding.csv", "manifest.json"})
        CHECK(fs::exists(fs::path(out) / name));
    // input and target token sets coincide, so no separate target vocabulary
    CHECK_FALSE(fs::exists(fs::path(out) / "target_vocab.json"));

    const json manifest = json::parse(testutil::read_file(out + "/manifest.json"));
    CHECK(manifest.at("tool") == "procrnn");
    CHECK(manifest.at("manifest_version") == 1);
    CHECK(manifest.at("command") == "train");
    CHECK(manifest.at("config").at("training").at("hidden") == 8);
    CHECK(manifest.at("config").at("training").at("epochs") == 3);
    CHECK(manifest.at("config").at("training").at("seed") == 42);
    CHECK(manifest.at("config").at("schema").at("eoc") == "[EOC]");
    const std::string hash = manifest.at("inputs").at(data).get<std::string>();
    CHECK(hash.rfind("fnv1a64:", 0) == 0);
    CHECK(hash.size() == 8 + 16);
    const auto outputs = manifest.at("outputs").get<std::vector<std::string>>();
    CHECK(std::find(outputs.begin(), outputs.end(), "checkpoint.bin") != outputs.end());
    CHECK(std::find(outputs.begin(), outputs.end(), "curve.csv") != outputs.end());

    const auto curve = split_lines(testutil::read_file(out + "/curve.csv"));
    REQUIRE(curve.size() == 4);  // header + one row per epoch
    CHECK(curve[0] == "epoch,train_precision,validation_precision");
    CHECK(curve[1].rfind("1,", 0) == 0);
    CHECK(curve[3].rfind("3,", 0) == 0);

    std::istringstream vocab_in(testutil::read_file(out + "/vocab.json"));
    const procrnn::Vocabulary vocab = procrnn::load_vocabulary(vocab_in);
    CHECK(vocab.size() == 8);  // six states, end-of-case, unknown sentinel
    CHECK(vocab.contains("S0"));
    CHECK(vocab.contains("[EOC]"));
    CHECK(vocab.has_unknown());

    std::istringstream ckpt_in(testutil::read_file(out + "/checkpoint.bin"),
                               std::ios::binary);
    const procrnn::Checkpoint ckpt = procrnn::load_checkpoint(ckpt_in);
    CHECK(ckpt.params.hidden_size() == 8);
    CHECK(ckpt.params.vocab_in() == 8);

    const auto embedding = split_lines(testutil::read_file(out + "/embedding.csv"));
    REQUIRE(embedding.size() == 9);  // header + one row per token
    CHECK(embedding[0].rfind("token,e0,", 0) == 0);
}

TEST_CASE("training runs are bit-reproducible") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);
    const std::vector<std::string> base{"train", "--data", data,     "--hidden", "6",
                                        "--unroll", "5",  "--batch", "2",        "--epochs", "2"};

    auto with_out = [&](const std::string& out, const std::string& seed) {
        std::vector<std::string> args = base;
        args.insert(args.end(), {"--seed", seed, "--out", out});
        return args;
    };
    CHECK(run(with_out(dir.file("a"), "9")).code == 0);
    CHECK(run(with_out(dir.file("b"), "9")).code == 0);
    CHECK(run(with_out(dir.file("c"), "10")).code == 0);

    const std::string a = testutil::read_file(dir.file("a") + "/checkpoint.bin");
    const std::string b = testutil::read_file(dir.file("b") + "/checkpoint.bin");
    const std::string c = testutil::read_file(dir.file("c") + "/checkpoint.bin");
    CHECK(a == b);
    CHECK(a != c);
    CHECK(testutil::read_file(dir.file("a") + "/curve.csv") ==
          testutil::read_file(dir.file("b") + "/curve.csv"));
}

TEST_CASE("a config file supplies defaults and flags override it") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);
    const std::string cfg = dir.file("run.toml");
    testutil::write_file(cfg,
                         "[train]\n"
                         "hidden=6\n"
                         "unroll=5\n"
                         "batch=2\n"
                         "epochs=5\n"
                         "dropout=0.0\n");
    const std::string out = dir.file("configured");

    const CliResult r = run({"--config", cfg, "train", "--data", data, "--epochs", "2",
                             "--out", out});
    REQUIRE(r.code == 0);
    const json manifest = json::parse(testutil::read_file(out + "/manifest.json"));
    const json& training = manifest.at("config").at("training");
    CHECK(training.at("hidden") == 6);    // from the config file
    CHECK(training.at("dropout") == 0.0);  // from the config file
    CHECK(training.at("epochs") == 2);    // command line wins
}

TEST_CASE("usage problems exit with code 2") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);

    CHECK(run({"train"}).code == 2);  // --data is required
    CHECK(run({"train", "--data", dir.file("missing.csv")}).code == 2);
    CHECK(run({"train", "--data", data, "--format", "yaml"}).code == 2);
    CHECK(run({"definitely-not-a-command"}).code == 2);
    CHECK(run({}).code == 2);  // a subcommand is required

    const CliResult bad = run({"train", "--data", dir.file("missing.csv")});
    CHECK(bad.err.rfind("error:", 0) == 0);

    CHECK(run({"--help"}).code == 0);
    CHECK(run({"train", "--help"}).code == 0);
}

TEST_CASE("data too short for the requested window geometry is an internal error") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);  // 84 tokens
    const CliResult r = run({"train", "--data", data, "--batch", "4", "--unroll", "50",
                             "--epochs", "1", "--out", dir.file("x")});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("internal error:", 0) == 0);
}

TEST_CASE("cross-validation reports per-fold and summary precision") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);
    const std::string out = dir.file("cv");

    const CliResult r = run({"crossval", "--data", data, "--hidden", "8", "--unroll", "5",
                             "--batch", "2", "--epochs", "2", "--folds", "3", "--out", out});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("cross-validation over 3 folds") != std::string::npos);

    const json report = json::parse(testutil::read_file(out + "/report.json"));
    CHECK(report.at("folds") == 3);
    const auto train_p = report.at("train_precision").get<std::vector<double>>();
    const auto val_p = report.at("validation_precision").get<std::vector<double>>();
    REQUIRE(train_p.size() == 3);
    REQUIRE(val_p.size() == 3);
    const double val_mean = report.at("validation_mean").get<double>();
    CHECK(val_mean >= *std::min_element(val_p.begin(), val_p.end()));
    CHECK(val_mean <= *std::max_element(val_p.begin(), val_p.end()));
    CHECK(report.at("train_sd").get<double>() >= 0.0);

    const auto folds_csv = split_lines(testutil::read_file(out + "/folds.csv"));
    REQUIRE(folds_csv.size() == 4);
    CHECK(folds_csv[0] == "fold,train_precision,validation_precision");
    CHECK(folds_csv[1].rfind("1,", 0) == 0);
    CHECK(folds_csv[3].rfind("3,", 0) == 0);

    const json manifest = json::parse(testutil::read_file(out + "/manifest.json"));
    CHECK(manifest.at("command") == "crossval");
    CHECK(manifest.at("config").at("training").at("folds") == 3);
}

TEST_CASE("cross-validation rejects impossible requests") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);  // 12 traces

    const CliResult too_many = run({"crossval", "--data", data, "--folds", "13", "--out",
                                    dir.file("x")});
    CHECK(too_many.code == 2);
    CHECK(too_many.err.find("folds") != std::string::npos);

    CHECK(run({"crossval", "--data", data, "--folds", "1", "--out", dir.file("y")}).code == 2);
    CHECK(run({"crossval", "--data", data, "--durations", "--out", dir.file("z")}).code == 2);
}

TEST_CASE("predict prints a ranked next-token distribution") {
    const TrainedArtifacts& art = artifacts();
    REQUIRE(art.train_code == 0);
    testutil::TempDir dir;

    const CliResult r = run({"predict", "--checkpoint", art.checkpoint, "--vocab", art.vocab,
                             "--prefix", "S0 S1", "--top", "3", "--out", dir.file("p")});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("prefix") == json::array({"S0", "S1"}));
    const json& dist = doc.at("distribution");
    REQUIRE(dist.size() == 3);
    double prev = 1.0;
    for (const auto& entry : dist) {
        const double p = entry.at("p").get<double>();
        CHECK(p > 0.0);
        CHECK(p <= prev);
        prev = p;
        CHECK(entry.at("token").is_string());
    }

    SUBCASE("the full distribution is capped by the vocabulary") {
        const CliResult full = run({"predict", "--checkpoint", art.checkpoint, "--vocab",
                                    art.vocab, "--prefix", "S0", "--top", "99", "--out",
                                    dir.file("q")});
        REQUIRE(full.code == 0);
        CHECK(json::parse(full.out).at("distribution").size() == 8);
    }
    SUBCASE("state export records every prefix step") {
        const std::string out = dir.file("s");
        const CliResult with_states =
            run({"predict", "--checkpoint", art.checkpoint, "--vocab", art.vocab, "--prefix",
                 "S0 S1 S2", "--export-states", "states.jsonl", "--out", out});
        REQUIRE(with_states.code == 0);
        const auto lines = split_lines(testutil::read_file(out + "/states.jsonl"));
        CHECK(lines.size() == 6);  // two layers x three steps
        for (const auto& line : lines) {
            const json record = json::parse(line);
            CHECK(record.is_object());
        }
    }
    SUBCASE("an empty prefix is a usage error") {
        CHECK(run({"predict", "--checkpoint", art.checkpoint, "--vocab", art.vocab, "--prefix",
                   " ", "--out", dir.file("e")})
                  .code == 2);
    }
    SUBCASE("vocabulary and checkpoint must agree") {
        // the data file is valid JSON for neither loader nor matches the net
        CHECK(run({"predict", "--checkpoint", art.checkpoint, "--vocab", art.data, "--prefix",
                   "S0", "--out", dir.file("v")})
                  .code == 2);
    }
}

TEST_CASE("hallucinate writes reproducible sequences") {
    const TrainedArtifacts& art = artifacts();
    REQUIRE(art.train_code == 0);
    testutil::TempDir dir;

    const std::vector<std::string> base{"hallucinate", "--checkpoint", art.checkpoint,
                                        "--vocab", art.vocab, "-n", "4", "--max-len", "10"};
    auto with = [&](std::initializer_list<std::string> extra, const std::string& out) {
        std::vector<std::string> args = base;
        args.insert(args.end(), extra);
        args.insert(args.end(), {"--out", out});
        return args;
    };

    SUBCASE("argmax mode is deterministic") {
        CHECK(run(with({"--mode", "argmax"}, dir.file("a"))).code == 0);
        CHECK(run(with({"--mode", "argmax"}, dir.file("b"))).code == 0);
        const std::string a = testutil::read_file(dir.file("a") + "/hallucinations.txt");
        CHECK(a == testutil::read_file(dir.file("b") + "/hallucinations.txt"));
        const auto lines = split_lines(a);
        REQUIRE(lines.size() == 4);
        for (const auto& line : lines) {
            std::istringstream in(line);
            std::string tok;
            std::vector<std::string> tokens;
            while (in >> tok) tokens.push_back(tok);
            CHECK(tokens.size() == 11);  // seed token + ten generated
            CHECK(tokens[0] == "S0");    // default seed: the most frequent token
        }
    }
    SUBCASE("sample mode is seed-deterministic") {
        CHECK(run(with({"--seed", "5"}, dir.file("s1"))).code == 0);
        CHECK(run(with({"--seed", "5"}, dir.file("s2"))).code == 0);
        CHECK(run(with({"--seed", "6"}, dir.file("s3"))).code == 0);
        const std::string s1 = testutil::read_file(dir.file("s1") + "/hallucinations.txt");
        CHECK(s1 == testutil::read_file(dir.file("s2") + "/hallucinations.txt"));
        CHECK(s1 != testutil::read_file(dir.file("s3") + "/hallucinations.txt"));
    }
    SUBCASE("zero sequences produce an empty file and succeed") {
        const CliResult r = run({"hallucinate", "--checkpoint", art.checkpoint, "--vocab",
                                 art.vocab, "-n", "0", "--out", dir.file("z")});
        CHECK(r.code == 0);
        CHECK(testutil::read_file(dir.file("z") + "/hallucinations.txt").empty());
    }
    SUBCASE("the manifest echoes the generation settings") {
        REQUIRE(run(with({"--mode", "argmax", "--stop-at-eoc"}, dir.file("m"))).code == 0);
        const json manifest = json::parse(testutil::read_file(dir.file("m") + "/manifest.json"));
        CHECK(manifest.at("command") == "hallucinate");
        CHECK(manifest.at("config").at("mode") == "argmax");
        CHECK(manifest.at("config").at("stop_at_eoc") == true);
        CHECK(manifest.at("config").at("count") == 4);
    }
}

TEST_CASE("remainder scores every sufficiently long trace") {
    const TrainedArtifacts& art = artifacts();
    REQUIRE(art.train_code == 0);
    testutil::TempDir dir;
    const std::string out = dir.file("r");

    const CliResult r = run({"remainder", "--data", art.data, "--checkpoint", art.checkpoint,
                             "--vocab", art.vocab, "--prefix-len", "2", "--out", out});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("scored 12 trace(s)") != std::string::npos);

    const auto csv = split_lines(testutil::read_file(out + "/remainder.csv"));
    REQUIRE(csv.size() == 13);  // header + one row per trace
    CHECK(csv[0] == "case_id,prefix_len,distance,capped");
    CHECK(csv[1].rfind("c0,2,", 0) == 0);

    const json summary = json::parse(testutil::read_file(out + "/summary.json"));
    CHECK(summary.at("traces") == 12);
    CHECK(summary.at("scored") == 12);
    CHECK(summary.at("skipped") == 0);
    const double mean = summary.at("mean_distance").get<double>();
    CHECK(mean >= 0.0);
    CHECK(mean <= 1.0);
    CHECK(summary.at("sd_distance").get<double>() >= 0.0);

    SUBCASE("prefixes longer than every trace skip them all") {
        const std::string out2 = dir.file("skip");
        const CliResult all_skipped =
            run({"remainder", "--data", art.data, "--checkpoint", art.checkpoint, "--vocab",
                 art.vocab, "--prefix-len", "10", "--out", out2});
        REQUIRE(all_skipped.code == 0);
        const json s = json::parse(testutil::read_file(out2 + "/summary.json"));
        CHECK(s.at("scored") == 0);
        CHECK(s.at("skipped") == 12);
        CHECK(split_lines(testutil::read_file(out2 + "/remainder.csv")).size() == 1);
    }
    SUBCASE("a zero prefix is a usage error") {
        CHECK(run({"remainder", "--data", art.data, "--checkpoint", art.checkpoint, "--vocab",
                   art.vocab, "--prefix-len", "0", "--out", dir.file("bad")})
                  .code == 2);
    }
}

TEST_CASE("stats reports information decay and rank frequencies") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);
    const std::string out = dir.file("st");

    const CliResult r = run({"stats", "--data", data, "--d-max", "5", "--out", out});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("tokens") == 84);  // twelve traces of seven tokens
    CHECK(doc.at("types") == 7);
    CHECK(doc.at("zipf_slope").is_number());
    CHECK((doc.at("mi_fit").is_object() || doc.at("mi_fit").is_null()));
    // the printed report and the stored one are the same document
    CHECK(r.out == testutil::read_file(out + "/stats.json"));

    const auto mi_csv = split_lines(testutil::read_file(out + "/mi.csv"));
    REQUIRE(mi_csv.size() == 6);  // header + one row per distance
    CHECK(mi_csv[0] == "distance,mi_bits");
    CHECK(mi_csv[1].rfind("1,", 0) == 0);
    CHECK(mi_csv[5].rfind("5,", 0) == 0);

    const auto zipf_csv = split_lines(testutil::read_file(out + "/zipf.csv"));
    REQUIRE(zipf_csv.size() == 8);  // header + one row per type
    CHECK(zipf_csv[0] == "rank,rel_freq");
    double freq_sum = 0.0;
    for (size_t k = 1; k < zipf_csv.size(); ++k) {
        const size_t comma = zipf_csv[k].find(',');
        REQUIRE(comma != std::string::npos);
        freq_sum += std::stod(zipf_csv[k].substr(comma + 1));
    }
    CHECK(freq_sum == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("comparing a log with itself shows zero distance") {
        const std::string out2 = dir.file("self");
        const CliResult self = run({"stats", "--data", data, "--d-max", "3", "--compare", data,
                                    "--out", out2});
        REQUIRE(self.code == 0);
        const json ks = json::parse(self.out).at("ks");
        CHECK(ks.at("d") == 0.0);
        CHECK(ks.at("p") == 1.0);
        const json& freqs = ks.at("frequencies");
        REQUIRE(freqs.size() == 7);
        for (const auto& row : freqs)
            CHECK(row.at("reference_freq") == row.at("comparison_freq"));
    }
    SUBCASE("comparison tokens outside the reference universe are rejected") {
        const std::string alien = dir.file("alien.txt");
        testutil::write_file(alien, "S0 S1 NOT-IN-LOG\n");
        const CliResult bad = run({"stats", "--data", data, "--compare", alien, "--d-max", "3",
                                   "--out", dir.file("x")});
        CHECK(bad.code == 2);
        CHECK(bad.err.find("NOT-IN-LOG") != std::string::npos);
    }
    SUBCASE("token-lines files work as comparison input") {
        const std::string lines = dir.file("sample.txt");
        testutil::write_file(lines, "S0 S1 S2 S3\nS4 S5 [EOC]\n");
        const CliResult ok = run({"stats", "--data", data, "--compare", lines, "--d-max", "3",
                                  "--out", dir.file("tok")});
        REQUIRE(ok.code == 0);
        CHECK(json::parse(ok.out).at("ks").at("comparison_tokens") == 7);
    }
    SUBCASE("the separation cap must fit the stream") {
        CHECK(run({"stats", "--data", data, "--d-max", "84", "--out", dir.file("big")}).code ==
              2);
    }
}

TEST_CASE("the default output directory comes from the environment") {
    testutil::TempDir dir;
    const std::string data = write_dataset(dir);
    const std::string out = dir.file("from_env");
    ::setenv("PROCRNN_OUT_DIR", out.c_str(), 1);
    const CliResult r = run({"train", "--data", data, "--hidden", "6", "--unroll", "5",
                             "--batch", "2", "--epochs", "1"});
    ::unsetenv("PROCRNN_OUT_DIR");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(fs::path(out) / "checkpoint.bin"));
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
}

}  // TEST_SUITE
