#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "soupkit/checkpoint.hpp"
#include "soupkit/model.hpp"
#include "soupkit/rng.hpp"

using namespace soupkit;
using nlohmann::json;

namespace {

#ifndef SOUPKIT_CLI_PATH
#error "SOUPKIT_CLI_PATH must point at the soupkit binary"
#endif

struct CliResult {
    int exit_code = -1;
    std::string stdout_text;
};

const std::filesystem::path kWork = std::filesystem::temp_directory_path() / "soupkit_cli_tests";

CliResult run_cli(const std::string& args) {
    const auto out_file = kWork / "stdout.txt";
    const std::string command = std::string(SOUPKIT_CLI_PATH) + " " + args + " > " +
                                out_file.string() + " 2> " + (kWork / "stderr.txt").string();
    const int raw = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(out_file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    result.stdout_text = buffer.str();
    return result;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << content;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string make_corpus(const std::filesystem::path& path, std::uint64_t seed, std::size_t n) {
    SplitMix64 rng(seed);
    const char* signal[] = {"40 percent", "12 percent", "1995", "$3 million"};
    const char* noise[] = {"policy", "debate", "future", "families", "question",
                           "answer", "plan",  "promise", "speech",   "economy"};
    std::string content = "Sentence_id\tText\tclass_label\n";
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = rng.next_below(5) < 2;
        std::string text;
        for (int w = 0; w < 5; ++w) {
            text += noise[rng.next_below(10)];
            text += ' ';
        }
        if (rng.next_unit() < (positive ? 0.8 : 0.2)) {
            text += signal[rng.next_below(4)];
        } else {
            text += noise[rng.next_below(10)];
        }
        content += std::to_string(i) + "\t" + text + "\t" + (positive ? "Yes" : "No") + "\n";
    }
    write_file(path, content);
    return path.string();
}

struct Fixture {
    std::string train_tsv, dev_tsv, test_tsv, gaz_dir;

    Fixture() {
        std::filesystem::create_directories(kWork);
        train_tsv = make_corpus(kWork / "train.tsv", 71, 240);
        dev_tsv = make_corpus(kWork / "dev.tsv", 72, 100);
        test_tsv = make_corpus(kWork / "test.tsv", 73, 100);
        write_file(kWork / "gaz" / "demo.tsv", "American\tNORP\nOhio\tGPE\n");
        gaz_dir = (kWork / "gaz").string();
    }

    std::string train_args(const std::string& out, const std::string& extra = "") const {
        return "--train " + train_tsv + " --dev " + dev_tsv +
               " --model text-linear --feature-dim 2048 --lr 0.05 --epochs 3 --out " + out +
               (extra.empty() ? "" : " " + extra);
    }
};

}  // namespace

TEST_CASE("train writes a checkpoint plus a JSONL log and exits 0") {
    const Fixture fx;
    const auto out_dir = (kWork / "out_train").string();
    const CliResult r = run_cli("train " + fx.train_args(out_dir, "--seed 5"));
    REQUIRE(r.exit_code == 0);

    const json summary = json::parse(r.stdout_text);
    CHECK(summary.at("seed") == 5);
    const std::string ckpt_path = summary.at("checkpoint");
    CHECK(std::filesystem::exists(ckpt_path));

    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    CHECK(ckpt.meta.seed == 5);
    CHECK(ckpt.meta.model_spec_id.find("text_linear") == 0);

    // one JSON record per epoch
    std::ifstream log(summary.at("train_log").get<std::string>());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(log, line)) {
        const json record = json::parse(line);
        CHECK(record.contains("epoch"));
        CHECK(record.contains("train_loss"));
        CHECK(record.contains("dev_loss"));
        CHECK(record.contains("dev_f1"));
        ++lines;
    }
    CHECK(lines == 3);
}

TEST_CASE("missing train file exits 2; bad flags exit 1") {
    const Fixture fx;
    const CliResult missing = run_cli("train --train " + (kWork / "nope.tsv").string() +
                                      " --dev " + fx.dev_tsv + " --out " +
                                      (kWork / "x").string());
    CHECK(missing.exit_code == 2);

    const CliResult no_paths = run_cli("train");
    CHECK(no_paths.exit_code == 1);

    const CliResult bad_flag = run_cli("train --no-such-flag 1");
    CHECK(bad_flag.exit_code == 1);

    const CliResult bad_scheme =
        run_cli("soup " + (kWork / "whatever.soup").string() + " --scheme sideways");
    CHECK(bad_scheme.exit_code == 1);
}

TEST_CASE("preprocess mode lands in the checkpoint metadata") {
    const Fixture fx;
    const auto out_dir = (kWork / "out_pre").string();
    const CliResult r = run_cli(
        "train " + fx.train_args(out_dir, "--preprocess ner-tokens --gazetteers " + fx.gaz_dir));
    REQUIRE(r.exit_code == 0);
    const json summary = json::parse(r.stdout_text);
    const Checkpoint ckpt = load_checkpoint(summary.at("checkpoint").get<std::string>());
    const ModelSpec spec = ModelSpec::parse_id(ckpt.meta.model_spec_id);
    CHECK(spec.preprocess == Preprocess::NerTokens);
}

TEST_CASE("train is reproducible byte for byte") {
    const Fixture fx;
    const CliResult a = run_cli("train " + fx.train_args((kWork / "repro_a").string()));
    const CliResult b = run_cli("train " + fx.train_args((kWork / "repro_b").string()));
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(read_bytes(kWork / "repro_a" / "checkpoint-seed0.soup") ==
          read_bytes(kWork / "repro_b" / "checkpoint-seed0.soup"));
    CHECK(read_bytes(kWork / "repro_a" / "trainlog-seed0.jsonl") ==
          read_bytes(kWork / "repro_b" / "trainlog-seed0.jsonl"));
}

TEST_CASE("train-many: seed list, duplicates rejected, signatures equal") {
    const Fixture fx;
    const auto out_dir = (kWork / "out_many").string();
    const CliResult r = run_cli("train-many " + fx.train_args(out_dir, "--seeds 1,2,3"));
    REQUIRE(r.exit_code == 0);
    const json summary = json::parse(r.stdout_text);
    REQUIRE(summary.at("checkpoints").size() == 3);

    ArchSignature first;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string path = summary.at("checkpoints")[i].at("checkpoint");
        CHECK(std::filesystem::exists(path));
        const Checkpoint ckpt = load_checkpoint(path);
        CHECK(ckpt.meta.seed == i + 1);
        if (i == 0) {
            first = arch_signature(ckpt.tensors);
        } else {
            CHECK(arch_signature(ckpt.tensors) == first);
        }
    }

    CHECK(run_cli("train-many " + fx.train_args(out_dir, "--seeds 1,1,2")).exit_code == 1);
    CHECK(run_cli("train-many " + fx.train_args(out_dir, "--seeds 1")).exit_code == 1);
}

TEST_CASE("soup: schemes, recipe contents and compatibility failures") {
    const Fixture fx;
    const auto out_dir = (kWork / "out_soup_members").string();
    REQUIRE(run_cli("train-many " + fx.train_args(out_dir, "--seeds 1,2,3")).exit_code == 0);
    const std::string members = out_dir + "/checkpoint-seed1.soup " + out_dir +
                                "/checkpoint-seed2.soup " + out_dir + "/checkpoint-seed3.soup";

    const auto soup_dir = (kWork / "out_soup").string();
    const CliResult inverse = run_cli("soup " + members + " --scheme inverse-loss --dev " +
                                      fx.dev_tsv + " --out " + soup_dir);
    REQUIRE(inverse.exit_code == 0);
    const json inv = json::parse(inverse.stdout_text);
    CHECK(std::filesystem::exists(inv.at("master").get<std::string>()));
    double sum = 0.0;
    for (const auto& w : inv.at("recipe").at("weights")) sum += w.get<double>();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    // recipe.json on disk matches stdout
    const json on_disk = json::parse(read_bytes(inv.at("recipe_path").get<std::string>()));
    CHECK(on_disk == inv.at("recipe"));

    const CliResult paper = run_cli("soup " + members + " --scheme paper-as-written --dev " +
                                    fx.dev_tsv + " --out " + (kWork / "out_paper").string());
    REQUIRE(paper.exit_code == 0);
    const json pj = json::parse(paper.stdout_text).at("recipe");
    double loss_total = 0.0;
    for (const auto& m : pj.at("members")) loss_total += m.at("dev_loss").get<double>();
    for (std::size_t i = 0; i < 3; ++i) {
        const double li = pj.at("members")[i].at("dev_loss").get<double>();
        CHECK(pj.at("weights")[i].get<double>() ==
              doctest::Approx(li / loss_total).epsilon(1e-9));
    }

    const CliResult greedy = run_cli("soup " + members + " --scheme greedy --dev " + fx.dev_tsv +
                                     " --out " + (kWork / "out_greedy").string());
    CHECK(greedy.exit_code == 0);

    const CliResult uniform =
        run_cli("soup " + members + " --scheme uniform --out " + (kWork / "out_uni").string());
    CHECK(uniform.exit_code == 0);

    // loss-based schemes require dev data
    CHECK(run_cli("soup " + members + " --scheme inverse-loss --out " +
                  (kWork / "out_nodev").string())
              .exit_code == 1);

    // incompatible member: different feature_dim
    const auto other_dir = (kWork / "out_other").string();
    REQUIRE(run_cli("train --train " + fx.train_tsv + " --dev " + fx.dev_tsv +
                    " --model text-linear --feature-dim 512 --lr 0.05 --epochs 2 --out " +
                    other_dir)
                .exit_code == 0);
    const CliResult incompatible =
        run_cli("soup " + out_dir + "/checkpoint-seed1.soup " + other_dir +
                "/checkpoint-seed0.soup --scheme uniform --out " + (kWork / "out_bad").string());
    CHECK(incompatible.exit_code == 3);
}

TEST_CASE("eval emits the four metrics and the confusion cells") {
    const Fixture fx;
    const auto out_dir = (kWork / "out_eval_train").string();
    const CliResult trained = run_cli("train " + fx.train_args(out_dir));
    REQUIRE(trained.exit_code == 0);
    const std::string ckpt = json::parse(trained.stdout_text).at("checkpoint");

    const CliResult r =
        run_cli("eval --ckpt " + ckpt + " --data " + fx.test_tsv + " --split test");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.stdout_text);
    CHECK(report.at("split") == "test");
    for (const char* key : {"accuracy", "precision", "recall", "f1"}) {
        const double v = report.at(key).get<double>();
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const auto& c = report.at("confusion");
    CHECK(c.at("tp").get<int>() + c.at("fp").get<int>() + c.at("fn").get<int>() +
              c.at("tn").get<int>() ==
          100);
}

TEST_CASE("stats reports per-split counts") {
    const Fixture fx;
    const CliResult r = run_cli("stats --train " + fx.train_tsv + " --test " + fx.test_tsv);
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.stdout_text);
    REQUIRE(report.at("splits").size() == 2);
    CHECK(report.at("splits")[0].at("split") == "train");
    CHECK(report.at("splits")[0].at("total") == 240);
    CHECK(report.at("splits")[0].at("yes").get<int>() +
              report.at("splits")[0].at("no").get<int>() ==
          240);
    CHECK(report.contains("entities"));
}

TEST_CASE("bench reports the N + 1 forward counts") {
    const Fixture fx;
    const auto out_dir = (kWork / "out_bench_members").string();
    REQUIRE(run_cli("train-many " + fx.train_args(out_dir, "--seeds 1,2,3")).exit_code == 0);
    const std::string members = out_dir + "/checkpoint-seed1.soup," + out_dir +
                                "/checkpoint-seed2.soup," + out_dir + "/checkpoint-seed3.soup";
    const CliResult r = run_cli("bench --members " + members + " --data " + fx.test_tsv +
                                " --dev " + fx.dev_tsv);
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.stdout_text);
    REQUIRE(report.at("systems").size() == 3);
    CHECK(report.at("systems")[0].at("forwards") == 100);
    CHECK(report.at("systems")[1].at("forwards") == 400);
    CHECK(report.at("systems")[2].at("forwards") == 100);
}

TEST_CASE("ner reads from a file and eval rejects mismatched data dimensions") {
    const Fixture fx;
    write_file(kWork / "snippet.txt", "Turnout rose 50 percent in Ohio.");
    const CliResult from_file =
        run_cli("ner --file " + (kWork / "snippet.txt").string() + " --gazetteers " + fx.gaz_dir);
    REQUIRE(from_file.exit_code == 0);
    const json report = json::parse(from_file.stdout_text);
    CHECK(report.at("substituted").get<std::string>().find("<NUM>") != std::string::npos);
    CHECK(report.at("substituted").get<std::string>().find("<GPE>") != std::string::npos);

    CHECK(run_cli("ner").exit_code == 1);

    // a checkpoint whose stored spec id no longer matches its tensors
    Checkpoint broken;
    broken.tensors.add("w", {8}, std::vector<float>(8, 0.0f));
    broken.tensors.add("b", {1}, {0.0f});
    broken.meta.model_spec_id = "text_linear|fd=4096|hd=0|hs=0|pre=raw";
    save_checkpoint(broken, kWork / "broken.soup");
    const CliResult mismatch = run_cli("eval --ckpt " + (kWork / "broken.soup").string() +
                                       " --data " + fx.test_tsv);
    CHECK(mismatch.exit_code == 3);
}

TEST_CASE("ner substitutes the quoted debate sentence") {
    const Fixture fx;
    const CliResult r = run_cli(
        "ner \"And that means 98 percent of American families, 97 percent of small businesses, "
        "they will not see a tax increase.\" --gazetteers " +
        fx.gaz_dir);
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.stdout_text);
    CHECK(report.at("mentions").size() == 3);
    CHECK(report.at("substituted") ==
          "And that means <NUM> of <GPE> families, <NUM> of small businesses, they will not "
          "see a tax increase.");

    // the environment variable overrides the flag
    const auto env_gaz = kWork / "gaz_env";
    write_file(env_gaz / "g.tsv", "families\tORG\n");
    const std::string with_env = "SOUPKIT_GAZETTEERS=" + env_gaz.string() + " " +
                                 std::string(SOUPKIT_CLI_PATH) + " ner \"American families\" "
                                 "--gazetteers " +
                                 fx.gaz_dir + " > " + (kWork / "env_out.txt").string();
    REQUIRE(std::system(with_env.c_str()) == 0);
    const json env_report = json::parse(read_bytes(kWork / "env_out.txt"));
    REQUIRE(env_report.at("mentions").size() == 1);
    CHECK(env_report.at("mentions")[0].at("surface") == "families");
}
