#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "soupkit/bench.hpp"
#include "soupkit/checkpoint.hpp"
#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/errors.hpp"
#include "soupkit/eval.hpp"
#include "soupkit/model.hpp"
#include "soupkit/soup.hpp"
#include "soupkit/stacking.hpp"
#include "soupkit/train.hpp"

namespace {

using nlohmann::ordered_json;
using namespace soupkit;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitCompat = 3;

struct RunConfig {
    std::optional<std::string> train_path;
    std::optional<std::string> dev_path;
    std::optional<std::string> dev_test_path;
    std::optional<std::string> test_path;
    std::optional<std::string> gazetteer_dir;
    std::string out_dir = ".";
    ModelSpec model;
    TrainConfig training;
    std::vector<std::uint64_t> seeds;
    std::string scheme = "inverse-loss";
    unsigned threads = 1;
};

// Flags override config-file values; SOUPKIT_GAZETTEERS overrides both for
// the gazetteer directory.
struct FlagState {
    CLI::App* cmd = nullptr;
    std::string config_path;
    std::string train_path, dev_path, dev_test_path, test_path;
    std::string gazetteers, out;
    std::string model_kind, preprocess, scheme;
    std::size_t feature_dim = 0, hidden_dim = 0, epochs = 0, batch_size = 0;
    std::uint64_t hash_seed = 0, seed = 0;
    double learning_rate = 0.0;
    std::vector<std::uint64_t> seeds;
    unsigned threads = 1;

    void register_common(CLI::App* app) {
        cmd = app;
        app->add_option("--config", config_path, "JSON config file; flags win on conflict");
        app->add_option("--train", train_path, "train split TSV");
        app->add_option("--dev", dev_path, "dev split TSV");
        app->add_option("--dev-test", dev_test_path, "dev_test split TSV");
        app->add_option("--test", test_path, "test split TSV");
        app->add_option("--gazetteers", gazetteers, "gazetteer directory");
        app->add_option("--out", out, "output directory");
        app->add_option("--model", model_kind, "ner-logreg | text-linear | text-mlp");
        app->add_option("--feature-dim", feature_dim, "hashed feature dimension");
        app->add_option("--hidden-dim", hidden_dim, "mlp hidden width");
        app->add_option("--hash-seed", hash_seed, "feature hashing seed");
        app->add_option("--preprocess", preprocess, "raw | ner-tokens");
        app->add_option("--lr", learning_rate, "learning rate");
        app->add_option("--epochs", epochs, "training epochs");
        app->add_option("--batch-size", batch_size, "mini-batch size");
        app->add_option("--seed", seed, "training seed");
        app->add_option("--seeds", seeds, "comma-separated seed list")->delimiter(',');
        app->add_option("--scheme", scheme,
                        "uniform | paper-as-written | inverse-loss | greedy");
        app->add_option("--threads", threads, "worker threads for soup/bench");
    }

    bool given(const std::string& flag) const { return cmd->count(flag) > 0; }
};

ModelKind model_kind_from_flag(const std::string& flag) {
    if (flag == "ner-logreg") return ModelKind::NerLogreg;
    if (flag == "text-linear") return ModelKind::TextLinear;
    if (flag == "text-mlp") return ModelKind::TextMlp;
    throw ConfigError("unknown model kind: " + flag);
}

Preprocess preprocess_from_flag(const std::string& flag) {
    if (flag == "raw") return Preprocess::Raw;
    if (flag == "ner-tokens") return Preprocess::NerTokens;
    throw ConfigError("unknown preprocess mode: " + flag);
}

WeightScheme scheme_from_flag(const std::string& flag) {
    if (flag == "uniform") return WeightScheme::uniform();
    if (flag == "paper-as-written") return WeightScheme::paper_as_written();
    if (flag == "inverse-loss") return WeightScheme::inverse_loss();
    throw ConfigError("unknown weighting scheme: " + flag);
}

RunConfig load_config(const FlagState& flags) {
    RunConfig rc;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) {
            throw ConfigError("cannot open config file: " + flags.config_path);
        }
        ordered_json j;
        try {
            j = ordered_json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad config JSON: ") + e.what());
        }
        try {
            if (j.contains("train")) rc.train_path = j["train"].get<std::string>();
            if (j.contains("dev")) rc.dev_path = j["dev"].get<std::string>();
            if (j.contains("dev_test")) rc.dev_test_path = j["dev_test"].get<std::string>();
            if (j.contains("test")) rc.test_path = j["test"].get<std::string>();
            if (j.contains("gazetteers")) rc.gazetteer_dir = j["gazetteers"].get<std::string>();
            if (j.contains("out")) rc.out_dir = j["out"].get<std::string>();
            if (j.contains("scheme")) rc.scheme = j["scheme"].get<std::string>();
            if (j.contains("threads")) rc.threads = j["threads"].get<unsigned>();
            if (j.contains("seeds")) rc.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
            if (j.contains("model")) {
                const auto& m = j["model"];
                if (m.contains("kind"))
                    rc.model.kind = model_kind_from_flag(m["kind"].get<std::string>());
                if (m.contains("feature_dim"))
                    rc.model.feature_dim = m["feature_dim"].get<std::size_t>();
                if (m.contains("hidden_dim"))
                    rc.model.hidden_dim = m["hidden_dim"].get<std::size_t>();
                if (m.contains("hash_seed"))
                    rc.model.hash_seed = m["hash_seed"].get<std::uint64_t>();
                if (m.contains("preprocess"))
                    rc.model.preprocess =
                        preprocess_from_flag(m["preprocess"].get<std::string>());
            }
            if (j.contains("training")) {
                const auto& t = j["training"];
                if (t.contains("learning_rate"))
                    rc.training.learning_rate = t["learning_rate"].get<double>();
                if (t.contains("epochs")) rc.training.epochs = t["epochs"].get<std::size_t>();
                if (t.contains("batch_size"))
                    rc.training.batch_size = t["batch_size"].get<std::size_t>();
                if (t.contains("seed")) rc.training.seed = t["seed"].get<std::uint64_t>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad config field: ") + e.what());
        }
    }

    if (flags.given("--train")) rc.train_path = flags.train_path;
    if (flags.given("--dev")) rc.dev_path = flags.dev_path;
    if (flags.given("--dev-test")) rc.dev_test_path = flags.dev_test_path;
    if (flags.given("--test")) rc.test_path = flags.test_path;
    if (flags.given("--gazetteers")) rc.gazetteer_dir = flags.gazetteers;
    if (flags.given("--out")) rc.out_dir = flags.out;
    if (flags.given("--model")) rc.model.kind = model_kind_from_flag(flags.model_kind);
    if (flags.given("--feature-dim")) rc.model.feature_dim = flags.feature_dim;
    if (flags.given("--hidden-dim")) rc.model.hidden_dim = flags.hidden_dim;
    if (flags.given("--hash-seed")) rc.model.hash_seed = flags.hash_seed;
    if (flags.given("--preprocess"))
        rc.model.preprocess = preprocess_from_flag(flags.preprocess);
    if (flags.given("--lr")) rc.training.learning_rate = flags.learning_rate;
    if (flags.given("--epochs")) rc.training.epochs = flags.epochs;
    if (flags.given("--batch-size")) rc.training.batch_size = flags.batch_size;
    if (flags.given("--seed")) rc.training.seed = flags.seed;
    if (flags.given("--seeds")) rc.seeds = flags.seeds;
    if (flags.given("--scheme")) rc.scheme = flags.scheme;
    if (flags.given("--threads")) rc.threads = flags.threads;

    if (const char* env = std::getenv("SOUPKIT_GAZETTEERS"); env && *env) {
        rc.gazetteer_dir = env;
    }
    return rc;
}

GazetteerSet resolve_gazetteers(const RunConfig& rc) {
    if (rc.gazetteer_dir) {
        return GazetteerSet::load_dir(*rc.gazetteer_dir);
    }
    return GazetteerSet{};
}

Dataset load_train_dev(const RunConfig& rc) {
    if (!rc.train_path || !rc.dev_path) {
        throw ConfigError("train and dev data paths are required");
    }
    Dataset ds;
    ds.add_split("train", load_tsv(*rc.train_path, "train"));
    ds.add_split("dev", load_tsv(*rc.dev_path, "dev"));
    return ds;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

ordered_json train_one(const Dataset& ds, const RunConfig& rc, const GazetteerSet& gaz,
                       std::uint64_t seed) {
    TrainConfig config = rc.training;
    config.seed = seed;
    const TrainResult result = rc.model.kind == ModelKind::NerLogreg
                                   ? train_ner_logreg(ds, gaz, config)
                                   : train(ds, rc.model, config, gaz);

    std::filesystem::create_directories(rc.out_dir);
    const auto ckpt_path =
        std::filesystem::path(rc.out_dir) / ("checkpoint-seed" + std::to_string(seed) + ".soup");
    const auto log_path =
        std::filesystem::path(rc.out_dir) / ("trainlog-seed" + std::to_string(seed) + ".jsonl");
    save_checkpoint(result.checkpoint, ckpt_path);

    std::string log;
    for (const EpochRecord& r : result.history) {
        log += ordered_json{{"epoch", r.epoch},
                            {"train_loss", r.train_loss},
                            {"dev_loss", r.dev_loss},
                            {"dev_f1", r.dev_f1}}
                   .dump();
        log += '\n';
    }
    write_text(log_path, log);

    double best_f1 = 0.0;
    for (const EpochRecord& r : result.history) best_f1 = std::max(best_f1, r.dev_f1);
    return ordered_json{{"checkpoint", ckpt_path.string()},
                        {"train_log", log_path.string()},
                        {"seed", seed},
                        {"dev_loss", result.checkpoint.meta.dev_loss.value_or(0.0)},
                        {"dev_f1", best_f1}};
}

int cmd_train(const FlagState& flags) {
    const RunConfig rc = load_config(flags);
    const GazetteerSet gaz = resolve_gazetteers(rc);
    const Dataset ds = load_train_dev(rc);
    std::cout << train_one(ds, rc, gaz, rc.training.seed).dump() << "\n";
    return kExitOk;
}

int cmd_train_many(const FlagState& flags) {
    const RunConfig rc = load_config(flags);
    if (rc.seeds.size() < 2) {
        throw ConfigError("train-many needs at least two seeds (--seeds a,b,...)");
    }
    for (std::size_t i = 0; i < rc.seeds.size(); ++i) {
        for (std::size_t j = i + 1; j < rc.seeds.size(); ++j) {
            if (rc.seeds[i] == rc.seeds[j]) {
                throw ConfigError("duplicate seed " + std::to_string(rc.seeds[i]));
            }
        }
    }
    const GazetteerSet gaz = resolve_gazetteers(rc);
    const Dataset ds = load_train_dev(rc);
    ordered_json out = ordered_json::array();
    for (std::uint64_t seed : rc.seeds) {
        out.push_back(train_one(ds, rc, gaz, seed));
    }
    std::cout << ordered_json{{"checkpoints", std::move(out)}}.dump() << "\n";
    return kExitOk;
}

int cmd_soup(const FlagState& flags, const std::vector<std::string>& inputs) {
    const RunConfig rc = load_config(flags);
    if (inputs.empty()) {
        throw ConfigError("soup needs at least one input checkpoint");
    }
    if (rc.scheme != "uniform" && rc.scheme != "greedy") {
        scheme_from_flag(rc.scheme);  // config check before any data is touched
    }
    std::vector<Checkpoint> members;
    members.reserve(inputs.size());
    for (const std::string& path : inputs) {
        members.push_back(load_checkpoint(path));
    }
    const ModelSpec spec = ModelSpec::parse_id(members.front().meta.model_spec_id);
    const GazetteerSet gaz = resolve_gazetteers(rc);

    const bool needs_dev = rc.scheme != "uniform";
    std::vector<LabeledSentence> dev;
    if (rc.dev_path) {
        dev = load_tsv(*rc.dev_path, "dev");
    } else if (needs_dev) {
        throw ConfigError("scheme '" + rc.scheme + "' needs --dev data to measure losses");
    }

    Checkpoint master;
    SoupRecipe recipe;
    if (rc.scheme == "greedy") {
        recipe = greedy_soup(members, dev, spec, gaz);
        std::vector<Checkpoint> accepted;
        for (const SoupRecipe::Member& m : recipe.members) {
            accepted.push_back(members[m.candidate_index]);
        }
        master = soup(accepted, recipe.weights, rc.threads);
        for (auto& m : recipe.members) m.path = inputs[m.candidate_index];
    } else if (dev.empty()) {
        // uniform without dev data: weights need no losses
        const std::vector<double> weights(members.size(),
                                          1.0 / static_cast<double>(members.size()));
        master = soup(members, weights, rc.threads);
        recipe.scheme = "uniform";
        recipe.weights = weights;
        for (std::size_t i = 0; i < members.size(); ++i) {
            recipe.members.push_back(SoupRecipe::Member{
                inputs[i], members[i].meta.dev_loss.value_or(0.0), i, members[i].meta.seed});
        }
    } else {
        const WeightScheme scheme = scheme_from_flag(rc.scheme);
        std::tie(master, recipe) = build_master(members, dev, spec, scheme, gaz, rc.threads);
        for (auto& m : recipe.members) m.path = inputs[m.candidate_index];
    }

    std::filesystem::create_directories(rc.out_dir);
    const auto master_path = std::filesystem::path(rc.out_dir) / "master.soup";
    const auto recipe_path = std::filesystem::path(rc.out_dir) / "recipe.json";
    save_checkpoint(master, master_path);
    write_text(recipe_path, recipe.to_json().dump() + "\n");

    std::cout << ordered_json{{"master", master_path.string()},
                              {"recipe_path", recipe_path.string()},
                              {"recipe", recipe.to_json()}}
                     .dump()
              << "\n";
    return kExitOk;
}

ordered_json metrics_report(const std::string& split, const std::string& model,
                            const EvalResult& result) {
    return ordered_json{{"split", split},
                        {"model", model},
                        {"accuracy", result.metrics.accuracy},
                        {"precision", result.metrics.precision},
                        {"recall", result.metrics.recall},
                        {"f1", result.metrics.f1},
                        {"confusion",
                         ordered_json{{"tp", result.confusion.tp},
                                      {"fp", result.confusion.fp},
                                      {"fn", result.confusion.fn},
                                      {"tn", result.confusion.tn}}}};
}

int cmd_eval(const FlagState& flags, const std::string& ckpt_path, const std::string& data_path,
             const std::string& split_name) {
    const RunConfig rc = load_config(flags);
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const ModelSpec spec = ModelSpec::parse_id(ckpt.meta.model_spec_id);
    const GazetteerSet gaz = resolve_gazetteers(rc);
    const auto data = load_tsv(data_path, split_name);
    const EvalResult result = evaluate(ckpt, data, spec, gaz);
    std::cout << metrics_report(split_name, ckpt.meta.model_spec_id, result).dump() << "\n";
    return kExitOk;
}

int cmd_stats(const FlagState& flags) {
    const RunConfig rc = load_config(flags);
    Dataset ds;
    if (rc.train_path) ds.add_split("train", load_tsv(*rc.train_path, "train"));
    if (rc.dev_path) ds.add_split("dev", load_tsv(*rc.dev_path, "dev"));
    if (rc.dev_test_path) ds.add_split("dev_test", load_tsv(*rc.dev_test_path, "dev_test"));
    if (rc.test_path) ds.add_split("test", load_tsv(*rc.test_path, "test"));
    if (ds.splits().empty()) {
        throw ConfigError("stats needs at least one data path");
    }

    ordered_json split_rows = ordered_json::array();
    for (const auto& [name, counts] : class_distribution(ds)) {
        split_rows.push_back(ordered_json{{"split", name},
                                          {"total", counts.total},
                                          {"yes", counts.yes},
                                          {"no", counts.no}});
    }
    ordered_json out{{"splits", std::move(split_rows)}};

    const GazetteerSet gaz = resolve_gazetteers(rc);
    try {
        const CorpusEntityStats stats = corpus_entity_stats(ds, gaz);
        auto cls_json = [](const ClassEntityStats& cls) {
            return ordered_json{{"texts", cls.texts},
                                {"mentions", cls.mentions},
                                {"mean_mentions", cls.mean_mentions},
                                {"type_distribution", cls.type_distribution},
                                {"all_zero", cls.no_mentions}};
        };
        out["entities"] =
            ordered_json{{"parent_types", {"NUM", "DATE", "GPE", "LOC", "PER", "ORG"}},
                         {"check_worthy", cls_json(stats.positive)},
                         {"not_check_worthy", cls_json(stats.negative)}};
    } catch (const DomainError&) {
        std::cerr << "note: entity stats skipped, a class is absent\n";
    }
    std::cout << out.dump() << "\n";
    return kExitOk;
}

int cmd_bench(const FlagState& flags, const std::vector<std::string>& member_paths,
              const std::string& master_path, const std::string& data_path) {
    const RunConfig rc = load_config(flags);
    if (member_paths.size() < 2) {
        throw ConfigError("bench needs at least two member checkpoints (--members)");
    }
    if (data_path.empty()) {
        throw ConfigError("bench needs --data with items to score");
    }
    if (!rc.dev_path) {
        throw ConfigError("bench needs --dev data to fit the stacking meta head");
    }

    std::vector<Checkpoint> members;
    for (const std::string& path : member_paths) members.push_back(load_checkpoint(path));
    const ModelSpec spec = ModelSpec::parse_id(members.front().meta.model_spec_id);
    const GazetteerSet gaz = resolve_gazetteers(rc);
    const auto dev = load_tsv(*rc.dev_path, "dev");
    const auto data = load_tsv(data_path, "bench");

    TrainConfig meta_config = rc.training;
    // a tiny logistic head wants a less timid optimizer than the text models
    meta_config.learning_rate = 0.1;
    meta_config.epochs = 40;
    const StackedEnsemble stack = train_stacking(members, dev, spec, meta_config, gaz);

    Checkpoint master;
    if (!master_path.empty()) {
        master = load_checkpoint(master_path);
    } else {
        master = build_master(members, dev, spec, WeightScheme::inverse_loss(), gaz).first;
    }

    BenchSuite suite;
    suite.add_model("souped_master", master, spec);
    suite.add_stack("stack_" + std::to_string(members.size()), stack);
    suite.add_model("single_model", members.front(), spec);
    const BenchReport report = suite.run(data, gaz, rc.threads);
    std::cout << report.to_json().dump() << "\n";
    return kExitOk;
}

int cmd_ner(const FlagState& flags, const std::string& text_arg, const std::string& file_arg) {
    const RunConfig rc = load_config(flags);
    std::string text = text_arg;
    if (!file_arg.empty()) {
        std::ifstream in(file_arg);
        if (!in) {
            throw IoError("cannot open text file: " + file_arg);
        }
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    if (text.empty()) {
        throw ConfigError("ner needs a text argument or --file");
    }
    const GazetteerSet gaz = resolve_gazetteers(rc);
    const auto mentions = extract_entities(text, gaz);
    ordered_json rows = ordered_json::array();
    for (const EntityMention& m : mentions) {
        rows.push_back(ordered_json{{"start", m.start},
                                    {"end", m.end},
                                    {"surface", m.surface},
                                    {"fine_type", m.fine_type},
                                    {"parent", std::string(parent_name(m.parent))}});
    }
    std::cout << ordered_json{{"text", text},
                              {"mentions", std::move(rows)},
                              {"substituted", substitute_tokens(text, mentions)}}
                     .dump()
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"checkpoint souping and check-worthiness pipeline"};
    app.require_subcommand(1);

    FlagState train_flags, train_many_flags, soup_flags, eval_flags, stats_flags, bench_flags,
        ner_flags;

    auto* train_cmd = app.add_subcommand("train", "train one classifier");
    train_flags.register_common(train_cmd);

    auto* train_many_cmd = app.add_subcommand("train-many", "train one classifier per seed");
    train_many_flags.register_common(train_many_cmd);

    auto* soup_cmd = app.add_subcommand("soup", "average checkpoints into a master model");
    soup_flags.register_common(soup_cmd);
    std::vector<std::string> soup_inputs;
    soup_cmd->add_option("inputs", soup_inputs, "member checkpoint files");

    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a data split");
    eval_flags.register_common(eval_cmd);
    std::string eval_ckpt, eval_data, eval_split = "dev";
    eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "TSV data file")->required();
    eval_cmd->add_option("--split", eval_split, "split name for the report");

    auto* stats_cmd = app.add_subcommand("stats", "class and entity statistics");
    stats_flags.register_common(stats_cmd);

    auto* bench_cmd = app.add_subcommand("bench", "forward-count and wall-time comparison");
    bench_flags.register_common(bench_cmd);
    std::vector<std::string> bench_members;
    std::string bench_master, bench_data;
    bench_cmd->add_option("--members", bench_members, "member checkpoints")->delimiter(',');
    bench_cmd->add_option("--master", bench_master, "souped master checkpoint");
    bench_cmd->add_option("--data", bench_data, "TSV with items to score");

    auto* ner_cmd = app.add_subcommand("ner", "extract and substitute entities");
    ner_flags.register_common(ner_cmd);
    std::string ner_text, ner_file;
    ner_cmd->add_option("text", ner_text, "text to analyze");
    ner_cmd->add_option("--file", ner_file, "read the text from a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (train_many_cmd->parsed()) return cmd_train_many(train_many_flags);
        if (soup_cmd->parsed()) return cmd_soup(soup_flags, soup_inputs);
        if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_ckpt, eval_data, eval_split);
        if (stats_cmd->parsed()) return cmd_stats(stats_flags);
        if (bench_cmd->parsed())
            return cmd_bench(bench_flags, bench_members, bench_master, bench_data);
        if (ner_cmd->parsed()) return cmd_ner(ner_flags, ner_text, ner_file);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CompatibilityError& e) {
        std::cerr << "compatibility error: " << e.what() << "\n";
        return kExitCompat;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
