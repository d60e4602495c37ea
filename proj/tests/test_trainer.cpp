#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "soupkit/checkpoint.hpp"
#include "soupkit/errors.hpp"
#include "soupkit/hash.hpp"
#include "soupkit/metrics.hpp"
#include "soupkit/model.hpp"
#include "soupkit/rng.hpp"
#include "soupkit/train.hpp"

using namespace soupkit;

namespace {

// ---- independent f64 oracle -------------------------------------------------
// Re-implements the documented loss from scratch on double-precision copies of
// the parameters, so central differences are not polluted by f32 rounding.

struct DenseParams {
    std::vector<std::vector<double>> tensors;  // same order as the NamedTensorMap
    std::vector<std::string> names;
};

DenseParams to_dense(const NamedTensorMap& params) {
    DenseParams d;
    for (const TensorEntry& t : params) {
        d.tensors.emplace_back(t.values.begin(), t.values.end());
        d.names.push_back(t.name);
    }
    return d;
}

double oracle_loss(const DenseParams& p, const std::vector<Example>& batch,
                   const ModelShape& shape) {
    auto tensor = [&](const std::string& name) -> const std::vector<double>& {
        for (std::size_t i = 0; i < p.names.size(); ++i) {
            if (p.names[i] == name) return p.tensors[i];
        }
        throw std::logic_error("oracle: missing tensor " + name);
    };
    double total = 0.0;
    for (const Example& ex : batch) {
        double z = 0.0;
        if (shape.kind == ModelKind::TextMlp) {
            const auto& w1 = tensor("w1");
            const auto& b1 = tensor("b1");
            const auto& w2 = tensor("w2");
            z = tensor("b2")[0];
            for (std::size_t h = 0; h < shape.hidden_dim; ++h) {
                double zh = b1[h];
                for (const auto& [idx, value] : ex.features) {
                    zh += w1[h * shape.input_dim + idx] * value;
                }
                z += w2[h] * std::tanh(zh);
            }
        } else {
            const auto& w = tensor("w");
            z = tensor("b")[0];
            for (const auto& [idx, value] : ex.features) {
                z += w[idx] * value;
            }
        }
        const double prob = 1.0 / (1.0 + std::exp(-z));
        const double q = std::min(std::max(prob, 1e-7), 1.0 - 1e-7);
        total += ex.label == 1 ? -std::log(q) : -std::log(1.0 - q);
    }
    return total / static_cast<double>(batch.size());
}

double max_relative_grad_error(const NamedTensorMap& params, const std::vector<Example>& batch,
                               const ModelShape& shape) {
    const auto [loss, grads] = loss_and_grad(params, batch, shape);
    DenseParams dense = to_dense(params);
    // the two routes must agree on the loss itself
    CHECK(oracle_loss(dense, batch, shape) == doctest::Approx(loss).epsilon(1e-9));

    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t ti = 0; ti < dense.tensors.size(); ++ti) {
        const TensorEntry& gt = grads.entry(ti);
        for (std::size_t i = 0; i < dense.tensors[ti].size(); ++i) {
            const double saved = dense.tensors[ti][i];
            dense.tensors[ti][i] = saved + h;
            const double up = oracle_loss(dense, batch, shape);
            dense.tensors[ti][i] = saved - h;
            const double down = oracle_loss(dense, batch, shape);
            dense.tensors[ti][i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double analytic = gt.values[i];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
            worst = std::max(worst, std::abs(fd - analytic) / denom);
        }
    }
    return worst;
}

std::vector<Example> random_examples(SplitMix64& rng, std::size_t n, std::size_t input_dim) {
    std::vector<Example> out;
    for (std::size_t i = 0; i < n; ++i) {
        SparseVec features;
        for (std::uint32_t idx = 0; idx < input_dim; ++idx) {
            if (rng.next_below(2) == 0) {
                features.emplace_back(idx, static_cast<float>(1 + rng.next_below(3)));
            }
        }
        out.push_back(Example{std::move(features), static_cast<int>(rng.next_below(2))});
    }
    return out;
}

std::string checkpoint_bytes(const Checkpoint& ckpt) {
    std::ostringstream out(std::ios::binary);
    write_checkpoint(ckpt, out);
    return out.str();
}

Dataset separable_dataset() {
    // positives lean on "alpha", negatives on "beta"; shared filler words
    Dataset ds;
    std::vector<LabeledSentence> train_rows, dev_rows;
    for (int i = 0; i < 30; ++i) {
        const bool positive = i % 2 == 0;
        const std::string text = positive ? "alpha alpha policy topic" : "beta beta policy topic";
        train_rows.push_back({"t" + std::to_string(i), text, positive ? 1 : 0});
    }
    for (int i = 0; i < 10; ++i) {
        const bool positive = i % 2 == 0;
        const std::string text = positive ? "alpha alpha debate word" : "beta beta debate word";
        dev_rows.push_back({"d" + std::to_string(i), text, positive ? 1 : 0});
    }
    ds.add_split("train", train_rows);
    ds.add_split("dev", dev_rows);
    return ds;
}

}  // namespace

TEST_CASE("featurize_text counts hashed tokens") {
    ModelSpec spec;
    spec.kind = ModelKind::TextLinear;
    spec.feature_dim = 1 << 12;
    spec.hash_seed = 42;

    CHECK(featurize_text("", spec).empty());

    const SparseVec counts = featurize_text("tax tax increase", spec);
    const auto tax_idx = static_cast<std::uint32_t>(fnv1a64_seeded("tax", 42) % spec.feature_dim);
    const auto inc_idx =
        static_cast<std::uint32_t>(fnv1a64_seeded("increase", 42) % spec.feature_dim);
    REQUIRE(counts.size() == 2);
    for (const auto& [idx, value] : counts) {
        if (idx == tax_idx) CHECK(value == 2.0f);
        if (idx == inc_idx) CHECK(value == 1.0f);
    }

    // parent tokens stay atomic and case matters for them; plain words fold
    const SparseVec subst = featurize_text("<NUM> Percent", spec);
    REQUIRE(subst.size() == 2);
    const auto num_idx =
        static_cast<std::uint32_t>(fnv1a64_seeded("<NUM>", 42) % spec.feature_dim);
    const auto pct_idx =
        static_cast<std::uint32_t>(fnv1a64_seeded("percent", 42) % spec.feature_dim);
    bool saw_num = false, saw_pct = false;
    for (const auto& [idx, value] : subst) {
        saw_num |= idx == num_idx;
        saw_pct |= idx == pct_idx;
    }
    CHECK(saw_num);
    CHECK(saw_pct);

    ModelSpec bad = spec;
    bad.kind = ModelKind::NerLogreg;
    CHECK_THROWS_AS(featurize_text("x", bad), DomainError);
}

TEST_CASE("forward matches hand arithmetic") {
    ModelShape shape{ModelKind::TextLinear, 4, 0};
    NamedTensorMap zero;
    zero.add("w", {4}, std::vector<float>(4, 0.0f));
    zero.add("b", {1}, {0.0f});
    CHECK(forward(zero, {{0, 3.0f}}, shape) == doctest::Approx(0.5));

    NamedTensorMap unit;
    unit.add("w", {4}, {1.0f, 0.0f, 0.0f, 0.0f});
    unit.add("b", {1}, {0.0f});
    CHECK(forward(unit, {{0, 2.0f}}, shape) == doctest::Approx(0.880797).epsilon(1e-6));

    SplitMix64 rng(3);
    for (int iter = 0; iter < 50; ++iter) {
        NamedTensorMap params = init_params(shape, rng);
        auto w = params.values_mut("w");
        for (float& v : w) v = static_cast<float>(rng.next_unit() * 40.0 - 20.0);
        const double p = forward(params, {{1, 5.0f}, {3, -2.0f}}, shape);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }

    CHECK_THROWS_AS(forward(unit, {{9, 1.0f}}, shape), CompatibilityError);
}

TEST_CASE("zero-parameter single-item loss is ln 2") {
    ModelShape shape{ModelKind::TextLinear, 4, 0};
    NamedTensorMap zero;
    zero.add("w", {4}, std::vector<float>(4, 0.0f));
    zero.add("b", {1}, {0.0f});
    const std::vector<Example> batch = {{{{0, 1.0f}}, 1}};
    const auto [loss, grads] = loss_and_grad(zero, batch, shape);
    CHECK(loss == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(arch_signature(grads).canonical == arch_signature(zero).canonical);
}

TEST_CASE("saturated fit drives the loss to the clamp floor") {
    ModelShape shape{ModelKind::TextLinear, 2, 0};
    NamedTensorMap params;
    params.add("w", {2}, {50.0f, -50.0f});
    params.add("b", {1}, {0.0f});
    const std::vector<Example> batch = {{{{0, 1.0f}}, 1}, {{{1, 1.0f}}, 0}};
    const auto [loss, grads] = loss_and_grad(params, batch, shape);
    CHECK(loss <= 1e-6 * static_cast<double>(batch.size()));
}

TEST_CASE("analytic gradients match central differences for all kinds") {
    SplitMix64 rng(1234);
    const ModelShape shapes[] = {{ModelKind::NerLogreg, 6, 0},
                                 {ModelKind::TextLinear, 10, 0},
                                 {ModelKind::TextMlp, 7, 5}};
    for (const ModelShape& shape : shapes) {
        for (int iter = 0; iter < 17; ++iter) {
            NamedTensorMap params = init_params(shape, rng);
            const auto batch = random_examples(rng, 1 + rng.next_below(6), shape.input_dim);
            CHECK(max_relative_grad_error(params, batch, shape) < 1e-4);
        }
    }
}

TEST_CASE("adam: zero gradient leaves fresh parameters untouched") {
    ModelShape shape{ModelKind::TextLinear, 3, 0};
    SplitMix64 rng(9);
    NamedTensorMap params = init_params(shape, rng);
    const NamedTensorMap before = params;
    AdamState state = AdamState::zeros_like(params);
    NamedTensorMap zero_grads;
    zero_grads.add("w", {3}, std::vector<float>(3, 0.0f));
    zero_grads.add("b", {1}, {0.0f});
    TrainConfig config;
    adam_step(params, state, zero_grads, config);
    CHECK(params == before);
    CHECK(state.t == 1);
}

TEST_CASE("adam first step matches the bias-corrected hand computation") {
    NamedTensorMap params;
    params.add("w", {1}, {0.0f});
    AdamState state = AdamState::zeros_like(params);
    NamedTensorMap grads;
    grads.add("w", {1}, {1.0f});
    TrainConfig config;
    config.learning_rate = 0.001;
    adam_step(params, state, grads, config);
    CHECK(state.t == 1);
    // -lr * m_hat / (sqrt(v_hat) + eps) with m_hat = v_hat = 1
    CHECK(params.at("w").values[0] == doctest::Approx(-0.001).epsilon(1e-7));

    float previous = params.at("w").values[0];
    for (int step = 0; step < 5; ++step) {
        adam_step(params, state, grads, config);
        CHECK(params.at("w").values[0] < previous);
        previous = params.at("w").values[0];
    }
}

TEST_CASE("training is a pure function of dataset, spec and config") {
    const Dataset ds = separable_dataset();
    ModelSpec spec;
    spec.kind = ModelKind::TextLinear;
    spec.feature_dim = 1 << 10;
    TrainConfig config;
    config.seed = 11;
    config.learning_rate = 0.05;

    const TrainResult a = train(ds, spec, config);
    const TrainResult b = train(ds, spec, config);
    CHECK(checkpoint_bytes(a.checkpoint) == checkpoint_bytes(b.checkpoint));
    CHECK(a.checkpoint.meta.seed == 11);
    CHECK(a.checkpoint.meta.model_spec_id == spec.id());

    TrainConfig other = config;
    other.seed = 12;
    const TrainResult c = train(ds, spec, other);
    CHECK(arch_signature(a.checkpoint.tensors) == arch_signature(c.checkpoint.tensors));
    CHECK(checkpoint_bytes(a.checkpoint) != checkpoint_bytes(c.checkpoint));
}

TEST_CASE("a separable corpus trains to dev F1 = 1 within 5 epochs") {
    const Dataset ds = separable_dataset();

    // threshold oracle: one feature ("alpha" count) separates the classes, so
    // F1 = 1 is attainable by construction
    {
        bool separable = true;
        for (const LabeledSentence& s : ds.split("dev")) {
            const bool has_alpha = s.text.find("alpha") != std::string::npos;
            separable = separable && (has_alpha == (s.label == 1));
        }
        REQUIRE(separable);
    }

    ModelSpec spec;
    spec.kind = ModelKind::TextLinear;
    spec.feature_dim = 1 << 10;
    TrainConfig config;
    config.seed = 1;
    config.learning_rate = 0.05;
    config.epochs = 5;

    const TrainResult result = train(ds, spec, config);
    REQUIRE(!result.history.empty());
    double best = 0.0;
    for (const EpochRecord& r : result.history) best = std::max(best, r.dev_f1);
    CHECK(best == doctest::Approx(1.0));

    // best-on-dev retention: the returned parameters reproduce the best epoch
    std::vector<int> preds, golds;
    for (const LabeledSentence& s : ds.split("dev")) {
        preds.push_back(predict_label(
            forward(result.checkpoint.tensors, sentence_features(s.text, spec, {}), spec)));
        golds.push_back(s.label);
    }
    const double returned_f1 = metrics(confusion(preds, golds)).f1;
    CHECK(returned_f1 == doctest::Approx(best));
    for (const EpochRecord& r : result.history) CHECK(returned_f1 >= r.dev_f1 - 1e-12);
}

TEST_CASE("full-batch convex training loss is non-increasing") {
    Dataset ds;
    std::vector<LabeledSentence> rows;
    for (int i = 0; i < 8; ++i) {
        const bool positive = i % 2 == 0;
        rows.push_back({"s" + std::to_string(i),
                        positive ? "Costs rose 12 percent in 1995." : "We should do better.",
                        positive ? 1 : 0});
    }
    ds.add_split("train", rows);
    ds.add_split("dev", rows);

    TrainConfig config;
    config.learning_rate = 0.01;
    config.epochs = 12;
    config.batch_size = rows.size();  // full batch
    config.seed = 3;

    const TrainResult result = train_ner_logreg(ds, GazetteerSet{}, config);
    for (std::size_t i = 1; i < result.history.size(); ++i) {
        CHECK(result.history[i].train_loss <= result.history[i - 1].train_loss + 1e-9);
    }
}

TEST_CASE("ner_logreg separates a corpus split by NUM mentions") {
    Dataset ds;
    std::vector<LabeledSentence> train_rows, dev_rows;
    const char* positive_texts[] = {"Revenue grew 40 percent.", "We spent $2 million.",
                                    "Turnout rose 12 percent.", "Wages gained 9 percent."};
    const char* negative_texts[] = {"We should aim higher.", "That is a fair point.",
                                    "People deserve honesty.", "Let us move forward."};
    for (int i = 0; i < 16; ++i) {
        train_rows.push_back({"t" + std::to_string(i),
                              i % 2 == 0 ? positive_texts[i % 4] : negative_texts[i % 4],
                              i % 2 == 0 ? 1 : 0});
    }
    for (int i = 0; i < 8; ++i) {
        dev_rows.push_back({"d" + std::to_string(i),
                            i % 2 == 0 ? positive_texts[i % 4] : negative_texts[i % 4],
                            i % 2 == 0 ? 1 : 0});
    }
    ds.add_split("train", train_rows);
    ds.add_split("dev", dev_rows);

    TrainConfig config;
    config.learning_rate = 0.1;
    config.epochs = 5;
    config.seed = 2;
    const TrainResult result = train_ner_logreg(ds, GazetteerSet{}, config);
    double best = 0.0;
    for (const EpochRecord& r : result.history) best = std::max(best, r.dev_f1);
    CHECK(best == doctest::Approx(1.0));
    CHECK(arch_signature(result.checkpoint.tensors).canonical == "w:f32:6;b:f32:1");

    // determinism for the pipeline flavor too
    const TrainResult again = train_ner_logreg(ds, GazetteerSet{}, config);
    CHECK(checkpoint_bytes(result.checkpoint) == checkpoint_bytes(again.checkpoint));
}

TEST_CASE("all-identical feature vectors give constant predictions") {
    Dataset ds;
    std::vector<LabeledSentence> rows;
    for (int i = 0; i < 10; ++i) {
        rows.push_back({"s" + std::to_string(i), "the same sentence each time",
                        i < 5 ? 1 : 0});
    }
    ds.add_split("train", rows);
    ds.add_split("dev", rows);
    ModelSpec spec;
    spec.kind = ModelKind::NerLogreg;
    TrainConfig config;
    config.seed = 4;
    const TrainResult result = train(ds, spec, config);

    std::vector<int> preds;
    for (const LabeledSentence& s : rows) {
        preds.push_back(predict_label(
            forward(result.checkpoint.tensors, sentence_features(s.text, spec, {}), spec)));
    }
    for (int p : preds) CHECK(p == preds.front());
}

TEST_CASE("spec ids round-trip and fix the signature") {
    ModelSpec spec;
    spec.kind = ModelKind::TextMlp;
    spec.feature_dim = 128;
    spec.hidden_dim = 16;
    spec.hash_seed = 99;
    spec.preprocess = Preprocess::NerTokens;
    const ModelSpec back = ModelSpec::parse_id(spec.id());
    CHECK(back == spec);
    CHECK(back.signature() == spec.signature());
    CHECK_THROWS_AS(ModelSpec::parse_id("bogus"), ValueError);

    // signature_of agrees with the signature of actual initialized parameters
    SplitMix64 rng(1);
    const NamedTensorMap params = init_params(shape_of(spec), rng);
    CHECK(arch_signature(params) == spec.signature());

    ModelSpec logreg;
    logreg.kind = ModelKind::NerLogreg;
    CHECK(logreg.input_dim() == 6);

    Dataset incomplete;
    incomplete.add_split("train", {{"1", "some text", 1}});
    CHECK_THROWS_AS(train(incomplete, spec, TrainConfig{}), DomainError);
}
