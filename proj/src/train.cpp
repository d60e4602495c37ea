#include "soupkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "soupkit/errors.hpp"
#include "soupkit/metrics.hpp"

namespace soupkit {

namespace {

constexpr double kProbClamp = 1e-7;

double clamp_for_loss(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

double bce(double p, int y) {
    const double q = clamp_for_loss(p);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

NamedTensorMap zeros_with_shapes(const NamedTensorMap& params) {
    NamedTensorMap out;
    for (const TensorEntry& t : params) {
        out.add(t.name, t.shape, std::vector<float>(t.values.size(), 0.0f));
    }
    return out;
}

}  // namespace

AdamState AdamState::zeros_like(const NamedTensorMap& params) {
    AdamState state;
    state.m = zeros_with_shapes(params);
    state.v = zeros_with_shapes(params);
    state.t = 0;
    return state;
}

std::pair<double, NamedTensorMap> loss_and_grad(const NamedTensorMap& params,
                                                std::span<const Example> batch,
                                                const ModelShape& shape) {
    if (batch.empty()) {
        throw DomainError("loss_and_grad: empty batch");
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;

    if (shape.kind == ModelKind::TextMlp) {
        const auto& w1 = params.at("w1").values;
        const auto& b1 = params.at("b1").values;
        const auto& w2 = params.at("w2").values;
        const std::size_t H = shape.hidden_dim;
        const std::size_t I = shape.input_dim;
        std::vector<double> gw1(H * I, 0.0), gb1(H, 0.0), gw2(H, 0.0);
        double gb2 = 0.0;
        std::vector<double> hidden(H), act(H);
        for (const Example& ex : batch) {
            for (std::size_t h = 0; h < H; ++h) hidden[h] = b1[h];
            for (const auto& [idx, value] : ex.features) {
                for (std::size_t h = 0; h < H; ++h) {
                    hidden[h] += static_cast<double>(w1[h * I + idx]) * value;
                }
            }
            double z = params.at("b2").values[0];
            for (std::size_t h = 0; h < H; ++h) {
                act[h] = std::tanh(hidden[h]);
                z += static_cast<double>(w2[h]) * act[h];
            }
            const double p = 1.0 / (1.0 + std::exp(-z));
            loss += bce(p, ex.label);
            const double dz = p - ex.label;  // d(loss)/dz for the sigmoid head
            gb2 += dz;
            for (std::size_t h = 0; h < H; ++h) {
                gw2[h] += dz * act[h];
                const double dh = dz * static_cast<double>(w2[h]) * (1.0 - act[h] * act[h]);
                gb1[h] += dh;
                for (const auto& [idx, value] : ex.features) {
                    gw1[h * I + idx] += dh * value;
                }
            }
        }
        NamedTensorMap grads;
        auto to_f32 = [&](const std::vector<double>& g) {
            std::vector<float> out(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                out[i] = static_cast<float>(g[i] * inv_n);
            }
            return out;
        };
        grads.add("w1", {H, I}, to_f32(gw1));
        grads.add("b1", {H}, to_f32(gb1));
        grads.add("w2", {H}, to_f32(gw2));
        grads.add("b2", {1}, {static_cast<float>(gb2 * inv_n)});
        return {loss * inv_n, std::move(grads)};
    }

    const auto& w = params.at("w").values;
    if (w.size() != shape.input_dim) {
        throw CompatibilityError("loss_and_grad: parameter/shape mismatch");
    }
    std::vector<double> gw(shape.input_dim, 0.0);
    double gb = 0.0;
    for (const Example& ex : batch) {
        double z = params.at("b").values[0];
        for (const auto& [idx, value] : ex.features) {
            z += static_cast<double>(w[idx]) * value;
        }
        const double p = 1.0 / (1.0 + std::exp(-z));
        loss += bce(p, ex.label);
        const double dz = p - ex.label;
        gb += dz;
        for (const auto& [idx, value] : ex.features) {
            gw[idx] += dz * value;
        }
    }
    NamedTensorMap grads;
    std::vector<float> gwf(shape.input_dim);
    for (std::size_t i = 0; i < gw.size(); ++i) gwf[i] = static_cast<float>(gw[i] * inv_n);
    grads.add("w", {shape.input_dim}, std::move(gwf));
    grads.add("b", {1}, {static_cast<float>(gb * inv_n)});
    return {loss * inv_n, std::move(grads)};
}

double mean_bce(const NamedTensorMap& params, std::span<const Example> examples,
                const ModelShape& shape) {
    if (examples.empty()) {
        throw DomainError("mean_bce: no examples");
    }
    double total = 0.0;
    for (const Example& ex : examples) {
        total += bce(forward(params, ex.features, shape), ex.label);
    }
    return total / static_cast<double>(examples.size());
}

void adam_step(NamedTensorMap& params, AdamState& state, const NamedTensorMap& grads,
               const TrainConfig& config) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.t));
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        const TensorEntry& gt = grads.entry(ti);
        if (gt.name != params.entry(ti).name ||
            gt.values.size() != params.entry(ti).values.size()) {
            throw CompatibilityError("adam_step: gradient/parameter shape mismatch");
        }
        auto p = params.values_mut(ti);
        auto m = state.m.values_mut(ti);
        auto v = state.v.values_mut(ti);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = gt.values[i];
            const double mi = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g;
            const double vi = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g * g;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            p[i] = static_cast<float>(p[i] -
                                      config.learning_rate * m_hat /
                                          (std::sqrt(v_hat) + config.adam_eps));
        }
    }
}

CoreTrainResult train_core(const std::vector<Example>& train_examples,
                           const std::vector<Example>& dev_examples, const ModelShape& shape,
                           const TrainConfig& config) {
    if (train_examples.empty() || dev_examples.empty()) {
        throw DomainError("train: train and dev must be non-empty");
    }
    if (config.learning_rate <= 0.0) {
        throw DomainError("train: learning_rate must be positive");
    }
    if (config.batch_size == 0 || config.epochs == 0) {
        throw DomainError("train: epochs and batch_size must be >= 1");
    }

    SplitMix64 rng(config.seed);
    NamedTensorMap params = init_params(shape, rng);
    AdamState state = AdamState::zeros_like(params);

    std::vector<std::size_t> order(train_examples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<int> golds(dev_examples.size());
    for (std::size_t i = 0; i < dev_examples.size(); ++i) golds[i] = dev_examples[i].label;

    CoreTrainResult result;
    bool have_best = false;
    std::vector<Example> batch;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, order.size());
            batch.clear();
            for (std::size_t k = begin; k < end; ++k) batch.push_back(train_examples[order[k]]);
            auto [loss, grads] = loss_and_grad(params, batch, shape);
            epoch_loss += loss * static_cast<double>(batch.size());
            adam_step(params, state, grads, config);
        }

        std::vector<int> preds(dev_examples.size());
        for (std::size_t i = 0; i < dev_examples.size(); ++i) {
            preds[i] = predict_label(forward(params, dev_examples[i].features, shape));
        }
        const double dev_f1 = metrics(confusion(preds, golds)).f1;
        const double dev_loss = mean_bce(params, dev_examples, shape);
        result.history.push_back(EpochRecord{
            epoch, epoch_loss / static_cast<double>(train_examples.size()), dev_loss, dev_f1});

        if (!have_best || dev_f1 > result.best_dev_f1) {
            result.params = params;
            result.best_dev_f1 = dev_f1;
            result.best_dev_loss = dev_loss;
            have_best = true;
        }
    }
    return result;
}

namespace {

std::vector<Example> featurize_split(const std::vector<LabeledSentence>& sentences,
                                     const ModelSpec& spec, const GazetteerSet& gazetteers) {
    std::vector<Example> out;
    out.reserve(sentences.size());
    for (const LabeledSentence& s : sentences) {
        out.push_back(Example{sentence_features(s.text, spec, gazetteers), s.label});
    }
    return out;
}

}  // namespace

TrainResult train(const Dataset& dataset, const ModelSpec& spec, const TrainConfig& config,
                  const GazetteerSet& gazetteers) {
    if (!dataset.has_split("train") || !dataset.has_split("dev")) {
        throw DomainError("train: dataset needs train and dev splits");
    }
    const auto train_examples = featurize_split(dataset.split("train"), spec, gazetteers);
    const auto dev_examples = featurize_split(dataset.split("dev"), spec, gazetteers);

    CoreTrainResult core = train_core(train_examples, dev_examples, shape_of(spec), config);

    TrainResult result;
    result.checkpoint.tensors = std::move(core.params);
    result.checkpoint.meta.seed = config.seed;
    result.checkpoint.meta.dev_loss = core.best_dev_loss;
    result.checkpoint.meta.model_spec_id = spec.id();
    result.history = std::move(core.history);
    return result;
}

TrainResult train_ner_logreg(const Dataset& dataset, const GazetteerSet& gazetteers,
                             const TrainConfig& config) {
    ModelSpec spec;
    spec.kind = ModelKind::NerLogreg;
    return train(dataset, spec, config, gazetteers);
}

}  // namespace soupkit
