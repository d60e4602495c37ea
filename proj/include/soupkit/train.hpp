#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "soupkit/checkpoint.hpp"
#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/model.hpp"

namespace soupkit {

struct TrainConfig {
    double learning_rate = 0.0004;
    std::size_t epochs = 5;
    std::size_t batch_size = 24;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct AdamState {
    NamedTensorMap m;
    NamedTensorMap v;
    std::uint64_t t = 0;

    static AdamState zeros_like(const NamedTensorMap& params);
};

struct Example {
    SparseVec features;
    int label = 0;
};

// Mean binary cross-entropy over the batch, probabilities clamped to
// [1e-7, 1 - 1e-7], plus the mean analytic gradient with the parameters'
// signature.
std::pair<double, NamedTensorMap> loss_and_grad(const NamedTensorMap& params,
                                                std::span<const Example> batch,
                                                const ModelShape& shape);

double mean_bce(const NamedTensorMap& params, std::span<const Example> examples,
                const ModelShape& shape);

// One bias-corrected Adam update; state.t advances by exactly 1.
void adam_step(NamedTensorMap& params, AdamState& state, const NamedTensorMap& grads,
               const TrainConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double dev_f1 = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
};

// Core loop over featurized examples: seeded init, per-epoch shuffle from the
// same stream, Adam over mini-batches (last partial batch kept), epoch-end
// dev F1 with best-on-dev retention (ties keep the earlier epoch).
struct CoreTrainResult {
    NamedTensorMap params;
    std::vector<EpochRecord> history;
    double best_dev_loss = 0.0;
    double best_dev_f1 = 0.0;
};

CoreTrainResult train_core(const std::vector<Example>& train_examples,
                           const std::vector<Example>& dev_examples, const ModelShape& shape,
                           const TrainConfig& config);

// Deterministic end-to-end training on the dataset's train/dev splits.
TrainResult train(const Dataset& dataset, const ModelSpec& spec, const TrainConfig& config,
                  const GazetteerSet& gazetteers = GazetteerSet{});

// extract_entities -> count_features -> logistic regression over the six
// parent-type counts.
TrainResult train_ner_logreg(const Dataset& dataset, const GazetteerSet& gazetteers,
                             const TrainConfig& config);

}  // namespace soupkit
