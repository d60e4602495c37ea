#pragma once

#include <cstdint>
#include <vector>

#include "soupkit/checkpoint.hpp"
#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/model.hpp"
#include "soupkit/train.hpp"

namespace soupkit {

// N weak members plus a logistic-regression meta head over their output
// probabilities. Predicting one item costs exactly N + 1 forwards.
struct StackedEnsemble {
    std::vector<Checkpoint> members;
    NamedTensorMap meta_params;  // "w" [N], "b" [1]
    ModelSpec member_spec;

    std::size_t member_count() const { return members.size(); }
};

// Trains the meta head with Adam on the members' dev-split probabilities.
// Needs at least two members with byte-equal signatures.
StackedEnsemble train_stacking(std::vector<Checkpoint> members,
                               const std::vector<LabeledSentence>& dev, const ModelSpec& spec,
                               const TrainConfig& config,
                               const GazetteerSet& gazetteers = GazetteerSet{});

struct StackPrediction {
    int label = 0;
    std::size_t forwards_used = 0;  // always member_count() + 1
};

StackPrediction predict_stacked(const StackedEnsemble& ensemble, const LabeledSentence& sentence,
                                const GazetteerSet& gazetteers = GazetteerSet{});

}  // namespace soupkit
