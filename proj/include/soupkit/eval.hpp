#pragma once

#include <vector>

#include "soupkit/checkpoint.hpp"
#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/metrics.hpp"
#include "soupkit/model.hpp"

namespace soupkit {

struct EvalResult {
    ConfusionCounts confusion;
    Metrics metrics;
    double mean_loss = 0.0;
};

// Thresholded (p >= 0.5) predictions over the data, confusion counts, the
// four metrics and the mean BCE. The checkpoint must carry the model spec's
// architecture signature.
EvalResult evaluate(const Checkpoint& ckpt, const std::vector<LabeledSentence>& data,
                    const ModelSpec& spec, const GazetteerSet& gazetteers = GazetteerSet{});

// Mean binary cross-entropy of the checkpoint over the data; the dev-split
// value of this is what the influence schemes consume.
double mean_loss(const Checkpoint& ckpt, const std::vector<LabeledSentence>& data,
                 const ModelSpec& spec, const GazetteerSet& gazetteers = GazetteerSet{});

}  // namespace soupkit
