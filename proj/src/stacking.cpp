#include "soupkit/stacking.hpp"

#include "soupkit/errors.hpp"

namespace soupkit {

namespace {

SparseVec member_probabilities(const std::vector<Checkpoint>& members,
                               const SparseVec& features, const ModelShape& member_shape) {
    SparseVec probs;
    probs.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        probs.emplace_back(static_cast<std::uint32_t>(i),
                           static_cast<float>(forward(members[i].tensors, features,
                                                      member_shape)));
    }
    return probs;
}

}  // namespace

StackedEnsemble train_stacking(std::vector<Checkpoint> members,
                               const std::vector<LabeledSentence>& dev, const ModelSpec& spec,
                               const TrainConfig& config, const GazetteerSet& gazetteers) {
    if (members.size() < 2) {
        throw DomainError("train_stacking: at least two members required");
    }
    if (dev.empty()) {
        throw DomainError("train_stacking: empty dev data");
    }
    const ArchSignature signature = arch_signature(members.front().tensors);
    for (const Checkpoint& member : members) {
        if (!(arch_signature(member.tensors) == signature)) {
            throw CompatibilityError("train_stacking: incompatible member signatures");
        }
    }
    if (!(signature == spec.signature())) {
        throw CompatibilityError("train_stacking: members do not match the model spec");
    }

    const ModelShape member_shape = shape_of(spec);
    std::vector<Example> meta_examples;
    meta_examples.reserve(dev.size());
    for (const LabeledSentence& s : dev) {
        const SparseVec features = sentence_features(s.text, spec, gazetteers);
        meta_examples.push_back(
            Example{member_probabilities(members, features, member_shape), s.label});
    }

    // The meta head is selected on its own training data; there is no third
    // split to hold out at this scale.
    const ModelShape meta_shape{ModelKind::TextLinear, members.size(), 0};
    CoreTrainResult core = train_core(meta_examples, meta_examples, meta_shape, config);

    StackedEnsemble ensemble;
    ensemble.members = std::move(members);
    ensemble.meta_params = std::move(core.params);
    ensemble.member_spec = spec;
    return ensemble;
}

StackPrediction predict_stacked(const StackedEnsemble& ensemble,
                                const LabeledSentence& sentence,
                                const GazetteerSet& gazetteers) {
    if (ensemble.members.size() < 2) {
        throw DomainError("predict_stacked: ensemble needs at least two members");
    }
    const ModelShape member_shape = shape_of(ensemble.member_spec);
    const SparseVec features =
        sentence_features(sentence.text, ensemble.member_spec, gazetteers);
    const SparseVec probs = member_probabilities(ensemble.members, features, member_shape);
    const ModelShape meta_shape{ModelKind::TextLinear, ensemble.members.size(), 0};
    const double p = forward(ensemble.meta_params, probs, meta_shape);
    return StackPrediction{predict_label(p), ensemble.members.size() + 1};
}

}  // namespace soupkit
