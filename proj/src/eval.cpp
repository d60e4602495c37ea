#include "soupkit/eval.hpp"

#include "soupkit/errors.hpp"
#include "soupkit/train.hpp"

namespace soupkit {

namespace {

std::vector<Example> featurize_all(const std::vector<LabeledSentence>& data,
                                   const ModelSpec& spec, const GazetteerSet& gazetteers) {
    std::vector<Example> out;
    out.reserve(data.size());
    for (const LabeledSentence& s : data) {
        out.push_back(Example{sentence_features(s.text, spec, gazetteers), s.label});
    }
    return out;
}

void check_compatible(const Checkpoint& ckpt, const ModelSpec& spec) {
    if (!(arch_signature(ckpt.tensors) == spec.signature())) {
        throw CompatibilityError("checkpoint does not match the model spec signature");
    }
}

}  // namespace

EvalResult evaluate(const Checkpoint& ckpt, const std::vector<LabeledSentence>& data,
                    const ModelSpec& spec, const GazetteerSet& gazetteers) {
    if (data.empty()) {
        throw DomainError("evaluate: no data");
    }
    check_compatible(ckpt, spec);
    const ModelShape shape = shape_of(spec);
    const auto examples = featurize_all(data, spec, gazetteers);
    std::vector<int> preds(examples.size());
    std::vector<int> golds(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        preds[i] = predict_label(forward(ckpt.tensors, examples[i].features, shape));
        golds[i] = examples[i].label;
    }
    EvalResult result;
    result.confusion = confusion(preds, golds);
    result.metrics = metrics(result.confusion);
    result.mean_loss = mean_bce(ckpt.tensors, examples, shape);
    return result;
}

double mean_loss(const Checkpoint& ckpt, const std::vector<LabeledSentence>& data,
                 const ModelSpec& spec, const GazetteerSet& gazetteers) {
    if (data.empty()) {
        throw DomainError("mean_loss: no data");
    }
    check_compatible(ckpt, spec);
    const auto examples = featurize_all(data, spec, gazetteers);
    return mean_bce(ckpt.tensors, examples, shape_of(spec));
}

}  // namespace soupkit
