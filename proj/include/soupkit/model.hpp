#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/rng.hpp"
#include "soupkit/tensor_map.hpp"

namespace soupkit {

enum class ModelKind { NerLogreg, TextLinear, TextMlp };
enum class Preprocess { Raw, NerTokens };

std::string_view model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);
std::string_view preprocess_name(Preprocess p);
Preprocess preprocess_from_name(std::string_view name);

// What to train and how to featurize. A ModelSpec fully determines the
// architecture signature of every checkpoint it produces; two specs that
// differ only in hash_seed or preprocess share a signature but not a spec id.
struct ModelSpec {
    ModelKind kind = ModelKind::TextLinear;
    std::size_t feature_dim = std::size_t{1} << 18;  // text kinds
    std::size_t hidden_dim = 64;                     // text_mlp only
    std::uint64_t hash_seed = 0;
    Preprocess preprocess = Preprocess::Raw;

    std::size_t input_dim() const { return kind == ModelKind::NerLogreg ? 6 : feature_dim; }

    // Round-trippable id recorded in checkpoint metadata, e.g.
    // "text_linear|fd=262144|hd=64|hs=0|pre=raw".
    std::string id() const;
    static ModelSpec parse_id(std::string_view id);

    ArchSignature signature() const;

    bool operator==(const ModelSpec&) const = default;
};

// Sparse feature vector: (index, value) pairs sorted by index, unique.
using SparseVec = std::vector<std::pair<std::uint32_t, float>>;

// Tokens are lowercased maximal alphanumeric runs, except that the six
// parent tokens ("<NUM>", ...) survive as single tokens. Each token hashes
// to FNV-1a-64(seed bytes || token) mod feature_dim; counts accumulate.
SparseVec featurize_text(std::string_view text, const ModelSpec& spec);

// Full preprocessing for one sentence: entity-count features for ner_logreg,
// hashed bag of words for text kinds (after token substitution when the
// model spec says ner_tokens).
SparseVec sentence_features(const std::string& text, const ModelSpec& spec,
                            const GazetteerSet& gazetteers);

// Dense parameter layouts shared by the public model kinds and the stacking
// meta head (a plain logistic regression of arbitrary input width).
struct ModelShape {
    ModelKind kind = ModelKind::TextLinear;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
};

ModelShape shape_of(const ModelSpec& spec);
ArchSignature signature_of(const ModelShape& shape);

// Weights ~ uniform(-0.05, 0.05) drawn from the stream in tensor order;
// biases start at zero and draw nothing.
NamedTensorMap init_params(const ModelShape& shape, SplitMix64& rng);

// sigmoid(w.x + b) for the linear kinds, sigmoid(w2.tanh(W1 x + b1) + b2)
// for the MLP. Result clamped to (0, 1).
double forward(const NamedTensorMap& params, const SparseVec& features, const ModelShape& shape);
double forward(const NamedTensorMap& params, const SparseVec& features, const ModelSpec& spec);

inline int predict_label(double probability) { return probability >= 0.5 ? 1 : 0; }

}  // namespace soupkit
