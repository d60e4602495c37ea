#include "soupkit/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "soupkit/errors.hpp"
#include "soupkit/hash.hpp"

namespace soupkit {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double clamp_prob(double p) {
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

constexpr std::string_view kParentTokens[] = {"<NUM>", "<DATE>", "<GPE>",
                                              "<LOC>", "<PER>",  "<ORG>"};

std::size_t parse_size(std::string_view s) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValueError("bad number in model spec id: " + std::string(s));
    }
    return value;
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::NerLogreg: return "ner_logreg";
        case ModelKind::TextLinear: return "text_linear";
        case ModelKind::TextMlp: return "text_mlp";
    }
    throw DomainError("unknown model kind");
}

ModelKind model_kind_from_name(std::string_view name) {
    if (name == "ner_logreg") return ModelKind::NerLogreg;
    if (name == "text_linear") return ModelKind::TextLinear;
    if (name == "text_mlp") return ModelKind::TextMlp;
    throw ValueError("unknown model kind: " + std::string(name));
}

std::string_view preprocess_name(Preprocess p) {
    return p == Preprocess::Raw ? "raw" : "ner_tokens";
}

Preprocess preprocess_from_name(std::string_view name) {
    if (name == "raw") return Preprocess::Raw;
    if (name == "ner_tokens") return Preprocess::NerTokens;
    throw ValueError("unknown preprocess mode: " + std::string(name));
}

std::string ModelSpec::id() const {
    std::string out(model_kind_name(kind));
    out += "|fd=" + std::to_string(feature_dim);
    out += "|hd=" + std::to_string(hidden_dim);
    out += "|hs=" + std::to_string(hash_seed);
    out += "|pre=";
    out += preprocess_name(preprocess);
    return out;
}

ModelSpec ModelSpec::parse_id(std::string_view id) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (start <= id.size()) {
        const std::size_t bar = id.find('|', start);
        parts.push_back(id.substr(start, bar == std::string_view::npos ? id.size() - start
                                                                       : bar - start));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    if (parts.size() != 5) {
        throw ValueError("bad model spec id: " + std::string(id));
    }
    auto field = [&](std::size_t i, std::string_view key) {
        if (parts[i].substr(0, key.size()) != key) {
            throw ValueError("bad model spec id: " + std::string(id));
        }
        return parts[i].substr(key.size());
    };
    ModelSpec spec;
    spec.kind = model_kind_from_name(parts[0]);
    spec.feature_dim = parse_size(field(1, "fd="));
    spec.hidden_dim = parse_size(field(2, "hd="));
    spec.hash_seed = static_cast<std::uint64_t>(parse_size(field(3, "hs=")));
    spec.preprocess = preprocess_from_name(field(4, "pre="));
    return spec;
}

ArchSignature ModelSpec::signature() const { return signature_of(shape_of(*this)); }

SparseVec featurize_text(std::string_view text, const ModelSpec& spec) {
    if (spec.kind == ModelKind::NerLogreg) {
        throw DomainError("featurize_text requires a text model kind");
    }
    std::map<std::uint32_t, float> counts;
    auto bump = [&](std::string_view token) {
        const std::uint64_t h = fnv1a64_seeded(token, spec.hash_seed);
        counts[static_cast<std::uint32_t>(h % spec.feature_dim)] += 1.0f;
    };
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        if (text[i] == '<') {
            bool matched = false;
            for (std::string_view tok : kParentTokens) {
                if (text.substr(i, tok.size()) == tok) {
                    bump(tok);
                    i += tok.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        if (!is_alnum(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::string token;
        while (j < n && is_alnum(text[j])) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[j]))));
            ++j;
        }
        bump(token);
        i = j;
    }
    return SparseVec(counts.begin(), counts.end());
}

SparseVec sentence_features(const std::string& text, const ModelSpec& spec,
                            const GazetteerSet& gazetteers) {
    if (spec.kind == ModelKind::NerLogreg) {
        const FeatureVector fv = count_features(extract_entities(text, gazetteers));
        SparseVec out;
        for (std::size_t p = 0; p < kParentTypeCount; ++p) {
            if (fv.counts[p] > 0) {
                out.emplace_back(static_cast<std::uint32_t>(p),
                                 static_cast<float>(fv.counts[p]));
            }
        }
        return out;
    }
    if (spec.preprocess == Preprocess::NerTokens) {
        const std::string substituted =
            substitute_tokens(text, extract_entities(text, gazetteers));
        return featurize_text(substituted, spec);
    }
    return featurize_text(text, spec);
}

ModelShape shape_of(const ModelSpec& spec) {
    ModelShape shape;
    shape.kind = spec.kind;
    shape.input_dim = spec.input_dim();
    shape.hidden_dim = spec.kind == ModelKind::TextMlp ? spec.hidden_dim : 0;
    return shape;
}

ArchSignature signature_of(const ModelShape& shape) {
    std::string canonical;
    if (shape.kind == ModelKind::TextMlp) {
        const std::string h = std::to_string(shape.hidden_dim);
        const std::string i = std::to_string(shape.input_dim);
        canonical = "w1:f32:" + h + "x" + i + ";b1:f32:" + h + ";w2:f32:" + h + ";b2:f32:1";
    } else {
        canonical = "w:f32:" + std::to_string(shape.input_dim) + ";b:f32:1";
    }
    const std::uint64_t hash = fnv1a64(canonical);
    return ArchSignature{std::move(canonical), hash};
}

NamedTensorMap init_params(const ModelShape& shape, SplitMix64& rng) {
    auto draw = [&](std::size_t count) {
        std::vector<float> values(count);
        for (float& v : values) {
            v = static_cast<float>(-0.05 + 0.1 * rng.next_unit());
        }
        return values;
    };
    NamedTensorMap params;
    if (shape.kind == ModelKind::TextMlp) {
        if (shape.hidden_dim == 0) throw DomainError("text_mlp needs hidden_dim >= 1");
        params.add("w1", {shape.hidden_dim, shape.input_dim},
                   draw(shape.hidden_dim * shape.input_dim));
        params.add("b1", {shape.hidden_dim}, std::vector<float>(shape.hidden_dim, 0.0f));
        params.add("w2", {shape.hidden_dim}, draw(shape.hidden_dim));
        params.add("b2", {1}, {0.0f});
    } else {
        params.add("w", {shape.input_dim}, draw(shape.input_dim));
        params.add("b", {1}, {0.0f});
    }
    return params;
}

double forward(const NamedTensorMap& params, const SparseVec& features,
               const ModelShape& shape) {
    if (shape.kind == ModelKind::TextMlp) {
        if (!params.contains("w1") || params.at("w1").values.size() !=
                                          shape.hidden_dim * shape.input_dim) {
            throw CompatibilityError("parameters do not match the mlp shape");
        }
        const auto& w1 = params.at("w1").values;
        const auto& b1 = params.at("b1").values;
        const auto& w2 = params.at("w2").values;
        const auto& b2 = params.at("b2").values;
        if (b1.size() != shape.hidden_dim || w2.size() != shape.hidden_dim || b2.size() != 1) {
            throw CompatibilityError("parameters do not match the mlp shape");
        }
        std::vector<double> hidden(shape.hidden_dim);
        for (std::size_t h = 0; h < shape.hidden_dim; ++h) hidden[h] = b1[h];
        for (const auto& [idx, value] : features) {
            if (idx >= shape.input_dim) {
                throw CompatibilityError("feature index out of range");
            }
            for (std::size_t h = 0; h < shape.hidden_dim; ++h) {
                hidden[h] += static_cast<double>(w1[h * shape.input_dim + idx]) * value;
            }
        }
        double z = b2[0];
        for (std::size_t h = 0; h < shape.hidden_dim; ++h) {
            z += static_cast<double>(w2[h]) * std::tanh(hidden[h]);
        }
        return clamp_prob(sigmoid(z));
    }
    if (!params.contains("w") || params.at("w").values.size() != shape.input_dim ||
        !params.contains("b") || params.at("b").values.size() != 1) {
        throw CompatibilityError("parameters do not match the linear shape");
    }
    const auto& w = params.at("w").values;
    double z = params.at("b").values[0];
    for (const auto& [idx, value] : features) {
        if (idx >= shape.input_dim) {
            throw CompatibilityError("feature index out of range");
        }
        z += static_cast<double>(w[idx]) * value;
    }
    return clamp_prob(sigmoid(z));
}

double forward(const NamedTensorMap& params, const SparseVec& features, const ModelSpec& spec) {
    return forward(params, features, shape_of(spec));
}

}  // namespace soupkit
