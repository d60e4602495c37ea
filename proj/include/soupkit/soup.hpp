#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "soupkit/checkpoint.hpp"
#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/model.hpp"

namespace soupkit {

enum class WeightSchemeKind { Uniform, PaperAsWritten, InverseLoss, Explicit };

// How member weights are derived from dev losses.
//
// PaperAsWritten is I_i = L_i / sum(L): exactly the published ratio, which
// hands HIGHER-loss members MORE weight. InverseLoss is
// I_i = (1/L_i) / sum(1/L): the variant that actually gives low-performing
// members a lower impact. Both are first-class; InverseLoss is the default
// everywhere a default is needed.
struct WeightScheme {
    WeightSchemeKind kind = WeightSchemeKind::InverseLoss;
    std::vector<double> weights;  // Explicit only

    static WeightScheme uniform() { return {WeightSchemeKind::Uniform, {}}; }
    static WeightScheme paper_as_written() { return {WeightSchemeKind::PaperAsWritten, {}}; }
    static WeightScheme inverse_loss() { return {WeightSchemeKind::InverseLoss, {}}; }
    static WeightScheme explicit_weights(std::vector<double> w);

    std::string name() const;
    static WeightScheme from_name(std::string_view name);  // non-explicit names only
};

// Normalized member weights from positive dev losses. Uniform ignores the
// losses; the two ratio schemes are scale-invariant by construction.
std::vector<double> influence_scores(const std::vector<double>& dev_losses,
                                     const WeightScheme& scheme);

// Weighted average of compatible checkpoints. Every output element is
// accumulated in f64 in member order and cast to f32 once, so results do not
// depend on how the tensors are distributed over threads.
Checkpoint soup(const std::vector<Checkpoint>& members, const std::vector<double>& weights,
                unsigned threads = 1);

struct SoupRecipe {
    struct Member {
        std::string path;  // filled by callers that know file locations
        double dev_loss = 0.0;
        std::size_t candidate_index = 0;
        std::uint64_t seed = 0;
    };

    std::string scheme;
    std::vector<Member> members;
    std::vector<double> weights;

    nlohmann::ordered_json to_json() const;
};

// Feedback-loop soup: candidates ordered by ascending dev loss; the best is
// kept and each later candidate joins the uniform soup only when it strictly
// improves dev F1. The result therefore never scores below the starting
// (lowest-loss) candidate on dev.
SoupRecipe greedy_soup(const std::vector<Checkpoint>& candidates,
                       const std::vector<LabeledSentence>& dev, const ModelSpec& spec,
                       const GazetteerSet& gazetteers = GazetteerSet{});

// Measures each member's mean dev loss, turns the losses into influence
// scores under the scheme and soups. The recipe records both.
std::pair<Checkpoint, SoupRecipe> build_master(const std::vector<Checkpoint>& candidates,
                                               const std::vector<LabeledSentence>& dev,
                                               const ModelSpec& spec, const WeightScheme& scheme,
                                               const GazetteerSet& gazetteers = GazetteerSet{},
                                               unsigned threads = 1);

}  // namespace soupkit
