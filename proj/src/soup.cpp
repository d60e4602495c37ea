#include "soupkit/soup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "soupkit/errors.hpp"
#include "soupkit/eval.hpp"

namespace soupkit {

namespace {

constexpr double kWeightSumTolerance = 1e-9;

void check_normalized(const std::vector<double>& weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw DomainError("weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        throw DomainError("weights must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

}  // namespace

WeightScheme WeightScheme::explicit_weights(std::vector<double> w) {
    check_normalized(w);
    return {WeightSchemeKind::Explicit, std::move(w)};
}

std::string WeightScheme::name() const {
    switch (kind) {
        case WeightSchemeKind::Uniform: return "uniform";
        case WeightSchemeKind::PaperAsWritten: return "paper_as_written";
        case WeightSchemeKind::InverseLoss: return "inverse_loss";
        case WeightSchemeKind::Explicit: return "explicit";
    }
    throw DomainError("unknown weight scheme");
}

WeightScheme WeightScheme::from_name(std::string_view name) {
    if (name == "uniform") return uniform();
    if (name == "paper_as_written") return paper_as_written();
    if (name == "inverse_loss") return inverse_loss();
    throw ValueError("unknown weight scheme: " + std::string(name));
}

std::vector<double> influence_scores(const std::vector<double>& dev_losses,
                                     const WeightScheme& scheme) {
    if (dev_losses.empty()) {
        throw DomainError("influence_scores: no losses");
    }
    for (double loss : dev_losses) {
        if (!(loss > 0.0) || !std::isfinite(loss)) {
            throw DomainError("influence_scores: losses must be positive");
        }
    }
    const std::size_t n = dev_losses.size();
    std::vector<double> weights(n);
    switch (scheme.kind) {
        case WeightSchemeKind::Uniform: {
            std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
            break;
        }
        case WeightSchemeKind::PaperAsWritten: {
            const double total = std::accumulate(dev_losses.begin(), dev_losses.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) weights[i] = dev_losses[i] / total;
            break;
        }
        case WeightSchemeKind::InverseLoss: {
            double total = 0.0;
            for (double loss : dev_losses) total += 1.0 / loss;
            for (std::size_t i = 0; i < n; ++i) weights[i] = (1.0 / dev_losses[i]) / total;
            break;
        }
        case WeightSchemeKind::Explicit:
            throw DomainError("influence_scores: explicit weights are not derived from losses");
    }
    return weights;
}

Checkpoint soup(const std::vector<Checkpoint>& members, const std::vector<double>& weights,
                unsigned threads) {
    if (members.empty()) {
        throw DomainError("soup: at least one member required");
    }
    if (weights.size() != members.size()) {
        throw DomainError("soup: weight count does not match member count");
    }
    check_normalized(weights);

    const ArchSignature signature = arch_signature(members.front().tensors);
    for (const Checkpoint& member : members) {
        if (!(arch_signature(member.tensors) == signature)) {
            throw CompatibilityError("soup: members have different architecture signatures");
        }
    }

    Checkpoint out;
    const std::size_t tensor_count = members.front().tensors.size();
    std::vector<std::vector<float>> mixed(tensor_count);

    auto mix_tensor = [&](std::size_t ti) {
        const std::size_t count = members.front().tensors.entry(ti).values.size();
        std::vector<float> values(count);
        for (std::size_t k = 0; k < count; ++k) {
            double acc = 0.0;
            for (std::size_t mi = 0; mi < members.size(); ++mi) {
                acc += weights[mi] *
                       static_cast<double>(members[mi].tensors.entry(ti).values[k]);
            }
            values[k] = static_cast<float>(acc);
        }
        mixed[ti] = std::move(values);
    };

    if (threads <= 1 || tensor_count <= 1) {
        for (std::size_t ti = 0; ti < tensor_count; ++ti) mix_tensor(ti);
    } else {
        const unsigned worker_count = std::min<unsigned>(threads, tensor_count);
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (unsigned w = 0; w < worker_count; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t ti = w; ti < tensor_count; ti += worker_count) mix_tensor(ti);
            });
        }
        for (std::thread& t : workers) t.join();
    }

    for (std::size_t ti = 0; ti < tensor_count; ++ti) {
        const TensorEntry& ref = members.front().tensors.entry(ti);
        out.tensors.add(ref.name, ref.shape, std::move(mixed[ti]));
    }

    out.meta.model_spec_id = members.front().meta.model_spec_id;
    out.meta.label_map = members.front().meta.label_map;
    std::vector<SoupMemberInfo> provenance;
    provenance.reserve(members.size());
    for (std::size_t mi = 0; mi < members.size(); ++mi) {
        provenance.push_back(
            SoupMemberInfo{members[mi].meta.seed, members[mi].meta.dev_loss, weights[mi]});
    }
    out.meta.soup = std::move(provenance);
    return out;
}

nlohmann::ordered_json SoupRecipe::to_json() const {
    nlohmann::ordered_json j;
    j["scheme"] = scheme;
    nlohmann::ordered_json member_rows = nlohmann::ordered_json::array();
    for (const Member& m : members) {
        member_rows.push_back(nlohmann::ordered_json{{"path", m.path}, {"dev_loss", m.dev_loss}});
    }
    j["members"] = std::move(member_rows);
    j["weights"] = weights;
    return j;
}

SoupRecipe greedy_soup(const std::vector<Checkpoint>& candidates,
                       const std::vector<LabeledSentence>& dev, const ModelSpec& spec,
                       const GazetteerSet& gazetteers) {
    if (candidates.empty()) {
        throw DomainError("greedy_soup: no candidates");
    }
    if (dev.empty()) {
        throw DomainError("greedy_soup: empty dev data");
    }

    std::vector<double> losses(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        losses[i] = mean_loss(candidates[i], dev, spec, gazetteers);
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });

    std::vector<std::size_t> accepted = {order[0]};
    double best_f1 = evaluate(candidates[order[0]], dev, spec, gazetteers).metrics.f1;

    for (std::size_t k = 1; k < order.size(); ++k) {
        std::vector<Checkpoint> trial_members;
        trial_members.reserve(accepted.size() + 1);
        for (std::size_t idx : accepted) trial_members.push_back(candidates[idx]);
        trial_members.push_back(candidates[order[k]]);
        const std::vector<double> uniform(trial_members.size(),
                                          1.0 / static_cast<double>(trial_members.size()));
        const Checkpoint trial = soup(trial_members, uniform);
        const double f1 = evaluate(trial, dev, spec, gazetteers).metrics.f1;
        if (f1 > best_f1) {
            accepted.push_back(order[k]);
            best_f1 = f1;
        }
    }

    SoupRecipe recipe;
    recipe.scheme = "greedy";
    for (std::size_t idx : accepted) {
        recipe.members.push_back(SoupRecipe::Member{
            "", losses[idx], idx, candidates[idx].meta.seed});
    }
    recipe.weights.assign(accepted.size(), 1.0 / static_cast<double>(accepted.size()));
    return recipe;
}

std::pair<Checkpoint, SoupRecipe> build_master(const std::vector<Checkpoint>& candidates,
                                               const std::vector<LabeledSentence>& dev,
                                               const ModelSpec& spec, const WeightScheme& scheme,
                                               const GazetteerSet& gazetteers, unsigned threads) {
    if (scheme.kind == WeightSchemeKind::Explicit) {
        throw DomainError("build_master: pass explicit weights to soup() directly");
    }
    if (candidates.empty()) {
        throw DomainError("build_master: no candidates");
    }
    std::vector<double> losses(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        losses[i] = mean_loss(candidates[i], dev, spec, gazetteers);
    }
    const std::vector<double> weights = influence_scores(losses, scheme);
    Checkpoint master = soup(candidates, weights, threads);

    // Provenance reflects the losses just measured, not whatever the member
    // checkpoints recorded at training time.
    if (master.meta.soup) {
        for (std::size_t i = 0; i < master.meta.soup->size(); ++i) {
            (*master.meta.soup)[i].dev_loss = losses[i];
        }
    }

    SoupRecipe recipe;
    recipe.scheme = scheme.name();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        recipe.members.push_back(
            SoupRecipe::Member{"", losses[i], i, candidates[i].meta.seed});
    }
    recipe.weights = weights;
    return {std::move(master), std::move(recipe)};
}

}  // namespace soupkit
