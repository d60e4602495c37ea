#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "soupkit/dataset.hpp"

namespace soupkit {

// Coarse entity groups, in the fixed feature order.
enum class ParentType { NUM = 0, DATE = 1, GPE = 2, LOC = 3, PER = 4, ORG = 5 };

inline constexpr std::size_t kParentTypeCount = 6;

// NUM <- ORDINAL, CARDINAL, QUANTITY, PERCENT, MONEY
// DATE <- TIME, DATE; GPE <- NORP, GPE; LOC <- LOC, FAC, EVENT
// PER <- PERSON; ORG <- ORG
ParentType parent_of(std::string_view fine_type);

std::string_view parent_name(ParentType p);    // "NUM", "DATE", ...
std::string_view parent_token(ParentType p);   // "<NUM>", "<DATE>", ...

struct EntityMention {
    std::size_t start = 0;  // byte offset
    std::size_t end = 0;    // exclusive
    std::string surface;    // == text[start..end)
    std::string fine_type;
    ParentType parent = ParentType::NUM;

    bool operator==(const EntityMention&) const = default;
};

struct FeatureVector {
    std::array<std::uint32_t, kParentTypeCount> counts{};  // [NUM, DATE, GPE, LOC, PER, ORG]
};

struct GazetteerEntry {
    std::string surface;
    std::string fine_type;
};

// Surface -> fine-type lexicon for PER/ORG/GPE/LOC/NORP-style entities.
// File format: one "surface<TAB>fine_type" per line; '#' lines and blank
// lines are ignored. Matching is case-sensitive.
class GazetteerSet {
public:
    void add(std::string surface, std::string fine_type);
    static GazetteerSet load_file(const std::filesystem::path& path);
    // Loads every regular file in the directory, in filename order.
    static GazetteerSet load_dir(const std::filesystem::path& dir);

    const std::vector<GazetteerEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<GazetteerEntry> entries_;
};

// Rule/gazetteer recognizer. Returns non-overlapping mentions, leftmost
// first; at each position the longest candidate wins, with a fixed fine-type
// priority on equal spans (PERCENT > MONEY > ORDINAL > TIME > DATE >
// CARDINAL > gazetteer types). Pattern keywords match case-insensitively,
// gazetteer surfaces case-sensitively.
std::vector<EntityMention> extract_entities(std::string_view text, const GazetteerSet& gazetteers);

// Replaces every mention with its parent token ("<NUM>", ...) in one
// left-to-right pass. Mentions must be sorted and non-overlapping.
std::string substitute_tokens(std::string_view text, const std::vector<EntityMention>& mentions);

FeatureVector count_features(const std::vector<EntityMention>& mentions);

struct ClassEntityStats {
    std::size_t texts = 0;
    std::size_t mentions = 0;
    double mean_mentions = 0.0;
    std::array<double, kParentTypeCount> type_distribution{};  // sums to 1, or all zero
    bool no_mentions = false;  // set when type_distribution is the all-zero convention
};

struct CorpusEntityStats {
    ClassEntityStats positive;
    ClassEntityStats negative;
};

// Per-class mention means and normalized parent-type histograms. Both classes
// must be present.
CorpusEntityStats corpus_entity_stats(const std::vector<LabeledSentence>& sentences,
                                      const GazetteerSet& gazetteers);
// Same, pooled over every split of the dataset.
CorpusEntityStats corpus_entity_stats(const Dataset& dataset, const GazetteerSet& gazetteers);

}  // namespace soupkit
