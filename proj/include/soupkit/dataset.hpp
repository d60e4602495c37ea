#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace soupkit {

struct LabeledSentence {
    std::string id;
    std::string text;
    int label = 0;  // 1 = check-worthy ("Yes"), 0 = not ("No")
};

struct SplitCounts {
    std::size_t total = 0;
    std::size_t yes = 0;
    std::size_t no = 0;
};

// Sentences grouped by split name (train, dev, dev_test, test). Ids are
// unique within a split.
class Dataset {
public:
    void add_split(const std::string& name, std::vector<LabeledSentence> sentences);
    bool has_split(std::string_view name) const;
    const std::vector<LabeledSentence>& split(std::string_view name) const;
    const std::map<std::string, std::vector<LabeledSentence>>& splits() const { return splits_; }

private:
    std::map<std::string, std::vector<LabeledSentence>> splits_;
};

// Parses "Sentence_id<TAB>Text<TAB>class_label" files. The label column must
// be literally "Yes" or "No"; anything else is rejected with its line number.
// Text may itself contain tabs (first and last tab delimit the columns).
std::vector<LabeledSentence> load_tsv(const std::filesystem::path& path,
                                      std::string_view split_name);

// Exact per-split (total, yes, no) counts, canonical split order first.
std::vector<std::pair<std::string, SplitCounts>> class_distribution(const Dataset& dataset);

SplitCounts count_labels(const std::vector<LabeledSentence>& sentences);

}  // namespace soupkit
