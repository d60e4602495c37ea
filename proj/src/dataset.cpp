#include "soupkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "soupkit/errors.hpp"

namespace soupkit {

namespace {

constexpr std::string_view kHeader = "Sentence_id\tText\tclass_label";

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void Dataset::add_split(const std::string& name, std::vector<LabeledSentence> sentences) {
    std::unordered_set<std::string_view> ids;
    for (const LabeledSentence& s : sentences) {
        if (!ids.insert(s.id).second) {
            throw ValueError("duplicate sentence id '" + s.id + "' in split " + name);
        }
    }
    splits_[name] = std::move(sentences);
}

bool Dataset::has_split(std::string_view name) const {
    return splits_.count(std::string(name)) > 0;
}

const std::vector<LabeledSentence>& Dataset::split(std::string_view name) const {
    auto it = splits_.find(std::string(name));
    if (it == splits_.end()) {
        throw DomainError("dataset has no split named '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<LabeledSentence> load_tsv(const std::filesystem::path& path,
                                      std::string_view split_name) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open data file: " + path.string());
    }
    const std::string where = std::string(split_name) + " (" + path.string() + ")";

    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty data file: " + where);
    }
    if (strip_cr(line) != kHeader) {
        throw FormatError("bad header in " + where + "; expected '" + std::string(kHeader) + "'");
    }

    std::vector<LabeledSentence> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::size_t first_tab = line.find('\t');
        const std::size_t last_tab = line.rfind('\t');
        if (first_tab == std::string::npos || last_tab == first_tab) {
            throw FormatError("line " + std::to_string(line_no) + " of " + where +
                              ": missing column");
        }
        LabeledSentence s;
        s.id = line.substr(0, first_tab);
        s.text = line.substr(first_tab + 1, last_tab - first_tab - 1);
        const std::string label = line.substr(last_tab + 1);
        if (label == "Yes") {
            s.label = 1;
        } else if (label == "No") {
            s.label = 0;
        } else {
            throw ValueError("line " + std::to_string(line_no) + " of " + where +
                             ": unknown label '" + label + "'");
        }
        if (blank(s.text)) {
            throw ValueError("line " + std::to_string(line_no) + " of " + where + ": empty text");
        }
        out.push_back(std::move(s));
    }
    return out;
}

SplitCounts count_labels(const std::vector<LabeledSentence>& sentences) {
    SplitCounts c;
    c.total = sentences.size();
    for (const LabeledSentence& s : sentences) {
        if (s.label == 1) {
            ++c.yes;
        } else {
            ++c.no;
        }
    }
    return c;
}

std::vector<std::pair<std::string, SplitCounts>> class_distribution(const Dataset& dataset) {
    static const char* kCanonical[] = {"train", "dev", "dev_test", "test"};
    std::vector<std::pair<std::string, SplitCounts>> out;
    for (const char* name : kCanonical) {
        if (dataset.has_split(name)) {
            out.emplace_back(name, count_labels(dataset.split(name)));
        }
    }
    for (const auto& [name, sentences] : dataset.splits()) {
        const bool canonical = std::find(std::begin(kCanonical), std::end(kCanonical), name) !=
                               std::end(kCanonical);
        if (!canonical) {
            out.emplace_back(name, count_labels(sentences));
        }
    }
    return out;
}

}  // namespace soupkit
