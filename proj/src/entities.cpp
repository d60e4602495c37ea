#include "soupkit/entities.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "soupkit/errors.hpp"

namespace soupkit {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string lower;
    bool symbol = false;  // single-char '$' or '%'
};

// Maximal alnum runs. An apostrophe or hyphen between letters and a comma,
// period or colon between digits stay inside the token ("o'clock",
// "ninety-nine", "1,000", "3:45"). '$' and '%' are their own tokens.
std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        if (c == '$' || c == '%') {
            out.push_back(Token{i, i + 1, std::string(1, c), true});
            ++i;
            continue;
        }
        if (!is_alnum(c)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n) {
            if (is_alnum(text[j])) {
                ++j;
                continue;
            }
            if (j > i && j + 1 < n) {
                const char sep = text[j];
                const char prev = text[j - 1];
                const char next = text[j + 1];
                const bool letter_join =
                    (sep == '\'' || sep == '-') && is_alpha(prev) && is_alpha(next);
                const bool digit_join =
                    (sep == ',' || sep == '.' || sep == ':') && is_digit(prev) && is_digit(next);
                if (letter_join || digit_join) {
                    j += 2;
                    continue;
                }
            }
            break;
        }
        out.push_back(Token{i, j, to_lower(text.substr(i, j - i)), false});
        i = j;
    }
    return out;
}

// Digits with optional ',' or '.' group separators; no colon.
bool is_numeric(const std::string& s) {
    if (s.empty() || !is_digit(s[0])) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (is_digit(c)) continue;
        if ((c == ',' || c == '.') && i + 1 < s.size() && is_digit(s[i + 1])) continue;
        return false;
    }
    return true;
}

bool is_year(const std::string& s) {
    if (s.size() != 4 || !std::all_of(s.begin(), s.end(), is_digit)) return false;
    const int y = std::stoi(s);
    return y >= 1900 && y <= 2099;
}

bool is_digit_ordinal(const std::string& s) {
    if (s.size() < 3) return false;
    const std::string suffix = s.substr(s.size() - 2);
    if (suffix != "st" && suffix != "nd" && suffix != "rd" && suffix != "th") return false;
    const std::string digits = s.substr(0, s.size() - 2);
    return !digits.empty() && std::all_of(digits.begin(), digits.end(), is_digit);
}

bool is_clock_time(const std::string& s) {
    const std::size_t colon = s.find(':');
    if (colon == std::string::npos || s.find(':', colon + 1) != std::string::npos) return false;
    const std::string hh = s.substr(0, colon);
    const std::string mm = s.substr(colon + 1);
    return (hh.size() == 1 || hh.size() == 2) && mm.size() == 2 &&
           std::all_of(hh.begin(), hh.end(), is_digit) &&
           std::all_of(mm.begin(), mm.end(), is_digit);
}

const std::unordered_set<std::string>& cardinal_words() {
    static const std::unordered_set<std::string> words = [] {
        std::unordered_set<std::string> w = {
            "one",     "two",      "three",    "four",     "five",     "six",      "seven",
            "eight",   "nine",     "ten",      "eleven",   "twelve",   "thirteen", "fourteen",
            "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty",  "thirty",
            "forty",   "fifty",    "sixty",    "seventy",  "eighty",   "ninety",   "hundred",
            "thousand", "million", "billion",  "trillion"};
        static const char* tens[] = {"twenty", "thirty", "forty",  "fifty",
                                     "sixty",  "seventy", "eighty", "ninety"};
        static const char* units[] = {"one", "two",   "three", "four", "five",
                                      "six", "seven", "eight", "nine"};
        for (const char* t : tens) {
            for (const char* u : units) {
                w.insert(std::string(t) + "-" + u);
            }
        }
        return w;
    }();
    return words;
}

const std::unordered_set<std::string>& ordinal_words() {
    static const std::unordered_set<std::string> words = {
        "first",      "second",     "third",      "fourth",    "fifth",     "sixth",
        "seventh",    "eighth",     "ninth",      "tenth",     "eleventh",  "twelfth",
        "thirteenth", "fourteenth", "fifteenth",  "sixteenth", "seventeenth",
        "eighteenth", "nineteenth", "twentieth",  "thirtieth", "fortieth",  "fiftieth",
        "sixtieth",   "seventieth", "eightieth",  "ninetieth", "hundredth", "thousandth",
        "millionth",  "billionth"};
    return words;
}

const std::unordered_set<std::string>& date_words() {
    static const std::unordered_set<std::string> words = {
        "january", "february", "march",    "april",   "may",      "june",    "july",
        "august",  "september", "october", "november", "december", "monday", "tuesday",
        "wednesday", "thursday", "friday", "saturday", "sunday"};
    return words;
}

const std::unordered_set<std::string>& money_suffixes() {
    static const std::unordered_set<std::string> words = {"dollar", "dollars", "cent", "cents"};
    return words;
}

// Equal-span tie-break order; lower wins.
int fine_priority(std::string_view fine) {
    static const std::unordered_map<std::string_view, int> order = {
        {"PERCENT", 0}, {"MONEY", 1}, {"ORDINAL", 2}, {"TIME", 3},  {"DATE", 4},
        {"CARDINAL", 5}, {"PERSON", 6}, {"ORG", 7},   {"GPE", 8},   {"NORP", 9},
        {"LOC", 10},    {"FAC", 11},  {"EVENT", 12}};
    auto it = order.find(fine);
    return it != order.end() ? it->second : 13;
}

struct Candidate {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string fine;
    int priority = 0;
};

}  // namespace

ParentType parent_of(std::string_view fine_type) {
    static const std::unordered_map<std::string_view, ParentType> map = {
        {"ORDINAL", ParentType::NUM}, {"CARDINAL", ParentType::NUM},
        {"QUANTITY", ParentType::NUM}, {"PERCENT", ParentType::NUM},
        {"MONEY", ParentType::NUM},   {"TIME", ParentType::DATE},
        {"DATE", ParentType::DATE},   {"NORP", ParentType::GPE},
        {"GPE", ParentType::GPE},     {"LOC", ParentType::LOC},
        {"FAC", ParentType::LOC},     {"EVENT", ParentType::LOC},
        {"PERSON", ParentType::PER},  {"ORG", ParentType::ORG}};
    auto it = map.find(fine_type);
    if (it == map.end()) {
        throw DomainError("unsupported fine entity type: " + std::string(fine_type));
    }
    return it->second;
}

std::string_view parent_name(ParentType p) {
    static constexpr std::string_view names[] = {"NUM", "DATE", "GPE", "LOC", "PER", "ORG"};
    return names[static_cast<std::size_t>(p)];
}

std::string_view parent_token(ParentType p) {
    static constexpr std::string_view tokens[] = {"<NUM>", "<DATE>", "<GPE>",
                                                  "<LOC>", "<PER>",  "<ORG>"};
    return tokens[static_cast<std::size_t>(p)];
}

void GazetteerSet::add(std::string surface, std::string fine_type) {
    if (surface.empty()) {
        throw DomainError("gazetteer surface must be non-empty");
    }
    parent_of(fine_type);  // rejects unknown fine types
    for (const GazetteerEntry& e : entries_) {
        if (e.surface == surface && e.fine_type == fine_type) return;
    }
    entries_.push_back(GazetteerEntry{std::move(surface), std::move(fine_type)});
}

GazetteerSet GazetteerSet::load_file(const std::filesystem::path& path) {
    GazetteerSet set;
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open gazetteer file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError("gazetteer " + path.string() + " line " + std::to_string(line_no) +
                              ": expected surface<TAB>fine_type");
        }
        try {
            set.add(line.substr(0, tab), line.substr(tab + 1));
        } catch (const DomainError& e) {
            throw ValueError("gazetteer " + path.string() + " line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    return set;
}

GazetteerSet GazetteerSet::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("gazetteer directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    GazetteerSet merged;
    for (const auto& file : files) {
        GazetteerSet part = load_file(file);
        for (const GazetteerEntry& e : part.entries()) {
            merged.add(e.surface, e.fine_type);
        }
    }
    return merged;
}

std::vector<EntityMention> extract_entities(std::string_view text,
                                            const GazetteerSet& gazetteers) {
    const std::vector<Token> tokens = tokenize(text);
    const std::size_t n = tokens.size();

    // Only whitespace may separate the tokens of a multi-token pattern.
    auto ws_adjacent = [&](std::size_t i) {
        if (i + 1 >= n) return false;
        for (std::size_t k = tokens[i].end; k < tokens[i + 1].begin; ++k) {
            if (!is_space(text[k])) return false;
        }
        return true;
    };

    std::vector<Candidate> candidates;
    auto push = [&](std::size_t begin, std::size_t end, const char* fine) {
        candidates.push_back(Candidate{begin, end, fine, fine_priority(fine)});
    };

    std::vector<bool> is_card_word(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        is_card_word[i] = !tokens[i].symbol && cardinal_words().count(tokens[i].lower) > 0;
    }

    // Number expressions: either one numeric token or a maximal run of
    // number words. Each yields a CARDINAL candidate and may combine with a
    // following "percent"/"%", currency word or "o'clock".
    auto handle_number_expr = [&](std::size_t first, std::size_t last) {
        push(tokens[first].begin, tokens[last].end, "CARDINAL");
        if (ws_adjacent(last)) {
            const Token& next = tokens[last + 1];
            if (next.lower == "percent" || next.lower == "%") {
                push(tokens[first].begin, next.end, "PERCENT");
            } else if (money_suffixes().count(next.lower)) {
                push(tokens[first].begin, next.end, "MONEY");
            } else if (next.lower == "o'clock") {
                push(tokens[first].begin, next.end, "TIME");
            }
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        const Token& tok = tokens[i];
        if (tok.symbol) {
            // "$" + amount, optionally extended by a scale word run
            // ("$3 million").
            if (tok.lower == "$" && ws_adjacent(i) && is_numeric(tokens[i + 1].lower)) {
                std::size_t last = i + 1;
                while (ws_adjacent(last) && is_card_word[last + 1]) ++last;
                push(tok.begin, tokens[last].end, "MONEY");
            }
            continue;
        }
        if (is_numeric(tok.lower)) {
            // absorb trailing scale words: "3 million"
            std::size_t last = i;
            while (ws_adjacent(last) && is_card_word[last + 1]) ++last;
            handle_number_expr(i, last);
            if (is_year(tok.lower)) push(tok.begin, tok.end, "DATE");
        } else if (is_card_word[i]) {
            if (i > 0 && is_card_word[i - 1] && ws_adjacent(i - 1)) {
                // interior of a word run; handled at the run head
            } else {
                std::size_t last = i;
                while (ws_adjacent(last) && is_card_word[last + 1]) ++last;
                handle_number_expr(i, last);
            }
        }
        if (is_digit_ordinal(tok.lower) || ordinal_words().count(tok.lower)) {
            push(tok.begin, tok.end, "ORDINAL");
        }
        if (is_clock_time(tok.lower)) {
            push(tok.begin, tok.end, "TIME");
        }
        if (date_words().count(tok.lower)) {
            push(tok.begin, tok.end, "DATE");
        }
    }

    // Gazetteer surfaces: exact, case-sensitive substring hits on word
    // boundaries.
    for (const GazetteerEntry& entry : gazetteers.entries()) {
        std::size_t from = 0;
        while (true) {
            const std::size_t pos = text.find(entry.surface, from);
            if (pos == std::string_view::npos) break;
            const std::size_t end = pos + entry.surface.size();
            const bool left_ok = pos == 0 || !is_alnum(text[pos - 1]);
            const bool right_ok = end == text.size() || !is_alnum(text[end]);
            if (left_ok && right_ok) {
                candidates.push_back(Candidate{pos, end, entry.fine_type,
                                               fine_priority(entry.fine_type)});
            }
            from = pos + 1;
        }
    }

    // Leftmost match first; on the same start the longest span wins, then the
    // fine-type priority.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        if (a.end != b.end) return a.end > b.end;
        return a.priority < b.priority;
    });

    std::vector<EntityMention> mentions;
    std::size_t cursor = 0;
    for (const Candidate& c : candidates) {
        if (c.begin < cursor) continue;
        EntityMention m;
        m.start = c.begin;
        m.end = c.end;
        m.surface = std::string(text.substr(c.begin, c.end - c.begin));
        m.fine_type = c.fine;
        m.parent = parent_of(c.fine);
        mentions.push_back(std::move(m));
        cursor = c.end;
    }
    return mentions;
}

std::string substitute_tokens(std::string_view text,
                              const std::vector<EntityMention>& mentions) {
    std::size_t cursor = 0;
    std::string out;
    out.reserve(text.size());
    for (const EntityMention& m : mentions) {
        if (m.start < cursor || m.end <= m.start || m.end > text.size()) {
            throw DomainError("mentions must be sorted, non-overlapping and in range");
        }
        if (text.substr(m.start, m.end - m.start) != m.surface) {
            throw DomainError("mention surface does not match text at [" +
                              std::to_string(m.start) + ", " + std::to_string(m.end) + ")");
        }
        out.append(text.substr(cursor, m.start - cursor));
        out.append(parent_token(m.parent));
        cursor = m.end;
    }
    out.append(text.substr(cursor));
    return out;
}

FeatureVector count_features(const std::vector<EntityMention>& mentions) {
    FeatureVector fv;
    for (const EntityMention& m : mentions) {
        ++fv.counts[static_cast<std::size_t>(m.parent)];
    }
    return fv;
}

CorpusEntityStats corpus_entity_stats(const std::vector<LabeledSentence>& sentences,
                                      const GazetteerSet& gazetteers) {
    ClassEntityStats stats[2];
    std::array<std::size_t, kParentTypeCount> hist[2] = {};
    for (const LabeledSentence& s : sentences) {
        ClassEntityStats& cls = stats[s.label == 1 ? 1 : 0];
        auto& h = hist[s.label == 1 ? 1 : 0];
        const auto mentions = extract_entities(s.text, gazetteers);
        cls.texts += 1;
        cls.mentions += mentions.size();
        for (const EntityMention& m : mentions) {
            ++h[static_cast<std::size_t>(m.parent)];
        }
    }
    if (stats[0].texts == 0 || stats[1].texts == 0) {
        throw DomainError("corpus_entity_stats: both classes must be present");
    }
    for (int cls = 0; cls < 2; ++cls) {
        ClassEntityStats& st = stats[cls];
        st.mean_mentions = static_cast<double>(st.mentions) / static_cast<double>(st.texts);
        if (st.mentions == 0) {
            st.no_mentions = true;
        } else {
            for (std::size_t p = 0; p < kParentTypeCount; ++p) {
                st.type_distribution[p] =
                    static_cast<double>(hist[cls][p]) / static_cast<double>(st.mentions);
            }
        }
    }
    return CorpusEntityStats{stats[1], stats[0]};
}

CorpusEntityStats corpus_entity_stats(const Dataset& dataset, const GazetteerSet& gazetteers) {
    std::vector<LabeledSentence> pooled;
    for (const auto& [name, sentences] : dataset.splits()) {
        pooled.insert(pooled.end(), sentences.begin(), sentences.end());
    }
    return corpus_entity_stats(pooled, gazetteers);
}

}  // namespace soupkit
