#include "arramon/validator.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>
#include <tuple>

namespace arramon {

std::string_view name(Severity s) { return s == Severity::Block ? "block" : "notify"; }

const std::vector<RuleInfo>& rule_registry() {
    static const std::vector<RuleInfo> rules{
        {"min_words", Severity::Block, "general", "instruction needs at least 6 words"},
        {"space_ratio", Severity::Block, "general", "40% or more of the characters are spaces"},
        {"symbol_forbidden", Severity::Block, "general", "symbol not allowed"},
        {"single_letter_word", Severity::Block, "general", "single-letter word other than \"a\""},
        {"letter_repeat", Severity::Block, "general", "same letter three times in a row"},
        {"repeated_word", Severity::Block, "general", "same word twice in a row"},
        {"unique_words", Severity::Block, "general", "fewer than 40% of the words are unique"},
        {"key_forbidden", Severity::Block, "general", "\"key\" is not allowed"},
        {"step_forbidden", Severity::Block, "general", "\"step\" is not allowed"},
        {"time_forbidden", Severity::Block, "general", "\"time\" is not allowed"},
        {"go_back_forbidden", Severity::Block, "general", "\"go back\" is not allowed"},
        {"return_forbidden", Severity::Block, "general", "\"return\" is not allowed"},
        {"came_forbidden", Severity::Block, "general", "\"came\" is not allowed"},
        {"item_forbidden", Severity::Block, "general", "\"item\" is not allowed"},
        {"turn_required", Severity::Block, "nav", "route starts with a rotation; mention \"turn\""},
        {"arrow_forbidden", Severity::Block, "nav", "\"arrow\" is not allowed"},
        {"tile_forbidden", Severity::Block, "asm", "\"tile\" is not allowed"},
        {"grid_forbidden", Severity::Block, "asm", "\"grid\" is not allowed"},
        {"space_forbidden", Severity::Block, "asm", "\"space\" is not allowed"},
        {"go_forbidden", Severity::Block, "asm", "\"go\" is not allowed"},
        {"corner_forbidden", Severity::Block, "asm", "\"corner\" is not allowed"},
        {"move_forbidden", Severity::Block, "asm", "\"move\" is not allowed"},
        {"outline_forbidden", Severity::Block, "asm", "the outline must not be referenced"},
        {"pickup_missing", Severity::Notify, "nav", "no pick-up or collect clause"},
        {"place_missing", Severity::Notify, "asm", "no place or put clause"},
        {"count_phrase", Severity::Notify, "general", "looks like a count of movements"},
        {"gray_building", Severity::Notify, "general", "references a gray building"},
    };
    return rules;
}

namespace {

const RuleInfo& rule(std::string_view id) {
    for (const auto& r : rule_registry()) {
        if (r.id == id) return r;
    }
    throw std::logic_error("unregistered rule " + std::string(id));
}

void add(std::vector<Violation>& out, std::string_view id, std::size_t begin, std::size_t end) {
    const RuleInfo& r = rule(id);
    out.push_back({std::string(id), begin, end, std::string(r.message), r.severity});
}

bool word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_number_word(const std::string& w) {
    static const std::set<std::string> words{"one",   "two",    "three",  "four",  "five",   "six",
                                             "seven", "eight",  "nine",   "ten",   "eleven", "twelve",
                                             "twice", "thrice", "several"};
    if (words.contains(w)) return true;
    return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

void forbid_terms(std::vector<Violation>& out, const std::vector<Token>& tokens,
                  std::initializer_list<std::pair<std::string_view, std::string_view>> terms) {
    for (const auto& t : tokens) {
        for (const auto& [term, id] : terms) {
            if (t.norm == term) add(out, id, t.begin, t.end);
        }
    }
}

void finish(std::vector<Violation>& v) {
    std::sort(v.begin(), v.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.begin, a.end, a.rule_id) < std::tie(b.begin, b.end, b.rule_id);
    });
}

bool contains_any(const std::vector<Token>& tokens, std::initializer_list<std::string_view> words) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const Token& t) {
        return std::find(words.begin(), words.end(), t.norm) != words.end();
    });
}

} // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i) break;
        std::size_t b = i, e = j;
        while (b < e && !word_char(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && !word_char(static_cast<unsigned char>(text[e - 1]))) --e;
        if (e > b) {
            Token t;
            t.begin = b;
            t.end = e;
            for (std::size_t k = b; k < e; ++k) {
                t.norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
            }
            out.push_back(std::move(t));
        }
        i = j;
    }
    return out;
}

std::vector<Violation> validate_general(std::string_view text) {
    std::vector<Violation> out;
    const auto tokens = tokenize(text);

    if (tokens.size() < 6) add(out, "min_words", 0, text.size());

    if (!text.empty()) {
        const auto spaces = std::count_if(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
        if (static_cast<double>(spaces) >= 0.4 * static_cast<double>(text.size())) add(out, "space_ratio", 0, text.size());
    }

    static constexpr std::string_view symbols = "([])&*^%$#@!=+";
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (symbols.find(text[i]) != std::string_view::npos) add(out, "symbol_forbidden", i, i + 1);
    }

    for (const auto& t : tokens) {
        if (t.norm.size() == 1 && std::isalpha(static_cast<unsigned char>(t.norm[0])) && t.norm != "a") {
            add(out, "single_letter_word", t.begin, t.end);
        }
    }

    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!std::isalpha(c)) continue;
        const auto lower = std::tolower(c);
        if (std::tolower(static_cast<unsigned char>(text[i + 1])) == lower &&
            std::tolower(static_cast<unsigned char>(text[i + 2])) == lower) {
            std::size_t e = i + 3;
            while (e < text.size() && std::tolower(static_cast<unsigned char>(text[e])) == lower) ++e;
            add(out, "letter_repeat", i, e);
            i = e - 1;
        }
    }

    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].norm == tokens[i - 1].norm) add(out, "repeated_word", tokens[i - 1].begin, tokens[i].end);
    }

    if (!tokens.empty()) {
        std::set<std::string> unique;
        for (const auto& t : tokens) unique.insert(t.norm);
        if (static_cast<double>(unique.size()) < 0.4 * static_cast<double>(tokens.size())) {
            add(out, "unique_words", 0, text.size());
        }
    }

    forbid_terms(out, tokens,
                 {{"key", "key_forbidden"},
                  {"step", "step_forbidden"},
                  {"time", "time_forbidden"},
                  {"return", "return_forbidden"},
                  {"came", "came_forbidden"},
                  {"item", "item_forbidden"}});
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i - 1].norm == "go" && tokens[i].norm == "back") add(out, "go_back_forbidden", tokens[i - 1].begin, tokens[i].end);
    }

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!is_number_word(tokens[i].norm)) continue;
        const bool followed = i + 1 < tokens.size() && (tokens[i + 1].norm == "times" || tokens[i + 1].norm == "blocks" ||
                                                         tokens[i + 1].norm == "paces" || tokens[i + 1].norm == "squares");
        if (followed || tokens[i].norm == "twice" || tokens[i].norm == "thrice") {
            add(out, "count_phrase", tokens[i].begin, followed ? tokens[i + 1].end : tokens[i].end);
        }
    }

    for (const auto& t : tokens) {
        if (t.norm == "gray" || t.norm == "grey") add(out, "gray_building", t.begin, t.end);
    }

    finish(out);
    return out;
}

std::vector<Violation> validate_nav(std::string_view text, std::span<const Action> gt_actions) {
    auto out = validate_general(text);
    const auto tokens = tokenize(text);
    if (!gt_actions.empty() && (gt_actions.front() == Action::Left || gt_actions.front() == Action::Right) &&
        !contains_any(tokens, {"turn"})) {
        add(out, "turn_required", 0, text.size());
    }
    forbid_terms(out, tokens, {{"arrow", "arrow_forbidden"}});
    if (!contains_any(tokens, {"pick", "collect", "grab", "take"})) add(out, "pickup_missing", 0, text.size());
    finish(out);
    return out;
}

std::vector<Violation> validate_asm(std::string_view text) {
    auto out = validate_general(text);
    const auto tokens = tokenize(text);
    forbid_terms(out, tokens,
                 {{"tile", "tile_forbidden"},
                  {"grid", "grid_forbidden"},
                  {"space", "space_forbidden"},
                  {"go", "go_forbidden"},
                  {"corner", "corner_forbidden"},
                  {"move", "move_forbidden"},
                  {"outline", "outline_forbidden"}});
    if (!contains_any(tokens, {"place", "put", "set", "drop"})) add(out, "place_missing", 0, text.size());
    finish(out);
    return out;
}

std::vector<Violation> validate(std::string_view text, Phase phase, std::span<const Action> gt_actions) {
    return phase == Phase::Navigation ? validate_nav(text, gt_actions) : validate_asm(text);
}

bool has_blocking(std::span<const Violation> v) {
    return std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.severity == Severity::Block; });
}

} // namespace arramon
