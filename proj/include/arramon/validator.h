#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arramon/action.h"

namespace arramon {

enum class Severity { Block, Notify };

std::string_view name(Severity s);

struct Violation {
    std::string rule_id;
    std::size_t begin = 0; ///< byte offsets into the text
    std::size_t end = 0;
    std::string message;
    Severity severity = Severity::Block;

    bool operator==(const Violation&) const = default;
};

struct RuleInfo {
    std::string_view id;
    Severity severity;
    std::string_view scope; ///< "general", "nav" or "asm"
    std::string_view message;
};

const std::vector<RuleInfo>& rule_registry();

/// Whitespace token with edge punctuation stripped and ASCII lowercased.
/// Bytes >= 0x80 count as word characters so UTF-8 text survives intact.
struct Token {
    std::string norm;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<Token> tokenize(std::string_view text);

std::vector<Violation> validate_general(std::string_view text);

/// `gt_actions` decides whether "turn" is required.
std::vector<Violation> validate_nav(std::string_view text, std::span<const Action> gt_actions);

std::vector<Violation> validate_asm(std::string_view text);

std::vector<Violation> validate(std::string_view text, Phase phase, std::span<const Action> gt_actions = {});

bool has_blocking(std::span<const Violation> v);

} // namespace arramon
