#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace arramon {

/// End is pick-up during navigation and place during assembly.
enum class Action { Forward, Left, Right, End };

inline constexpr std::array kActions{Action::Forward, Action::Left, Action::Right, Action::End};
inline constexpr int kActionCount = 4;

enum class Phase { Navigation, Assembly };

inline std::string_view name(Action a) {
    switch (a) {
    case Action::Forward:
        return "forward";
    case Action::Left:
        return "left";
    case Action::Right:
        return "right";
    case Action::End:
        return "end";
    }
    return "?";
}

inline std::optional<Action> parse_action(std::string_view s) {
    if (s == "forward") return Action::Forward;
    if (s == "left") return Action::Left;
    if (s == "right") return Action::Right;
    if (s == "end") return Action::End;
    return std::nullopt;
}

inline std::string_view name(Phase p) { return p == Phase::Navigation ? "nav" : "asm"; }

inline std::optional<Phase> parse_phase(std::string_view s) {
    if (s == "nav" || s == "navigation") return Phase::Navigation;
    if (s == "asm" || s == "assembly") return Phase::Assembly;
    return std::nullopt;
}

} // namespace arramon
