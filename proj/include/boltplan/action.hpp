#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace boltplan {

/// The five manipulation primitives. Enum order is the canonical expansion
/// order used by the planner, so search results are deterministic.
enum class ActionPrimitive : int {
    Approach = 0,
    Push = 1,
    Mate = 2,
    Insert = 3,
    Disassemble = 4,
};

inline constexpr int kActionCount = 5;

inline constexpr std::array<ActionPrimitive, kActionCount> all_actions() {
    return {ActionPrimitive::Approach, ActionPrimitive::Push, ActionPrimitive::Mate,
            ActionPrimitive::Insert, ActionPrimitive::Disassemble};
}

inline const std::string& action_name(ActionPrimitive a) {
    static const std::array<std::string, kActionCount> names = {
        "Approach", "Push", "Mate", "Insert", "Disassemble"};
    return names[static_cast<std::size_t>(a)];
}

/// Single-letter code, e.g. 'A' for Approach. Sequence types are strings of
/// these codes ("APMID" = Approach, Push, Mate, Insert, Disassemble).
inline char action_code(ActionPrimitive a) {
    static constexpr std::array<char, kActionCount> codes = {'A', 'P', 'M', 'I', 'D'};
    return codes[static_cast<std::size_t>(a)];
}

inline ActionPrimitive action_from_code(char c) {
    for (ActionPrimitive a : all_actions())
        if (action_code(a) == c) return a;
    throw std::invalid_argument(std::string("unknown action code '") + c + "'");
}

inline ActionPrimitive action_from_name(const std::string& name) {
    for (ActionPrimitive a : all_actions())
        if (action_name(a) == name) return a;
    throw std::invalid_argument("unknown action name '" + name + "'");
}

}  // namespace boltplan
