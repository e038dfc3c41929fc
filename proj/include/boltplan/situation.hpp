#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace boltplan {

/// Physical condition of the bolt right after Approach, before any
/// corrective action. Determines which raw-image prototype is observed and
/// which corrective actions a demonstration needs.
enum class Situation : int {
    ClearAligned = 0,      // insertable as-is
    Misaligned = 1,        // needs Mate
    Blocked = 2,           // needs Push
    BlockedMisaligned = 3,  // needs Push and Mate
};

inline constexpr int kSituationCount = 4;

inline constexpr std::array<Situation, kSituationCount> all_situations() {
    return {Situation::ClearAligned, Situation::Misaligned, Situation::Blocked,
            Situation::BlockedMisaligned};
}

inline Situation situation_from_flags(bool misaligned, bool blocked) {
    if (blocked) return misaligned ? Situation::BlockedMisaligned : Situation::Blocked;
    return misaligned ? Situation::Misaligned : Situation::ClearAligned;
}

inline const std::string& situation_name(Situation s) {
    static const std::array<std::string, kSituationCount> names = {
        "clear-aligned", "misaligned", "blocked", "blocked-misaligned"};
    return names[static_cast<std::size_t>(s)];
}

/// Episode class label by the action multiset a faultless run needs:
/// AI, AMI, API, APMI.
inline const std::string& situation_class_label(Situation s) {
    static const std::array<std::string, kSituationCount> labels = {"AI", "AMI", "API", "APMI"};
    return labels[static_cast<std::size_t>(s)];
}

inline Situation situation_from_name(const std::string& name) {
    for (Situation s : all_situations())
        if (situation_name(s) == name) return s;
    throw std::invalid_argument("unknown situation '" + name + "'");
}

}  // namespace boltplan
