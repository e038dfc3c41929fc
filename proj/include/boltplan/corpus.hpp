#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "boltplan/action.hpp"
#include "boltplan/errors.hpp"

namespace boltplan {

inline constexpr int kSymbolCount = 3;  // s0 initial, s1 engaged, s2 removed

// ─── Records ────────────────────────────────────────────────────────────────

/// One observation in a demonstration: either a raw feature vector (image
/// analogue) or one of the three symbolic markers s0/s1/s2.
struct Observation {
    enum class Kind { RawFeature, Symbolic };

    int obs_id = -1;
    Kind kind = Kind::Symbolic;
    std::vector<double> raw;  // only for RawFeature
    int symbol = -1;          // only for Symbolic: 0, 1, 2

    static Observation raw_feature(int id, std::vector<double> values) {
        Observation o;
        o.obs_id = id;
        o.kind = Kind::RawFeature;
        o.raw = std::move(values);
        return o;
    }

    static Observation symbolic(int id, int symbol) {
        Observation o;
        o.obs_id = id;
        o.kind = Kind::Symbolic;
        o.symbol = symbol;
        return o;
    }

    bool is_raw() const { return kind == Kind::RawFeature; }
};

/// One demonstrated sequence: alternating observations and actions, stored as
/// parallel arrays with observations.size() == actions.size() + 1.
///
/// Layout mirrors the demonstration table: the sequence starts at the s0
/// observation, interleaves an observation after every action, and ends at
/// the s2 observation. seq_type is the action-code string, e.g. "APID".
struct ActionSequence {
    int seq_id = -1;
    std::string seq_type;
    std::vector<Observation> observations;
    std::vector<ActionPrimitive> actions;

    void validate() const {
        if (actions.empty()) throw StructuralError("sequence has no actions", seq_id);
        if (observations.size() != actions.size() + 1)
            throw StructuralError("observation/action counts do not alternate", seq_id);
        if (seq_type.size() != actions.size())
            throw StructuralError("seq_type length does not match action count", seq_id);
        for (std::size_t i = 0; i < actions.size(); ++i) {
            if (seq_type[i] != action_code(actions[i]))
                throw StructuralError("seq_type does not spell the action list", seq_id);
        }
        const Observation& first = observations.front();
        if (first.is_raw() || first.symbol != 0)
            throw StructuralError("sequence does not begin at s0", seq_id);
        const Observation& last = observations.back();
        if (last.is_raw() || last.symbol != kSymbolCount - 1)
            throw StructuralError("sequence does not end at s2", seq_id);
        for (const Observation& o : observations) {
            if (o.is_raw()) {
                if (o.raw.empty()) throw StructuralError("raw observation has no values", seq_id);
            } else if (o.symbol < 0 || o.symbol >= kSymbolCount) {
                throw StructuralError("symbol id out of range", seq_id);
            }
        }
    }
};

/// A set of demonstrations with corpus-wide consistency checks.
struct DemoCorpus {
    std::vector<ActionSequence> sequences;

    void validate() const {
        std::unordered_set<int> seen_ids;
        int dim = -1;
        for (const ActionSequence& seq : sequences) {
            seq.validate();
            for (const Observation& o : seq.observations) {
                if (!seen_ids.insert(o.obs_id).second)
                    throw StructuralError("duplicate obs_id " + std::to_string(o.obs_id),
                                          seq.seq_id);
                if (o.is_raw()) {
                    if (dim == -1) dim = static_cast<int>(o.raw.size());
                    else if (dim != static_cast<int>(o.raw.size()))
                        throw StructuralError("raw observations disagree on dimension", seq.seq_id);
                }
            }
        }
    }

    /// Dimension of raw observations, or -1 if the corpus has none.
    int feature_dim() const {
        for (const ActionSequence& seq : sequences)
            for (const Observation& o : seq.observations)
                if (o.is_raw()) return static_cast<int>(o.raw.size());
        return -1;
    }

    const Observation* find_observation(int obs_id) const {
        for (const ActionSequence& seq : sequences)
            for (const Observation& o : seq.observations)
                if (o.obs_id == obs_id) return &o;
        return nullptr;
    }
};

// ─── Observation groups ─────────────────────────────────────────────────────
//
// Observations sharing a sequence type and position were produced by the same
// demonstrated circumstance, so they form one group (a row of the
// cluster-assignment count matrix). The three symbolic markers are groups of
// their own and always occupy indices 0..2.

struct GroupKey {
    bool symbolic = false;
    int symbol = -1;       // symbolic groups
    std::string seq_type;  // raw groups
    int position = -1;     // observation slot within the sequence

    std::string name() const {
        if (symbolic) return "s" + std::to_string(symbol);
        return seq_type + "#" + std::to_string(position);
    }

    friend bool operator==(const GroupKey& a, const GroupKey& b) {
        return a.symbolic == b.symbolic && a.symbol == b.symbol && a.seq_type == b.seq_type &&
               a.position == b.position;
    }

    friend bool operator<(const GroupKey& a, const GroupKey& b) {
        if (a.symbolic != b.symbolic) return a.symbolic;  // symbolic groups first
        if (a.symbolic) return a.symbol < b.symbol;
        if (a.seq_type != b.seq_type) return a.seq_type < b.seq_type;
        return a.position < b.position;
    }
};

struct GroupTable {
    std::vector<GroupKey> keys;              // index = group id, canonical order
    std::vector<std::vector<int>> members;   // obs ids per group, ascending
    std::unordered_map<int, int> group_of;   // obs id -> group id

    int count() const { return static_cast<int>(keys.size()); }

    const std::string name(int group) const { return keys[static_cast<std::size_t>(group)].name(); }

    int group_of_obs(int obs_id) const {
        auto it = group_of.find(obs_id);
        if (it == group_of.end())
            throw LookupError("obs_id " + std::to_string(obs_id) + " not in group table");
        return it->second;
    }
};

/// Partition every observation into groups. Symbolic groups s0/s1/s2 are
/// always present (possibly empty) so downstream indexing is stable; raw
/// groups follow, ordered by (seq_type, position).
inline GroupTable extract_groups(const DemoCorpus& corpus) {
    corpus.validate();

    std::vector<std::pair<GroupKey, std::vector<int>>> buckets;
    for (int s = 0; s < kSymbolCount; ++s) {
        GroupKey key;
        key.symbolic = true;
        key.symbol = s;
        buckets.emplace_back(key, std::vector<int>{});
    }
    auto bucket_for = [&buckets](const GroupKey& key) -> std::vector<int>& {
        for (auto& [k, v] : buckets)
            if (k == key) return v;
        buckets.emplace_back(key, std::vector<int>{});
        return buckets.back().second;
    };

    for (const ActionSequence& seq : corpus.sequences) {
        for (std::size_t pos = 0; pos < seq.observations.size(); ++pos) {
            const Observation& o = seq.observations[pos];
            GroupKey key;
            if (o.is_raw()) {
                key.seq_type = seq.seq_type;
                key.position = static_cast<int>(pos);
            } else {
                key.symbolic = true;
                key.symbol = o.symbol;
            }
            bucket_for(key).push_back(o.obs_id);
        }
    }

    std::sort(buckets.begin(), buckets.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    GroupTable table;
    for (auto& [key, ids] : buckets) {
        std::sort(ids.begin(), ids.end());
        const int group = static_cast<int>(table.keys.size());
        for (int id : ids) table.group_of.emplace(id, group);
        table.keys.push_back(key);
        table.members.push_back(std::move(ids));
    }
    return table;
}

// ─── Demonstrated relationships ─────────────────────────────────────────────
//
// Two raw observations are related by how their demonstrations continue:
//   Inclusive   — identical remaining action list, so they depict the same
//                 circumstance and should embed close together.
//   Exclusive   — distinguishable circumstances: they appear at different
//                 positions of one sequence, or one is co-sequenced with a
//                 partner that looks the same as the other.
//   Independent — neither of the above; nothing is asserted.
// Exclusive takes priority whenever both rules could fire.

enum class RelationLabel : int { Inclusive = 0, Exclusive = 1, Independent = 2 };

inline const std::string& relation_name(RelationLabel r) {
    static const std::array<std::string, 3> names = {"inclusive", "exclusive", "independent"};
    return names[static_cast<std::size_t>(r)];
}

class RelationIndex {
public:
    /// Suffix class = the remaining action list after the observation.
    /// Same-sequence pairs seed the exclusive sets; because every member of a
    /// suffix class shares those partners, the seeded sets already contain
    /// the one-hop extension, and queries apply the symmetric closure.
    explicit RelationIndex(const DemoCorpus& corpus) {
        corpus.validate();
        std::unordered_map<std::string, int> class_of_suffix;

        for (const ActionSequence& seq : corpus.sequences) {
            std::vector<int> seq_raw;        // obs ids of raw observations
            std::vector<int> seq_class;      // their suffix classes
            for (std::size_t pos = 0; pos < seq.observations.size(); ++pos) {
                const Observation& o = seq.observations[pos];
                if (!o.is_raw()) continue;
                const std::string suffix = seq.seq_type.substr(pos);
                auto [it, fresh] = class_of_suffix.emplace(
                    suffix, static_cast<int>(class_members_.size()));
                if (fresh) {
                    class_members_.emplace_back();
                    class_exclusive_.emplace_back();
                }
                class_of_obs_[o.obs_id] = it->second;
                class_members_[static_cast<std::size_t>(it->second)].push_back(o.obs_id);
                seq_raw.push_back(o.obs_id);
                seq_class.push_back(it->second);
            }
            for (std::size_t i = 0; i < seq_raw.size(); ++i)
                for (std::size_t j = i + 1; j < seq_raw.size(); ++j) {
                    class_exclusive_[static_cast<std::size_t>(seq_class[i])].insert(seq_raw[j]);
                    class_exclusive_[static_cast<std::size_t>(seq_class[j])].insert(seq_raw[i]);
                }
        }
        for (auto& members : class_members_) std::sort(members.begin(), members.end());
    }

    bool known(int obs_id) const { return class_of_obs_.count(obs_id) > 0; }

    /// All observations whose demonstrations continue identically; contains
    /// the observation itself.
    const std::vector<int>& inclusive_set(int obs_id) const {
        return class_members_[static_cast<std::size_t>(class_of(obs_id))];
    }

    bool in_exclusive(int a, int b) const {
        if (a == b) return false;
        const auto& exc_a = class_exclusive_[static_cast<std::size_t>(class_of(a))];
        if (exc_a.count(b)) return true;
        const auto& exc_b = class_exclusive_[static_cast<std::size_t>(class_of(b))];
        return exc_b.count(a) > 0;
    }

    /// Materialized exclusive set (symmetric closure applied), ascending.
    std::vector<int> exclusive_set(int obs_id) const {
        const int cls = class_of(obs_id);
        std::unordered_set<int> out(class_exclusive_[static_cast<std::size_t>(cls)].begin(),
                                    class_exclusive_[static_cast<std::size_t>(cls)].end());
        for (std::size_t other = 0; other < class_exclusive_.size(); ++other) {
            if (static_cast<int>(other) == cls) continue;
            if (class_exclusive_[other].count(obs_id))
                out.insert(class_members_[other].begin(), class_members_[other].end());
        }
        std::vector<int> sorted(out.begin(), out.end());
        std::sort(sorted.begin(), sorted.end());
        return sorted;
    }

    RelationLabel classify(int a, int b) const {
        if (a == b) throw std::invalid_argument("relation of an observation with itself");
        const int ca = class_of(a);
        const int cb = class_of(b);
        if (in_exclusive(a, b)) return RelationLabel::Exclusive;  // wins over inclusive
        if (ca == cb) return RelationLabel::Inclusive;
        return RelationLabel::Independent;
    }

    int class_count() const { return static_cast<int>(class_members_.size()); }

    const std::vector<int>& class_members(int cls) const {
        return class_members_[static_cast<std::size_t>(cls)];
    }

    int class_of(int obs_id) const {
        auto it = class_of_obs_.find(obs_id);
        if (it == class_of_obs_.end())
            throw LookupError("obs_id " + std::to_string(obs_id) +
                              " has no relation entry (symbolic or unknown)");
        return it->second;
    }

    /// Raw observation ids covered by the index, ascending.
    std::vector<int> observations() const {
        std::vector<int> ids;
        ids.reserve(class_of_obs_.size());
        for (const auto& [id, cls] : class_of_obs_) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

private:
    std::unordered_map<int, int> class_of_obs_;
    std::vector<std::vector<int>> class_members_;
    // class -> observations co-sequenced with any member of the class
    std::vector<std::unordered_set<int>> class_exclusive_;
};

// ─── File format ────────────────────────────────────────────────────────────
//
// Line-delimited JSON. First line is a header record carrying the format tag
// and optional metadata (e.g. the generator configuration); each following
// line is one sequence:
//   {"seq_id":0,"seq_type":"AID","items":[{"obs_id":0,"sym":0},"Approach",...]}

inline constexpr const char* kCorpusFormatTag = "demo-corpus/1";

struct CorpusFile {
    DemoCorpus corpus;
    nlohmann::json meta;  // header metadata, may be null
};

inline void save_corpus(const DemoCorpus& corpus, const std::string& path,
                        const nlohmann::json& meta = nlohmann::json()) {
    corpus.validate();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");

    nlohmann::json header;
    header["format"] = kCorpusFormatTag;
    if (!meta.is_null()) header["meta"] = meta;
    out << header.dump() << "\n";

    for (const ActionSequence& seq : corpus.sequences) {
        nlohmann::json rec;
        rec["seq_id"] = seq.seq_id;
        rec["seq_type"] = seq.seq_type;
        nlohmann::json items = nlohmann::json::array();
        for (std::size_t i = 0; i < seq.actions.size(); ++i) {
            const Observation& o = seq.observations[i];
            nlohmann::json obs;
            obs["obs_id"] = o.obs_id;
            if (o.is_raw()) obs["raw"] = o.raw;
            else obs["sym"] = o.symbol;
            items.push_back(obs);
            items.push_back(action_name(seq.actions[i]));
        }
        const Observation& last = seq.observations.back();
        nlohmann::json obs;
        obs["obs_id"] = last.obs_id;
        if (last.is_raw()) obs["raw"] = last.raw;
        else obs["sym"] = last.symbol;
        items.push_back(obs);
        rec["items"] = items;
        out << rec.dump() << "\n";
    }
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

inline CorpusFile load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus file '" + path + "'");

    CorpusFile result;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("corpus '" + path + "' line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        if (!saw_header) {
            saw_header = true;
            if (!rec.contains("format") || rec["format"] != kCorpusFormatTag)
                throw ConfigError("corpus '" + path + "' missing format tag '" +
                                  std::string(kCorpusFormatTag) + "'");
            if (rec.contains("meta")) result.meta = rec["meta"];
            continue;
        }

        ActionSequence seq;
        try {
            seq.seq_id = rec.at("seq_id").get<int>();
            seq.seq_type = rec.at("seq_type").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("corpus '" + path + "' line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        const auto& items = rec.at("items");
        if (!items.is_array() || items.empty() || items.size() % 2 == 0)
            throw StructuralError("items must alternate obs/action and end on an observation",
                                  seq.seq_id);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& item = items[i];
            if (i % 2 == 0) {
                if (!item.is_object())
                    throw StructuralError("expected an observation at item " + std::to_string(i),
                                          seq.seq_id);
                Observation o;
                o.obs_id = item.at("obs_id").get<int>();
                if (item.contains("raw")) {
                    o.kind = Observation::Kind::RawFeature;
                    o.raw = item.at("raw").get<std::vector<double>>();
                } else if (item.contains("sym")) {
                    o.kind = Observation::Kind::Symbolic;
                    o.symbol = item.at("sym").get<int>();
                } else {
                    throw StructuralError("observation has neither 'raw' nor 'sym'", seq.seq_id);
                }
                seq.observations.push_back(std::move(o));
            } else {
                if (!item.is_string())
                    throw StructuralError("expected an action name at item " + std::to_string(i),
                                          seq.seq_id);
                try {
                    seq.actions.push_back(action_from_name(item.get<std::string>()));
                } catch (const std::invalid_argument& e) {
                    throw StructuralError(e.what(), seq.seq_id);
                }
            }
        }
        result.corpus.sequences.push_back(std::move(seq));
    }
    if (!saw_header)
        throw ConfigError("corpus '" + path + "' is empty");
    result.corpus.validate();
    return result;
}

}  // namespace boltplan
