#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boltplan/corpus.hpp"
#include "boltplan/rng.hpp"
#include "boltplan/situation.hpp"

namespace boltplan {

// ─── Sequence grammar ───────────────────────────────────────────────────────
//
// Demonstrations follow  A P? M? I D : always Approach first, Push only if
// blocked, Mate only if misaligned (after Push when both), then Insert and
// Disassemble. Raw observations appear after A/P/M; I yields s1, D yields s2.

inline bool valid_seq_type(const std::string& type) {
    std::size_t i = 0;
    if (i >= type.size() || type[i] != 'A') return false;
    ++i;
    if (i < type.size() && type[i] == 'P') ++i;
    if (i < type.size() && type[i] == 'M') ++i;
    if (i + 2 != type.size()) return false;
    return type[i] == 'I' && type[i + 1] == 'D';
}

inline std::vector<ActionPrimitive> actions_for_type(const std::string& type) {
    if (!valid_seq_type(type)) throw ConfigError("invalid sequence type '" + type + "'");
    std::vector<ActionPrimitive> actions;
    for (char c : type) actions.push_back(action_from_code(c));
    return actions;
}

/// What the observation slot at each position of a sequence type holds.
struct SlotInfo {
    bool raw = false;
    int symbol = -1;               // symbolic slots
    Situation situation = Situation::ClearAligned;  // raw slots
};

/// Slot descriptors for a sequence type, one per observation position
/// (actions + 1 entries). The situation at a raw slot is read off the
/// remaining actions: Push still pending means blocked, Mate still pending
/// means misaligned.
inline std::vector<SlotInfo> slots_for_type(const std::string& type) {
    if (!valid_seq_type(type)) throw ConfigError("invalid sequence type '" + type + "'");
    std::vector<SlotInfo> slots(type.size() + 1);
    slots[0].symbol = 0;
    for (std::size_t i = 0; i < type.size(); ++i) {
        SlotInfo& slot = slots[i + 1];
        const char acted = type[i];
        if (acted == 'I') {
            slot.symbol = 1;
        } else if (acted == 'D') {
            slot.symbol = 2;
        } else {
            slot.raw = true;
            const std::string remaining = type.substr(i + 1);
            const bool blocked = remaining.find('P') != std::string::npos;
            const bool misaligned = remaining.find('M') != std::string::npos;
            slot.situation = situation_from_flags(misaligned, blocked);
        }
    }
    return slots;
}

/// The sequence type a given situation calls for.
inline std::string seq_type_for_situation(Situation s) {
    switch (s) {
        case Situation::ClearAligned: return "AID";
        case Situation::Misaligned: return "AMID";
        case Situation::Blocked: return "APID";
        case Situation::BlockedMisaligned: return "APMID";
    }
    throw std::invalid_argument("bad situation");
}

// ─── Generator configuration ────────────────────────────────────────────────

/// Feature-space layout shared by the corpus generator and the simulator:
/// each situation has a prototype vector; raw observations are the prototype
/// plus isotropic Gaussian noise.
///
/// The default prototypes keep situations that can co-occur in one sequence
/// (e.g. blocked-misaligned then misaligned after Push) closer together than
/// situations that never meet, which is what makes merging any two of them
/// visibly collapse demonstrated distinctions.
inline std::array<std::vector<double>, kSituationCount> default_prototypes(int feature_dim,
                                                                           double scale = 4.0) {
    if (feature_dim < 3)
        throw ConfigError("default prototypes need feature_dim >= 3, got " +
                          std::to_string(feature_dim));
    std::array<std::vector<double>, kSituationCount> protos;
    for (auto& p : protos) p.assign(static_cast<std::size_t>(feature_dim), 0.0);
    protos[static_cast<std::size_t>(Situation::Misaligned)][0] = scale;
    protos[static_cast<std::size_t>(Situation::Blocked)][2] = scale;
    protos[static_cast<std::size_t>(Situation::BlockedMisaligned)][0] = scale;
    protos[static_cast<std::size_t>(Situation::BlockedMisaligned)][1] = 0.8 * scale;
    return protos;
}

struct CorpusGenConfig {
    int feature_dim = 16;
    double sigma_obs = 0.1;
    // sequences to generate per type; map keeps iteration order deterministic
    std::map<std::string, int> counts = {
        {"AID", 30}, {"AMID", 30}, {"APID", 20}, {"APMID", 20}};
    std::array<std::vector<double>, kSituationCount> prototypes;

    CorpusGenConfig() : prototypes(default_prototypes(feature_dim)) {}

    void validate() const {
        if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
        if (sigma_obs < 0.0 || !std::isfinite(sigma_obs))
            throw ConfigError("sigma_obs must be finite and nonnegative");
        int total = 0;
        for (const auto& [type, n] : counts) {
            if (!valid_seq_type(type)) throw ConfigError("invalid sequence type '" + type + "'");
            if (n < 0) throw ConfigError("negative count for sequence type '" + type + "'");
            total += n;
        }
        if (total < 1) throw ConfigError("corpus would be empty; counts sum to zero");
        for (const auto& p : prototypes)
            if (static_cast<int>(p.size()) != feature_dim)
                throw ConfigError("prototype dimension does not match feature_dim");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["feature_dim"] = feature_dim;
        j["sigma_obs"] = sigma_obs;
        j["counts"] = counts;
        nlohmann::json protos;
        for (Situation s : all_situations())
            protos[situation_name(s)] = prototypes[static_cast<std::size_t>(s)];
        j["prototypes"] = protos;
        return j;
    }

    static CorpusGenConfig from_json(const nlohmann::json& j) {
        CorpusGenConfig cfg;
        if (j.contains("feature_dim")) cfg.feature_dim = j.at("feature_dim").get<int>();
        if (j.contains("sigma_obs")) cfg.sigma_obs = j.at("sigma_obs").get<double>();
        if (j.contains("counts")) cfg.counts = j.at("counts").get<std::map<std::string, int>>();
        if (j.contains("prototypes")) {
            for (Situation s : all_situations())
                cfg.prototypes[static_cast<std::size_t>(s)] =
                    j.at("prototypes").at(situation_name(s)).get<std::vector<double>>();
        } else if (cfg.feature_dim != 16) {
            cfg.prototypes = default_prototypes(cfg.feature_dim);
        }
        cfg.validate();
        return cfg;
    }

    static CorpusGenConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("config '" + path + "': " + e.what());
        }
        return from_json(j);
    }
};

// ─── Generation ─────────────────────────────────────────────────────────────

/// Build one demonstration of the given type. Raw slots sample
/// prototype(situation) + sigma_obs * N(0, I); obs ids are assigned
/// sequentially starting at next_obs_id (advanced on return).
inline ActionSequence make_demo_sequence(int seq_id, const std::string& type,
                                         const CorpusGenConfig& cfg, int& next_obs_id, Rng& rng) {
    ActionSequence seq;
    seq.seq_id = seq_id;
    seq.seq_type = type;
    seq.actions = actions_for_type(type);
    for (const SlotInfo& slot : slots_for_type(type)) {
        if (slot.raw) {
            std::vector<double> x = cfg.prototypes[static_cast<std::size_t>(slot.situation)];
            for (double& v : x) v += cfg.sigma_obs * rng.normal();
            seq.observations.push_back(Observation::raw_feature(next_obs_id++, std::move(x)));
        } else {
            seq.observations.push_back(Observation::symbolic(next_obs_id++, slot.symbol));
        }
    }
    return seq;
}

/// Generate a demonstration corpus: cfg.counts[type] sequences of each type,
/// deterministic in (cfg, seed).
inline DemoCorpus generate_demos(const CorpusGenConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(derive_seed(seed, 0));
    DemoCorpus corpus;
    int next_obs_id = 0;
    int next_seq_id = 0;
    for (const auto& [type, n] : cfg.counts)
        for (int i = 0; i < n; ++i)
            corpus.sequences.push_back(
                make_demo_sequence(next_seq_id++, type, cfg, next_obs_id, rng));
    corpus.validate();
    return corpus;
}

// ─── Training-pair sampling ─────────────────────────────────────────────────

struct PairRatios {
    double inclusive = 1.0 / 3.0;
    double exclusive = 1.0 / 3.0;
    double independent = 1.0 / 3.0;

    void validate() const {
        const double sum = inclusive + exclusive + independent;
        if (inclusive < 0 || exclusive < 0 || independent < 0)
            throw ConfigError("pair ratios must be nonnegative");
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("pair ratios must sum to 1, got " + std::to_string(sum));
    }
};

struct TrainingPair {
    int a = -1;
    int b = -1;
    RelationLabel label = RelationLabel::Independent;
};

namespace detail {

inline bool corpus_has_pairs(const RelationIndex& index, RelationLabel label) {
    const int k = index.class_count();
    switch (label) {
        case RelationLabel::Inclusive:
            for (int c = 0; c < k; ++c)
                if (index.class_members(c).size() >= 2) return true;
            return false;
        case RelationLabel::Exclusive:
            for (int id : index.observations())
                if (!index.exclusive_set(id).empty()) return true;
            return false;
        case RelationLabel::Independent: {
            const std::vector<int> ids = index.observations();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = i + 1; j < ids.size(); ++j)
                    if (index.classify(ids[i], ids[j]) == RelationLabel::Independent) return true;
            return false;
        }
    }
    return false;
}

}  // namespace detail

/// Sample `count` labeled observation pairs whose label mix approximates the
/// ratios. Per-label quotas use largest-remainder rounding so they always sum
/// to `count` exactly. A label with a nonzero quota but no pairs in the
/// corpus raises SamplingError naming the label.
inline std::vector<TrainingPair> sample_training_pairs(const RelationIndex& index, int count,
                                                       const PairRatios& ratios,
                                                       std::uint64_t seed) {
    ratios.validate();
    if (count < 0) throw ConfigError("pair count must be nonnegative");
    if (count == 0) return {};

    const std::array<RelationLabel, 3> labels = {
        RelationLabel::Inclusive, RelationLabel::Exclusive, RelationLabel::Independent};
    const std::array<double, 3> weights = {ratios.inclusive, ratios.exclusive,
                                           ratios.independent};
    std::array<int, 3> quota{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = count * weights[static_cast<std::size_t>(i)];
        quota[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(exact));
        frac[static_cast<std::size_t>(i)] = exact - std::floor(exact);
        assigned += quota[static_cast<std::size_t>(i)];
    }
    while (assigned < count) {  // hand leftovers to the largest remainders
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (frac[static_cast<std::size_t>(i)] > frac[static_cast<std::size_t>(best)]) best = i;
        ++quota[static_cast<std::size_t>(best)];
        frac[static_cast<std::size_t>(best)] = -1.0;
        ++assigned;
    }

    const std::vector<int> ids = index.observations();
    if (ids.empty()) throw SamplingError("corpus has no raw observations to pair");
    for (int i = 0; i < 3; ++i) {
        if (quota[static_cast<std::size_t>(i)] > 0 &&
            !detail::corpus_has_pairs(index, labels[static_cast<std::size_t>(i)]))
            throw SamplingError("corpus has no " +
                                relation_name(labels[static_cast<std::size_t>(i)]) +
                                " pairs but the ratio requests them");
    }

    Rng rng(derive_seed(seed, 1));
    std::vector<TrainingPair> pairs;
    pairs.reserve(static_cast<std::size_t>(count));
    for (int li = 0; li < 3; ++li) {
        const RelationLabel label = labels[static_cast<std::size_t>(li)];
        const int want = quota[static_cast<std::size_t>(li)];
        int found = 0;
        long attempts = 0;
        const long max_attempts = 10000L * std::max(want, 1);
        while (found < want) {
            if (++attempts > max_attempts)
                throw SamplingError(relation_name(label) +
                                    " pairs too sparse to sample the requested quota");
            const int a = ids[rng.uniform_below(ids.size())];
            if (label == RelationLabel::Inclusive) {
                const auto& inc = index.inclusive_set(a);
                if (inc.size() < 2) continue;
                const int b = inc[rng.uniform_below(inc.size())];
                if (b == a) continue;
                pairs.push_back({a, b, label});
            } else if (label == RelationLabel::Exclusive) {
                const std::vector<int> exc = index.exclusive_set(a);
                if (exc.empty()) continue;
                pairs.push_back({a, exc[rng.uniform_below(exc.size())], label});
            } else {
                const int b = ids[rng.uniform_below(ids.size())];
                if (b == a || index.classify(a, b) != RelationLabel::Independent) continue;
                pairs.push_back({a, b, label});
            }
            ++found;
        }
    }
    rng.shuffle(pairs);
    return pairs;
}

}  // namespace boltplan
