#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "boltplan/corpus_gen.hpp"
#include "boltplan/rng.hpp"
#include "boltplan/situation.hpp"

namespace boltplan {

// ─── Configuration ──────────────────────────────────────────────────────────

/// Simulator parameters. The feature-space side (prototypes, sigma_obs)
/// deliberately matches CorpusGenConfig so a model trained on generated
/// demonstrations sees observations from the same distribution at run time.
struct EnvConfig {
    double sigma_pos = 0.0;      // stddev of the lateral bolt offset
    double p_obstacle = 0.0;     // chance a washer blocks the bolt
    double sigma_obs = 0.1;      // observation noise, as in the generator
    double alignment_tol = 1.0;  // |offset| beyond this reads as misaligned
    int feature_dim = 16;
    std::array<std::vector<double>, kSituationCount> prototypes;

    EnvConfig() : prototypes(default_prototypes(feature_dim)) {}

    static EnvConfig from_gen_config(const CorpusGenConfig& gen, double sigma_pos,
                                     double p_obstacle) {
        EnvConfig cfg;
        cfg.sigma_pos = sigma_pos;
        cfg.p_obstacle = p_obstacle;
        cfg.sigma_obs = gen.sigma_obs;
        cfg.feature_dim = gen.feature_dim;
        cfg.prototypes = gen.prototypes;
        return cfg;
    }

    void validate() const {
        if (sigma_pos < 0.0 || !std::isfinite(sigma_pos))
            throw ConfigError("sigma_pos must be finite and nonnegative");
        if (p_obstacle < 0.0 || p_obstacle > 1.0)
            throw ConfigError("p_obstacle must lie in [0, 1]");
        if (sigma_obs < 0.0 || !std::isfinite(sigma_obs))
            throw ConfigError("sigma_obs must be finite and nonnegative");
        if (!(alignment_tol > 0.0)) throw ConfigError("alignment_tol must be positive");
        if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
        for (const auto& p : prototypes)
            if (static_cast<int>(p.size()) != feature_dim)
                throw ConfigError("prototype dimension does not match feature_dim");
    }
};

// ─── Environment ────────────────────────────────────────────────────────────

enum class Phase : int { PreApproach = 0, Approached = 1, Engaged = 2, Removed = 3 };

struct PhysicalState {
    Phase phase = Phase::PreApproach;
    double offset = 0.0;
    bool misaligned = false;
    bool obstacle_present = false;
};

/// Single-bolt removal task. Each episode draws a lateral offset and an
/// obstacle at reset; actions follow fixed mechanics:
///
///   Approach     dock the tool over the bolt (PreApproach -> Approached)
///   Push         sweep the obstacle away, if any
///   Mate         re-seat the tool on the bolt head, clearing misalignment
///   Insert       engage, but only when approached, aligned and unobstructed
///   Disassemble  back the bolt out, but only when engaged
///
/// Ineffective actions (Insert against an obstacle, Disassemble while not
/// engaged, a second Approach) change nothing. Observations are s0 before
/// approaching, s1 once engaged, s2 once removed, and a noisy prototype
/// image of the current situation in between. Episodes are deterministic in
/// (config, seed).
class DisassemblyEnv {
public:
    DisassemblyEnv(const EnvConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), rng_(derive_seed(seed, 7)) {
        cfg_.validate();
        state_.offset = cfg_.sigma_pos * rng_.normal();
        state_.misaligned = std::abs(state_.offset) > cfg_.alignment_tol;
        state_.obstacle_present = rng_.uniform() < cfg_.p_obstacle;
        initial_misaligned_ = state_.misaligned;
        initial_obstacle_ = state_.obstacle_present;
    }

    Observation initial_observation() {
        return Observation::symbolic(next_obs_id_++, 0);
    }

    Observation step(ActionPrimitive action) {
        if (state_.phase == Phase::Removed)
            throw ProtocolError("episode already finished: the bolt is removed");
        switch (action) {
            case ActionPrimitive::Approach:
                if (state_.phase == Phase::PreApproach) state_.phase = Phase::Approached;
                break;
            case ActionPrimitive::Push:
                state_.obstacle_present = false;
                break;
            case ActionPrimitive::Mate:
                if (state_.phase == Phase::Approached) {
                    state_.offset = 0.0;
                    state_.misaligned = false;
                }
                break;
            case ActionPrimitive::Insert:
                if (state_.phase == Phase::Approached && !state_.misaligned &&
                    !state_.obstacle_present)
                    state_.phase = Phase::Engaged;
                break;
            case ActionPrimitive::Disassemble:
                if (state_.phase == Phase::Engaged) state_.phase = Phase::Removed;
                break;
        }
        return observe();
    }

    const PhysicalState& truth() const { return state_; }

    /// Situation currently visible to the camera (flags as they stand now).
    Situation situation() const {
        return situation_from_flags(state_.misaligned, state_.obstacle_present);
    }

    /// Situation the episode started in; fixed at reset.
    Situation initial_situation() const {
        return situation_from_flags(initial_misaligned_, initial_obstacle_);
    }

    /// Minimal completion from the moment the tool is docked, judged on the
    /// conditions fixed at reset: Push if blocked, then Mate if misaligned,
    /// then Insert and Disassemble.
    std::vector<ActionPrimitive> required_sequence() const {
        std::vector<ActionPrimitive> actions;
        if (initial_obstacle_) actions.push_back(ActionPrimitive::Push);
        if (initial_misaligned_) actions.push_back(ActionPrimitive::Mate);
        actions.push_back(ActionPrimitive::Insert);
        actions.push_back(ActionPrimitive::Disassemble);
        return actions;
    }

private:
    Observation observe() {
        switch (state_.phase) {
            case Phase::PreApproach: return Observation::symbolic(next_obs_id_++, 0);
            case Phase::Engaged: return Observation::symbolic(next_obs_id_++, 1);
            case Phase::Removed: return Observation::symbolic(next_obs_id_++, 2);
            case Phase::Approached: break;
        }
        std::vector<double> x = cfg_.prototypes[static_cast<std::size_t>(situation())];
        for (double& v : x) v += cfg_.sigma_obs * rng_.normal();
        return Observation::raw_feature(next_obs_id_++, std::move(x));
    }

    EnvConfig cfg_;
    Rng rng_;
    PhysicalState state_;
    bool initial_misaligned_ = false;
    bool initial_obstacle_ = false;
    int next_obs_id_ = 0;
};

}  // namespace boltplan
