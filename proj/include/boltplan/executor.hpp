#pragma once

#include <concepts>
#include <string>
#include <vector>

#include "boltplan/planner.hpp"

namespace boltplan {

template <typename Env>
concept EnvironmentLike = requires(Env env, ActionPrimitive a) {
    { env.initial_observation() } -> std::convertible_to<Observation>;
    { env.step(a) } -> std::convertible_to<Observation>;
};

struct EpisodeConfig {
    double epsilon_goal = 0.1;       // done when KL(belief || goal) drops below this
    double epsilon_deviation = 1.6;  // replan when KL(observed || predicted) exceeds this
    int max_steps = 20;
    int replan_budget = 5;
    bool replanning_enabled = true;
    int max_depth = 8;  // planner depth bound

    void validate() const {
        if (!(epsilon_goal > 0.0) || !std::isfinite(epsilon_goal))
            throw ConfigError("epsilon_goal must be finite and positive");
        if (!(epsilon_deviation > 0.0) || !std::isfinite(epsilon_deviation))
            throw ConfigError("epsilon_deviation must be finite and positive");
        if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
        if (replan_budget < 0) throw ConfigError("replan_budget must be nonnegative");
        if (max_depth < 1) throw ConfigError("max_depth must be positive");
    }

    PlannerConfig planner() const { return PlannerConfig{epsilon_goal, max_depth}; }
};

/// Why a replan was performed after a step. Set only when a replan actually
/// ran, so counting non-None triggers reproduces EpisodeResult::replans.
enum class ReplanTrigger : int { None = 0, Deviation = 1, PlanExhausted = 2 };

struct StepRecord {
    ActionPrimitive action;
    StateDistribution predicted;  // belief the plan promised after this action
    StateDistribution observed;   // belief grounded from what actually happened
    double kl_deviation = 0.0;    // KL(observed || predicted)
    ReplanTrigger replan_trigger = ReplanTrigger::None;
};

struct EpisodeResult {
    bool success = false;
    int replans = 0;
    std::vector<StepRecord> steps;
    StateDistribution final_belief;
    double final_goal_kl = 0.0;
    std::string failure_reason;  // empty on success

    std::vector<ActionPrimitive> actions() const {
        std::vector<ActionPrimitive> out;
        out.reserve(steps.size());
        for (const StepRecord& s : steps) out.push_back(s.action);
        return out;
    }
};

/// Closed-loop episode: ground the initial observation, plan to the goal,
/// execute step by step. After every step the observed belief is compared
/// with the plan's prediction; a divergence beyond epsilon_deviation throws
/// the rest of the plan away and replans from the observed belief. Running
/// out of plan with the goal unmet also replans. With replanning disabled
/// the plan runs blind to the end and only the final belief decides success.
template <EnvironmentLike Env>
EpisodeResult execute_episode(Env& env, const EncoderModel& encoder,
                              const StateSpaceModel& states, const TransitionModel& transition,
                              const StateDistribution& goal, const EpisodeConfig& cfg = {}) {
    cfg.validate();
    validate_distribution(goal);

    EpisodeResult result;
    StateDistribution belief = ground_observation(encoder, states, env.initial_observation());
    result.final_goal_kl = kl_divergence(belief, goal);

    std::vector<ActionPrimitive> plan_actions;
    std::vector<StateDistribution> plan_states;
    std::size_t cursor = 0;

    auto make_plan = [&](const char* stage) {
        try {
            PlanTrace trace = plan(transition, belief, goal, cfg.planner());
            plan_actions = std::move(trace.actions);
            plan_states = std::move(trace.predicted_states);
            cursor = 0;
            return true;
        } catch (const NoPlanError& e) {
            result.failure_reason = std::string(stage) + ": " + e.what();
            return false;
        }
    };

    if (result.final_goal_kl < cfg.epsilon_goal) {
        result.success = true;
        result.final_belief = std::move(belief);
        return result;
    }
    if (!make_plan("initial planning")) {
        result.final_belief = std::move(belief);
        return result;
    }

    int steps_taken = 0;
    for (;;) {
        if (result.final_goal_kl < cfg.epsilon_goal) {
            result.success = true;
            break;
        }
        if (steps_taken >= cfg.max_steps) {
            result.failure_reason = "step budget exhausted before reaching the goal";
            break;
        }
        if (cursor >= plan_actions.size()) {
            if (!cfg.replanning_enabled) {
                result.failure_reason = "plan finished short of the goal (replanning disabled)";
                break;
            }
            if (result.replans >= cfg.replan_budget) {
                result.failure_reason = "plan finished short of the goal, replan budget exhausted";
                break;
            }
            if (!make_plan("replanning")) break;
            ++result.replans;
            if (!result.steps.empty())
                result.steps.back().replan_trigger = ReplanTrigger::PlanExhausted;
            continue;
        }

        const ActionPrimitive action = plan_actions[cursor];
        const StateDistribution predicted = plan_states[cursor];
        ++cursor;

        Observation obs;
        try {
            obs = env.step(action);
            ++steps_taken;
            belief = ground_observation(encoder, states, obs);
        } catch (const GroundingError& e) {
            ++steps_taken;
            result.failure_reason = std::string("grounding failed: ") + e.what();
            break;
        } catch (const ProtocolError& e) {
            result.failure_reason = std::string("environment refused the action: ") + e.what();
            break;
        }

        StepRecord record;
        record.action = action;
        record.predicted = predicted;
        record.observed = belief;
        record.kl_deviation = kl_divergence(belief, predicted);

        if (record.kl_deviation > cfg.epsilon_deviation && cfg.replanning_enabled) {
            if (result.replans >= cfg.replan_budget) {
                result.steps.push_back(std::move(record));
                result.final_goal_kl = kl_divergence(belief, goal);
                result.failure_reason = "prediction deviation with replan budget exhausted";
                break;
            }
            if (!make_plan("replanning")) {
                result.steps.push_back(std::move(record));
                result.final_goal_kl = kl_divergence(belief, goal);
                break;
            }
            ++result.replans;
            record.replan_trigger = ReplanTrigger::Deviation;
        }

        result.steps.push_back(std::move(record));
        result.final_goal_kl = kl_divergence(belief, goal);
    }

    result.final_belief = std::move(belief);
    return result;
}

}  // namespace boltplan
