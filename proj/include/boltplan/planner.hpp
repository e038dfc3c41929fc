#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "boltplan/transition.hpp"

namespace boltplan {

struct PlannerConfig {
    double epsilon = 0.1;  // goal threshold on KL(prediction || goal)
    int max_depth = 8;

    void validate() const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw ConfigError("epsilon must be finite and positive");
        if (max_depth < 1) throw ConfigError("max_depth must be positive");
    }
};

/// A found plan: actions[i] is predicted to produce predicted_states[i], and
/// the last predicted state satisfies the goal test. Both are empty when the
/// start already satisfies the goal.
struct PlanTrace {
    std::vector<ActionPrimitive> actions;
    std::vector<StateDistribution> predicted_states;
};

inline bool goal_satisfied(const StateDistribution& state, const StateDistribution& goal,
                           double epsilon) {
    return kl_divergence(state, goal) < epsilon;
}

/// Breadth-first search over action sequences. The frontier is seeded with a
/// null action whose prediction is the start belief itself, so the goal test
/// runs on the start before any real action is considered; each dequeued
/// node is expanded by predicting every primitive from its belief, skipping
/// infeasible ones. The first dequeued belief that passes the goal test
/// yields the plan, so plans are shortest by construction.
///
/// Beliefs that repeat an ancestor (within total-variation 1e-9) are pruned:
/// a cycle can only delay reaching the goal.
inline PlanTrace plan(const TransitionModel& model, const StateDistribution& start,
                      const StateDistribution& goal, const PlannerConfig& cfg = {}) {
    cfg.validate();
    model.validate();
    validate_distribution(start);
    validate_distribution(goal);
    if (static_cast<int>(start.size()) != model.state_count ||
        static_cast<int>(goal.size()) != model.state_count)
        throw ConfigError("start/goal size does not match the model");

    struct Node {
        std::optional<ActionPrimitive> action;  // edge that produced this belief
        int parent = -1;                        // index into the node arena
        StateDistribution belief;
        int depth = 0;
    };
    struct Pending {
        std::optional<ActionPrimitive> action;
        int parent;
        int depth;
    };

    std::vector<Node> nodes;  // dequeued nodes, so parent chains stay valid
    std::deque<Pending> frontier;
    frontier.push_back({std::nullopt, -1, 0});

    double best_kl = std::numeric_limits<double>::infinity();
    int best_depth = 0;

    while (!frontier.empty()) {
        const Pending pending = frontier.front();
        frontier.pop_front();

        StateDistribution belief;
        try {
            const StateDistribution& from =
                pending.parent < 0 ? start : nodes[static_cast<std::size_t>(pending.parent)].belief;
            belief = predict(model, from, pending.action);
        } catch (const InfeasibleActionError&) {
            continue;
        }

        const double kl = kl_divergence(belief, goal);
        if (kl < best_kl) {
            best_kl = kl;
            best_depth = pending.depth;
        }

        if (kl < cfg.epsilon) {
            // walk the parent chain to assemble the plan
            std::vector<ActionPrimitive> actions;
            std::vector<StateDistribution> states;
            Node node{pending.action, pending.parent, std::move(belief), pending.depth};
            const Node* cur = &node;
            while (cur->action) {
                actions.push_back(*cur->action);
                states.push_back(cur->belief);
                if (cur->parent < 0) break;
                cur = &nodes[static_cast<std::size_t>(cur->parent)];
            }
            std::reverse(actions.begin(), actions.end());
            std::reverse(states.begin(), states.end());
            return PlanTrace{std::move(actions), std::move(states)};
        }

        // cycle check against the ancestor chain
        bool repeats = false;
        for (int p = pending.parent; p >= 0; p = nodes[static_cast<std::size_t>(p)].parent) {
            if (total_variation(belief, nodes[static_cast<std::size_t>(p)].belief) <= 1e-9) {
                repeats = true;
                break;
            }
        }
        if (repeats) continue;

        if (pending.depth >= cfg.max_depth) continue;

        const int node_id = static_cast<int>(nodes.size());
        nodes.push_back({pending.action, pending.parent, std::move(belief), pending.depth});
        for (ActionPrimitive a : all_actions())
            frontier.push_back({a, node_id, pending.depth + 1});
    }

    throw NoPlanError("no action sequence reaches the goal within depth " +
                          std::to_string(cfg.max_depth) + "; best divergence " +
                          std::to_string(best_kl) + " at depth " + std::to_string(best_depth),
                      best_kl, best_depth);
}

}  // namespace boltplan
