#pragma once

#include <array>
#include <optional>
#include <unordered_map>

#include "boltplan/action.hpp"
#include "boltplan/matrix.hpp"
#include "boltplan/state_space.hpp"

namespace boltplan {

// ─── Count and purity matrices ──────────────────────────────────────────────

/// Hard state label for every observation: symbolic markers take their own
/// state, raw observations take the argmax of their grounding.
inline std::unordered_map<int, int> hard_state_labels(const EncoderModel& encoder,
                                                      const StateSpaceModel& model,
                                                      const DemoCorpus& corpus) {
    std::unordered_map<int, int> labels;
    for (const ActionSequence& seq : corpus.sequences)
        for (const Observation& o : seq.observations) {
            if (!o.is_raw()) {
                labels[o.obs_id] = model.symbol_state(o.symbol);
                continue;
            }
            const StateDistribution s = ground_observation(encoder, model, o);
            int best = 0;
            for (std::size_t i = 1; i < s.size(); ++i)
                if (s[i] > s[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
            labels[o.obs_id] = best;
        }
    return labels;
}

/// Cross-tabulate states against observation groups: counts(i, m) is how
/// many observations of group m were labeled state i. Rows are the M states,
/// columns the N groups.
inline Matrix count_states_by_group(const GroupTable& groups,
                                    const std::unordered_map<int, int>& labels,
                                    int state_count) {
    Matrix counts(state_count, groups.count());
    for (int g = 0; g < groups.count(); ++g) {
        for (int obs_id : groups.members[static_cast<std::size_t>(g)]) {
            auto it = labels.find(obs_id);
            if (it == labels.end())
                throw LookupError("no state label for obs_id " + std::to_string(obs_id));
            if (it->second < 0 || it->second >= state_count)
                throw ConfigError("state label out of range");
            counts(it->second, g) += 1.0;
        }
    }
    return counts;
}

/// Row- and column-normalized views of the count matrix. Q(i, m) is the
/// share of state i's mass sitting in group m; K(i, m) is the share of group
/// m's members labeled state i. All-zero rows or columns stay zero.
struct PurityMatrices {
    Matrix q;  // row-normalized:    rows sum to 1 (or 0)
    Matrix k;  // column-normalized: columns sum to 1 (or 0)
};

inline PurityMatrices purity_matrices(const Matrix& counts) {
    for (double v : counts.data)
        if (v < 0.0 || v != std::floor(v))
            throw ConfigError("count matrix entries must be nonnegative integers");
    PurityMatrices out{counts, counts};
    for (int i = 0; i < counts.rows; ++i) {
        double row = 0.0;
        for (int m = 0; m < counts.cols; ++m) row += counts(i, m);
        if (row > 0.0)
            for (int m = 0; m < counts.cols; ++m) out.q(i, m) /= row;
    }
    for (int m = 0; m < counts.cols; ++m) {
        double col = 0.0;
        for (int i = 0; i < counts.rows; ++i) col += counts(i, m);
        if (col > 0.0)
            for (int i = 0; i < counts.rows; ++i) out.k(i, m) /= col;
    }
    return out;
}

// ─── Feasibility and action matrices ────────────────────────────────────────

/// Binary group-to-group feasibility per action: T[a](m, n) = 1 iff some
/// demonstration applied action a at an observation of group m and the next
/// observation fell in group n.
inline std::array<Matrix, kActionCount> learn_feasibility(const DemoCorpus& corpus,
                                                          const GroupTable& groups) {
    std::array<Matrix, kActionCount> feas;
    for (auto& t : feas) t = Matrix(groups.count(), groups.count());
    for (const ActionSequence& seq : corpus.sequences) {
        for (std::size_t i = 0; i < seq.actions.size(); ++i) {
            const int from = groups.group_of_obs(seq.observations[i].obs_id);
            const int to = groups.group_of_obs(seq.observations[i + 1].obs_id);
            feas[static_cast<std::size_t>(seq.actions[i])](from, to) = 1.0;
        }
    }
    return feas;
}

/// State-to-state action matrix: route state mass to groups through Q, move
/// it along demonstrated group transitions, map the destination groups back
/// to states through K. Rows need not sum to 1; missing mass is motion the
/// demonstrations never showed from that state.
inline Matrix action_matrix(const Matrix& q, const Matrix& t, const Matrix& k) {
    if (q.cols != t.rows || t.rows != t.cols || k.cols != t.cols)
        throw ConfigError("action_matrix: dimension mismatch");
    if (q.rows != k.rows) throw ConfigError("action_matrix: state counts disagree");
    return matmul(q, matmul(t, transpose(k)));
}

// ─── Transition model ───────────────────────────────────────────────────────

struct TransitionModel {
    int state_count = 0;
    std::vector<std::string> state_names;
    std::vector<std::string> group_names;
    Matrix counts;                                  // states x groups
    PurityMatrices purity;
    std::array<Matrix, kActionCount> feasibility;   // groups x groups, binary
    std::array<Matrix, kActionCount> action_matrices;  // states x states

    void validate() const {
        if (state_count < 1) throw ConfigError("transition model has no states");
        const int n_groups = static_cast<int>(group_names.size());
        if (static_cast<int>(state_names.size()) != state_count)
            throw ConfigError("state name count does not match state_count");
        if (counts.rows != state_count || counts.cols != n_groups)
            throw ConfigError("count matrix shape does not match states x groups");
        if (!purity.q.same_shape(counts) || !purity.k.same_shape(counts))
            throw ConfigError("purity matrices shape does not match the count matrix");
        for (const Matrix& t : feasibility) {
            if (t.rows != n_groups || t.cols != n_groups)
                throw ConfigError("feasibility matrix is not groups x groups");
            for (double v : t.data)
                if (v != 0.0 && v != 1.0) throw ConfigError("feasibility matrix is not binary");
        }
        for (const Matrix& p : action_matrices) {
            if (p.rows != state_count || p.cols != state_count)
                throw ConfigError("action matrix is not states x states");
            for (double v : p.data)
                if (v < 0.0 || !std::isfinite(v))
                    throw ConfigError("action matrix has a negative or non-finite entry");
        }
    }

    const Matrix& matrix_for(ActionPrimitive a) const {
        return action_matrices[static_cast<std::size_t>(a)];
    }

    int state_index(const std::string& name) const {
        for (std::size_t i = 0; i < state_names.size(); ++i)
            if (state_names[i] == name) return static_cast<int>(i);
        throw LookupError("unknown state name '" + name + "'");
    }
};

inline TransitionModel build_transition_model(const DemoCorpus& corpus, const GroupTable& groups,
                                              const std::unordered_map<int, int>& labels,
                                              const StateSpaceModel& states) {
    TransitionModel model;
    model.state_count = states.state_count();
    model.state_names = states.state_names();
    for (int g = 0; g < groups.count(); ++g) model.group_names.push_back(groups.name(g));
    model.counts = count_states_by_group(groups, labels, model.state_count);
    model.purity = purity_matrices(model.counts);
    model.feasibility = learn_feasibility(corpus, groups);
    for (ActionPrimitive a : all_actions())
        model.action_matrices[static_cast<std::size_t>(a)] = action_matrix(
            model.purity.q, model.feasibility[static_cast<std::size_t>(a)], model.purity.k);
    model.validate();
    return model;
}

// ─── Prediction ─────────────────────────────────────────────────────────────

/// An action needs at least this much routed probability mass to count as
/// feasible. Renormalization would happily inflate any nonzero sliver into a
/// certainty, so without a floor a one-in-a-billion channel plans exactly
/// like a demonstrated one.
inline constexpr double kFeasibilityFloor = 1e-3;

/// One-step belief update: push the distribution through the action matrix
/// and renormalize. Total mass below the floor means the demonstrations give
/// the action no real support from this belief: InfeasibleActionError.
inline StateDistribution predict(const StateDistribution& state, const Matrix& action_mat,
                                 ActionPrimitive a) {
    validate_distribution(state);
    if (static_cast<int>(state.size()) != action_mat.rows)
        throw ConfigError("belief size does not match the action matrix");
    StateDistribution next = vecmat(state, action_mat);
    double total = 0.0;
    for (double v : next) total += v;
    if (total < kFeasibilityFloor)
        throw InfeasibleActionError("action " + action_name(a) +
                                    " is infeasible from the current belief (mass " +
                                    std::to_string(total) + ")");
    for (double& v : next) v /= total;
    return next;
}

/// Belief update with the null action (planner bootstrap) passing the belief
/// through unchanged.
inline StateDistribution predict(const TransitionModel& model, const StateDistribution& state,
                                 std::optional<ActionPrimitive> action) {
    if (!action) {
        validate_distribution(state);
        if (static_cast<int>(state.size()) != model.state_count)
            throw ConfigError("belief size does not match the model");
        return state;
    }
    return predict(state, model.matrix_for(*action), *action);
}

}  // namespace boltplan
