#pragma once

#include <cfloat>
#include <cmath>
#include <string>
#include <vector>

#include "boltplan/clustering.hpp"

namespace boltplan {

// ─── State distributions ────────────────────────────────────────────────────

/// Probability vector over the symbolic state space: first the k image
/// states, then the three markers s0/s1/s2.
using StateDistribution = std::vector<double>;

inline void validate_distribution(const StateDistribution& s, double tol = 1e-9) {
    double sum = 0.0;
    for (double p : s) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ConfigError("state distribution has a negative or non-finite entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol)
        throw ConfigError("state distribution sums to " + std::to_string(sum) + ", expected 1");
}

inline StateDistribution one_hot(int size, int index) {
    if (index < 0 || index >= size) throw ConfigError("one_hot index out of range");
    StateDistribution s(static_cast<std::size_t>(size), 0.0);
    s[static_cast<std::size_t>(index)] = 1.0;
    return s;
}

/// KL(p || q) with additive smoothing: both sides get delta added and are
/// renormalized, so the value is finite for any pair of distributions.
inline double kl_divergence(const StateDistribution& p, const StateDistribution& q,
                            double delta = 1e-6) {
    if (p.size() != q.size()) throw ConfigError("kl_divergence: size mismatch");
    if (p.empty()) throw ConfigError("kl_divergence: empty distributions");
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ps += p[i] + delta;
        qs += q[i] + delta;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = (p[i] + delta) / ps;
        const double qi = (q[i] + delta) / qs;
        kl += pi * std::log(pi / qi);
    }
    return std::max(0.0, kl);  // clamp the tiny negative round-off
}

inline double total_variation(const StateDistribution& p, const StateDistribution& q) {
    if (p.size() != q.size()) throw ConfigError("total_variation: size mismatch");
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
    return 0.5 * tv;
}

// ─── Probabilistic grounding model ──────────────────────────────────────────

/// One image state: a Gaussian over latent space with a mixture weight.
struct ImageState {
    double weight = 0.0;
    std::vector<double> mean;
    std::vector<double> var;  // diagonal covariance, floored away from zero
};

/// Maps latent codes to distributions over symbolic states. Image states are
/// the fitted mixture components; the three markers are appended after them
/// and are only reachable through symbolic observations.
struct StateSpaceModel {
    int k = 0;           // image states
    int latent_dim = 0;
    std::vector<ImageState> image_states;

    int state_count() const { return k + kSymbolCount; }

    int symbol_state(int symbol) const {
        if (symbol < 0 || symbol >= kSymbolCount) throw ConfigError("symbol id out of range");
        return k + symbol;
    }

    std::string state_name(int state) const {
        if (state < 0 || state >= state_count())
            throw ConfigError("state index out of range");
        if (state < k) return "c" + std::to_string(state);
        return "s" + std::to_string(state - k);
    }

    int state_index(const std::string& name) const {
        for (int i = 0; i < state_count(); ++i)
            if (state_name(i) == name) return i;
        throw LookupError("unknown state name '" + name + "'");
    }

    std::vector<std::string> state_names() const {
        std::vector<std::string> names;
        for (int i = 0; i < state_count(); ++i) names.push_back(state_name(i));
        return names;
    }

    void validate() const {
        if (k < 1 || latent_dim < 1) throw ConfigError("state space dimensions must be positive");
        if (static_cast<int>(image_states.size()) != k)
            throw ConfigError("image state count does not match k");
        double wsum = 0.0;
        for (const ImageState& st : image_states) {
            if (static_cast<int>(st.mean.size()) != latent_dim ||
                static_cast<int>(st.var.size()) != latent_dim)
                throw ConfigError("image state dimension does not match latent_dim");
            if (!(st.weight > 0.0)) throw ConfigError("image state weight must be positive");
            for (double v : st.var)
                if (!(v > 0.0)) throw ConfigError("image state variance must be positive");
            wsum += st.weight;
        }
        if (std::abs(wsum - 1.0) > 1e-6)
            throw ConfigError("image state weights must sum to 1");
    }
};

inline constexpr double kVarianceFloor = 1e-6;

/// Posterior mass below this is numerical residue, not evidence: density
/// ratios between components routinely span hundreds of orders of magnitude,
/// and keeping the losing component's 1e-30 would let downstream prediction
/// renormalize a channel the model considers impossible into a certainty.
inline constexpr double kGroundingDust = 1e-12;

/// Fit the mixture from a clustering: component weight is the cluster's
/// share of points, mean/variance are per-cluster sample moments.
inline StateSpaceModel fit_state_model(const Clustering& clustering, const LatentTable& table) {
    if (clustering.labels.size() != table.size())
        throw ModelError("clustering labels do not cover the latent table");
    if (table.size() == 0) throw ModelError("no latents to fit");

    const int k = clustering.k;
    const std::size_t L = table.latents.front().size();
    StateSpaceModel model;
    model.k = k;
    model.latent_dim = static_cast<int>(L);
    model.image_states.assign(static_cast<std::size_t>(k), ImageState{});
    for (ImageState& st : model.image_states) {
        st.mean.assign(L, 0.0);
        st.var.assign(L, 0.0);
    }

    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const int c = clustering.labels[i];
        ++counts[static_cast<std::size_t>(c)];
        ImageState& st = model.image_states[static_cast<std::size_t>(c)];
        for (std::size_t l = 0; l < L; ++l) st.mean[l] += table.latents[i][l];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw ModelError("cluster " + std::to_string(c) + " has no members");
        ImageState& st = model.image_states[static_cast<std::size_t>(c)];
        for (double& m : st.mean) m /= counts[static_cast<std::size_t>(c)];
        st.weight = counts[static_cast<std::size_t>(c)] / static_cast<double>(table.size());
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
        ImageState& st = model.image_states[static_cast<std::size_t>(clustering.labels[i])];
        for (std::size_t l = 0; l < L; ++l) {
            const double d = table.latents[i][l] - st.mean[l];
            st.var[l] += d * d;
        }
    }
    for (int c = 0; c < k; ++c) {
        ImageState& st = model.image_states[static_cast<std::size_t>(c)];
        for (double& v : st.var)
            v = std::max(v / counts[static_cast<std::size_t>(c)], kVarianceFloor);
    }
    model.validate();
    return model;
}

// ─── Grounding ──────────────────────────────────────────────────────────────

/// Posterior over image states for a latent code, computed in log space with
/// the max subtracted so moderate outliers stay well-conditioned. If even the
/// best component's log-density underflows past double range, the code is
/// outside anything the model has seen: GroundingError.
inline StateDistribution ground_latent(const StateSpaceModel& model,
                                       const std::vector<double>& z) {
    model.validate();
    if (static_cast<int>(z.size()) != model.latent_dim)
        throw ConfigError("latent dimension does not match the state model");

    constexpr double kLog2Pi = 1.8378770664093454836;
    std::vector<double> log_p(static_cast<std::size_t>(model.k));
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.k; ++c) {
        const ImageState& st = model.image_states[static_cast<std::size_t>(c)];
        double lp = std::log(st.weight);
        for (std::size_t l = 0; l < z.size(); ++l) {
            const double d = z[l] - st.mean[l];
            lp -= 0.5 * (kLog2Pi + std::log(st.var[l]) + d * d / st.var[l]);
        }
        log_p[static_cast<std::size_t>(c)] = lp;
        best = std::max(best, lp);
    }
    if (best < std::log(DBL_MIN))
        throw GroundingError("latent code is unrecognizable: every image state's density "
                             "underflowed");

    StateDistribution s(static_cast<std::size_t>(model.state_count()), 0.0);
    double total = 0.0;
    for (int c = 0; c < model.k; ++c) {
        const double p = std::exp(log_p[static_cast<std::size_t>(c)] - best);
        s[static_cast<std::size_t>(c)] = p;
        total += p;
    }
    for (int c = 0; c < model.k; ++c) s[static_cast<std::size_t>(c)] /= total;

    // Drop dust and renormalize over what remains (the winner never drops:
    // its share is at least 1/k).
    total = 0.0;
    for (int c = 0; c < model.k; ++c) {
        double& p = s[static_cast<std::size_t>(c)];
        if (p < kGroundingDust) p = 0.0;
        total += p;
    }
    for (int c = 0; c < model.k; ++c) s[static_cast<std::size_t>(c)] /= total;
    return s;
}

/// One-hot distribution at the marker state.
inline StateDistribution ground_symbol(const StateSpaceModel& model, int symbol) {
    model.validate();
    return one_hot(model.state_count(), model.symbol_state(symbol));
}

/// Ground any observation: symbolic markers map to their own state, raw
/// features are encoded and grounded through the mixture.
inline StateDistribution ground_observation(const EncoderModel& encoder,
                                            const StateSpaceModel& model,
                                            const Observation& obs) {
    if (!obs.is_raw()) return ground_symbol(model, obs.symbol);
    const GaussianPosterior post = encode(encoder, obs.raw);
    return ground_latent(model, post.mean);
}

}  // namespace boltplan
