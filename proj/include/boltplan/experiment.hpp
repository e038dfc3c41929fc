#pragma once

#include <array>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "boltplan/bundle.hpp"
#include "boltplan/executor.hpp"
#include "boltplan/sim.hpp"

namespace boltplan {

// ─── Regimes ────────────────────────────────────────────────────────────────

enum class Regime : int { Static = 0, PositionNoise = 1, Obstacle = 2 };

inline const std::string& regime_name(Regime r) {
    static const std::array<std::string, 3> names = {"static", "pos-noise", "obstacle"};
    return names[static_cast<std::size_t>(r)];
}

inline Regime regime_from_name(const std::string& name) {
    for (Regime r : {Regime::Static, Regime::PositionNoise, Regime::Obstacle})
        if (regime_name(r) == name) return r;
    throw ConfigError("unknown regime '" + name + "' (expected static, pos-noise or obstacle)");
}

// Offset spread that makes misalignment a coin flip at the default tolerance.
inline constexpr double kStaticSigmaPos = 1.4826;
inline constexpr double kStaticPObstacle = 0.35;

// In the static regime the plan from s0 cannot know which of the four
// situations Approach will reveal, so its post-Approach prediction is spread
// over all of them; a deviation threshold above ln(4) lets every expected
// outcome through and still fires on a genuinely wrong prediction (an
// ineffective Insert observed as a raw image instead of s1). The dynamic
// regimes instead want an immediate replan from whatever Approach reveals,
// so their threshold sits below ln(4).
inline constexpr double kStaticEpsilonDeviation = 1.6;
inline constexpr double kDynamicEpsilonDeviation = 0.5;

struct ExperimentConfig {
    Regime regime = Regime::Static;
    int episodes = 1000;
    std::uint64_t seed = 0;
    double sigma_pos = kStaticSigmaPos;
    double p_obstacle = kStaticPObstacle;
    EpisodeConfig episode;

    /// Regime defaults; `sigma` overrides the offset spread where the regime
    /// sweeps it (pos-noise, and optionally obstacle).
    static ExperimentConfig for_regime(Regime regime, int episodes, std::uint64_t seed,
                                       std::optional<double> sigma = std::nullopt) {
        ExperimentConfig cfg;
        cfg.regime = regime;
        cfg.episodes = episodes;
        cfg.seed = seed;
        switch (regime) {
            case Regime::Static:
                cfg.sigma_pos = sigma.value_or(kStaticSigmaPos);
                cfg.p_obstacle = kStaticPObstacle;
                cfg.episode.epsilon_deviation = kStaticEpsilonDeviation;
                break;
            case Regime::PositionNoise:
                cfg.sigma_pos = sigma.value_or(1.0);
                cfg.p_obstacle = 0.0;
                cfg.episode.epsilon_deviation = kDynamicEpsilonDeviation;
                break;
            case Regime::Obstacle:
                cfg.sigma_pos = sigma.value_or(0.0);
                cfg.p_obstacle = 0.5;
                cfg.episode.epsilon_deviation = kDynamicEpsilonDeviation;
                break;
        }
        return cfg;
    }

    void validate() const {
        if (episodes < 1) throw ConfigError("episodes must be positive");
        if (sigma_pos < 0.0 || !std::isfinite(sigma_pos))
            throw ConfigError("sigma_pos must be finite and nonnegative");
        if (p_obstacle < 0.0 || p_obstacle > 1.0)
            throw ConfigError("p_obstacle must lie in [0, 1]");
        episode.validate();
    }
};

// ─── Metrics ────────────────────────────────────────────────────────────────

/// Success bookkeeping for one slice of episodes. First = solved by the
/// initial plan alone; rectified = solved after at least one replan; SSR
/// counts all successes, RSR only those whose executed actions were exactly
/// the minimal completion (no wasted motion).
struct ClassMetrics {
    int episodes = 0;
    int first = 0;
    int rectified = 0;
    int failed = 0;
    int redundant = 0;  // successes that executed more than the minimal actions

    double first_sr() const { return episodes ? static_cast<double>(first) / episodes : 0.0; }
    double rectified_sr() const {
        return episodes ? static_cast<double>(rectified) / episodes : 0.0;
    }
    double overall_sr() const {
        return episodes ? static_cast<double>(first + rectified) / episodes : 0.0;
    }
    double ssr() const { return overall_sr(); }
    double rsr() const {
        return episodes ? static_cast<double>(first + rectified - redundant) / episodes : 0.0;
    }
};

struct MetricsReport {
    Regime regime = Regime::Static;
    double sigma_pos = 0.0;
    double p_obstacle = 0.0;
    ClassMetrics overall;
    std::array<ClassMetrics, kSituationCount> per_class;
};

// ─── Episode batches ────────────────────────────────────────────────────────

/// Run one episode against a fresh environment and judge it. The minimal
/// completion is Approach plus the environment's required sequence; a
/// success that executed anything beyond that multiset counts as redundant.
struct EpisodeOutcome {
    EpisodeResult result;
    Situation situation = Situation::ClearAligned;
    bool redundant = false;
};

inline EpisodeOutcome run_episode(const ModelBundle& bundle, const EnvConfig& env_cfg,
                                  std::uint64_t episode_seed, const EpisodeConfig& episode_cfg) {
    DisassemblyEnv env(env_cfg, episode_seed);
    const StateDistribution goal = ground_symbol(bundle.states, 2);

    EpisodeOutcome outcome;
    outcome.situation = env.initial_situation();
    outcome.result = execute_episode(env, bundle.encoder, bundle.states, bundle.transition, goal,
                                     episode_cfg);

    if (outcome.result.success) {
        std::vector<ActionPrimitive> minimal = env.required_sequence();
        minimal.insert(minimal.begin(), ActionPrimitive::Approach);
        std::vector<ActionPrimitive> executed = outcome.result.actions();
        std::sort(minimal.begin(), minimal.end());
        std::sort(executed.begin(), executed.end());
        outcome.redundant = executed != minimal;
    }
    return outcome;
}

inline MetricsReport run_experiment(const ModelBundle& bundle, const ExperimentConfig& cfg) {
    cfg.validate();
    bundle.validate();

    const EnvConfig env_cfg =
        EnvConfig::from_gen_config(bundle.gen_config, cfg.sigma_pos, cfg.p_obstacle);

    MetricsReport report;
    report.regime = cfg.regime;
    report.sigma_pos = cfg.sigma_pos;
    report.p_obstacle = cfg.p_obstacle;

    for (int i = 0; i < cfg.episodes; ++i) {
        const EpisodeOutcome outcome = run_episode(
            bundle, env_cfg, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i)),
            cfg.episode);
        ClassMetrics& slice = report.per_class[static_cast<std::size_t>(outcome.situation)];
        for (ClassMetrics* m : {&report.overall, &slice}) {
            ++m->episodes;
            if (!outcome.result.success) {
                ++m->failed;
            } else {
                if (outcome.result.replans == 0) ++m->first;
                else ++m->rectified;
                if (outcome.redundant) ++m->redundant;
            }
        }
    }
    return report;
}

// ─── Reports ────────────────────────────────────────────────────────────────

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace detail

/// Per-class success-rate table, one row per situation plus a total row.
inline void write_class_report_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open report file '" + path + "' for writing");
    out << "class,episodes,first_sr,rectified_sr,overall_sr,ssr,rsr\n";
    auto row = [&out](const std::string& label, const ClassMetrics& m) {
        out << label << ',' << m.episodes << ',' << detail::fmt(m.first_sr()) << ','
            << detail::fmt(m.rectified_sr()) << ',' << detail::fmt(m.overall_sr()) << ','
            << detail::fmt(m.ssr()) << ',' << detail::fmt(m.rsr()) << "\n";
    };
    for (Situation s : all_situations())
        row(situation_class_label(s), report.per_class[static_cast<std::size_t>(s)]);
    row("all", report.overall);
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

struct SweepPoint {
    double sigma = 0.0;
    MetricsReport report;
};

/// Evaluate one regime across offset spreads. Episode seeds depend only on
/// the experiment seed and episode index, so two sweeps with different
/// episode settings (say, replanning on and off) face identical episodes.
inline std::vector<SweepPoint> run_sigma_sweep(const ModelBundle& bundle, Regime regime,
                                               const std::vector<double>& sigmas,
                                               int episodes_per_sigma, std::uint64_t seed,
                                               bool replanning_enabled = true) {
    if (sigmas.empty()) throw ConfigError("sigma sweep needs at least one value");
    std::vector<SweepPoint> points;
    for (double sigma : sigmas) {
        ExperimentConfig cfg =
            ExperimentConfig::for_regime(regime, episodes_per_sigma, seed, sigma);
        cfg.episode.replanning_enabled = replanning_enabled;
        points.push_back({sigma, run_experiment(bundle, cfg)});
    }
    return points;
}

/// Success-over-noise curve: sigma, SSR, RSR.
inline void write_sigma_curve_csv(const std::vector<SweepPoint>& points,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open report file '" + path + "' for writing");
    out << "sigma,ssr,rsr\n";
    for (const SweepPoint& p : points)
        out << detail::fmt(p.sigma) << ',' << detail::fmt(p.report.overall.ssr()) << ','
            << detail::fmt(p.report.overall.rsr()) << "\n";
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

}  // namespace boltplan
