// boltplan command-line front end. Five subcommands cover the pipeline:
//
//   gen-data   synthesize a demonstration corpus from a generator config
//   train      fit encoder + state space + action models, save the bundle
//   ground     map one observation to a distribution over symbolic states
//   plan       search for an action sequence from an initial belief to a goal
//   run        batch simulated episodes and report success rates
//
// Exit codes: 0 success; 2 bad configuration, arguments, or input files;
// 3 the planner exhausted its search without reaching the goal; 4 an episode
// batch completed with zero successes (any requested report is still written).

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "boltplan/boltplan.hpp"

namespace {

using namespace boltplan;

// ─── Argument helpers ───────────────────────────────────────────────────────

/// Parse "0.5,1.0,1.5" into doubles. Whole-token stod so "1.5x" is refused.
std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string token =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            throw ConfigError("'" + token + "' is not a number");
        }
        if (used != token.size()) throw ConfigError("'" + token + "' is not a number");
        values.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

std::string format_belief(const std::vector<std::string>& names, const StateDistribution& s) {
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%s=%.4f", i == 0 ? "" : "  ", names[i].c_str(),
                      s[i]);
        out += buf;
    }
    return out;
}

bool looks_like_name(const std::string& text) {
    return !text.empty() && (std::isalpha(static_cast<unsigned char>(text[0])) != 0);
}

/// Observation argument: a symbol name (s0/s1/s2) or a comma-separated raw
/// feature vector of the bundle's feature dimension.
Observation parse_observation(const ModelBundle& bundle, const std::string& text) {
    if (looks_like_name(text)) {
        for (int sym = 0; sym < kSymbolCount; ++sym)
            if (text == "s" + std::to_string(sym)) return Observation::symbolic(0, sym);
        throw ConfigError("'" + text + "' is not a symbolic observation (expected s0, s1 or s2)");
    }
    std::vector<double> values = parse_number_list(text);
    const int dim = bundle.gen_config.feature_dim;
    if (static_cast<int>(values.size()) != dim)
        throw ConfigError("raw observation has " + std::to_string(values.size()) +
                          " values; the bundle expects " + std::to_string(dim));
    return Observation::raw_feature(0, std::move(values));
}

/// Initial-belief argument: a state name (one-hot), a length-M probability
/// vector, or a raw feature vector that is encoded and grounded.
StateDistribution parse_initial(const ModelBundle& bundle, const std::string& text) {
    const int m = bundle.states.state_count();
    if (looks_like_name(text))
        return one_hot(m, bundle.states.state_index(text));

    std::vector<double> values = parse_number_list(text);
    if (static_cast<int>(values.size()) == m) {
        double sum = 0.0;
        for (double v : values) {
            if (v < 0.0) throw ConfigError("belief entries must be nonnegative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ConfigError("belief entries sum to " + std::to_string(sum) + ", expected 1");
        for (double& v : values) v /= sum;  // absorb rounding from hand-typed decimals
        return values;
    }
    if (static_cast<int>(values.size()) == bundle.gen_config.feature_dim)
        return ground_observation(bundle.encoder, bundle.states,
                                  Observation::raw_feature(0, std::move(values)));
    throw ConfigError("--init needs a state name, " + std::to_string(m) +
                      " probabilities, or " + std::to_string(bundle.gen_config.feature_dim) +
                      " feature values; got " + std::to_string(values.size()) + " numbers");
}

// ─── Subcommand bodies ──────────────────────────────────────────────────────

void cmd_gen_data(const std::string& config_path, std::uint64_t seed, const std::string& out) {
    const CorpusGenConfig cfg =
        config_path.empty() ? CorpusGenConfig{} : CorpusGenConfig::load(config_path);
    const DemoCorpus corpus = generate_demos(cfg, seed);

    nlohmann::json meta;  // carried in the corpus header so `train` can rebuild the simulator
    meta["gen_config"] = cfg.to_json();
    meta["seed"] = seed;
    save_corpus(corpus, out, meta);

    int observations = 0;
    for (const ActionSequence& seq : corpus.sequences)
        observations += static_cast<int>(seq.observations.size());
    for (const auto& [type, n] : cfg.counts) std::printf("%8s  %d sequences\n", type.c_str(), n);
    std::printf("wrote %zu sequences (%d observations, feature dim %d) to %s\n",
                corpus.sequences.size(), observations, cfg.feature_dim, out.c_str());
}

void cmd_train(const std::string& corpus_path, const std::string& config_path,
               const PipelineConfig& cfg, std::uint64_t seed, const std::string& out) {
    const CorpusFile file = load_corpus(corpus_path);

    CorpusGenConfig gen_cfg;
    if (!config_path.empty())
        gen_cfg = CorpusGenConfig::load(config_path);
    else if (file.meta.is_object() && file.meta.contains("gen_config"))
        gen_cfg = CorpusGenConfig::from_json(file.meta.at("gen_config"));
    else
        throw ConfigError("corpus '" + corpus_path +
                          "' carries no generator config; pass --config");

    const PipelineResult result = train_bundle(file.corpus, gen_cfg, cfg, seed, corpus_path);

    std::printf("    k  incorrect    rate      inertia\n");
    for (const KSelectionPoint& p : result.k_selection.curve)
        std::printf("%5d  %9d  %6.3f  %11.3f\n", p.k, p.incorrect, p.rate, p.inertia);
    std::printf("selected k = %d\n", result.k_selection.k);
    std::printf("mean pair loss %.4f -> %.4f\n", result.initial_loss, result.final_loss);

    save_bundle(result.bundle, out);
    std::printf("wrote bundle (%d states, latent dim %d) to %s\n",
                result.bundle.states.state_count(), result.bundle.states.latent_dim, out.c_str());
}

void cmd_ground(const std::string& bundle_path, const std::string& obs_text) {
    const ModelBundle bundle = load_bundle(bundle_path);
    const Observation obs = parse_observation(bundle, obs_text);
    const StateDistribution dist = ground_observation(bundle.encoder, bundle.states, obs);

    int top = 0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (dist[i] > dist[static_cast<std::size_t>(top)]) top = static_cast<int>(i);
    for (int i = 0; i < bundle.states.state_count(); ++i)
        std::printf("%-4s  %.6f\n", bundle.states.state_name(i).c_str(),
                    dist[static_cast<std::size_t>(i)]);
    std::printf("mode: %s\n", bundle.states.state_name(top).c_str());
}

void cmd_plan(const std::string& bundle_path, const std::string& init_text,
              const std::string& goal_name, const PlannerConfig& cfg) {
    const ModelBundle bundle = load_bundle(bundle_path);
    const StateDistribution start = parse_initial(bundle, init_text);
    const StateDistribution goal =
        one_hot(bundle.states.state_count(), bundle.states.state_index(goal_name));

    const PlanTrace trace = plan(bundle.transition, start, goal, cfg);
    if (trace.actions.empty()) {
        std::printf("initial belief already satisfies the goal; empty plan\n");
        return;
    }

    std::printf("%zu actions:", trace.actions.size());
    for (ActionPrimitive a : trace.actions) std::printf(" %s", action_name(a).c_str());
    std::printf("\n");
    const std::vector<std::string> names = bundle.states.state_names();
    for (std::size_t i = 0; i < trace.actions.size(); ++i)
        std::printf("%3zu  %-11s  %s\n", i + 1, action_name(trace.actions[i]).c_str(),
                    format_belief(names, trace.predicted_states[i]).c_str());
}

void print_metrics_row(const char* label, const ClassMetrics& m) {
    std::printf("%-5s  %8d  %6d  %9d  %6d  %6.4f  %6.4f\n", label, m.episodes, m.first,
                m.rectified, m.failed, m.ssr(), m.rsr());
}

int cmd_run(const std::string& bundle_path, const std::string& regime_name_text,
            const std::string& sigma_text, int episodes, std::uint64_t seed,
            const std::string& report_path, bool replanning) {
    const Regime regime = regime_from_name(regime_name_text);
    const ModelBundle bundle = load_bundle(bundle_path);

    std::vector<double> sigmas;
    if (!sigma_text.empty()) sigmas = parse_number_list(sigma_text);

    if (sigmas.size() > 1) {
        // a sigma list means a sweep: one batch per value, curve CSV out
        const std::vector<SweepPoint> points =
            run_sigma_sweep(bundle, regime, sigmas, episodes, seed, replanning);
        std::printf(" sigma     ssr     rsr\n");
        int successes = 0;
        for (const SweepPoint& p : points) {
            std::printf("%6.3f  %6.4f  %6.4f\n", p.sigma, p.report.overall.ssr(),
                        p.report.overall.rsr());
            successes += p.report.overall.first + p.report.overall.rectified;
        }
        if (!report_path.empty()) {
            write_sigma_curve_csv(points, report_path);
            std::printf("wrote sweep curve to %s\n", report_path.c_str());
        }
        return successes == 0 ? 4 : 0;
    }

    ExperimentConfig cfg = ExperimentConfig::for_regime(
        regime, episodes, seed,
        sigmas.empty() ? std::nullopt : std::optional<double>(sigmas.front()));
    cfg.episode.replanning_enabled = replanning;
    const MetricsReport report = run_experiment(bundle, cfg);

    std::printf("class  episodes   first  rectified  failed     ssr     rsr\n");
    for (Situation s : all_situations())
        print_metrics_row(situation_class_label(s).c_str(),
                          report.per_class[static_cast<std::size_t>(s)]);
    print_metrics_row("all", report.overall);
    if (!report_path.empty()) {
        write_class_report_csv(report, report_path);
        std::printf("wrote class report to %s\n", report_path.c_str());
    }
    return report.overall.first + report.overall.rectified == 0 ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "learned probabilistic operators for bolt disassembly: corpus generation, "
        "training, grounding, planning and simulated evaluation"};
    app.require_subcommand(1);
    int exit_code = 0;

    // gen-data
    std::string gen_config_path, gen_out;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen-data", "synthesize a demonstration corpus");
    gen->add_option("--config", gen_config_path, "generator config JSON (defaults when omitted)")
        ->check(CLI::ExistingFile);
    gen->add_option("--seed", gen_seed, "corpus seed")->capture_default_str();
    gen->add_option("--out", gen_out, "corpus file to write")->required();
    gen->callback([&] { cmd_gen_data(gen_config_path, gen_seed, gen_out); });

    // train
    std::string train_corpus, train_config_path, train_out;
    std::uint64_t train_seed = 0;
    PipelineConfig pipeline;
    auto* train = app.add_subcommand("train", "train a full operator bundle from a corpus");
    train->add_option("--corpus", train_corpus, "demonstration corpus")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--config", train_config_path,
                      "generator config JSON (defaults to the corpus header)")
        ->check(CLI::ExistingFile);
    train->add_option("--alpha", pipeline.loss.alpha, "relationship loss weight")
        ->capture_default_str();
    train->add_option("--beta", pipeline.loss.beta, "posterior regularizer weight")
        ->capture_default_str();
    train->add_option("--d-m", pipeline.loss.d_m, "hinge margin for latent distances")
        ->capture_default_str();
    train->add_option("--epochs", pipeline.train.epochs, "training epochs")
        ->capture_default_str();
    train->add_option("--latent-dim", pipeline.latent_dim, "encoder latent dimension")
        ->capture_default_str();
    train->add_option("--forced-k", pipeline.forced_k,
                      "skip cluster-count selection and use this k");
    train->add_option("--seed", train_seed, "master seed for every training stage")
        ->capture_default_str();
    train->add_option("--out", train_out, "bundle file to write")->required();
    train->callback(
        [&] { cmd_train(train_corpus, train_config_path, pipeline, train_seed, train_out); });

    // ground
    std::string ground_bundle, ground_obs;
    auto* ground = app.add_subcommand("ground", "ground one observation into a state distribution");
    ground->add_option("--bundle", ground_bundle, "trained bundle")
        ->required()
        ->check(CLI::ExistingFile);
    ground->add_option("--obs", ground_obs, "s0/s1/s2 or comma-separated feature values")
        ->required();
    ground->callback([&] { cmd_ground(ground_bundle, ground_obs); });

    // plan
    std::string plan_bundle, plan_init, plan_goal;
    PlannerConfig planner;
    auto* planp = app.add_subcommand("plan", "search for an action sequence to a goal state");
    planp->add_option("--bundle", plan_bundle, "trained bundle")
        ->required()
        ->check(CLI::ExistingFile);
    planp->add_option("--init", plan_init,
                      "state name, belief probabilities, or raw feature values")
        ->required();
    planp->add_option("--goal", plan_goal, "goal state name (e.g. s2)")->required();
    planp->add_option("--epsilon", planner.epsilon, "goal divergence threshold")
        ->capture_default_str();
    planp->add_option("--max-depth", planner.max_depth, "deepest plan considered")
        ->capture_default_str();
    planp->callback([&] { cmd_plan(plan_bundle, plan_init, plan_goal, planner); });

    // run
    std::string run_bundle, run_regime = "static", run_sigma, run_report;
    int run_episodes = 200;
    std::uint64_t run_seed = 0;
    bool run_no_replanning = false;
    auto* run = app.add_subcommand("run", "batch simulated episodes and report success rates");
    run->add_option("--bundle", run_bundle, "trained bundle")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--regime", run_regime, "static, pos-noise or obstacle")
        ->capture_default_str();
    run->add_option("--sigma", run_sigma,
                    "bolt-offset spread; a comma list sweeps and writes a curve CSV");
    run->add_option("--episodes", run_episodes, "episodes per batch")->capture_default_str();
    run->add_option("--seed", run_seed, "experiment seed")->capture_default_str();
    run->add_option("--report", run_report, "CSV report path");
    run->add_flag("--no-replanning", run_no_replanning,
                  "ablation: never replan, always follow the first plan");
    run->callback([&] {
        exit_code = cmd_run(run_bundle, run_regime, run_sigma, run_episodes, run_seed,
                            run_report, !run_no_replanning);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);  // prints usage or the error message
        return rc == 0 ? 0 : 2;
    } catch (const NoPlanError& e) {
        std::fprintf(stderr, "no plan: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return exit_code;
}
