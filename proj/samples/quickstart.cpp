// Minimal end-to-end tour: synthesize demonstrations, learn the operator
// models, plan a disassembly from the initial symbolic observation, then run
// one closed-loop episode against the simulator.

#include <cstdio>

#include "boltplan/boltplan.hpp"

int main() {
    using namespace boltplan;

    // 100 demonstration sequences across the four situations, deterministic
    // in (config, seed)
    const CorpusGenConfig gen_cfg;
    const DemoCorpus demos = generate_demos(gen_cfg, 424242);
    std::printf("generated %zu demonstration sequences\n", demos.sequences.size());

    // encoder -> cluster-count selection -> grounding mixture -> action models
    const PipelineResult trained = train_bundle(demos, gen_cfg, PipelineConfig{}, 7);
    const ModelBundle& bundle = trained.bundle;
    std::printf("selected %d image states; %d symbolic states total\n", bundle.states.k,
                bundle.states.state_count());

    // plan from the start marker s0 to the removed-bolt marker s2
    const StateDistribution start = ground_symbol(bundle.states, 0);
    const StateDistribution goal = ground_symbol(bundle.states, 2);
    const PlanTrace trace = plan(bundle.transition, start, goal);
    std::printf("plan:");
    for (ActionPrimitive a : trace.actions) std::printf(" %s", action_name(a).c_str());
    std::printf("\n");

    // one simulated episode with the learned models in the loop; the
    // executor replans whenever observations drift from the plan's predictions
    const EnvConfig env_cfg =
        EnvConfig::from_gen_config(bundle.gen_config, kStaticSigmaPos, kStaticPObstacle);
    const EpisodeOutcome outcome = run_episode(bundle, env_cfg, 1, EpisodeConfig{});
    std::printf("episode: situation %s, %s after %d replans, executed",
                situation_name(outcome.situation).c_str(),
                outcome.result.success ? "success" : "failure", outcome.result.replans);
    for (ActionPrimitive a : outcome.result.actions())
        std::printf(" %s", action_name(a).c_str());
    std::printf("\n");
    return 0;
}
