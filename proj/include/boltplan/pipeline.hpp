#pragma once

#include <optional>
#include <string>

#include "boltplan/bundle.hpp"
#include "boltplan/clustering.hpp"

namespace boltplan {

/// End-to-end training settings. Seeds for the individual stages are derived
/// from one master seed, so a pipeline run is a pure function of
/// (corpus, config, master_seed).
struct PipelineConfig {
    int latent_dim = 8;
    LossConfig loss;
    TrainConfig train;  // train.seed is ignored; the master seed drives it
    int k_min = 2;
    int k_max = 8;
    double k_threshold = 0.02;
    int kmeans_restarts = 10;
    std::optional<int> forced_k;  // bypass selection, e.g. for ablations

    void validate() const {
        if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
        loss.validate();
        train.validate();
        if (k_min < 1 || k_max < k_min) throw ConfigError("bad cluster-count range");
        if (!(k_threshold >= 0.0)) throw ConfigError("k_threshold must be nonnegative");
        if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be positive");
        if (forced_k && *forced_k < 1) throw ConfigError("forced_k must be positive");
    }
};

struct PipelineResult {
    ModelBundle bundle;
    KSelection k_selection;  // selection curve; single synthetic point when forced
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Train a complete bundle from a demonstration corpus: fit the encoder on
/// relationship pairs, pick the cluster count, fit the grounding mixture,
/// then assemble the count/purity/feasibility matrices into action models.
inline PipelineResult train_bundle(const DemoCorpus& corpus, const CorpusGenConfig& gen_config,
                                   const PipelineConfig& cfg, std::uint64_t master_seed,
                                   const std::string& corpus_source = "generated") {
    cfg.validate();
    corpus.validate();
    gen_config.validate();
    if (corpus.feature_dim() != gen_config.feature_dim)
        throw ConfigError("corpus feature dimension " + std::to_string(corpus.feature_dim()) +
                          " does not match gen_config feature_dim " +
                          std::to_string(gen_config.feature_dim));

    const RelationIndex index(corpus);

    EncoderModel init =
        EncoderModel::init(gen_config.feature_dim, cfg.latent_dim, derive_seed(master_seed, 20));
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(master_seed, 21);
    TrainResult trained = train(init, corpus, index, cfg.loss, train_cfg);

    const LatentTable table = encode_corpus(trained.model, corpus);

    const std::uint64_t select_seed = derive_seed(master_seed, 22);
    KSelection selection;
    if (cfg.forced_k) {
        selection.k = *cfg.forced_k;
    } else {
        selection = select_k(table, corpus, cfg.k_min, cfg.k_max, cfg.k_threshold, select_seed,
                             cfg.kmeans_restarts);
    }
    // refit with the same stream the selection scan used for this k, so the
    // final clustering is exactly the one the scan judged
    const Clustering clusters =
        kmeans_fit(table.latents, selection.k,
                   derive_seed(select_seed, 200 + static_cast<std::uint64_t>(selection.k)),
                   cfg.kmeans_restarts);
    if (cfg.forced_k) {
        KSelectionPoint point;
        point.k = selection.k;
        point.incorrect = incorrect_sequence_count(clusters, table, corpus);
        point.rate = point.incorrect / static_cast<double>(corpus.sequences.size());
        point.inertia = clusters.inertia;
        selection.curve.push_back(point);
    }

    const StateSpaceModel states = fit_state_model(clusters, table);
    const auto labels = hard_state_labels(trained.model, states, corpus);
    const GroupTable groups = extract_groups(corpus);

    PipelineResult result;
    result.bundle.gen_config = gen_config;
    result.bundle.loss_config = cfg.loss;
    result.bundle.encoder = trained.model;
    result.bundle.states = states;
    result.bundle.transition = build_transition_model(corpus, groups, labels, states);
    result.bundle.provenance.master_seed = master_seed;
    result.bundle.provenance.corpus_source = corpus_source;
    result.bundle.validate();
    result.k_selection = std::move(selection);
    result.initial_loss = trained.initial_loss;
    result.final_loss = trained.final_loss;
    return result;
}

}  // namespace boltplan
