#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "boltplan/corpus_gen.hpp"
#include "boltplan/latent.hpp"
#include "boltplan/state_space.hpp"
#include "boltplan/transition.hpp"

namespace boltplan {

inline constexpr const char* kToolkitVersion = "1.0.0";
inline constexpr const char* kBundleFormatVersion = "1.0";

/// Where a bundle came from. Deliberately holds nothing time- or
/// machine-dependent: two runs with the same inputs must produce
/// byte-identical bundles.
struct Provenance {
    std::uint64_t master_seed = 0;
    std::string toolkit_version = kToolkitVersion;
    std::string corpus_source;  // path of the corpus file, or "generated"
};

/// Everything a trained model needs to ground, predict, plan, and drive the
/// simulator, in one file.
struct ModelBundle {
    std::string format_version = kBundleFormatVersion;
    CorpusGenConfig gen_config;
    LossConfig loss_config;
    EncoderModel encoder;
    StateSpaceModel states;
    TransitionModel transition;
    Provenance provenance;

    void validate() const {
        try {
            gen_config.validate();
            loss_config.validate();
            encoder.validate();
            states.validate();
            transition.validate();
        } catch (const ConfigError& e) {
            throw BundleValidationError(e.what(), "component");
        }
        if (encoder.input_dim != gen_config.feature_dim)
            throw BundleValidationError(
                "encoder input_dim " + std::to_string(encoder.input_dim) +
                    " does not match gen_config feature_dim " +
                    std::to_string(gen_config.feature_dim),
                "encoder.input_dim");
        if (states.latent_dim != encoder.latent_dim)
            throw BundleValidationError(
                "state model latent_dim " + std::to_string(states.latent_dim) +
                    " does not match encoder latent_dim " + std::to_string(encoder.latent_dim),
                "states.latent_dim");
        if (transition.state_count != states.state_count())
            throw BundleValidationError(
                "transition state_count " + std::to_string(transition.state_count) +
                    " does not match the state model's " + std::to_string(states.state_count()),
                "transition.state_count");
        if (transition.state_names != states.state_names())
            throw BundleValidationError("transition state names disagree with the state model",
                                        "transition.state_names");
    }
};

// ─── JSON translation ───────────────────────────────────────────────────────

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
    Matrix m;
    try {
        m.rows = j.at("rows").get<int>();
        m.cols = j.at("cols").get<int>();
        m.data = j.at("data").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw BundleValidationError(e.what(), field);
    }
    if (m.rows < 0 || m.cols < 0 ||
        m.data.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols))
        throw BundleValidationError("matrix data length does not match rows*cols", field);
    return m;
}

/// Fetch a required field; `label` is the dotted path reported on failure
/// when it differs from the key itself.
inline const nlohmann::json& json_require(const nlohmann::json& j, const char* field,
                                          const char* label = nullptr) {
    auto it = j.find(field);
    if (it == j.end())
        throw BundleValidationError("missing required field", label ? label : field);
    return *it;
}

}  // namespace detail

inline nlohmann::json bundle_to_json(const ModelBundle& b) {
    b.validate();
    nlohmann::json j;
    j["format_version"] = b.format_version;
    j["gen_config"] = b.gen_config.to_json();
    j["loss_config"] = {{"alpha", b.loss_config.alpha},
                        {"beta", b.loss_config.beta},
                        {"d_m", b.loss_config.d_m}};
    j["encoder"] = {{"input_dim", b.encoder.input_dim},
                    {"latent_dim", b.encoder.latent_dim},
                    {"w_mu", detail::matrix_to_json(b.encoder.w_mu)},
                    {"b_mu", b.encoder.b_mu},
                    {"w_logvar", detail::matrix_to_json(b.encoder.w_logvar)},
                    {"b_logvar", b.encoder.b_logvar},
                    {"w_dec", detail::matrix_to_json(b.encoder.w_dec)},
                    {"b_dec", b.encoder.b_dec}};
    nlohmann::json image_states = nlohmann::json::array();
    for (const ImageState& st : b.states.image_states)
        image_states.push_back(
            {{"weight", st.weight}, {"mean", st.mean}, {"var", st.var}});
    j["states"] = {{"k", b.states.k},
                   {"latent_dim", b.states.latent_dim},
                   {"image_states", image_states}};
    nlohmann::json feas, act;
    for (ActionPrimitive a : all_actions()) {
        feas[action_name(a)] =
            detail::matrix_to_json(b.transition.feasibility[static_cast<std::size_t>(a)]);
        act[action_name(a)] =
            detail::matrix_to_json(b.transition.action_matrices[static_cast<std::size_t>(a)]);
    }
    j["transition"] = {{"state_count", b.transition.state_count},
                       {"state_names", b.transition.state_names},
                       {"group_names", b.transition.group_names},
                       {"counts", detail::matrix_to_json(b.transition.counts)},
                       {"q", detail::matrix_to_json(b.transition.purity.q)},
                       {"k", detail::matrix_to_json(b.transition.purity.k)},
                       {"feasibility", feas},
                       {"action_matrices", act}};
    j["provenance"] = {{"master_seed", b.provenance.master_seed},
                       {"toolkit_version", b.provenance.toolkit_version},
                       {"corpus_source", b.provenance.corpus_source}};
    return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
    using detail::json_require;
    using detail::matrix_from_json;

    const std::string version = json_require(j, "format_version").get<std::string>();
    const std::string major = version.substr(0, version.find('.'));
    const std::string expected_major =
        std::string(kBundleFormatVersion).substr(0, std::string(kBundleFormatVersion).find('.'));
    if (major != expected_major)
        throw BundleVersionError("bundle format version '" + version +
                                 "' is not compatible with '" + kBundleFormatVersion + "'");

    ModelBundle b;
    b.format_version = version;
    try {
        b.gen_config = CorpusGenConfig::from_json(json_require(j, "gen_config"));
    } catch (const ConfigError& e) {
        throw BundleValidationError(e.what(), "gen_config");
    }

    const nlohmann::json& loss = json_require(j, "loss_config");
    try {
        b.loss_config.alpha = loss.at("alpha").get<double>();
        b.loss_config.beta = loss.at("beta").get<double>();
        b.loss_config.d_m = loss.at("d_m").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw BundleValidationError(e.what(), "loss_config");
    }

    const nlohmann::json& enc = json_require(j, "encoder");
    try {
        b.encoder.input_dim = enc.at("input_dim").get<int>();
        b.encoder.latent_dim = enc.at("latent_dim").get<int>();
        b.encoder.b_mu = enc.at("b_mu").get<std::vector<double>>();
        b.encoder.b_logvar = enc.at("b_logvar").get<std::vector<double>>();
        b.encoder.b_dec = enc.at("b_dec").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw BundleValidationError(e.what(), "encoder");
    }
    b.encoder.w_mu = matrix_from_json(json_require(enc, "w_mu", "encoder.w_mu"), "encoder.w_mu");
    b.encoder.w_logvar =
        matrix_from_json(json_require(enc, "w_logvar", "encoder.w_logvar"), "encoder.w_logvar");
    b.encoder.w_dec = matrix_from_json(json_require(enc, "w_dec", "encoder.w_dec"), "encoder.w_dec");

    const nlohmann::json& st = json_require(j, "states");
    try {
        b.states.k = st.at("k").get<int>();
        b.states.latent_dim = st.at("latent_dim").get<int>();
        for (const auto& comp : st.at("image_states")) {
            ImageState is;
            is.weight = comp.at("weight").get<double>();
            is.mean = comp.at("mean").get<std::vector<double>>();
            is.var = comp.at("var").get<std::vector<double>>();
            b.states.image_states.push_back(std::move(is));
        }
    } catch (const nlohmann::json::exception& e) {
        throw BundleValidationError(e.what(), "states");
    }

    const nlohmann::json& tr = json_require(j, "transition");
    try {
        b.transition.state_count = tr.at("state_count").get<int>();
        b.transition.state_names = tr.at("state_names").get<std::vector<std::string>>();
        b.transition.group_names = tr.at("group_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw BundleValidationError(e.what(), "transition");
    }
    b.transition.counts =
        matrix_from_json(json_require(tr, "counts", "transition.counts"), "transition.counts");
    b.transition.purity.q =
        matrix_from_json(json_require(tr, "q", "transition.q"), "transition.q");
    b.transition.purity.k =
        matrix_from_json(json_require(tr, "k", "transition.k"), "transition.k");
    const nlohmann::json& feas = json_require(tr, "feasibility", "transition.feasibility");
    const nlohmann::json& act = json_require(tr, "action_matrices", "transition.action_matrices");
    for (ActionPrimitive a : all_actions()) {
        const std::string feas_label = "transition.feasibility." + action_name(a);
        const std::string act_label = "transition.action_matrices." + action_name(a);
        b.transition.feasibility[static_cast<std::size_t>(a)] = matrix_from_json(
            json_require(feas, action_name(a).c_str(), feas_label.c_str()), feas_label);
        b.transition.action_matrices[static_cast<std::size_t>(a)] = matrix_from_json(
            json_require(act, action_name(a).c_str(), act_label.c_str()), act_label);
    }

    const nlohmann::json& prov = json_require(j, "provenance");
    try {
        b.provenance.master_seed = prov.at("master_seed").get<std::uint64_t>();
        b.provenance.toolkit_version = prov.at("toolkit_version").get<std::string>();
        b.provenance.corpus_source = prov.at("corpus_source").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BundleValidationError(e.what(), "provenance");
    }

    b.validate();
    return b;
}

// ─── File IO ────────────────────────────────────────────────────────────────

inline void save_bundle(const ModelBundle& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw BundleError("cannot open '" + path + "' for writing");
    out << bundle_to_json(b).dump(1) << "\n";
    if (!out) throw BundleError("write to '" + path + "' failed");
}

inline ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BundleError("cannot open bundle file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw BundleParseError("bundle '" + path + "' is not valid JSON: " + e.what(), e.byte);
    }
    return bundle_from_json(j);
}

}  // namespace boltplan
