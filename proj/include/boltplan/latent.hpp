#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "boltplan/corpus.hpp"
#include "boltplan/corpus_gen.hpp"
#include "boltplan/matrix.hpp"
#include "boltplan/rng.hpp"

namespace boltplan {

// ─── Model ──────────────────────────────────────────────────────────────────

/// Gaussian posterior over the latent space for one observation.
struct GaussianPosterior {
    std::vector<double> mean;
    std::vector<double> log_var;
};

/// Affine variational autoencoder: linear heads for the posterior mean and
/// log-variance, linear decoder. Raw features here are already low-dimensional
/// summaries, so affine maps carry the structure and keep gradients exact and
/// cheap to verify.
struct EncoderModel {
    int input_dim = 0;
    int latent_dim = 0;
    Matrix w_mu, w_logvar;              // latent_dim x input_dim
    std::vector<double> b_mu, b_logvar; // latent_dim
    Matrix w_dec;                       // input_dim x latent_dim
    std::vector<double> b_dec;          // input_dim

    static EncoderModel init(int input_dim, int latent_dim, std::uint64_t seed) {
        if (input_dim < 1 || latent_dim < 1)
            throw ConfigError("encoder dimensions must be positive");
        EncoderModel m;
        m.input_dim = input_dim;
        m.latent_dim = latent_dim;
        m.w_mu = Matrix(latent_dim, input_dim);
        m.w_logvar = Matrix(latent_dim, input_dim);
        m.w_dec = Matrix(input_dim, latent_dim);
        m.b_mu.assign(static_cast<std::size_t>(latent_dim), 0.0);
        m.b_logvar.assign(static_cast<std::size_t>(latent_dim), 0.0);
        m.b_dec.assign(static_cast<std::size_t>(input_dim), 0.0);
        Rng rng(derive_seed(seed, 11));
        const double enc_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
        const double dec_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
        for (double& w : m.w_mu.data) w = enc_scale * rng.normal();
        for (double& w : m.w_logvar.data) w = 0.1 * enc_scale * rng.normal();
        for (double& w : m.w_dec.data) w = dec_scale * rng.normal();
        return m;
    }

    void validate() const {
        if (input_dim < 1 || latent_dim < 1)
            throw ConfigError("encoder dimensions must be positive");
        auto check = [this](const Matrix& m, int r, int c, const char* what) {
            if (m.rows != r || m.cols != c)
                throw ConfigError(std::string("encoder block ") + what + " has wrong shape");
        };
        check(w_mu, latent_dim, input_dim, "w_mu");
        check(w_logvar, latent_dim, input_dim, "w_logvar");
        check(w_dec, input_dim, latent_dim, "w_dec");
        if (static_cast<int>(b_mu.size()) != latent_dim ||
            static_cast<int>(b_logvar.size()) != latent_dim ||
            static_cast<int>(b_dec.size()) != input_dim)
            throw ConfigError("encoder bias length does not match dimensions");
    }

    /// Named views of every parameter block, for the optimizer and for
    /// finite-difference checks.
    std::array<std::pair<std::string, std::vector<double>*>, 6> parameter_blocks() {
        return {{{"w_mu", &w_mu.data},
                 {"b_mu", &b_mu},
                 {"w_logvar", &w_logvar.data},
                 {"b_logvar", &b_logvar},
                 {"w_dec", &w_dec.data},
                 {"b_dec", &b_dec}}};
    }
};

/// Gradient accumulator with the same block layout as EncoderModel.
struct EncoderGradients {
    Matrix w_mu, w_logvar, w_dec;
    std::vector<double> b_mu, b_logvar, b_dec;

    explicit EncoderGradients(const EncoderModel& m)
        : w_mu(m.latent_dim, m.input_dim),
          w_logvar(m.latent_dim, m.input_dim),
          w_dec(m.input_dim, m.latent_dim),
          b_mu(static_cast<std::size_t>(m.latent_dim), 0.0),
          b_logvar(static_cast<std::size_t>(m.latent_dim), 0.0),
          b_dec(static_cast<std::size_t>(m.input_dim), 0.0) {}

    void zero() {
        auto wipe = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
        wipe(w_mu.data);
        wipe(w_logvar.data);
        wipe(w_dec.data);
        wipe(b_mu);
        wipe(b_logvar);
        wipe(b_dec);
    }

    std::array<std::pair<std::string, std::vector<double>*>, 6> parameter_blocks() {
        return {{{"w_mu", &w_mu.data},
                 {"b_mu", &b_mu},
                 {"w_logvar", &w_logvar.data},
                 {"b_logvar", &b_logvar},
                 {"w_dec", &w_dec.data},
                 {"b_dec", &b_dec}}};
    }
};

// ─── Loss configuration ─────────────────────────────────────────────────────

struct LossConfig {
    double alpha = 1.0;  // weight of the relationship term
    double beta = 1.0;   // weight of the posterior regularizer
    double d_m = 2.0;    // hinge margin

    void validate() const {
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw ConfigError("alpha must be finite and nonnegative");
        if (!(beta >= 0.0) || !std::isfinite(beta))
            throw ConfigError("beta must be finite and nonnegative");
        if (!(d_m > 0.0) || !std::isfinite(d_m))
            throw ConfigError("d_m must be finite and positive");
    }
};

// ─── Forward passes ─────────────────────────────────────────────────────────

inline GaussianPosterior encode(const EncoderModel& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.input_dim)
        throw ConfigError("encode: input has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(m.input_dim));
    GaussianPosterior post;
    post.mean.assign(static_cast<std::size_t>(m.latent_dim), 0.0);
    post.log_var.assign(static_cast<std::size_t>(m.latent_dim), 0.0);
    for (int l = 0; l < m.latent_dim; ++l) {
        double mu = m.b_mu[static_cast<std::size_t>(l)];
        double lv = m.b_logvar[static_cast<std::size_t>(l)];
        for (int d = 0; d < m.input_dim; ++d) {
            mu += m.w_mu(l, d) * x[static_cast<std::size_t>(d)];
            lv += m.w_logvar(l, d) * x[static_cast<std::size_t>(d)];
        }
        post.mean[static_cast<std::size_t>(l)] = mu;
        post.log_var[static_cast<std::size_t>(l)] = lv;
    }
    return post;
}

inline std::vector<double> decode(const EncoderModel& m, std::span<const double> z) {
    if (static_cast<int>(z.size()) != m.latent_dim)
        throw ConfigError("decode: latent has wrong dimension");
    std::vector<double> x(static_cast<std::size_t>(m.input_dim), 0.0);
    for (int d = 0; d < m.input_dim; ++d) {
        double v = m.b_dec[static_cast<std::size_t>(d)];
        for (int l = 0; l < m.latent_dim; ++l) v += m.w_dec(d, l) * z[static_cast<std::size_t>(l)];
        x[static_cast<std::size_t>(d)] = v;
    }
    return x;
}

/// Reparameterized sample: mean + exp(log_var / 2) * eps, with eps the
/// standard-normal draw supplied by the caller (keeps losses replayable).
inline std::vector<double> sample_latent(const GaussianPosterior& post,
                                         std::span<const double> eps) {
    if (eps.size() != post.mean.size())
        throw ConfigError("sample_latent: noise dimension mismatch");
    std::vector<double> z(post.mean.size());
    for (std::size_t l = 0; l < z.size(); ++l)
        z[l] = post.mean[l] + std::exp(0.5 * post.log_var[l]) * eps[l];
    return z;
}

inline std::vector<double> sample_latent(const GaussianPosterior& post, Rng& rng) {
    std::vector<double> eps = rng.normal_vector(post.mean.size());
    return sample_latent(post, eps);
}

/// KL(q || N(0, I)) in closed form.
inline double gaussian_kl(const GaussianPosterior& post) {
    double kl = 0.0;
    for (std::size_t l = 0; l < post.mean.size(); ++l) {
        const double mu = post.mean[l];
        const double lv = post.log_var[l];
        kl += 0.5 * (std::exp(lv) + mu * mu - 1.0 - lv);
    }
    return kl;
}

// ─── Losses ─────────────────────────────────────────────────────────────────

/// Single-observation objective: squared reconstruction error of the
/// reparameterized sample plus beta times the posterior regularizer.
inline double vae_loss(const EncoderModel& m, std::span<const double> x,
                       std::span<const double> eps, const LossConfig& cfg) {
    cfg.validate();
    const GaussianPosterior post = encode(m, x);
    const std::vector<double> z = sample_latent(post, eps);
    const std::vector<double> xhat = decode(m, z);
    double recon = 0.0;
    for (std::size_t d = 0; d < xhat.size(); ++d) {
        const double r = xhat[d] - x[d];
        recon += r * r;
    }
    return recon + cfg.beta * gaussian_kl(post);
}

/// L1 distance between two latent vectors.
inline double latent_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("latent_distance: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

/// Relationship term on a pair of latent codes:
///   inclusive    pull together:      d
///   exclusive    push beyond 2*d_m:  max(0, 2*d_m - d)
///   independent  push beyond d_m:    max(0, d_m - d)
inline double relation_loss(std::span<const double> z1, std::span<const double> z2,
                            RelationLabel label, double d_m) {
    const double d = latent_distance(z1, z2);
    switch (label) {
        case RelationLabel::Inclusive: return d;
        case RelationLabel::Exclusive: return std::max(0.0, 2.0 * d_m - d);
        case RelationLabel::Independent: return std::max(0.0, d_m - d);
    }
    throw std::invalid_argument("bad relation label");
}

/// Pair objective: mean of the two single-observation losses plus alpha times
/// the relationship term on the posterior means.
inline double pair_loss(const EncoderModel& m, std::span<const double> x1,
                        std::span<const double> x2, RelationLabel label,
                        std::span<const double> eps1, std::span<const double> eps2,
                        const LossConfig& cfg) {
    cfg.validate();
    const double v1 = vae_loss(m, x1, eps1, cfg);
    const double v2 = vae_loss(m, x2, eps2, cfg);
    const GaussianPosterior p1 = encode(m, x1);
    const GaussianPosterior p2 = encode(m, x2);
    return 0.5 * (v1 + v2) + cfg.alpha * relation_loss(p1.mean, p2.mean, label, cfg.d_m);
}

// ─── Gradients ──────────────────────────────────────────────────────────────

namespace detail {

/// Backprop of scale * vae_loss into the accumulator. Returns the loss and
/// hands the posterior back for the relationship term.
inline double vae_backward(const EncoderModel& m, std::span<const double> x,
                           std::span<const double> eps, const LossConfig& cfg, double scale,
                           EncoderGradients& g, GaussianPosterior& post_out) {
    const GaussianPosterior post = encode(m, x);
    const std::vector<double> z = sample_latent(post, eps);
    const std::vector<double> xhat = decode(m, z);

    const std::size_t D = static_cast<std::size_t>(m.input_dim);
    const std::size_t L = static_cast<std::size_t>(m.latent_dim);

    double recon = 0.0;
    std::vector<double> dxhat(D);
    for (std::size_t d = 0; d < D; ++d) {
        const double r = xhat[d] - x[d];
        recon += r * r;
        dxhat[d] = 2.0 * r;
    }

    // decoder: xhat = w_dec z + b_dec
    std::vector<double> dz(L, 0.0);
    for (std::size_t d = 0; d < D; ++d) {
        g.b_dec[d] += scale * dxhat[d];
        for (std::size_t l = 0; l < L; ++l) {
            g.w_dec(static_cast<int>(d), static_cast<int>(l)) += scale * dxhat[d] * z[l];
            dz[l] += m.w_dec(static_cast<int>(d), static_cast<int>(l)) * dxhat[d];
        }
    }

    // through the sample z = mu + exp(lv/2) eps, plus the regularizer
    double kl = 0.0;
    std::vector<double> dmu(L), dlv(L);
    for (std::size_t l = 0; l < L; ++l) {
        const double mu = post.mean[l];
        const double lv = post.log_var[l];
        kl += 0.5 * (std::exp(lv) + mu * mu - 1.0 - lv);
        dmu[l] = dz[l] + cfg.beta * mu;
        dlv[l] = dz[l] * 0.5 * std::exp(0.5 * lv) * eps[l] + cfg.beta * 0.5 * (std::exp(lv) - 1.0);
    }

    // encoder heads
    for (std::size_t l = 0; l < L; ++l) {
        g.b_mu[l] += scale * dmu[l];
        g.b_logvar[l] += scale * dlv[l];
        for (std::size_t d = 0; d < D; ++d) {
            g.w_mu(static_cast<int>(l), static_cast<int>(d)) += scale * dmu[l] * x[d];
            g.w_logvar(static_cast<int>(l), static_cast<int>(d)) += scale * dlv[l] * x[d];
        }
    }

    post_out = post;
    return recon + cfg.beta * kl;
}

/// d(relation)/d(mu1) into dmu1 (and the negation into dmu2). Hinge
/// subgradient at the kink and sign at ties are both taken as zero.
inline double relation_backward(const GaussianPosterior& p1, const GaussianPosterior& p2,
                                RelationLabel label, double d_m, std::vector<double>& dmu1,
                                std::vector<double>& dmu2) {
    const std::size_t L = p1.mean.size();
    std::vector<double> sign(L, 0.0);
    double d = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const double diff = p1.mean[l] - p2.mean[l];
        d += std::abs(diff);
        sign[l] = (diff > 0.0) ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
    double loss = 0.0;
    double dscale = 0.0;  // d(loss)/d(distance)
    switch (label) {
        case RelationLabel::Inclusive:
            loss = d;
            dscale = 1.0;
            break;
        case RelationLabel::Exclusive:
            if (2.0 * d_m - d > 0.0) {
                loss = 2.0 * d_m - d;
                dscale = -1.0;
            }
            break;
        case RelationLabel::Independent:
            if (d_m - d > 0.0) {
                loss = d_m - d;
                dscale = -1.0;
            }
            break;
    }
    if (dscale != 0.0) {
        for (std::size_t l = 0; l < L; ++l) {
            dmu1[l] += dscale * sign[l];
            dmu2[l] -= dscale * sign[l];
        }
    }
    return loss;
}

}  // namespace detail

/// Accumulate scale * d(pair_loss)/d(params) into `g`; returns the pair loss.
inline double accumulate_pair_gradients(const EncoderModel& m, std::span<const double> x1,
                                        std::span<const double> x2, RelationLabel label,
                                        std::span<const double> eps1, std::span<const double> eps2,
                                        const LossConfig& cfg, double scale,
                                        EncoderGradients& g) {
    cfg.validate();
    GaussianPosterior p1, p2;
    const double v1 = detail::vae_backward(m, x1, eps1, cfg, 0.5 * scale, g, p1);
    const double v2 = detail::vae_backward(m, x2, eps2, cfg, 0.5 * scale, g, p2);

    const std::size_t L = static_cast<std::size_t>(m.latent_dim);
    std::vector<double> dmu1(L, 0.0), dmu2(L, 0.0);
    const double rel = detail::relation_backward(p1, p2, label, cfg.d_m, dmu1, dmu2);

    // relationship term reaches only the mean head
    auto push_mean = [&](const std::vector<double>& dmu, std::span<const double> x) {
        for (std::size_t l = 0; l < L; ++l) {
            const double dl = cfg.alpha * scale * dmu[l];
            if (dl == 0.0) continue;
            g.b_mu[l] += dl;
            for (int d = 0; d < m.input_dim; ++d)
                g.w_mu(static_cast<int>(l), d) += dl * x[static_cast<std::size_t>(d)];
        }
    };
    push_mean(dmu1, x1);
    push_mean(dmu2, x2);

    return 0.5 * (v1 + v2) + cfg.alpha * rel;
}

// ─── Training ───────────────────────────────────────────────────────────────

struct TrainConfig {
    double learning_rate = 1e-2;
    int epochs = 200;
    int batch_size = 24;
    int pair_count = 600;
    PairRatios ratios;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (epochs < 0) throw ConfigError("epochs must be nonnegative");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        if (pair_count < 1) throw ConfigError("pair_count must be positive");
        ratios.validate();
    }
};

struct TrainResult {
    EncoderModel model;
    double initial_loss = 0.0;           // mean pair loss before training, fixed noise
    double final_loss = 0.0;             // same evaluation after training
    std::vector<double> epoch_losses;    // mean minibatch loss per epoch
};

/// Minibatch SGD on the pair objective over a fixed pair sample drawn from
/// the corpus. Initial/final losses are evaluated with one shared set of
/// noise draws so the comparison is apples-to-apples. Non-finite loss aborts
/// with the epoch in the error.
inline TrainResult train(const EncoderModel& initial, const DemoCorpus& corpus,
                         const RelationIndex& index, const LossConfig& loss_cfg,
                         const TrainConfig& train_cfg) {
    loss_cfg.validate();
    train_cfg.validate();
    initial.validate();

    std::unordered_map<int, const std::vector<double>*> features;
    for (const ActionSequence& seq : corpus.sequences)
        for (const Observation& o : seq.observations)
            if (o.is_raw()) {
                if (static_cast<int>(o.raw.size()) != initial.input_dim)
                    throw ConfigError("corpus feature_dim does not match encoder input_dim");
                features[o.obs_id] = &o.raw;
            }

    const std::vector<TrainingPair> pairs = sample_training_pairs(
        index, train_cfg.pair_count, train_cfg.ratios, derive_seed(train_cfg.seed, 2));

    const std::size_t L = static_cast<std::size_t>(initial.latent_dim);
    Rng eval_rng(derive_seed(train_cfg.seed, 3));
    std::vector<std::vector<double>> eval_eps1, eval_eps2;
    eval_eps1.reserve(pairs.size());
    eval_eps2.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        eval_eps1.push_back(eval_rng.normal_vector(L));
        eval_eps2.push_back(eval_rng.normal_vector(L));
    }

    auto mean_loss = [&](const EncoderModel& m) {
        double total = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const TrainingPair& p = pairs[i];
            total += pair_loss(m, *features.at(p.a), *features.at(p.b), p.label, eval_eps1[i],
                               eval_eps2[i], loss_cfg);
        }
        return pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size());
    };

    TrainResult result;
    result.model = initial;
    result.initial_loss = mean_loss(initial);

    Rng rng(derive_seed(train_cfg.seed, 4));
    EncoderGradients grads(initial);
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
            const double inv = 1.0 / static_cast<double>(stop - start);
            grads.zero();
            for (std::size_t i = start; i < stop; ++i) {
                const TrainingPair& p = pairs[order[i]];
                const std::vector<double> e1 = rng.normal_vector(L);
                const std::vector<double> e2 = rng.normal_vector(L);
                const double loss =
                    accumulate_pair_gradients(result.model, *features.at(p.a), *features.at(p.b),
                                              p.label, e1, e2, loss_cfg, inv, grads);
                if (!std::isfinite(loss))
                    throw TrainingError("pair loss diverged to a non-finite value", epoch);
                epoch_total += loss * inv / std::ceil(static_cast<double>(order.size()) /
                                                      train_cfg.batch_size);
            }
            auto model_blocks = result.model.parameter_blocks();
            auto grad_blocks = grads.parameter_blocks();
            for (std::size_t b = 0; b < model_blocks.size(); ++b) {
                std::vector<double>& p = *model_blocks[b].second;
                const std::vector<double>& dp = *grad_blocks[b].second;
                for (std::size_t i = 0; i < p.size(); ++i)
                    p[i] -= train_cfg.learning_rate * dp[i];
            }
        }
        result.epoch_losses.push_back(epoch_total);
    }

    result.final_loss = mean_loss(result.model);
    return result;
}

}  // namespace boltplan
