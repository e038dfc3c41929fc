#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <vector>

#include "boltplan/latent.hpp"

namespace boltplan {

// ─── Latent table ───────────────────────────────────────────────────────────

/// Posterior means for every raw observation in a corpus, in corpus order.
struct LatentTable {
    std::vector<int> obs_ids;
    std::vector<std::vector<double>> latents;
    std::unordered_map<int, std::size_t> row_of;

    std::size_t size() const { return obs_ids.size(); }

    const std::vector<double>& latent_for(int obs_id) const {
        auto it = row_of.find(obs_id);
        if (it == row_of.end())
            throw LookupError("no latent for obs_id " + std::to_string(obs_id));
        return latents[it->second];
    }
};

inline LatentTable encode_corpus(const EncoderModel& model, const DemoCorpus& corpus) {
    model.validate();
    LatentTable table;
    for (const ActionSequence& seq : corpus.sequences)
        for (const Observation& o : seq.observations) {
            if (!o.is_raw()) continue;
            table.row_of[o.obs_id] = table.obs_ids.size();
            table.obs_ids.push_back(o.obs_id);
            table.latents.push_back(encode(model, o.raw).mean);
        }
    return table;
}

// ─── k-means ────────────────────────────────────────────────────────────────

struct Clustering {
    int k = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<int> labels;  // one per input point
    double inertia = 0.0;     // total squared distance to assigned centroids
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Nearest centroid; ties break to the lowest index so runs are stable.
inline int nearest(const std::vector<std::vector<double>>& centroids,
                   const std::vector<double>& x, double* dist_out = nullptr) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = sq_dist(centroids[c], x);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

/// Distance-squared weighted seeding. Falls back to uniform choice when all
/// remaining mass is zero (duplicate points).
inline std::vector<std::vector<double>> seed_centroids(
    const std::vector<std::vector<double>>& points, int k, Rng& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.push_back(points[rng.uniform_below(points.size())]);
    std::vector<double> d2(points.size());
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sq_dist(c, points[i]));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_below(points.size());
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

inline int count_distinct(const std::vector<std::vector<double>>& points) {
    std::set<std::vector<double>> uniq(points.begin(), points.end());
    return static_cast<int>(uniq.size());
}

}  // namespace detail

/// Lloyd iterations from k-means++ seeds, best of `restarts` by inertia.
/// Ties (identical inertia) keep the earlier restart. An empty cluster is
/// reseeded with the point farthest from its current centroid.
inline Clustering kmeans_fit(const std::vector<std::vector<double>>& points, int k,
                             std::uint64_t seed, int restarts = 10, int max_iters = 300) {
    if (k < 1) throw ConfigError("k must be positive");
    if (restarts < 1) throw ConfigError("restarts must be positive");
    if (points.empty()) throw DegenerateInputError("no points to cluster");
    for (const auto& p : points)
        if (p.size() != points.front().size())
            throw ConfigError("clustering points disagree on dimension");
    if (detail::count_distinct(points) < k)
        throw DegenerateInputError("only " + std::to_string(detail::count_distinct(points)) +
                                   " distinct points for k=" + std::to_string(k));

    Clustering best;
    best.inertia = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < restarts; ++restart) {
        Rng rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(restart)));
        std::vector<std::vector<double>> centroids = detail::seed_centroids(points, k, rng);
        std::vector<int> labels(points.size(), -1);

        for (int iter = 0; iter < max_iters; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const int c = detail::nearest(centroids, points[i]);
                if (c != labels[i]) {
                    labels[i] = c;
                    changed = true;
                }
            }
            if (!changed && iter > 0) break;

            std::vector<std::vector<double>> sums(
                static_cast<std::size_t>(k),
                std::vector<double>(points.front().size(), 0.0));
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < points.size(); ++i) {
                const auto& p = points[i];
                auto& s = sums[static_cast<std::size_t>(labels[i])];
                for (std::size_t d = 0; d < p.size(); ++d) s[d] += p[d];
                ++counts[static_cast<std::size_t>(labels[i])];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    auto& s = sums[static_cast<std::size_t>(c)];
                    for (double& v : s) v /= counts[static_cast<std::size_t>(c)];
                    centroids[static_cast<std::size_t>(c)] = s;
                } else {
                    // farthest point from its assigned centroid becomes the new seed
                    double worst = -1.0;
                    std::size_t worst_i = 0;
                    for (std::size_t i = 0; i < points.size(); ++i) {
                        const double d = detail::sq_dist(
                            points[i], centroids[static_cast<std::size_t>(labels[i])]);
                        if (d > worst) {
                            worst = d;
                            worst_i = i;
                        }
                    }
                    centroids[static_cast<std::size_t>(c)] = points[worst_i];
                }
            }
        }

        double inertia = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            labels[i] = detail::nearest(centroids, points[i]);
            inertia += detail::sq_dist(points[i], centroids[static_cast<std::size_t>(labels[i])]);
        }
        if (inertia < best.inertia) {
            best.k = k;
            best.centroids = std::move(centroids);
            best.labels = std::move(labels);
            best.inertia = inertia;
        }
    }
    return best;
}

// ─── Cluster-count selection ────────────────────────────────────────────────

/// A sequence is counted as incorrect when two of its raw observations land
/// in the same cluster: the demonstration showed different circumstances at
/// those steps, so one cluster cannot represent both.
inline int incorrect_sequence_count(const Clustering& clustering, const LatentTable& table,
                                    const DemoCorpus& corpus) {
    if (clustering.labels.size() != table.size())
        throw LookupError("clustering labels do not cover the latent table");
    int incorrect = 0;
    for (const ActionSequence& seq : corpus.sequences) {
        std::vector<int> clusters;
        for (const Observation& o : seq.observations) {
            if (!o.is_raw()) continue;
            auto it = table.row_of.find(o.obs_id);
            if (it == table.row_of.end())
                throw LookupError("no latent for obs_id " + std::to_string(o.obs_id));
            clusters.push_back(clustering.labels[it->second]);
        }
        std::sort(clusters.begin(), clusters.end());
        if (std::adjacent_find(clusters.begin(), clusters.end()) != clusters.end()) ++incorrect;
    }
    return incorrect;
}

struct KSelectionPoint {
    int k = 0;
    int incorrect = 0;
    double rate = 0.0;  // incorrect / sequences
    double inertia = 0.0;
};

struct KSelection {
    int k = 0;  // chosen cluster count
    std::vector<KSelectionPoint> curve;
};

/// Scan cluster counts in [k_min, k_max] and pick the smallest whose
/// incorrect-sequence rate drops to the threshold or below. Raises
/// SelectionError (with the full curve attached) when none qualifies.
inline KSelection select_k(const LatentTable& table, const DemoCorpus& corpus, int k_min,
                           int k_max, double threshold, std::uint64_t seed, int restarts = 10) {
    if (k_min < 1 || k_max < k_min) throw ConfigError("bad cluster-count range");
    if (!(threshold >= 0.0)) throw ConfigError("threshold must be nonnegative");
    if (corpus.sequences.empty()) throw ConfigError("empty corpus");

    KSelection sel;
    const double n_seq = static_cast<double>(corpus.sequences.size());
    for (int k = k_min; k <= k_max; ++k) {
        const Clustering c = kmeans_fit(table.latents, k,
                                        derive_seed(seed, 200 + static_cast<std::uint64_t>(k)),
                                        restarts);
        KSelectionPoint point;
        point.k = k;
        point.incorrect = incorrect_sequence_count(c, table, corpus);
        point.rate = point.incorrect / n_seq;
        point.inertia = c.inertia;
        sel.curve.push_back(point);
        if (sel.k == 0 && point.rate <= threshold) sel.k = k;
    }
    if (sel.k == 0) {
        std::vector<std::pair<int, double>> curve;
        for (const auto& p : sel.curve) curve.emplace_back(p.k, p.rate);
        throw SelectionError("no cluster count in [" + std::to_string(k_min) + ", " +
                                 std::to_string(k_max) + "] meets the incorrect-sequence threshold",
                             std::move(curve));
    }
    return sel;
}

}  // namespace boltplan
