#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "boltplan/boltplan.hpp"

using namespace boltplan;

namespace {

/// Three well-separated 2-d blobs; returns points plus ground-truth labels.
std::pair<std::vector<std::vector<double>>, std::vector<int>> blobs(std::uint64_t seed) {
    const std::vector<std::vector<double>> centers = {{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}};
    Rng rng(seed);
    std::vector<std::vector<double>> points;
    std::vector<int> truth;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 25; ++i) {
            points.push_back({centers[c][0] + 0.3 * rng.normal(),
                              centers[c][1] + 0.3 * rng.normal()});
            truth.push_back(c);
        }
    return {points, truth};
}

/// Minimal well-formed sequence for relation bookkeeping tests: the caller
/// supplies the raw observation ids, symbolic ids are derived from seq_id.
ActionSequence make_amid(int seq_id, int raw_a, int raw_b) {
    ActionSequence seq;
    seq.seq_id = seq_id;
    seq.seq_type = "AMID";
    const int base = 1000 + seq_id * 10;
    seq.observations = {Observation::symbolic(base, 0),
                        Observation::raw_feature(raw_a, {0.0}),
                        Observation::raw_feature(raw_b, {0.0}),
                        Observation::symbolic(base + 1, 1),
                        Observation::symbolic(base + 2, 2)};
    seq.actions = {ActionPrimitive::Approach, ActionPrimitive::Mate, ActionPrimitive::Insert,
                   ActionPrimitive::Disassemble};
    return seq;
}

}  // namespace

TEST_CASE("k-means recovers planted blobs") {
    const auto [points, truth] = blobs(11);
    const Clustering c = kmeans_fit(points, 3, 42);
    REQUIRE(c.k == 3);
    REQUIRE(c.labels.size() == points.size());
    REQUIRE(c.centroids.size() == 3);

    // Same ground-truth blob iff same fitted cluster.
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            REQUIRE((truth[i] == truth[j]) == (c.labels[i] == c.labels[j]));

    // Each fitted centroid sits on top of one true center.
    std::set<int> matched;
    for (const auto& centroid : c.centroids) {
        const std::vector<std::vector<double>> centers = {{0, 0}, {8, 0}, {0, 8}};
        for (int t = 0; t < 3; ++t) {
            const double d = std::hypot(centroid[0] - centers[t][0], centroid[1] - centers[t][1]);
            if (d < 0.5) matched.insert(t);
        }
    }
    REQUIRE(matched.size() == 3);

    SECTION("refitting with the same seed is bitwise identical") {
        const Clustering again = kmeans_fit(points, 3, 42);
        REQUIRE(again.labels == c.labels);
        REQUIRE(again.centroids == c.centroids);
        REQUIRE(again.inertia == c.inertia);
    }
}

TEST_CASE("k-means edge cases") {
    SECTION("a single cluster converges to the mean") {
        const std::vector<std::vector<double>> pts = {{1.0}, {2.0}, {6.0}};
        const Clustering c = kmeans_fit(pts, 1, 0);
        REQUIRE(c.centroids[0][0] == Catch::Approx(3.0));
        REQUIRE(c.inertia == Catch::Approx(4.0 + 1.0 + 9.0));
    }
    SECTION("k equal to the number of distinct points gives zero inertia") {
        const std::vector<std::vector<double>> pts = {{0.0}, {5.0}, {9.0}};
        const Clustering c = kmeans_fit(pts, 3, 1);
        REQUIRE(c.inertia == Catch::Approx(0.0));
        REQUIRE(std::set<int>(c.labels.begin(), c.labels.end()).size() == 3);
    }
    SECTION("duplicated points still split by value") {
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 10; ++i) pts.push_back({0.0});
        for (int i = 0; i < 10; ++i) pts.push_back({7.0});
        const Clustering c = kmeans_fit(pts, 2, 3);
        REQUIRE(c.inertia == Catch::Approx(0.0));
        REQUIRE(c.labels[0] != c.labels[19]);
    }
    SECTION("bad inputs are rejected") {
        const std::vector<std::vector<double>> pts = {{0.0}, {0.0}, {1.0}};
        REQUIRE_THROWS_AS(kmeans_fit({}, 2, 0), DegenerateInputError);
        REQUIRE_THROWS_AS(kmeans_fit(pts, 3, 0), DegenerateInputError);  // 2 distinct
        REQUIRE_THROWS_AS(kmeans_fit(pts, 0, 0), ConfigError);
        REQUIRE_THROWS_AS(kmeans_fit(pts, 2, 0, 0), ConfigError);
        const std::vector<std::vector<double>> ragged = {{0.0}, {1.0, 2.0}};
        REQUIRE_THROWS_AS(kmeans_fit(ragged, 2, 0), ConfigError);
    }
}

TEST_CASE("within-sequence cluster collisions are counted per sequence") {
    DemoCorpus corpus;
    corpus.sequences = {make_amid(0, 1, 2), make_amid(1, 3, 4), make_amid(2, 5, 6)};
    corpus.validate();

    LatentTable table;
    for (int id = 1; id <= 6; ++id) {
        table.row_of[id] = table.obs_ids.size();
        table.obs_ids.push_back(id);
        table.latents.push_back({static_cast<double>(id)});
    }

    Clustering c;
    c.k = 2;
    c.labels = {0, 1, 0, 1, 0, 1};  // every sequence sees both clusters
    REQUIRE(incorrect_sequence_count(c, table, corpus) == 0);

    c.labels = {0, 0, 0, 1, 0, 1};  // sequence 0 collapses
    REQUIRE(incorrect_sequence_count(c, table, corpus) == 1);

    c.labels = {1, 1, 0, 0, 0, 1};  // sequences 0 and 1 collapse
    REQUIRE(incorrect_sequence_count(c, table, corpus) == 2);

    SECTION("label/table size mismatch is a lookup failure") {
        c.labels = {0, 1, 0};
        REQUIRE_THROWS_AS(incorrect_sequence_count(c, table, corpus), LookupError);
    }
}

TEST_CASE("cluster-count selection lands on the number of distinct circumstances") {
    CorpusGenConfig cfg;
    cfg.counts = {{"AID", 6}, {"AMID", 6}, {"APID", 4}, {"APMID", 4}};
    const DemoCorpus corpus = generate_demos(cfg, 5);

    // Use the raw features themselves as the embedded points: the generator
    // draws them around four separated prototypes, so the selection logic can
    // be exercised without a trained encoder.
    LatentTable table;
    for (const ActionSequence& seq : corpus.sequences)
        for (const Observation& o : seq.observations) {
            if (!o.is_raw()) continue;
            table.row_of[o.obs_id] = table.obs_ids.size();
            table.obs_ids.push_back(o.obs_id);
            table.latents.push_back(o.raw);
        }

    const KSelection sel = select_k(table, corpus, 2, 8, 0.02, 77);
    REQUIRE(sel.k == 4);
    REQUIRE(sel.curve.size() == 7);
    REQUIRE(sel.curve[0].k == 2);

    std::map<int, KSelectionPoint> by_k;
    for (const auto& p : sel.curve) by_k[p.k] = p;
    // Three clusters must merge the two circumstances that co-occur in the
    // four-action sequences, so exactly those sequences read as incorrect.
    REQUIRE(by_k[3].incorrect == 4);
    REQUIRE(by_k[3].rate == Catch::Approx(4.0 / 20.0));
    REQUIRE(by_k[4].incorrect == 0);

    SECTION("selection is deterministic") {
        const KSelection again = select_k(table, corpus, 2, 8, 0.02, 77);
        REQUIRE(again.k == sel.k);
        REQUIRE(again.curve.size() == sel.curve.size());
        for (std::size_t i = 0; i < sel.curve.size(); ++i)
            REQUIRE(again.curve[i].inertia == sel.curve[i].inertia);
    }

    SECTION("an unreachable threshold reports the whole curve") {
        try {
            select_k(table, corpus, 2, 3, 0.0, 77);
            FAIL("expected SelectionError");
        } catch (const SelectionError& e) {
            REQUIRE(e.curve().size() == 2);
            REQUIRE(e.curve()[0].first == 2);
            REQUIRE(e.curve()[1].first == 3);
            REQUIRE(e.curve()[1].second > 0.0);
        }
    }

    SECTION("range and threshold validation") {
        REQUIRE_THROWS_AS(select_k(table, corpus, 0, 4, 0.1, 1), ConfigError);
        REQUIRE_THROWS_AS(select_k(table, corpus, 5, 4, 0.1, 1), ConfigError);
        REQUIRE_THROWS_AS(select_k(table, corpus, 2, 4, -0.1, 1), ConfigError);
    }
}

TEST_CASE("corpus encoding covers every raw observation in order") {
    CorpusGenConfig cfg;
    cfg.counts = {{"AID", 2}, {"AMID", 2}, {"APID", 1}, {"APMID", 1}};
    const DemoCorpus corpus = generate_demos(cfg, 9);
    const EncoderModel model = EncoderModel::init(cfg.feature_dim, 4, 13);
    const LatentTable table = encode_corpus(model, corpus);

    std::size_t raw_count = 0;
    for (const ActionSequence& seq : corpus.sequences)
        for (const Observation& o : seq.observations)
            if (o.is_raw()) ++raw_count;
    REQUIRE(table.size() == raw_count);

    for (std::size_t i = 0; i < table.size(); ++i) {
        const int id = table.obs_ids[i];
        REQUIRE(table.row_of.at(id) == i);
        const Observation* o = corpus.find_observation(id);
        REQUIRE(o != nullptr);
        REQUIRE(table.latent_for(id) == encode(model, o->raw).mean);
    }
    REQUIRE_THROWS_AS(table.latent_for(999999), LookupError);
}
