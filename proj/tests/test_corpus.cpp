#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "boltplan/boltplan.hpp"

using namespace boltplan;

namespace {

// The six demonstration rows used throughout these tests. Raw observations
// are numbered img 1..11 in reading order; symbolic slots take ids from 100.
//
//   row 0  AID    s0 A [img1]  I s1 D s2
//   row 1  AMID   s0 A [img2]  M [img3]  I s1 D s2
//   row 2  AID    s0 A [img4]  I s1 D s2
//   row 3  APID   s0 A [img5]  P [img6]  I s1 D s2
//   row 4  AMID   s0 A [img7]  M [img8]  I s1 D s2
//   row 5  APMID  s0 A [img9]  P [img10] M [img11] I s1 D s2
DemoCorpus table_corpus() {
    DemoCorpus corpus;
    int sym_id = 100;
    int img = 1;
    int seq_id = 0;
    const std::vector<std::string> rows = {"AID", "AMID", "AID", "APID", "AMID", "APMID"};
    for (const std::string& type : rows) {
        ActionSequence seq;
        seq.seq_id = seq_id++;
        seq.seq_type = type;
        seq.actions = actions_for_type(type);
        for (const SlotInfo& slot : slots_for_type(type)) {
            if (slot.raw)
                seq.observations.push_back(
                    Observation::raw_feature(img++, {static_cast<double>(img), 0.5}));
            else
                seq.observations.push_back(Observation::symbolic(sym_id++, slot.symbol));
        }
        corpus.sequences.push_back(std::move(seq));
    }
    corpus.validate();
    return corpus;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("sequence validation rejects malformed shapes") {
    DemoCorpus corpus = table_corpus();
    REQUIRE_NOTHROW(corpus.validate());

    SECTION("first observation must be s0") {
        corpus.sequences[0].observations[0] = Observation::raw_feature(999, {1.0, 2.0});
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
    SECTION("last observation must be s2") {
        corpus.sequences[0].observations.back() = Observation::symbolic(999, 1);
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
    SECTION("observation and action counts must alternate") {
        corpus.sequences[2].observations.pop_back();
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
    SECTION("seq_type must spell the action list") {
        corpus.sequences[1].seq_type = "APID";
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
    SECTION("obs ids must be unique corpus-wide") {
        corpus.sequences[3].observations[1].obs_id = 1;  // collides with img1
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
    SECTION("raw observations must agree on dimension") {
        corpus.sequences[3].observations[1].raw = {1.0, 2.0, 3.0};
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
    SECTION("symbol ids must be in range") {
        corpus.sequences[0].observations[0].symbol = 7;
        REQUIRE_THROWS_AS(corpus.validate(), StructuralError);
    }
}

TEST_CASE("slot descriptors read situations off the remaining actions") {
    const auto slots = slots_for_type("APMID");
    REQUIRE(slots.size() == 6);
    REQUIRE(!slots[0].raw);
    REQUIRE(slots[0].symbol == 0);
    REQUIRE(slots[1].situation == Situation::BlockedMisaligned);  // P and M still pending
    REQUIRE(slots[2].situation == Situation::Misaligned);         // M still pending
    REQUIRE(slots[3].situation == Situation::ClearAligned);
    REQUIRE(slots[4].symbol == 1);
    REQUIRE(slots[5].symbol == 2);

    REQUIRE(slots_for_type("AID")[1].situation == Situation::ClearAligned);
    REQUIRE(slots_for_type("AMID")[1].situation == Situation::Misaligned);
    REQUIRE(slots_for_type("APID")[1].situation == Situation::Blocked);

    REQUIRE(valid_seq_type("AID"));
    REQUIRE(valid_seq_type("APMID"));
    REQUIRE(!valid_seq_type("AMPID"));  // Mate before Push is not demonstrated
    REQUIRE(!valid_seq_type("AIID"));
    REQUIRE(!valid_seq_type("PID"));
    REQUIRE(!valid_seq_type(""));
    REQUIRE_THROWS_AS(actions_for_type("AMPID"), ConfigError);
}

TEST_CASE("groups partition the table into its canonical eleven") {
    const DemoCorpus corpus = table_corpus();
    const GroupTable groups = extract_groups(corpus);

    REQUIRE(groups.count() == 11);
    REQUIRE(groups.name(0) == "s0");
    REQUIRE(groups.name(1) == "s1");
    REQUIRE(groups.name(2) == "s2");
    REQUIRE(groups.name(3) == "AID#1");
    REQUIRE(groups.name(4) == "AMID#1");
    REQUIRE(groups.name(5) == "AMID#2");
    REQUIRE(groups.name(6) == "APID#1");
    REQUIRE(groups.name(7) == "APID#2");
    REQUIRE(groups.name(8) == "APMID#1");
    REQUIRE(groups.name(9) == "APMID#2");
    REQUIRE(groups.name(10) == "APMID#3");

    REQUIRE(groups.members[3] == std::vector<int>{1, 4});
    REQUIRE(groups.members[4] == std::vector<int>{2, 7});
    REQUIRE(groups.members[5] == std::vector<int>{3, 8});
    REQUIRE(groups.members[6] == std::vector<int>{5});
    REQUIRE(groups.members[7] == std::vector<int>{6});
    REQUIRE(groups.members[8] == std::vector<int>{9});
    REQUIRE(groups.members[9] == std::vector<int>{10});
    REQUIRE(groups.members[10] == std::vector<int>{11});
    REQUIRE(groups.members[0].size() == 6);  // one s0 per row

    REQUIRE(groups.group_of_obs(1) == 3);
    REQUIRE(groups.group_of_obs(10) == 9);
    REQUIRE_THROWS_AS(groups.group_of_obs(4242), LookupError);

    // every observation lands in exactly one group
    std::size_t covered = 0;
    for (const auto& members : groups.members) covered += members.size();
    std::size_t total = 0;
    for (const auto& seq : corpus.sequences) total += seq.observations.size();
    REQUIRE(covered == total);
}

TEST_CASE("a lone AID row still yields the three marker groups") {
    DemoCorpus corpus;
    ActionSequence seq;
    seq.seq_id = 0;
    seq.seq_type = "AID";
    seq.actions = actions_for_type("AID");
    seq.observations = {Observation::symbolic(0, 0), Observation::raw_feature(1, {1.0}),
                        Observation::symbolic(2, 1), Observation::symbolic(3, 2)};
    corpus.sequences.push_back(seq);

    const GroupTable groups = extract_groups(corpus);
    REQUIRE(groups.count() == 4);
    REQUIRE(groups.name(3) == "AID#1");
}

TEST_CASE("relationship index reproduces the demonstration table") {
    const DemoCorpus corpus = table_corpus();
    const RelationIndex index(corpus);

    SECTION("inclusive sets are the suffix classes") {
        REQUIRE(index.inclusive_set(1) == std::vector<int>{1, 3, 4, 6, 8, 11});
        REQUIRE(index.inclusive_set(2) == std::vector<int>{2, 7, 10});
        REQUIRE(index.inclusive_set(5) == std::vector<int>{5});
        REQUIRE(index.inclusive_set(9) == std::vector<int>{9});
    }

    SECTION("exclusive sets: same sequence, then one hop over inclusives") {
        REQUIRE(index.in_exclusive(2, 3));  // same sequence, different slots
        REQUIRE(index.in_exclusive(5, 6));
        REQUIRE(index.in_exclusive(9, 10));
        REQUIRE(index.in_exclusive(10, 11));
        // img2 is exclusive with img3, and img3 looks like img1
        REQUIRE(index.in_exclusive(1, 2));
        REQUIRE(index.exclusive_set(1) == std::vector<int>{2, 5, 7, 9, 10});
    }

    SECTION("classification matches the worked examples") {
        REQUIRE(index.classify(1, 4) == RelationLabel::Inclusive);
        REQUIRE(index.classify(2, 3) == RelationLabel::Exclusive);
        REQUIRE(index.classify(1, 2) == RelationLabel::Exclusive);
        REQUIRE(index.classify(5, 9) == RelationLabel::Independent);
        REQUIRE(index.classify(5, 2) == RelationLabel::Independent);
    }

    SECTION("relations are symmetric, inclusive is reflexive, no self-exclusion") {
        const std::vector<int> ids = index.observations();
        REQUIRE(ids.size() == 11);
        for (int a : ids) {
            const auto& inc = index.inclusive_set(a);
            REQUIRE(std::find(inc.begin(), inc.end(), a) != inc.end());
            REQUIRE(!index.in_exclusive(a, a));
            const auto exc = index.exclusive_set(a);
            REQUIRE(std::find(exc.begin(), exc.end(), a) == exc.end());
            for (int b : ids) {
                if (a == b) continue;
                REQUIRE(index.in_exclusive(a, b) == index.in_exclusive(b, a));
                REQUIRE(index.classify(a, b) == index.classify(b, a));
            }
        }
    }

    SECTION("inclusive pairs never classify as anything else") {
        for (int a : index.observations())
            for (int b : index.inclusive_set(a))
                if (a != b) REQUIRE(index.classify(a, b) == RelationLabel::Inclusive);
    }

    SECTION("symbolic and unknown observations have no relations") {
        REQUIRE_THROWS_AS(index.classify(100, 1), LookupError);
        REQUIRE_THROWS_AS(index.classify(1, 4242), LookupError);
        REQUIRE_THROWS_AS(index.classify(3, 3), std::invalid_argument);
    }
}

TEST_CASE("pair sampling fills quotas with correctly labeled pairs") {
    const DemoCorpus corpus = table_corpus();
    const RelationIndex index(corpus);

    SECTION("equal thirds split 30 pairs 10/10/10") {
        const auto pairs = sample_training_pairs(index, 30, PairRatios{}, 9);
        REQUIRE(pairs.size() == 30);
        int counts[3] = {0, 0, 0};
        for (const TrainingPair& p : pairs) {
            ++counts[static_cast<int>(p.label)];
            REQUIRE(p.a != p.b);
            REQUIRE(index.classify(p.a, p.b) == p.label);
        }
        REQUIRE(counts[0] == 10);
        REQUIRE(counts[1] == 10);
        REQUIRE(counts[2] == 10);
    }

    SECTION("largest-remainder rounding hands 7 out as 3/2/2") {
        const auto pairs = sample_training_pairs(index, 7, PairRatios{}, 9);
        int counts[3] = {0, 0, 0};
        for (const TrainingPair& p : pairs) ++counts[static_cast<int>(p.label)];
        REQUIRE(counts[0] == 3);
        REQUIRE(counts[1] == 2);
        REQUIRE(counts[2] == 2);
    }

    SECTION("sampling is deterministic in the seed") {
        const auto a = sample_training_pairs(index, 24, PairRatios{}, 123);
        const auto b = sample_training_pairs(index, 24, PairRatios{}, 123);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].a == b[i].a);
            REQUIRE(a[i].b == b[i].b);
            REQUIRE(a[i].label == b[i].label);
        }
    }

    SECTION("ratios must be a distribution") {
        REQUIRE_THROWS_AS(sample_training_pairs(index, 10, PairRatios{0.5, 0.5, 0.5}, 1),
                          ConfigError);
        REQUIRE_THROWS_AS(sample_training_pairs(index, 10, PairRatios{-0.5, 1.0, 0.5}, 1),
                          ConfigError);
    }

    SECTION("a requested label with no pairs in the corpus is an error") {
        DemoCorpus two_rows;
        int next = 0;
        for (int s = 0; s < 2; ++s) {
            ActionSequence seq;
            seq.seq_id = s;
            seq.seq_type = "AID";
            seq.actions = actions_for_type("AID");
            seq.observations = {Observation::symbolic(next++, 0),
                                Observation::raw_feature(next++, {1.0}),
                                Observation::symbolic(next++, 1),
                                Observation::symbolic(next++, 2)};
            two_rows.sequences.push_back(seq);
        }
        const RelationIndex idx(two_rows);
        // the two images share the suffix, so only inclusive pairs exist
        REQUIRE_NOTHROW(sample_training_pairs(idx, 4, PairRatios{1.0, 0.0, 0.0}, 1));
        REQUIRE_THROWS_AS(sample_training_pairs(idx, 4, PairRatios{0.0, 1.0, 0.0}, 1),
                          SamplingError);
        REQUIRE_THROWS_AS(sample_training_pairs(idx, 4, PairRatios{0.0, 0.0, 1.0}, 1),
                          SamplingError);
    }
}

TEST_CASE("corpus files round-trip exactly") {
    const DemoCorpus corpus = table_corpus();
    const std::string path = temp_path("boltplan_corpus_roundtrip.jsonl");
    nlohmann::json meta;
    meta["note"] = "round-trip";
    save_corpus(corpus, path, meta);

    const CorpusFile loaded = load_corpus(path);
    REQUIRE(loaded.meta.at("note") == "round-trip");
    REQUIRE(loaded.corpus.sequences.size() == corpus.sequences.size());
    for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
        const ActionSequence& in = corpus.sequences[s];
        const ActionSequence& out = loaded.corpus.sequences[s];
        REQUIRE(out.seq_id == in.seq_id);
        REQUIRE(out.seq_type == in.seq_type);
        REQUIRE(out.actions == in.actions);
        REQUIRE(out.observations.size() == in.observations.size());
        for (std::size_t i = 0; i < in.observations.size(); ++i) {
            REQUIRE(out.observations[i].obs_id == in.observations[i].obs_id);
            REQUIRE(out.observations[i].kind == in.observations[i].kind);
            REQUIRE(out.observations[i].symbol == in.observations[i].symbol);
            REQUIRE(out.observations[i].raw == in.observations[i].raw);  // bit-exact
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("corpus loader rejects broken files") {
    const std::string path = temp_path("boltplan_corpus_broken.jsonl");

    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_corpus(temp_path("no_such_corpus.jsonl")), ConfigError);
    }
    SECTION("missing format tag") {
        std::ofstream(path) << "{\"seq_id\":0}\n";
        REQUIRE_THROWS_AS(load_corpus(path), ConfigError);
    }
    SECTION("unparsable line") {
        std::ofstream(path) << "{\"format\":\"demo-corpus/1\"}\n{not json\n";
        REQUIRE_THROWS_AS(load_corpus(path), ConfigError);
    }
    SECTION("items not alternating") {
        std::ofstream(path) << "{\"format\":\"demo-corpus/1\"}\n"
                            << "{\"seq_id\":0,\"seq_type\":\"AID\",\"items\":["
                            << "{\"obs_id\":0,\"sym\":0},\"Approach\"]}\n";
        REQUIRE_THROWS_AS(load_corpus(path), StructuralError);
    }
    SECTION("unknown action name") {
        std::ofstream(path) << "{\"format\":\"demo-corpus/1\"}\n"
                            << "{\"seq_id\":0,\"seq_type\":\"AID\",\"items\":["
                            << "{\"obs_id\":0,\"sym\":0},\"Twist\",{\"obs_id\":1,\"sym\":2}]}\n";
        REQUIRE_THROWS_AS(load_corpus(path), StructuralError);
    }
    std::remove(path.c_str());
}

TEST_CASE("generated corpora satisfy the structural invariants") {
    for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
        CorpusGenConfig cfg;
        cfg.counts = {{"AID", 4}, {"AMID", 3}, {"APID", 2}, {"APMID", 2}};
        const DemoCorpus corpus = generate_demos(cfg, seed);
        REQUIRE(corpus.sequences.size() == 11);
        REQUIRE(corpus.feature_dim() == cfg.feature_dim);
        REQUIRE_NOTHROW(corpus.validate());

        // relations on a generated corpus keep their defining properties
        const RelationIndex index(corpus);
        const std::vector<int> ids = index.observations();
        Rng rng(seed);
        for (int trial = 0; trial < 200; ++trial) {
            const int a = ids[rng.uniform_below(ids.size())];
            const int b = ids[rng.uniform_below(ids.size())];
            if (a == b) continue;
            REQUIRE(index.classify(a, b) == index.classify(b, a));
        }

        // same config and seed regenerate the identical corpus
        const DemoCorpus again = generate_demos(cfg, seed);
        REQUIRE(again.sequences.size() == corpus.sequences.size());
        for (std::size_t s = 0; s < corpus.sequences.size(); ++s)
            for (std::size_t i = 0; i < corpus.sequences[s].observations.size(); ++i)
                REQUIRE(again.sequences[s].observations[i].raw ==
                        corpus.sequences[s].observations[i].raw);
    }
}

TEST_CASE("generator configuration is validated") {
    CorpusGenConfig cfg;
    SECTION("bad sequence type") {
        cfg.counts["AMPID"] = 3;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("empty corpus") {
        cfg.counts = {{"AID", 0}};
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("negative noise") {
        cfg.sigma_obs = -0.1;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("prototype dimension mismatch") {
        cfg.prototypes[0] = {1.0, 2.0};
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("json round-trip preserves the configuration") {
        cfg.sigma_obs = 0.25;
        cfg.counts = {{"AID", 5}, {"APMID", 2}};
        const CorpusGenConfig back = CorpusGenConfig::from_json(cfg.to_json());
        REQUIRE(back.feature_dim == cfg.feature_dim);
        REQUIRE(back.sigma_obs == cfg.sigma_obs);
        REQUIRE(back.counts == cfg.counts);
        REQUIRE(back.prototypes == cfg.prototypes);
    }
}
