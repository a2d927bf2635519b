#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "homecrawl/ml.hpp"
#include "homecrawl/rng.hpp"

using namespace homecrawl;
using ml::Dataset;
using ml::FeatureVector;
using ml::ForestConfig;
using ml::PowerTrace;

namespace {

PowerTrace trace_of(std::vector<double> watts, double period = 10.0, int64_t start = 0) {
    PowerTrace t;
    t.periodSec = period;
    t.startTime = start;
    t.watts = std::move(watts);
    return t;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// two trivially separable synthetic classes
Dataset toy_dataset(size_t perClass, uint64_t seed) {
    Dataset ds;
    Rng rng(seed);
    for (size_t i = 0; i < perClass; ++i) {
        PowerTrace low = trace_of({});
        PowerTrace high = trace_of({});
        for (int k = 0; k < 30; ++k) {
            low.watts.push_back(2.0 + rng.uniform());
            high.watts.push_back(1900.0 + 10.0 * rng.uniform());
        }
        ds.features.push_back(ml::extract_features(low, 5.0));
        ds.labels.push_back("low");
        ds.features.push_back(ml::extract_features(high, 5.0));
        ds.labels.push_back("high");
    }
    return ds;
}

}  // namespace

TEST_CASE("pinned PRNG vectors") {
    uint64_t s = 42;
    CHECK(splitmix64(s) == 0xbdd732262feb6e95ull);
    CHECK(splitmix64(s) == 0x28efe333b266f103ull);
    CHECK(splitmix64(s) == 0x47526757130f9f52ull);
    CHECK(splitmix64(s) == 0x581ce1ff0e4ae394ull);
    Rng rng(42);
    CHECK(rng.next() == 0x31b0ece7c4f697a2ull);
    CHECK(rng.next() == 0x9008a3b1cb686f03ull);
    CHECK(rng.next() == 0x7c7173abd97be16full);
    CHECK(rng.next() == 0x45672c8c8d6b8c4full);
    // derived streams differ from the base and from each other
    CHECK(Rng::derive(42, 0).next() != Rng::derive(42, 1).next());
    CHECK(Rng::derive(42, 0).next() == Rng::derive(42, 0).next());
    // uniform stays in range
    Rng u(7);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        CHECK(u.uniform_int(10) < 10);
    }
}

TEST_CASE("feature extraction matches a naive recompute") {
    auto t = trace_of({0.0, 0.0, 2000.0, 2000.0, 0.0, 0.0, 1000.0, 0.0}, 10.0);
    auto f = ml::extract_features(t, 5.0);
    CHECK(f[0] == doctest::Approx(625.0));       // mean
    CHECK(f[2] == doctest::Approx(2000.0));      // max
    CHECK(f[3] == doctest::Approx(0.0));         // min
    CHECK(f[4] == doctest::Approx(0.0));         // median, nearest-rank 4th of 8
    CHECK(f[5] == doctest::Approx(2000.0));      // p90, nearest-rank 8th of 8
    CHECK(f[6] == doctest::Approx(3.0 / 8.0));   // onRatio
    CHECK(f[7] == doctest::Approx(2.0));         // upward edges
    CHECK(f[8] == doctest::Approx(2000.0));      // max rise
    CHECK(f[9] == doctest::Approx(5000.0 * 10.0 / 3600.0));  // energyWh
    // population std
    double mean = 625.0, var = 0.0;
    for (double x : t.watts) var += (x - mean) * (x - mean);
    CHECK(f[1] == doctest::Approx(std::sqrt(var / 8.0)));

    CHECK_THROWS_AS(ml::extract_features(trace_of({}), 5.0), ml::EmptyTrace);
    CHECK(ml::feature_names().size() == ml::kFeatureCount);
}

TEST_CASE("feature invariants on random traces") {
    Rng rng(11);
    for (int run = 0; run < 100; ++run) {
        PowerTrace t = trace_of({});
        size_t n = 1 + rng.uniform_int(120);
        for (size_t i = 0; i < n; ++i) t.watts.push_back(rng.uniform(0.0, 2200.0));
        auto f = ml::extract_features(t, 5.0);
        CHECK(f[3] <= f[0]);  // min <= mean
        CHECK(f[0] <= f[2]);  // mean <= max
        CHECK(f[3] <= f[4]);  // min <= median
        CHECK(f[4] <= f[5]);  // median <= p90
        CHECK(f[5] <= f[2]);  // p90 <= max
        CHECK(f[6] >= 0.0);
        CHECK(f[6] <= 1.0);
        CHECK(f[1] >= 0.0);
        // energy consistency: sum * period / 3600
        double sum = 0.0;
        for (double x : t.watts) sum += x;
        CHECK(f[9] == doctest::Approx(sum * t.periodSec / 3600.0));
    }
}

TEST_CASE("percentile uses nearest rank") {
    CHECK(ml::percentile_nearest_rank({1, 2, 3, 4, 5}, 0.5) == 3);
    CHECK(ml::percentile_nearest_rank({1, 2, 3, 4}, 0.5) == 2);
    CHECK(ml::percentile_nearest_rank({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.9) == 9);
    CHECK(ml::percentile_nearest_rank({7}, 0.9) == 7);
}

TEST_CASE("training input validation") {
    Dataset ds;
    ds.features.push_back(FeatureVector{});
    ds.labels = {"a", "b"};
    CHECK_THROWS_AS(ml::train(ds), ml::MlError);

    Dataset single;
    for (int i = 0; i < 10; ++i) {
        single.features.push_back(FeatureVector{double(i)});
        single.labels.push_back("only");
    }
    CHECK_THROWS_AS(ml::train(single), ml::TooFewClasses);

    Dataset identical;
    for (int i = 0; i < 10; ++i) {
        identical.features.push_back(FeatureVector{1.0, 2.0});
        identical.labels.push_back(i % 2 ? "a" : "b");
    }
    CHECK_THROWS_AS(ml::train(identical), ml::DegenerateData);
}

TEST_CASE("a separable toy dataset trains to perfect holdout accuracy") {
    auto train = toy_dataset(30, 1);
    auto test = toy_dataset(10, 2);
    ForestConfig cfg;
    cfg.nTrees = 20;
    auto forest = ml::train(train, cfg);
    CHECK(forest.classes() == std::vector<std::string>{"high", "low"});  // sorted
    auto ev = ml::evaluate(forest, test);
    CHECK(ev.abstained == 0);
    REQUIRE(ev.macroPrecision.has_value());
    CHECK(*ev.macroPrecision == doctest::Approx(1.0));
    REQUIRE(ev.microPrecision.has_value());
    CHECK(*ev.microPrecision == doctest::Approx(1.0));
    CHECK(ev.evaluated == test.features.size());

    // unanimous confident prediction
    auto pred = forest.predict(test.features[1]);
    REQUIRE(std::holds_alternative<ml::Label>(pred));
    CHECK(std::get<ml::Label>(pred).cls == "high");
    CHECK(std::get<ml::Label>(pred).confidence == doctest::Approx(1.0));
}

TEST_CASE("predict follows the documented vote tally") {
    // hand-built forest: 3 stumps, 2 vote class 0 for small x, 1 votes class 1
    ml::Tree stumpA;
    stumpA.nodes.push_back({0, 5.0, 1, 2, {}});
    stumpA.nodes.push_back({-1, 0, -1, -1, {10, 0}});
    stumpA.nodes.push_back({-1, 0, -1, -1, {0, 10}});
    ml::Tree stumpB = stumpA;
    ml::Tree stumpC;
    stumpC.nodes.push_back({-1, 0, -1, -1, {0, 1}});  // always class 1
    ForestConfig cfg;
    cfg.confidenceThreshold = 0.6;
    ml::RandomForest forest({stumpA, stumpB, stumpC}, {"a", "b"}, cfg);
    FeatureVector small{};
    small[0] = 1.0;
    auto p = forest.predict(small);
    REQUIRE(std::holds_alternative<ml::Label>(p));
    CHECK(std::get<ml::Label>(p).cls == "a");
    CHECK(std::get<ml::Label>(p).confidence == doctest::Approx(2.0 / 3.0));
    FeatureVector big{};
    big[0] = 9.0;
    auto q = forest.predict(big);  // all three vote "b"
    CHECK(std::get<ml::Label>(q).cls == "b");

    // below the confidence threshold the forest abstains
    ForestConfig strict = cfg;
    strict.confidenceThreshold = 0.9;
    ml::RandomForest hesitant({stumpA, stumpB, stumpC}, {"a", "b"}, strict);
    auto r = hesitant.predict(small);
    REQUIRE(std::holds_alternative<ml::NotConfident>(r));
    CHECK(std::get<ml::NotConfident>(r).topClass == "a");
    CHECK(std::get<ml::NotConfident>(r).confidence == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("identical seeds give byte-identical model files") {
    auto ds = toy_dataset(20, 3);
    ForestConfig cfg;
    cfg.nTrees = 10;
    cfg.seed = 42;
    ml::train(ds, cfg).save("model_a.json");
    ml::train(ds, cfg).save("model_b.json");
    CHECK(slurp("model_a.json") == slurp("model_b.json"));
    cfg.seed = 43;
    ml::train(ds, cfg).save("model_c.json");
    CHECK(slurp("model_a.json") != slurp("model_c.json"));

    // save/load round trip preserves behaviour
    auto loaded = ml::RandomForest::load("model_a.json");
    auto original = ml::RandomForest::load("model_a.json");
    CHECK(loaded.classes() == original.classes());
    CHECK(loaded.to_json() == ml::train(ds, ForestConfig{.nTrees = 10, .seed = 42}).to_json());
    std::remove("model_a.json");
    std::remove("model_b.json");
    std::remove("model_c.json");
    CHECK_THROWS_AS(ml::RandomForest::load("model_a.json"), ml::MlError);
}

TEST_CASE("evaluate separates abstention from error") {
    // a forest that always abstains: every leaf ties between the two classes
    ml::Tree tie;
    tie.nodes.push_back({-1, 0, -1, -1, {1, 1}});
    ForestConfig cfg;
    cfg.confidenceThreshold = 2.0;  // unreachable
    ml::RandomForest abstainer({tie}, {"a", "b"}, cfg);
    Dataset test;
    test.features.push_back(FeatureVector{});
    test.labels.push_back("a");
    auto ev = ml::evaluate(abstainer, test);
    CHECK(ev.abstained == 1);
    CHECK(ev.abstentionRate == doctest::Approx(1.0));
    CHECK_FALSE(ev.macroPrecision.has_value());
    CHECK_FALSE(ev.microPrecision.has_value());

    Dataset unknown;
    unknown.features.push_back(FeatureVector{});
    unknown.labels.push_back("mystery");
    CHECK_THROWS_AS(ml::evaluate(abstainer, unknown), ml::UnknownLabel);

    auto empty = ml::evaluate(abstainer, Dataset{});
    CHECK(empty.evaluated == 0);
    CHECK(empty.abstentionRate == 0.0);
}

TEST_CASE("detect_usage finds one event in a square wave") {
    // 0 W for 5 samples, 2000 W for 6, back to 0
    std::vector<double> w(5, 0.0);
    w.insert(w.end(), 6, 2000.0);
    w.insert(w.end(), 5, 0.0);
    auto events = ml::detect_usage(trace_of(w, 10.0, 1000), 5.0, 3.0, 30.0);
    REQUIRE(events.size() == 1);
    CHECK(events[0].start == 1050);
    CHECK(events[0].end == 1110);
    CHECK(events[0].peakW == doctest::Approx(2000.0));
    CHECK(events[0].energyWh == doctest::Approx(6 * 2000.0 * 10.0 / 3600.0));

    // oracle comparison: direct scan over the same trace
    size_t onSamples = 0;
    for (double x : w) onSamples += x > 5.0 ? 1 : 0;
    CHECK(onSamples == 6);
}

TEST_CASE("hysteresis keeps flicker between thresholds inside one event") {
    // rises above on, dips between off and on, recovers: still one event
    auto t = trace_of({0.0, 100.0, 4.0, 4.0, 100.0, 0.0}, 10.0);
    auto events = ml::detect_usage(t, 5.0, 3.0, 0.0);
    REQUIRE(events.size() == 1);
    CHECK(events[0].start == 10);
    CHECK(events[0].end == 50);

    // a dip below the off threshold splits the events
    auto split = trace_of({0.0, 100.0, 1.0, 100.0, 0.0}, 10.0);
    CHECK(ml::detect_usage(split, 5.0, 3.0, 0.0).size() == 2);

    // events shorter than minOnSec are discarded
    auto blip = trace_of({0.0, 100.0, 0.0}, 10.0);
    CHECK(ml::detect_usage(blip, 5.0, 3.0, 30.0).empty());
    CHECK(ml::detect_usage(blip, 5.0, 3.0, 10.0).size() == 1);

    CHECK_THROWS_AS(ml::detect_usage(blip, 3.0, 5.0, 0.0), ml::MlError);
    CHECK(ml::detect_usage(trace_of({}), 5.0, 3.0, 0.0).empty());
}

TEST_CASE("detect_usage equals a direct-scan oracle on random square waves") {
    Rng rng(17);
    for (int run = 0; run < 50; ++run) {
        // alternating clean 0/2000 phases, no values between the thresholds
        std::vector<double> w;
        bool on = false;
        std::vector<std::pair<size_t, size_t>> oracle;  // [startIdx, endIdx)
        size_t phaseStart = 0;
        size_t n = 20 + rng.uniform_int(100);
        for (size_t i = 0; i < n; ++i) {
            if (rng.uniform_int(8) == 0) {
                if (on) oracle.emplace_back(phaseStart, i);
                on = !on;
                phaseStart = i;
            }
            w.push_back(on ? 2000.0 : 0.0);
        }
        if (on) oracle.emplace_back(phaseStart, n);
        auto events = ml::detect_usage(trace_of(w, 10.0), 5.0, 3.0, 0.0);
        REQUIRE(events.size() == oracle.size());
        for (size_t k = 0; k < events.size(); ++k) {
            CHECK(events[k].start == static_cast<int64_t>(oracle[k].first * 10));
            CHECK(events[k].end == static_cast<int64_t>(oracle[k].second * 10));
        }
    }
}

TEST_CASE("infer_activities phrases events") {
    auto rules = ml::default_rules();
    ml::UsageEvent ev{100, 400, 2000.0, 3.0};
    auto lines = ml::infer_activities(
        {
            {ev, "kettle", std::nullopt},
            {ev, "desk lamp", std::nullopt},
            {ev, "washing machine", std::nullopt},
            {ev, "kettle", std::string("office")},
            {ev, "mystery box", std::nullopt},
        },
        rules);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "somebody is boiling water in the kitchen");
    CHECK(lines[1] == "someone is working at the table in the living room");
    CHECK(lines[2] == "laundry is running");  // rule without a default location
    CHECK(lines[3] == "somebody is boiling water in the office");  // event wins
    CHECK(lines[4] == "a device is in use");

    auto parsed = ml::rules_from_json(ml::json::parse(
        R"([{"appliance": "kettle", "phrase": "tea time", "location": "kitchen"},
            {"appliance": "fan", "phrase": "air is moving"}])"));
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].location == std::optional<std::string>("kitchen"));
    CHECK_FALSE(parsed[1].location.has_value());
    CHECK(ml::infer_activities({{ev, "fan", std::nullopt}}, parsed) ==
          std::vector<std::string>{"air is moving"});
}
