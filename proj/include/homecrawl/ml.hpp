#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "homecrawl/rng.hpp"

namespace homecrawl::ml {

using nlohmann::json;

class MlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class EmptyTrace : public MlError {
public:
    using MlError::MlError;
};
class TooFewClasses : public MlError {
public:
    using MlError::MlError;
};
class DegenerateData : public MlError {
public:
    using MlError::MlError;
};
class UnknownLabel : public MlError {
public:
    using MlError::MlError;
};

// ---------------------------------------------------------------------------
// Power traces and features

struct PowerTrace {
    double periodSec = 10.0;
    int64_t startTime = 0;
    std::vector<double> watts;
};

inline constexpr size_t kFeatureCount = 10;

// mean, std, max, min, median, p90, onRatio, edgeCount, maxRise, energyWh
using FeatureVector = std::array<double, kFeatureCount>;

inline const std::array<const char*, kFeatureCount>& feature_names() {
    static const std::array<const char*, kFeatureCount> names = {
        "mean", "std", "max", "min", "median", "p90", "onRatio", "edgeCount", "maxRise",
        "energyWh"};
    return names;
}

// Nearest-rank percentile: the ceil(p*n)-th smallest sample.
inline double percentile_nearest_rank(std::vector<double> sorted, double p) {
    size_t n = sorted.size();
    size_t rank = static_cast<size_t>(std::ceil(p * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

inline FeatureVector extract_features(const PowerTrace& trace, double onThresholdW) {
    const auto& w = trace.watts;
    if (w.empty()) throw EmptyTrace("cannot extract features from an empty trace");
    const double n = static_cast<double>(w.size());
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    double mean = sum / n;
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    double stddev = std::sqrt(var / n);
    auto [minIt, maxIt] = std::minmax_element(w.begin(), w.end());
    std::vector<double> sorted(w);
    std::sort(sorted.begin(), sorted.end());
    double median = percentile_nearest_rank(sorted, 0.50);
    double p90 = percentile_nearest_rank(sorted, 0.90);
    double onCount = 0.0;
    for (double x : w) onCount += x > onThresholdW ? 1.0 : 0.0;
    double edges = 0.0;
    for (size_t i = 1; i < w.size(); ++i)
        if (w[i - 1] <= onThresholdW && w[i] > onThresholdW) edges += 1.0;
    double maxRise = 0.0;
    for (size_t i = 1; i < w.size(); ++i) maxRise = std::max(maxRise, w[i] - w[i - 1]);
    double energyWh = sum * trace.periodSec / 3600.0;
    return {mean, stddev, *maxIt, *minIt, median, p90, onCount / n, edges, maxRise, energyWh};
}

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
    size_t nTrees = 100;
    size_t maxDepth = 12;
    size_t minLeaf = 2;
    size_t mtry = 4;  // ceil(sqrt(10))
    uint64_t seed = 42;
    double confidenceThreshold = 0.6;
};

struct TreeNode {
    // internal: featureIndex >= 0; leaf: featureIndex == -1 with histogram
    int featureIndex = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<size_t> histogram;  // per-class counts at leaves
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root
};

struct Dataset {
    std::vector<FeatureVector> features;
    std::vector<std::string> labels;
};

struct Label {
    std::string cls;
    double confidence = 0.0;
};
struct NotConfident {
    std::string topClass;
    double confidence = 0.0;
};
using Prediction = std::variant<Label, NotConfident>;

class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<Tree> trees, std::vector<std::string> classes, ForestConfig config)
        : trees_(std::move(trees)), classes_(std::move(classes)), config_(config) {}

    const std::vector<std::string>& classes() const { return classes_; }
    const std::vector<Tree>& trees() const { return trees_; }
    const ForestConfig& config() const { return config_; }

    Prediction predict(const FeatureVector& x) const {
        std::vector<size_t> votes(classes_.size(), 0);
        for (const auto& t : trees_) votes[tree_vote(t, x)]++;
        size_t bestIdx = 0;
        for (size_t i = 1; i < votes.size(); ++i)
            if (votes[i] > votes[bestIdx]) bestIdx = i;  // ties keep the smaller index,
                                                         // classes are stored sorted
        double conf = trees_.empty()
                          ? 0.0
                          : static_cast<double>(votes[bestIdx]) / static_cast<double>(trees_.size());
        if (conf >= config_.confidenceThreshold) return Label{classes_[bestIdx], conf};
        return NotConfident{classes_[bestIdx], conf};
    }

    size_t tree_vote(const Tree& t, const FeatureVector& x) const {
        int idx = 0;
        while (t.nodes[idx].featureIndex >= 0) {
            const TreeNode& n = t.nodes[idx];
            idx = x[static_cast<size_t>(n.featureIndex)] <= n.threshold ? n.left : n.right;
        }
        const auto& hist = t.nodes[idx].histogram;
        size_t best = 0;
        for (size_t i = 1; i < hist.size(); ++i)
            if (hist[i] > hist[best]) best = i;
        return best;
    }

    json to_json() const {
        json j;
        j["config"] = {{"nTrees", config_.nTrees},
                       {"maxDepth", config_.maxDepth},
                       {"minLeaf", config_.minLeaf},
                       {"mtry", config_.mtry},
                       {"seed", config_.seed},
                       {"confidenceThreshold", config_.confidenceThreshold}};
        j["classes"] = classes_;
        j["trees"] = json::array();
        for (const auto& t : trees_) {
            json nodes = json::array();
            for (const auto& n : t.nodes) {
                json nj;
                nj["f"] = n.featureIndex;
                if (n.featureIndex >= 0) {
                    nj["t"] = n.threshold;
                    nj["l"] = n.left;
                    nj["r"] = n.right;
                } else {
                    nj["h"] = n.histogram;
                }
                nodes.push_back(std::move(nj));
            }
            j["trees"].push_back(std::move(nodes));
        }
        return j;
    }

    static RandomForest from_json(const json& j) {
        ForestConfig cfg;
        const json& c = j.at("config");
        cfg.nTrees = c.at("nTrees").get<size_t>();
        cfg.maxDepth = c.at("maxDepth").get<size_t>();
        cfg.minLeaf = c.at("minLeaf").get<size_t>();
        cfg.mtry = c.at("mtry").get<size_t>();
        cfg.seed = c.at("seed").get<uint64_t>();
        cfg.confidenceThreshold = c.at("confidenceThreshold").get<double>();
        std::vector<std::string> classes = j.at("classes").get<std::vector<std::string>>();
        std::vector<Tree> trees;
        for (const auto& tj : j.at("trees")) {
            Tree t;
            for (const auto& nj : tj) {
                TreeNode n;
                n.featureIndex = nj.at("f").get<int>();
                if (n.featureIndex >= 0) {
                    n.threshold = nj.at("t").get<double>();
                    n.left = nj.at("l").get<int>();
                    n.right = nj.at("r").get<int>();
                } else {
                    n.histogram = nj.at("h").get<std::vector<size_t>>();
                }
                t.nodes.push_back(std::move(n));
            }
            trees.push_back(std::move(t));
        }
        return RandomForest(std::move(trees), std::move(classes), cfg);
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw MlError("cannot write model file: " + path);
        f << to_json().dump(2) << "\n";
    }

    static RandomForest load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw MlError("cannot open model file: " + path);
        json j;
        try {
            f >> j;
        } catch (const json::exception& e) {
            throw MlError(std::string("model JSON: ") + e.what());
        }
        return from_json(j);
    }

private:
    std::vector<Tree> trees_;
    std::vector<std::string> classes_;
    ForestConfig config_;
};

namespace detail {

inline double gini(const std::vector<size_t>& counts, size_t total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (size_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 1e18;  // weighted child Gini
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const std::vector<size_t>& classIndex, size_t nClasses,
                const ForestConfig& cfg, Rng rng)
        : data_(data), classIndex_(classIndex), nClasses_(nClasses), cfg_(cfg), rng_(rng) {}

    Tree build() {
        std::vector<size_t> sample(data_.features.size());
        for (auto& s : sample) s = rng_.uniform_int(data_.features.size());
        std::sort(sample.begin(), sample.end());  // bootstrap order must not depend on
                                                  // traversal, keep it canonical
        Tree tree;
        grow(tree, sample, 0);
        return tree;
    }

private:
    std::vector<size_t> histogram(const std::vector<size_t>& rows) const {
        std::vector<size_t> h(nClasses_, 0);
        for (size_t r : rows) h[classIndex_[r]]++;
        return h;
    }

    int grow(Tree& tree, const std::vector<size_t>& rows, size_t depth) {
        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        auto hist = histogram(rows);
        size_t nonZero = 0;
        for (size_t c : hist) nonZero += c > 0 ? 1 : 0;
        if (depth >= cfg_.maxDepth || rows.size() < 2 * cfg_.minLeaf || nonZero <= 1) {
            tree.nodes[idx].histogram = std::move(hist);
            return idx;
        }
        SplitChoice split = choose_split(rows);
        if (split.feature < 0) {
            tree.nodes[idx].histogram = std::move(hist);
            return idx;
        }
        std::vector<size_t> leftRows, rightRows;
        for (size_t r : rows)
            (data_.features[r][static_cast<size_t>(split.feature)] <= split.threshold ? leftRows
                                                                                      : rightRows)
                .push_back(r);
        tree.nodes[idx].featureIndex = split.feature;
        tree.nodes[idx].threshold = split.threshold;
        int l = grow(tree, leftRows, depth + 1);
        int r = grow(tree, rightRows, depth + 1);
        tree.nodes[idx].left = l;
        tree.nodes[idx].right = r;
        return idx;
    }

    SplitChoice choose_split(const std::vector<size_t>& rows) {
        // sample mtry distinct features, order-independent for determinism
        std::set<size_t> feats;
        size_t guard = 0;
        while (feats.size() < std::min(cfg_.mtry, kFeatureCount) && guard++ < 1000)
            feats.insert(rng_.uniform_int(kFeatureCount));
        SplitChoice best;
        for (size_t f : feats) {
            std::vector<std::pair<double, size_t>> vals;  // (value, class)
            vals.reserve(rows.size());
            for (size_t r : rows) vals.emplace_back(data_.features[r][f], classIndex_[r]);
            std::sort(vals.begin(), vals.end());
            std::vector<size_t> leftCounts(nClasses_, 0), rightCounts(nClasses_, 0);
            for (const auto& [v, c] : vals) rightCounts[c]++;
            size_t nLeft = 0, nRight = vals.size();
            for (size_t i = 0; i + 1 < vals.size(); ++i) {
                leftCounts[vals[i].second]++;
                rightCounts[vals[i].second]--;
                ++nLeft;
                --nRight;
                if (vals[i].first == vals[i + 1].first) continue;  // not a distinct boundary
                if (nLeft < cfg_.minLeaf || nRight < cfg_.minLeaf) continue;
                double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
                double impurity =
                    (static_cast<double>(nLeft) * gini(leftCounts, nLeft) +
                     static_cast<double>(nRight) * gini(rightCounts, nRight)) /
                    static_cast<double>(vals.size());
                // deterministic tie-break: impurity, then feature, then threshold
                if (impurity < best.impurity - 1e-12 ||
                    (std::abs(impurity - best.impurity) <= 1e-12 &&
                     (static_cast<int>(f) < best.feature ||
                      (static_cast<int>(f) == best.feature && thr < best.threshold)))) {
                    best = {static_cast<int>(f), thr, impurity};
                }
            }
        }
        // a split that cannot improve a pure node is useless
        auto hist = std::vector<size_t>(nClasses_, 0);
        for (size_t r : rows) hist[classIndex_[r]]++;
        if (best.feature >= 0 && best.impurity >= gini(hist, rows.size()) - 1e-12 &&
            gini(hist, rows.size()) == 0.0)
            return {};
        return best;
    }

    const Dataset& data_;
    const std::vector<size_t>& classIndex_;
    size_t nClasses_;
    const ForestConfig& cfg_;
    Rng rng_;
};

}  // namespace detail

inline RandomForest train(const Dataset& dataset, const ForestConfig& config = {}) {
    if (dataset.features.size() != dataset.labels.size())
        throw MlError("feature/label count mismatch");
    std::set<std::string> classSet(dataset.labels.begin(), dataset.labels.end());
    if (classSet.size() < 2)
        throw TooFewClasses("training requires at least 2 classes, got " +
                            std::to_string(classSet.size()));
    std::map<std::string, size_t> classCount;
    for (const auto& l : dataset.labels) classCount[l]++;
    for (const auto& [cls, cnt] : classCount)
        if (cnt < config.minLeaf)
            throw MlError("class '" + cls + "' has fewer than minLeaf samples");
    bool allIdentical = true;
    for (size_t i = 1; i < dataset.features.size(); ++i)
        if (dataset.features[i] != dataset.features[0]) {
            allIdentical = false;
            break;
        }
    if (allIdentical && classSet.size() >= 2)
        throw DegenerateData("all feature vectors identical across " +
                             std::to_string(classSet.size()) + " classes; nothing separable");

    std::vector<std::string> classes(classSet.begin(), classSet.end());  // sorted
    std::map<std::string, size_t> classToIdx;
    for (size_t i = 0; i < classes.size(); ++i) classToIdx[classes[i]] = i;
    std::vector<size_t> classIndex(dataset.labels.size());
    for (size_t i = 0; i < dataset.labels.size(); ++i)
        classIndex[i] = classToIdx[dataset.labels[i]];

    std::vector<Tree> trees;
    trees.reserve(config.nTrees);
    for (size_t t = 0; t < config.nTrees; ++t) {
        // per-tree stream from (seed, treeIndex): parallel builds stay bit-identical
        detail::TreeBuilder builder(dataset, classIndex, classes.size(), config,
                                    Rng::derive(config.seed, t));
        trees.push_back(builder.build());
    }
    return RandomForest(std::move(trees), std::move(classes), config);
}

// ---------------------------------------------------------------------------
// Evaluation

struct ClassMetrics {
    size_t truePositive = 0;
    size_t falsePositive = 0;
    size_t falseNegative = 0;
    std::optional<double> precision;
    std::optional<double> recall;
};

struct Evaluation {
    std::map<std::string, ClassMetrics> perClass;
    std::optional<double> macroPrecision;
    std::optional<double> microPrecision;
    double abstentionRate = 0.0;
    size_t evaluated = 0;
    size_t abstained = 0;
};

// Confusion-matrix metrics over confident predictions; abstentions are
// reported separately and excluded from precision/recall denominators.
inline Evaluation evaluate(const RandomForest& forest, const Dataset& testset) {
    std::set<std::string> known(forest.classes().begin(), forest.classes().end());
    for (const auto& l : testset.labels)
        if (!known.count(l)) throw UnknownLabel("test label not in forest classes: " + l);
    Evaluation ev;
    for (const auto& c : forest.classes()) ev.perClass[c];
    size_t correctTotal = 0, confidentTotal = 0;
    for (size_t i = 0; i < testset.features.size(); ++i) {
        auto pred = forest.predict(testset.features[i]);
        if (std::holds_alternative<NotConfident>(pred)) {
            ev.abstained++;
            continue;
        }
        const auto& label = std::get<Label>(pred);
        confidentTotal++;
        if (label.cls == testset.labels[i]) {
            ev.perClass[label.cls].truePositive++;
            correctTotal++;
        } else {
            ev.perClass[label.cls].falsePositive++;
            ev.perClass[testset.labels[i]].falseNegative++;
        }
    }
    ev.evaluated = testset.features.size();
    ev.abstentionRate = ev.evaluated == 0
                            ? 0.0
                            : static_cast<double>(ev.abstained) / static_cast<double>(ev.evaluated);
    double precSum = 0.0;
    size_t precDefined = 0;
    for (auto& [cls, m] : ev.perClass) {
        size_t predicted = m.truePositive + m.falsePositive;
        size_t actual = m.truePositive + m.falseNegative;
        if (predicted > 0) {
            m.precision = static_cast<double>(m.truePositive) / static_cast<double>(predicted);
            precSum += *m.precision;
            precDefined++;
        }
        if (actual > 0)
            m.recall = static_cast<double>(m.truePositive) / static_cast<double>(actual);
    }
    if (precDefined > 0) ev.macroPrecision = precSum / static_cast<double>(precDefined);
    if (confidentTotal > 0)
        ev.microPrecision =
            static_cast<double>(correctTotal) / static_cast<double>(confidentTotal);
    return ev;
}

// ---------------------------------------------------------------------------
// Usage detection (threshold hysteresis)

struct UsageEvent {
    int64_t start = 0;
    int64_t end = 0;
    double peakW = 0.0;
    double energyWh = 0.0;
};

inline std::vector<UsageEvent> detect_usage(const PowerTrace& trace, double onThresholdW,
                                            double offThresholdW, double minOnSec) {
    if (offThresholdW > onThresholdW)
        throw MlError("off threshold must not exceed on threshold");
    std::vector<UsageEvent> events;
    bool on = false;
    size_t startIdx = 0;
    double peak = 0.0, energySum = 0.0;
    auto close = [&](size_t endIdx) {
        int64_t start = trace.startTime + static_cast<int64_t>(startIdx * trace.periodSec);
        int64_t end = trace.startTime + static_cast<int64_t>(endIdx * trace.periodSec);
        if (static_cast<double>(end - start) >= minOnSec)
            events.push_back({start, end, peak, energySum * trace.periodSec / 3600.0});
    };
    for (size_t i = 0; i < trace.watts.size(); ++i) {
        double w = trace.watts[i];
        if (!on) {
            if (w > onThresholdW) {
                on = true;
                startIdx = i;
                peak = w;
                energySum = w;
            }
        } else {
            if (w < offThresholdW) {
                on = false;
                close(i);
            } else {
                peak = std::max(peak, w);
                energySum += w;
            }
        }
    }
    if (on) close(trace.watts.size());
    return events;
}

// ---------------------------------------------------------------------------
// Activity inference

struct ActivityRule {
    std::string appliance;
    std::string phrase;
    std::optional<std::string> location;  // default location when the event has none
};

struct LabelledEvent {
    UsageEvent event;
    std::string applianceType;
    std::optional<std::string> location;
};

inline std::vector<ActivityRule> default_rules() {
    return {
        {"kettle", "somebody is boiling water", "kitchen"},
        {"desk lamp", "someone is working at the table", "living room"},
        {"television", "someone is watching television", "living room"},
        {"washing machine", "laundry is running", std::nullopt},
        {"dishwasher", "the dishwasher is running", "kitchen"},
        {"microwave", "somebody is heating food", "kitchen"},
        {"toaster", "somebody is making toast", "kitchen"},
        {"coffee machine", "somebody is brewing coffee", "kitchen"},
        {"vacuum cleaner", "someone is vacuuming", std::nullopt},
        {"space heater", "a room is being heated", std::nullopt},
        {"laptop charger", "someone is working on a laptop", std::nullopt},
        {"fridge", "the fridge is cooling", "kitchen"},
    };
}

inline std::vector<ActivityRule> rules_from_json(const json& doc) {
    std::vector<ActivityRule> rules;
    for (const auto& r : doc) {
        ActivityRule rule;
        rule.appliance = r.at("appliance").get<std::string>();
        rule.phrase = r.at("phrase").get<std::string>();
        if (r.contains("location") && r["location"].is_string())
            rule.location = r["location"].get<std::string>();
        rules.push_back(std::move(rule));
    }
    return rules;
}

inline std::vector<std::string> infer_activities(const std::vector<LabelledEvent>& events,
                                                 const std::vector<ActivityRule>& rules) {
    std::vector<std::string> statements;
    for (const auto& ev : events) {
        const ActivityRule* rule = nullptr;
        for (const auto& r : rules)
            if (r.appliance == ev.applianceType) {
                rule = &r;
                break;
            }
        std::string phrase = rule ? rule->phrase : "a device is in use";
        std::optional<std::string> loc = ev.location;
        if (!loc && rule) loc = rule->location;
        if (loc) phrase += " in the " + *loc;
        statements.push_back(phrase);
    }
    return statements;
}

}  // namespace homecrawl::ml
