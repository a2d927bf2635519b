#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "homecrawl/discovery.hpp"
#include "homecrawl/gateway.hpp"
#include "homecrawl/linker.hpp"
#include "homecrawl/ml.hpp"
#include "homecrawl/normalizer.hpp"
#include "homecrawl/rdf.hpp"
#include "homecrawl/sim.hpp"
#include "homecrawl/vocab.hpp"

namespace homecrawl::pipeline {

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class UnknownQuestion : public PipelineError {
public:
    using PipelineError::PipelineError;
};

// ---------------------------------------------------------------------------
// Trace CSV I/O ("timestamp,watts" header, one sample per line)

inline ml::PowerTrace load_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw PipelineError("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("timestamp,watts", 0) != 0)
        throw PipelineError("trace file must start with 'timestamp,watts' header");
    std::vector<std::pair<int64_t, double>> rows;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw PipelineError("trace line " + std::to_string(lineno) + ": missing comma");
        try {
            rows.emplace_back(std::stoll(line.substr(0, comma)),
                              std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw PipelineError("trace line " + std::to_string(lineno) + ": bad number");
        }
    }
    if (rows.empty()) throw PipelineError("trace file has no samples");
    std::sort(rows.begin(), rows.end());
    ml::PowerTrace t;
    t.startTime = rows.front().first;
    t.periodSec = rows.size() > 1 ? static_cast<double>(rows.back().first - rows.front().first) /
                                        static_cast<double>(rows.size() - 1)
                                  : 10.0;
    if (t.periodSec <= 0) t.periodSec = 10.0;
    for (auto& [ts, w] : rows) t.watts.push_back(w);
    return t;
}

inline void save_trace_csv(const std::string& path, const ml::PowerTrace& trace) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw PipelineError("cannot write trace file: " + path);
    f << "timestamp,watts\n";
    for (size_t i = 0; i < trace.watts.size(); ++i) {
        int64_t ts = trace.startTime + static_cast<int64_t>(static_cast<double>(i) *
                                                            trace.periodSec);
        f << ts << "," << normalizer::format_number(trace.watts[i]) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Location lexicon: room names recognised inside device labels.

inline const std::vector<std::string>& location_lexicon() {
    static const std::vector<std::string> rooms = {
        "kitchen", "living room", "bedroom", "bathroom", "office", "hallway", "garage",
    };
    return rooms;
}

inline std::optional<std::string> location_from_label(const std::string& label) {
    auto tokens = linker::normalize_name(label);
    std::string joined;
    for (const auto& t : tokens) {
        if (!joined.empty()) joined += " ";
        joined += t;
    }
    for (const auto& room : location_lexicon())
        if (joined.find(room) != std::string::npos) return room;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Crawl

struct CrawlOptions {
    bool autoAcceptTop = false;
    std::optional<std::string> classifyModelPath;
    double scanDurationSec = 2.0;
    size_t pollCount = 90;
    double pollPeriodSec = 10.0;
    linker::LinkerConfig linker;
};

struct CrawlReport {
    size_t devices = 0;  // gateway + nodes
    size_t linked = 0;
    size_t ambiguous = 0;
    size_t noMatch = 0;
    size_t streams = 0;
    size_t merges = 0;
    size_t observations = 0;
    std::vector<std::string> classified;  // "streamIri -> appliance" lines
};

namespace detail {

inline void count_outcome(CrawlReport& report, normalizer::LinkOutcome outcome) {
    switch (outcome) {
        case normalizer::LinkOutcome::Linked: report.linked++; break;
        case normalizer::LinkOutcome::Ambiguous: report.ambiguous++; break;
        case normalizer::LinkOutcome::NoMatch: report.noMatch++; break;
    }
}

}  // namespace detail

// Full pipeline against an in-process simulated home: discovery scan, gateway
// ingestion, semantic normalisation, dedup, measurement polling and optional
// appliance classification. Everything lands in `store`.
inline CrawlReport crawl_sim(const sim::Scenario& scenario, rdf::Store& store,
                             const CrawlOptions& options = {}) {
    using rdf::Term;
    CrawlReport report;
    const auto ontology = vocab::default_ontology();
    const auto units = vocab::default_units();

    sim::SimClock clock(scenario.startUnix, scenario.tzOffsetMin);
    sim::ScriptedBus bus(clock);
    sim::announce(bus, scenario);

    auto observations = discovery::scan(bus, options.scanDurationSec, clock);
    for (const auto& obs : observations) {
        discovery::record_observation(store, obs);
        report.devices++;
        auto result = linker::link(obs.networkName, ontology, options.linker);
        if (const auto* linked = std::get_if<linker::Linked>(&result)) {
            linker::apply_link(store, obs.deviceId, linked->classIri, ontology);
            report.linked++;
        } else if (const auto* amb = std::get_if<linker::Ambiguous>(&result)) {
            if (options.autoAcceptTop && !amb->candidates.empty()) {
                linker::apply_link(store, obs.deviceId, amb->candidates.front().classIri,
                                   ontology);
                report.linked++;
            } else {
                store.insert(rdf::Triple(Term::iri(obs.deviceId),
                                         Term::iri(vocab::kLinkStatus),
                                         Term::literal("ambiguous")));
                report.ambiguous++;
            }
        } else {
            store.insert(rdf::Triple(Term::iri(obs.deviceId), Term::iri(vocab::kLinkStatus),
                                     Term::literal("nomatch")));
            report.noMatch++;
        }
    }

    sim::GatewaySim gatewaySim(scenario, sim::default_appliance_models(), clock);
    sim::LoopbackConnection conn(gatewaySim);
    normalizer::LinkPolicy policy{options.linker, options.autoAcceptTop};

    std::vector<normalizer::IotStreamRecord> powerStreams;
    for (const auto& summary : gateway::request_nodes(conn)) {
        gateway::Node node = gateway::request_node(conn, summary.id);
        auto norm = normalizer::normalize_node(node, ontology, units, scenario.gatewayName,
                                               policy);
        for (const auto& t : norm.triples) store.insert(t);
        report.devices++;
        detail::count_outcome(report, norm.linkOutcome);
        report.streams += norm.streams.size();
        if (auto loc = location_from_label(linker::percent_decode(node.name)))
            store.insert(rdf::Triple(Term::iri(norm.deviceIri), Term::iri(vocab::kHasLocation),
                                     Term::literal(*loc)));
        for (const auto& s : norm.streams)
            if (s.observedProperty == "qk:Power") powerStreams.push_back(s);
    }

    report.merges = normalizer::deduplicate(store).size();

    std::optional<ml::RandomForest> forest;
    if (options.classifyModelPath) forest = ml::RandomForest::load(*options.classifyModelPath);

    // one poll tick covers every stream, so all windows share the same clock span
    std::vector<std::vector<gateway::Measurement>> polled(powerStreams.size());
    for (size_t tick = 0; tick < options.pollCount && !powerStreams.empty(); ++tick) {
        if (tick > 0) clock.advance(options.pollPeriodSec);
        for (size_t i = 0; i < powerStreams.size(); ++i) {
            const auto& s = powerStreams[i];
            gateway::Node n = gateway::request_node(conn, s.nodeId);
            const gateway::Attribute* attr = nullptr;
            for (const auto& a : n.attributes)
                if (a.type == s.attributeType) attr = &a;
            if (!attr)
                throw gateway::AttributeMissing("node " + std::to_string(s.nodeId) +
                                                " has no attribute type " +
                                                std::to_string(s.attributeType));
            auto& out = polled[i];
            if (!out.empty() && out.back().timestamp == attr->last_changed) continue;
            out.push_back({attr->last_changed, attr->current_value, attr->unit});
        }
    }
    for (size_t i = 0; i < powerStreams.size(); ++i) {
        const auto& s = powerStreams[i];
        const auto& measurements = polled[i];
        for (const auto& m : measurements) {
            for (const auto& t : normalizer::normalize_observation(s, m.timestamp, m.value,
                                                                   m.unit, scenario.tzOffsetMin))
                store.insert(t);
            report.observations++;
        }
        if (forest && !measurements.empty()) {
            ml::PowerTrace trace;
            trace.startTime = measurements.front().timestamp;
            trace.periodSec = measurements.size() > 1
                                  ? static_cast<double>(measurements.back().timestamp -
                                                        measurements.front().timestamp) /
                                        static_cast<double>(measurements.size() - 1)
                                  : options.pollPeriodSec;
            for (const auto& m : measurements) trace.watts.push_back(m.value);
            auto pred = forest->predict(ml::extract_features(trace, 5.0));
            if (const auto* label = std::get_if<ml::Label>(&pred)) {
                normalizer::associate_entity(s.streamIri, label->cls, store);
                report.classified.push_back(s.streamIri + " -> " + label->cls);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Confirmation dialogue for unresolved links

// Re-runs the linker for every subject flagged iotc:linkStatus and lets the
// operator pick a candidate by number (0 skips). Returns confirmed count.
inline size_t confirm_links(rdf::Store& store, const vocab::DeviceOntology& ontology,
                            std::istream& in, std::ostream& out,
                            const linker::LinkerConfig& config = {}) {
    using rdf::PatternTerm;
    using rdf::Term;
    auto flagged = store.match(rdf::pattern(PatternTerm::variable("s"),
                                            PatternTerm::fixed(Term::iri(vocab::kLinkStatus)),
                                            PatternTerm::variable("st")));
    size_t confirmed = 0;
    for (const auto& flag : flagged) {
        auto labels = store.match(rdf::pattern(PatternTerm::fixed(flag.subject),
                                               PatternTerm::fixed(Term::iri(vocab::kRdfsLabel)),
                                               PatternTerm::variable("l")));
        if (labels.empty()) continue;
        const std::string label = labels.front().object.text();
        // widened thresholds so nomatch subjects still get candidates to pick
        linker::LinkerConfig wide = config;
        wide.tauLow = 0.0;
        wide.tauHigh = 2.0;  // never auto-links; always presents the list
        auto result = linker::link(label, ontology, wide);
        const auto* amb = std::get_if<linker::Ambiguous>(&result);
        if (!amb || amb->candidates.empty()) continue;
        out << "device: " << label << " (" << flag.subject.text() << ")\n";
        for (size_t i = 0; i < amb->candidates.size(); ++i)
            out << "  " << (i + 1) << ") " << amb->candidates[i].classIri << " score "
                << amb->candidates[i].score << "\n";
        out << "choose [1-" << amb->candidates.size() << ", 0 skips]: " << std::flush;
        std::string line;
        if (!std::getline(in, line)) break;
        size_t choice = 0;
        try {
            choice = static_cast<size_t>(std::stoul(line));
        } catch (const std::exception&) {
            continue;
        }
        if (choice < 1 || choice > amb->candidates.size()) continue;
        linker::apply_link(store, flag.subject.text(), amb->candidates[choice - 1].classIri,
                           ontology);
        store.erase(flag);
        ++confirmed;
    }
    return confirmed;
}

// ---------------------------------------------------------------------------
// Question answering over the store

namespace detail {

struct StreamActivityInput {
    std::string streamIri;
    ml::PowerTrace trace;
    std::optional<std::string> appliance;
    std::optional<std::string> location;
};

inline std::optional<std::string> literal_of(const rdf::Store& store, const rdf::Term& subj,
                                             const char* predicate) {
    auto ts = store.match(rdf::pattern(rdf::PatternTerm::fixed(subj),
                                       rdf::PatternTerm::fixed(rdf::Term::iri(predicate)),
                                       rdf::PatternTerm::variable("o")));
    if (ts.empty()) return std::nullopt;
    return ts.front().object.text();
}

// Rebuild one power trace per stream from stored observations.
inline std::vector<StreamActivityInput> collect_streams(const rdf::Store& store) {
    using rdf::PatternTerm;
    using rdf::Term;
    auto idx = rdf::build_index(store);
    std::vector<StreamActivityInput> out;
    for (const auto& streamIri : rdf::find_streams(idx, std::string("qk:Power"), std::nullopt)) {
        Term stream = Term::iri(streamIri);
        StreamActivityInput input;
        input.streamIri = streamIri;
        if (auto foi = store.match(rdf::pattern(
                PatternTerm::fixed(stream),
                PatternTerm::fixed(Term::iri(vocab::kHasFeatureOfInterest)),
                PatternTerm::variable("f")));
            !foi.empty())
            input.appliance = literal_of(store, foi.front().object, vocab::kRdfsLabel);
        if (auto gen = store.match(rdf::pattern(PatternTerm::fixed(stream),
                                                PatternTerm::fixed(Term::iri(vocab::kGeneratedBy)),
                                                PatternTerm::variable("d")));
            !gen.empty())
            input.location = literal_of(store, gen.front().object, vocab::kHasLocation);

        std::vector<std::pair<int64_t, double>> samples;
        for (const auto& obs :
             store.match(rdf::pattern(PatternTerm::variable("o"),
                                      PatternTerm::fixed(Term::iri(vocab::kOnStream)),
                                      PatternTerm::fixed(stream)))) {
            auto rt = literal_of(store, obs.subject, vocab::kResultTime);
            if (!rt) continue;
            int64_t ts;
            int off;
            if (!rfc3339_parse(*rt, ts, off)) continue;
            auto results = store.match(
                rdf::pattern(rdf::PatternTerm::fixed(obs.subject),
                             rdf::PatternTerm::fixed(Term::iri(vocab::kHasResult)),
                             rdf::PatternTerm::variable("r")));
            if (results.empty()) continue;
            auto value = literal_of(store, results.front().object, vocab::kNumericValue);
            if (!value) continue;
            try {
                samples.emplace_back(ts, std::stod(*value));
            } catch (const std::exception&) {
            }
        }
        if (samples.empty()) continue;
        std::sort(samples.begin(), samples.end());
        input.trace.startTime = samples.front().first;
        input.trace.periodSec =
            samples.size() > 1 ? static_cast<double>(samples.back().first -
                                                     samples.front().first) /
                                     static_cast<double>(samples.size() - 1)
                               : 10.0;
        for (auto& [ts, w] : samples) input.trace.watts.push_back(w);
        out.push_back(std::move(input));
    }
    return out;
}

}  // namespace detail

// Natural-language-ish entry point: "what is happening", "devices",
// "appliances". Unknown questions get a single fallback line.
inline std::vector<std::string> ask(const rdf::Store& store, const std::string& question,
                                    const std::vector<ml::ActivityRule>& rules =
                                        ml::default_rules()) {
    using rdf::PatternTerm;
    using rdf::Term;
    std::string q = question;
    std::transform(q.begin(), q.end(), q.begin(),
                   [](unsigned char c) { return std::tolower(c); });

    if (q.find("happening") != std::string::npos || q.find("going on") != std::string::npos) {
        std::vector<ml::LabelledEvent> events;
        for (const auto& input : detail::collect_streams(store)) {
            for (const auto& ev : ml::detect_usage(input.trace, 5.0, 3.0, 30.0)) {
                ml::LabelledEvent le;
                le.event = ev;
                le.applianceType = input.appliance.value_or("");
                le.location = input.location;
                events.push_back(std::move(le));
            }
        }
        auto statements = ml::infer_activities(events, rules);
        std::sort(statements.begin(), statements.end());
        statements.erase(std::unique(statements.begin(), statements.end()), statements.end());
        if (statements.empty()) return {"nothing notable is happening"};
        return statements;
    }

    if (q.find("device") != std::string::npos) {
        std::vector<std::string> lines;
        for (const auto& t : store.match(rdf::pattern(PatternTerm::variable("s"),
                                                      PatternTerm::fixed(Term::iri(rdf::kRdfType)),
                                                      PatternTerm::variable("c")))) {
            if (!t.object.is_iri() || t.object.text().rfind("devices:", 0) != 0) continue;
            auto label = detail::literal_of(store, t.subject, vocab::kRdfsLabel);
            lines.push_back(label.value_or(t.subject.text()) + " (" + t.object.text() + ")");
        }
        std::sort(lines.begin(), lines.end());
        lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
        if (lines.empty()) return {"no devices known yet"};
        return lines;
    }

    if (q.find("appliance") != std::string::npos) {
        std::vector<std::string> lines;
        for (const auto& t : store.match(
                 rdf::pattern(PatternTerm::variable("s"),
                              PatternTerm::fixed(Term::iri(rdf::kRdfType)),
                              PatternTerm::fixed(Term::iri(vocab::kFeatureOfInterest))))) {
            auto label = detail::literal_of(store, t.subject, vocab::kRdfsLabel);
            if (label) lines.push_back(*label);
        }
        std::sort(lines.begin(), lines.end());
        lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
        if (lines.empty()) return {"no appliances identified yet"};
        return lines;
    }

    if (q.find("network") != std::string::npos) {
        std::vector<std::string> lines;
        for (const auto& t : store.match(
                 rdf::pattern(PatternTerm::variable("s"),
                              PatternTerm::fixed(Term::iri(vocab::kHasNetworkName)),
                              PatternTerm::variable("n"))))
            lines.push_back(t.object.text());
        std::sort(lines.begin(), lines.end());
        lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
        if (lines.empty()) return {"no network devices observed yet"};
        return lines;
    }

    throw UnknownQuestion("unknown question: " + question +
                          " (try whats-happening, devices, appliances, network)");
}

// ---------------------------------------------------------------------------
// Training

struct TrainOutcome {
    ml::RandomForest forest;
    ml::Evaluation holdout;
};

// Train on a simulated corpus with a per-class 70/30 train/holdout split.
inline TrainOutcome train_forest(const std::vector<sim::ApplianceModel>& models,
                                 size_t tracesPerClass, uint64_t seed,
                                 double durationSec = 900.0, double periodSec = 10.0) {
    auto corpus = sim::make_dataset(models, tracesPerClass, durationSec, periodSec, seed);
    size_t nTrain = tracesPerClass * 7 / 10;
    if (nTrain < 2) nTrain = std::min<size_t>(tracesPerClass, 2);
    ml::Dataset trainSet, holdoutSet;
    for (size_t c = 0; c < models.size(); ++c) {
        for (size_t t = 0; t < tracesPerClass; ++t) {
            size_t row = c * tracesPerClass + t;
            auto& dst = t < nTrain ? trainSet : holdoutSet;
            dst.features.push_back(corpus.features[row]);
            dst.labels.push_back(corpus.labels[row]);
        }
    }
    if (holdoutSet.features.empty()) holdoutSet = trainSet;
    ml::ForestConfig config;
    config.seed = seed;
    TrainOutcome out{ml::train(trainSet, config), {}};
    out.holdout = ml::evaluate(out.forest, holdoutSet);
    return out;
}

}  // namespace homecrawl::pipeline
