#pragma once

#include <charconv>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homecrawl/gateway.hpp"
#include "homecrawl/linker.hpp"
#include "homecrawl/rdf.hpp"
#include "homecrawl/timeutil.hpp"
#include "homecrawl/uuid.hpp"
#include "homecrawl/vocab.hpp"

namespace homecrawl::normalizer {

class UnitMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class UnknownStream : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IotStreamRecord {
    std::string streamIri;
    std::string generatedBy;        // sensor/device IRI
    std::string observedProperty;   // quantity-kind IRI
    std::string unit;               // unit IRI
    std::string unitSymbol;
    std::string unitClass;          // e.g. qudt:PowerUnit
    std::string label;
    int64_t nodeId = 0;
    int attributeType = 0;
};

struct StreamObservationRecord {
    std::string observationIri;
    std::string streamIri;
    std::string resultTime;
    double numericValue = 0.0;
    std::string unit;
};

enum class MergeReason { IpMatch };

struct MergeRecord {
    std::string keptIri;
    std::string mergedIri;
    MergeReason reason = MergeReason::IpMatch;
};

struct LinkPolicy {
    linker::LinkerConfig config;
    bool autoAcceptTop = false;  // accept the top Ambiguous candidate
};

enum class LinkOutcome { Linked, Ambiguous, NoMatch };

struct SkippedAttribute {
    int64_t attributeId = 0;
    std::string unit;
    std::string reason;
};

struct NormalizedNode {
    std::string deviceIri;
    std::vector<rdf::Triple> triples;
    std::vector<IotStreamRecord> streams;
    std::vector<SkippedAttribute> skipped;
    LinkOutcome linkOutcome = LinkOutcome::NoMatch;
    std::optional<std::string> linkedClass;
};

inline std::string format_number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// Device IRI minting is a pure function of (gateway id, node id), so re-runs
// of the pipeline regenerate identical subjects.
inline std::string mint_device_iri(const std::string& gatewayId, int64_t nodeId) {
    return uuid5(gatewayId + "/" + std::to_string(nodeId));
}

inline std::string mint_stream_iri(const std::string& deviceIri, int attributeType) {
    return uuid5(deviceIri + "/stream/" + std::to_string(attributeType));
}

// Gateway node -> device triples + one IotStream per unit-resolvable attribute.
// The observed quantity kind comes from the attribute's unit, not its type code.
inline NormalizedNode normalize_node(const gateway::Node& node,
                                     const vocab::DeviceOntology& ontology,
                                     const vocab::UnitRegistry& units,
                                     const std::string& gatewayId,
                                     const LinkPolicy& policy = {}) {
    using rdf::Term;
    NormalizedNode out;
    out.deviceIri = mint_device_iri(gatewayId, node.id);
    Term dev = Term::iri(out.deviceIri);
    std::string label = linker::percent_decode(node.name);
    out.triples.emplace_back(dev, Term::iri(vocab::kRdfsLabel), Term::literal(label));
    out.triples.emplace_back(dev, Term::iri(vocab::kDiscoveredVia), Term::literal("gateway"));
    if (node.ip)
        out.triples.emplace_back(dev, Term::iri(vocab::kHasIpAddress), Term::literal(*node.ip));

    auto result = linker::link(node.name, ontology, policy.config);
    if (const auto* linked = std::get_if<linker::Linked>(&result)) {
        out.linkOutcome = LinkOutcome::Linked;
        out.linkedClass = linked->classIri;
    } else if (const auto* amb = std::get_if<linker::Ambiguous>(&result)) {
        if (policy.autoAcceptTop && !amb->candidates.empty()) {
            out.linkOutcome = LinkOutcome::Linked;
            out.linkedClass = amb->candidates.front().classIri;
        } else {
            out.linkOutcome = LinkOutcome::Ambiguous;
            out.triples.emplace_back(dev, Term::iri(vocab::kLinkStatus),
                                     Term::literal("ambiguous"));
        }
    } else {
        out.linkOutcome = LinkOutcome::NoMatch;
        out.triples.emplace_back(dev, Term::iri(vocab::kLinkStatus), Term::literal("nomatch"));
    }
    if (out.linkedClass)
        out.triples.emplace_back(dev, Term::iri(rdf::kRdfType), Term::iri(*out.linkedClass));

    for (const auto& attr : node.attributes) {
        auto unit = units.try_lookup(attr.unit);
        if (!unit) {
            out.skipped.push_back({attr.id, attr.unit, "unit not in registry"});
            continue;
        }
        IotStreamRecord rec;
        rec.streamIri = mint_stream_iri(out.deviceIri, attr.type);
        rec.generatedBy = out.deviceIri;
        rec.observedProperty = unit->quantityKind;
        rec.unit = unit->iri;
        rec.unitSymbol = unit->symbol;
        rec.unitClass = unit->unitClass;
        rec.label = label;
        rec.nodeId = node.id;
        rec.attributeType = attr.type;
        Term stream = Term::iri(rec.streamIri);
        out.triples.emplace_back(stream, Term::iri(rdf::kRdfType), Term::iri(vocab::kIotStream));
        out.triples.emplace_back(stream, Term::iri(vocab::kGeneratedBy), dev);
        out.triples.emplace_back(stream, Term::iri(vocab::kObservedProperty),
                                 Term::iri(rec.observedProperty));
        out.triples.emplace_back(stream, Term::iri(vocab::kQudtUnit), Term::iri(rec.unit));
        out.streams.push_back(std::move(rec));
    }
    return out;
}

// Observation class per quantity kind; power keeps the electric naming.
inline std::string observation_class(const std::string& quantityKind) {
    std::string local = quantityKind.substr(quantityKind.find(':') + 1);
    if (local == "Power") return "iotc:ElectricPowerObservation";
    if (local == "Energy") return "iotc:ElectricEnergyObservation";
    return "iotc:" + local + "Observation";
}

inline std::string result_class(const std::string& quantityKind) {
    std::string local = quantityKind.substr(quantityKind.find(':') + 1);
    if (local == "Power") return "iotc:ElectricPowerResult";
    if (local == "Energy") return "iotc:ElectricEnergyResult";
    return "iotc:" + local + "Result";
}

// Sample -> observation triples: typed observation, QuantityValue result with
// numeric value and unit class, resultTime. Observation IRI is deterministic
// from (stream, timestamp).
inline std::vector<rdf::Triple> normalize_observation(const IotStreamRecord& stream,
                                                      int64_t timestampUnix, double value,
                                                      const std::string& unitSymbol,
                                                      int tzOffsetMin = 0) {
    using rdf::Term;
    if (unitSymbol != stream.unitSymbol)
        throw UnitMismatch("sample unit '" + unitSymbol + "' does not match stream unit '" +
                           stream.unitSymbol + "'");
    std::string rt = rfc3339_format(timestampUnix, tzOffsetMin);
    std::string obsIri = stream.streamIri + "/observation/" + std::to_string(timestampUnix);
    std::string resIri = obsIri + "/result";
    std::vector<rdf::Triple> out;
    Term obs = Term::iri(obsIri);
    Term res = Term::iri(resIri);
    out.emplace_back(obs, Term::iri(rdf::kRdfType),
                     Term::iri(observation_class(stream.observedProperty)));
    out.emplace_back(obs, Term::iri(vocab::kOnStream), Term::iri(stream.streamIri));
    out.emplace_back(obs, Term::iri(vocab::kResultTime), Term::literal(rt));
    out.emplace_back(obs, Term::iri(vocab::kHasResult), res);
    out.emplace_back(res, Term::iri(rdf::kRdfType),
                     Term::iri(result_class(stream.observedProperty)));
    out.emplace_back(res, Term::iri(rdf::kRdfType), Term::iri(vocab::kQuantityValue));
    out.emplace_back(res, Term::iri(vocab::kNumericValue),
                     Term::literal(format_number(value), rdf::kXsdDecimal));
    out.emplace_back(res, Term::iri(vocab::kQudtUnit), Term::iri(stream.unitClass));
    return out;
}

// IP-evidence deduplication: equal hasIpAddress literals on two subjects link
// them with owl:sameAs, keeping the gateway-side IRI. Without IP evidence two
// instances simply coexist.
inline std::vector<MergeRecord> deduplicate(rdf::Store& store) {
    using rdf::PatternTerm;
    using rdf::Term;
    auto withIp = store.match(rdf::pattern(PatternTerm::variable("s"),
                                           PatternTerm::fixed(Term::iri(vocab::kHasIpAddress)),
                                           PatternTerm::variable("ip")));
    auto isGatewaySide = [&](const Term& subj) {
        return !store
                    .match(rdf::pattern(PatternTerm::fixed(subj),
                                        PatternTerm::fixed(Term::iri(vocab::kDiscoveredVia)),
                                        PatternTerm::fixed(Term::literal("gateway"))))
                    .empty();
    };
    std::vector<MergeRecord> merges;
    for (size_t i = 0; i < withIp.size(); ++i) {
        for (size_t j = i + 1; j < withIp.size(); ++j) {
            if (withIp[i].subject == withIp[j].subject) continue;
            if (withIp[i].object != withIp[j].object) continue;
            const Term* kept = &withIp[i].subject;
            const Term* merged = &withIp[j].subject;
            if (!isGatewaySide(*kept) && isGatewaySide(*merged)) std::swap(kept, merged);
            store.insert(rdf::Triple(*merged, Term::iri(vocab::kOwlSameAs), *kept));
            merges.push_back({kept->text(), merged->text(), MergeReason::IpMatch});
        }
    }
    return merges;
}

// Feature-of-interest association: the appliance behind the plug.
inline rdf::Triple associate_entity(const std::string& streamIri,
                                    const std::string& applianceLabel, rdf::Store& store) {
    using rdf::PatternTerm;
    using rdf::Term;
    if (applianceLabel.empty()) throw std::invalid_argument("appliance label must be non-empty");
    Term stream = Term::iri(streamIri);
    bool exists = !store
                       .match(rdf::pattern(PatternTerm::fixed(stream),
                                           PatternTerm::variable("p"), PatternTerm::variable("o")))
                       .empty();
    if (!exists) throw UnknownStream("unknown stream: " + streamIri);
    std::string foiIri = uuid5("foi/" + applianceLabel);
    Term foi = Term::iri(foiIri);
    store.insert(rdf::Triple(foi, Term::iri(rdf::kRdfType), Term::iri(vocab::kFeatureOfInterest)));
    store.insert(rdf::Triple(foi, Term::iri(vocab::kRdfsLabel), Term::literal(applianceLabel)));
    rdf::Triple t(stream, Term::iri(vocab::kHasFeatureOfInterest), foi);
    store.insert(t);
    return t;
}

}  // namespace homecrawl::normalizer
