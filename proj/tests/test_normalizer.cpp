#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homecrawl/normalizer.hpp"

using namespace homecrawl;
using gateway::Attribute;
using gateway::Node;
using normalizer::LinkOutcome;
using normalizer::LinkPolicy;
using rdf::PatternTerm;
using rdf::Term;

namespace {

constexpr const char* kGatewayId = "homee-0005510F1A3D";

Node node8() {
    Node n;
    n.added = 1550568947;
    n.id = 8;
    n.name = "Fibaro%20Kitchen";
    Attribute power;
    power.current_value = 2.9;
    power.id = 64;
    power.last_changed = 1550570278;
    power.node_id = 8;
    power.type = gateway::kCurrentEnergyUse;
    power.unit = "W";
    Attribute energy;
    energy.current_value = 1.632;
    energy.id = 84;
    energy.last_changed = 1550570278;
    energy.node_id = 8;
    energy.type = gateway::kAccumulatedEnergyUse;
    energy.unit = "kWh";
    n.attributes = {power, energy};
    return n;
}

bool has(const std::vector<rdf::Triple>& ts, const rdf::Triple& t) {
    for (const auto& x : ts)
        if (x == t) return true;
    return false;
}

}  // namespace

TEST_CASE("node 8 normalises to a typed, labelled plug with two streams") {
    auto ont = vocab::default_ontology();
    auto units = vocab::default_units();
    LinkPolicy policy;
    policy.autoAcceptTop = true;
    auto out = normalizer::normalize_node(node8(), ont, units, kGatewayId, policy);

    CHECK(out.deviceIri == "f3c27e61-6bf9-5bca-99d3-6e1178d9d0cb");
    CHECK(out.linkOutcome == LinkOutcome::Linked);
    CHECK(out.linkedClass == std::optional<std::string>("devices:FibaroWallPlug"));
    Term dev = Term::iri(out.deviceIri);
    CHECK(has(out.triples, rdf::Triple(dev, Term::iri(rdf::kRdfType),
                                       Term::iri("devices:FibaroWallPlug"))));
    CHECK(has(out.triples,
              rdf::Triple(dev, Term::iri(vocab::kRdfsLabel), Term::literal("Fibaro Kitchen"))));

    REQUIRE(out.streams.size() == 2);
    const auto& power = out.streams[0];
    CHECK(power.observedProperty == "qk:Power");
    CHECK(power.unitSymbol == "W");
    CHECK(power.unitClass == "qudt:PowerUnit");
    CHECK(power.streamIri == normalizer::mint_stream_iri(out.deviceIri, 3));
    const auto& energy = out.streams[1];
    CHECK(energy.observedProperty == "qk:Energy");
    CHECK(energy.unitSymbol == "kWh");
    Term st = Term::iri(power.streamIri);
    CHECK(has(out.triples,
              rdf::Triple(st, Term::iri(rdf::kRdfType), Term::iri(vocab::kIotStream))));
    CHECK(has(out.triples, rdf::Triple(st, Term::iri(vocab::kGeneratedBy), dev)));
    CHECK(has(out.triples,
              rdf::Triple(st, Term::iri(vocab::kObservedProperty), Term::iri("qk:Power"))));
    CHECK(out.skipped.empty());
}

TEST_CASE("link outcomes flag the device for later confirmation") {
    auto ont = vocab::default_ontology();
    auto units = vocab::default_units();

    // without auto-accept, node 8 stays ambiguous and gets a linkStatus flag
    auto amb = normalizer::normalize_node(node8(), ont, units, kGatewayId);
    CHECK(amb.linkOutcome == LinkOutcome::Ambiguous);
    CHECK_FALSE(amb.linkedClass.has_value());
    CHECK(has(amb.triples, rdf::Triple(Term::iri(amb.deviceIri), Term::iri(vocab::kLinkStatus),
                                       Term::literal("ambiguous"))));

    Node unknown;
    unknown.id = 9;
    unknown.name = "zzz-0000";
    auto nm = normalizer::normalize_node(unknown, ont, units, kGatewayId);
    CHECK(nm.linkOutcome == LinkOutcome::NoMatch);
    CHECK(has(nm.triples, rdf::Triple(Term::iri(nm.deviceIri), Term::iri(vocab::kLinkStatus),
                                      Term::literal("nomatch"))));

    Node plug;
    plug.id = 7;
    plug.name = "FIBARO System FGWPE/F Wall Plug Gen5";
    auto linked = normalizer::normalize_node(plug, ont, units, kGatewayId);
    CHECK(linked.linkOutcome == LinkOutcome::Linked);
    CHECK(linked.linkedClass == std::optional<std::string>("devices:FibaroWallPlug"));
}

TEST_CASE("unknown units are skipped with a reason, not dropped silently") {
    auto ont = vocab::default_ontology();
    auto units = vocab::default_units();
    Node n = node8();
    n.attributes[1].unit = "furlongs";
    auto out = normalizer::normalize_node(n, ont, units, kGatewayId,
                                          LinkPolicy{{}, true});
    CHECK(out.streams.size() == 1);
    REQUIRE(out.skipped.size() == 1);
    CHECK(out.skipped[0].attributeId == 84);
    CHECK(out.skipped[0].unit == "furlongs");

    Node bare = node8();
    bare.attributes.clear();
    auto none = normalizer::normalize_node(bare, ont, units, kGatewayId,
                                           LinkPolicy{{}, true});
    CHECK(none.streams.empty());
    CHECK(none.skipped.empty());
    CHECK_FALSE(none.triples.empty());  // label and type triples remain
}

TEST_CASE("minting is deterministic and collision-separated") {
    CHECK(normalizer::mint_device_iri(kGatewayId, 7) == "2412534e-9d29-51db-9fc2-29f7ff2b4ae4");
    CHECK(normalizer::mint_device_iri(kGatewayId, 8) == "f3c27e61-6bf9-5bca-99d3-6e1178d9d0cb");
    CHECK(normalizer::mint_device_iri(kGatewayId, 8) == normalizer::mint_device_iri(kGatewayId, 8));
    CHECK(normalizer::mint_device_iri(kGatewayId, 7) != normalizer::mint_device_iri(kGatewayId, 8));
    CHECK(normalizer::mint_device_iri("other-gw", 8) != normalizer::mint_device_iri(kGatewayId, 8));
    auto dev = normalizer::mint_device_iri(kGatewayId, 8);
    CHECK(normalizer::mint_stream_iri(dev, 3) != normalizer::mint_stream_iri(dev, 4));
}

TEST_CASE("normalize_observation writes the 2.9 W sample exactly") {
    auto ont = vocab::default_ontology();
    auto units = vocab::default_units();
    auto out = normalizer::normalize_node(node8(), ont, units, kGatewayId, LinkPolicy{{}, true});
    const auto& stream = out.streams[0];

    auto obs = normalizer::normalize_observation(stream, 1550570278, 2.9, "W", 60);
    rdf::Store store;
    for (const auto& t : obs) store.insert(t);
    std::string obsIri = stream.streamIri + "/observation/1550570278";
    std::string resIri = obsIri + "/result";
    CHECK(store.contains(rdf::Triple(Term::iri(obsIri), Term::iri(rdf::kRdfType),
                                     Term::iri("iotc:ElectricPowerObservation"))));
    CHECK(store.contains(rdf::Triple(Term::iri(obsIri), Term::iri(vocab::kOnStream),
                                     Term::iri(stream.streamIri))));
    CHECK(store.contains(rdf::Triple(Term::iri(obsIri), Term::iri(vocab::kResultTime),
                                     Term::literal("2019-02-19T10:57:58+01:00"))));
    CHECK(store.contains(rdf::Triple(Term::iri(resIri), Term::iri(rdf::kRdfType),
                                     Term::iri("iotc:ElectricPowerResult"))));
    CHECK(store.contains(rdf::Triple(Term::iri(resIri), Term::iri(rdf::kRdfType),
                                     Term::iri(vocab::kQuantityValue))));
    CHECK(store.contains(rdf::Triple(Term::iri(resIri), Term::iri(vocab::kNumericValue),
                                     Term::literal("2.9", rdf::kXsdDecimal))));
    CHECK(store.contains(rdf::Triple(Term::iri(resIri), Term::iri(vocab::kQudtUnit),
                                     Term::iri("qudt:PowerUnit"))));

    // zero is a valid reading
    auto zero = normalizer::normalize_observation(stream, 1550570288, 0.0, "W");
    rdf::Store zstore;
    for (const auto& t : zero) zstore.insert(t);
    CHECK(zstore.contains(rdf::Triple(
        Term::iri(stream.streamIri + "/observation/1550570288/result"),
        Term::iri(vocab::kNumericValue), Term::literal("0", rdf::kXsdDecimal))));

    CHECK_THROWS_AS(normalizer::normalize_observation(stream, 1550570278, 2.9, "kWh"),
                    normalizer::UnitMismatch);

    // energy stream uses the energy observation classes
    auto en = normalizer::normalize_observation(out.streams[1], 1550570278, 1.632, "kWh");
    bool typed = false;
    for (const auto& t : en)
        if (t.predicate.text() == rdf::kRdfType &&
            t.object.text() == "iotc:ElectricEnergyObservation")
            typed = true;
    CHECK(typed);
}

TEST_CASE("deduplicate merges on IP evidence only") {
    auto make_store = [](bool sameIp, bool withIp) {
        rdf::Store s;
        s.insert(rdf::Triple(Term::iri("net-dev"), Term::iri(vocab::kRdfsLabel),
                             Term::literal("gw")));
        s.insert(rdf::Triple(Term::iri("gw-dev"), Term::iri(vocab::kRdfsLabel),
                             Term::literal("gw plug")));
        s.insert(rdf::Triple(Term::iri("gw-dev"), Term::iri(vocab::kDiscoveredVia),
                             Term::literal("gateway")));
        if (withIp) {
            s.insert(rdf::Triple(Term::iri("net-dev"), Term::iri(vocab::kHasIpAddress),
                                 Term::literal("192.168.1.20")));
            s.insert(rdf::Triple(Term::iri("gw-dev"), Term::iri(vocab::kHasIpAddress),
                                 Term::literal(sameIp ? "192.168.1.20" : "192.168.1.21")));
        }
        return s;
    };

    // matching IPs: exactly one merge, the gateway-side IRI is kept
    auto s1 = make_store(true, true);
    auto merges = normalizer::deduplicate(s1);
    REQUIRE(merges.size() == 1);
    CHECK(merges[0].keptIri == "gw-dev");
    CHECK(merges[0].mergedIri == "net-dev");
    CHECK(s1.contains(rdf::Triple(Term::iri("net-dev"), Term::iri(vocab::kOwlSameAs),
                                  Term::iri("gw-dev"))));

    // differing IPs: no merge
    auto s2 = make_store(false, true);
    CHECK(normalizer::deduplicate(s2).empty());

    // no IP metadata at all: no merge, both instances remain
    auto s3 = make_store(true, false);
    CHECK(normalizer::deduplicate(s3).empty());
    CHECK(s3.match(rdf::pattern(PatternTerm::variable("s"),
                                PatternTerm::fixed(Term::iri(vocab::kOwlSameAs)),
                                PatternTerm::variable("o")))
              .empty());

    // pairwise oracle on a random-ish store: merges equal IP-equal pairs
    rdf::Store s4;
    const char* ips[] = {"10.0.0.1", "10.0.0.2", "10.0.0.1", "10.0.0.3", "10.0.0.2"};
    for (int i = 0; i < 5; ++i)
        s4.insert(rdf::Triple(Term::iri("d" + std::to_string(i)),
                              Term::iri(vocab::kHasIpAddress), Term::literal(ips[i])));
    size_t expected = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            if (std::string(ips[i]) == ips[j]) ++expected;
    CHECK(normalizer::deduplicate(s4).size() == expected);
}

TEST_CASE("associate_entity links a stream to its appliance") {
    auto ont = vocab::default_ontology();
    auto units = vocab::default_units();
    auto out = normalizer::normalize_node(node8(), ont, units, kGatewayId, LinkPolicy{{}, true});
    rdf::Store store;
    for (const auto& t : out.triples) store.insert(t);
    const std::string streamIri = out.streams[0].streamIri;

    auto t = normalizer::associate_entity(streamIri, "kettle", store);
    CHECK(t.subject.text() == streamIri);
    CHECK(t.predicate.text() == vocab::kHasFeatureOfInterest);
    std::string foi = t.object.text();
    CHECK(store.contains(rdf::Triple(Term::iri(foi), Term::iri(rdf::kRdfType),
                                     Term::iri(vocab::kFeatureOfInterest))));
    CHECK(store.contains(rdf::Triple(Term::iri(foi), Term::iri(vocab::kRdfsLabel),
                                     Term::literal("kettle"))));
    size_t size = store.size();
    auto again = normalizer::associate_entity(streamIri, "kettle", store);
    CHECK(again.object == t.object);
    CHECK(store.size() == size);  // idempotent

    CHECK_THROWS_AS(normalizer::associate_entity("not-a-stream", "kettle", store),
                    normalizer::UnknownStream);
    CHECK_THROWS_AS(normalizer::associate_entity(streamIri, "", store), std::invalid_argument);
}

TEST_CASE("format_number gives shortest round-trip decimals") {
    CHECK(normalizer::format_number(2.9) == "2.9");
    CHECK(normalizer::format_number(0.0) == "0");
    CHECK(normalizer::format_number(2000.0) == "2000");
    CHECK(normalizer::format_number(1.632) == "1.632");
}
