#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <set>

#include "homecrawl/rdf.hpp"
#include "homecrawl/rng.hpp"

using namespace homecrawl;
using rdf::Pattern;
using rdf::PatternTerm;
using rdf::Store;
using rdf::Term;
using rdf::Triple;

namespace {

Term random_term(Rng& rng, bool allowLiteral) {
    static const char* iris[] = {"ex:a", "ex:b", "ex:c", "ex:p", "ex:q", "ex:r"};
    static const char* lits[] = {"x", "y", "z", "hello world", "2.9"};
    uint64_t pick = rng.uniform_int(allowLiteral ? 3 : 2);
    if (pick == 0) return Term::iri(iris[rng.uniform_int(6)]);
    if (pick == 1) return Term::blank("b" + std::to_string(rng.uniform_int(4)));
    return Term::literal(lits[rng.uniform_int(5)]);
}

Store random_store(Rng& rng, size_t n) {
    Store s;
    for (size_t i = 0; i < n; ++i) {
        Term subj = random_term(rng, false);
        Term pred = Term::iri(std::string("ex:p") + std::to_string(rng.uniform_int(4)));
        Term obj = random_term(rng, true);
        s.insert(Triple(subj, pred, obj));
    }
    return s;
}

PatternTerm random_pattern_term(Rng& rng, bool allowLiteral, int varId) {
    if (rng.uniform_int(2) == 0) return PatternTerm::variable("v" + std::to_string(varId));
    return PatternTerm::fixed(random_term(rng, allowLiteral));
}

bool unify_oracle(const PatternTerm& p, const Term& t) { return p.is_var() || *p.term == t; }

}  // namespace

TEST_CASE("term invariants and ordering") {
    CHECK_THROWS_AS(Term::iri(""), rdf::InvalidTriple);
    CHECK_THROWS_AS(Term::iri("has space"), rdf::InvalidTriple);
    CHECK(Term::literal("x").datatype() == rdf::kXsdString);
    // Iri < Blank < Literal
    CHECK(Term::iri("z") < Term::blank("a"));
    CHECK(Term::blank("z") < Term::literal("a"));
    CHECK(Term::iri("a") < Term::iri("b"));
    CHECK(Term::literal("a", "xsd:decimal") != Term::literal("a"));
}

TEST_CASE("triple invariants") {
    CHECK_THROWS_AS(Triple(Term::literal("x"), Term::iri("ex:p"), Term::iri("ex:o")),
                    rdf::InvalidTriple);
    CHECK_THROWS_AS(Triple(Term::iri("ex:s"), Term::blank("p"), Term::iri("ex:o")),
                    rdf::InvalidTriple);
    CHECK_THROWS_AS(Triple(Term::iri("ex:s"), Term::literal("p"), Term::iri("ex:o")),
                    rdf::InvalidTriple);
}

TEST_CASE("insert is a set operation") {
    Store s;
    Triple t(Term::iri("ex:a"), Term::iri("ex:p"), Term::literal("x"));
    CHECK(s.insert(t));
    CHECK_FALSE(s.insert(t));
    CHECK(s.size() == 1);
}

TEST_CASE("discovery snippet ingests as exactly 3 property triples") {
    rdf::json doc = {
        {"@id", "57bc95d6-4ed4-4b46-9101-f1d52871f872"},
        {"hasTimeStamp", "2018-10-29T12:13:01+01:00"},
        {"@label", "homee-0005510F1A3D"},
        {"hasNetworkName", "homee-0005510F1A3D"},
    };
    Store s;
    auto triples = s.from_jsonld(doc);
    CHECK(triples.size() == 3);
    CHECK(s.size() == 3);
    auto found = s.match(rdf::pattern(PatternTerm::variable("s"),
                                      PatternTerm::fixed(Term::iri("iotc:hasNetworkName")),
                                      PatternTerm::variable("o")));
    REQUIRE(found.size() == 1);
    CHECK(found[0].object.text() == "homee-0005510F1A3D");
    CHECK(found[0].subject.text() == "57bc95d6-4ed4-4b46-9101-f1d52871f872");
}

TEST_CASE("match on empty store") {
    Store s;
    CHECK(s.match(rdf::pattern(PatternTerm::variable("s"), PatternTerm::variable("p"),
                               PatternTerm::variable("o")))
              .empty());
}

TEST_CASE("match equals brute-force scan on random stores") {
    Rng rng(7);
    for (int run = 0; run < 30; ++run) {
        Store s = random_store(rng, 1 + rng.uniform_int(500));
        Pattern p = rdf::pattern(random_pattern_term(rng, false, 0),
                                 rng.uniform_int(2) == 0
                                     ? PatternTerm::variable("vp")
                                     : PatternTerm::fixed(Term::iri("ex:p1")),
                                 random_pattern_term(rng, true, 1));
        std::vector<Triple> oracle;
        for (const auto& t : s.triples())
            if (unify_oracle(p.subject, t.subject) && unify_oracle(p.predicate, t.predicate) &&
                unify_oracle(p.object, t.object))
                oracle.push_back(t);
        CHECK(s.match(p) == oracle);
    }
}

TEST_CASE("query_join single pattern degenerates to match") {
    Rng rng(11);
    Store s = random_store(rng, 50);
    Pattern p = rdf::pattern(PatternTerm::variable("s"), PatternTerm::variable("p"),
                             PatternTerm::variable("o"));
    auto bindings = s.query_join({p});
    CHECK(bindings.size() == s.size());
}

TEST_CASE("query_join answers the linked-gateway shape") {
    Store s;
    Term dev = Term::iri("57bc95d6-4ed4-4b46-9101-f1d52871f872");
    s.insert(Triple(dev, Term::iri(rdf::kRdfType), Term::iri("devices:HomeeGateway")));
    s.insert(Triple(dev, Term::iri("iotc:hasNetworkName"), Term::literal("homee-0005510F1A3D")));
    auto bindings = s.query_join({
        rdf::pattern(PatternTerm::variable("d"), PatternTerm::fixed(Term::iri(rdf::kRdfType)),
                     PatternTerm::fixed(Term::iri("devices:HomeeGateway"))),
        rdf::pattern(PatternTerm::variable("d"),
                     PatternTerm::fixed(Term::iri("iotc:hasNetworkName")),
                     PatternTerm::variable("n")),
    });
    REQUIRE(bindings.size() == 1);
    CHECK(bindings[0].at("n").text() == "homee-0005510F1A3D");
}

TEST_CASE("query_join equals a nested-loop oracle on random graphs") {
    Rng rng(13);
    for (int run = 0; run < 20; ++run) {
        Store s = random_store(rng, 60);
        std::vector<Pattern> patterns = {
            rdf::pattern(PatternTerm::variable("a"),
                         PatternTerm::fixed(Term::iri("ex:p0")), PatternTerm::variable("b")),
            rdf::pattern(PatternTerm::variable("b"),
                         PatternTerm::fixed(Term::iri("ex:p1")), PatternTerm::variable("c")),
        };
        // oracle: explicit nested loops over match results
        std::set<std::string> oracle;
        for (const auto& t1 : s.match(patterns[0])) {
            if (t1.object.is_literal()) continue;  // cannot be a subject in pattern 2
            for (const auto& t2 : s.match(rdf::pattern(PatternTerm::fixed(t1.object),
                                                       PatternTerm::fixed(Term::iri("ex:p1")),
                                                       PatternTerm::variable("c")))) {
                oracle.insert(rdf::term_to_line(t1.subject) + "|" +
                              rdf::term_to_line(t1.object) + "|" +
                              rdf::term_to_line(t2.object));
            }
        }
        std::set<std::string> got;
        for (const auto& b : s.query_join(patterns))
            got.insert(rdf::term_to_line(b.at("a")) + "|" + rdf::term_to_line(b.at("b")) + "|" +
                       rdf::term_to_line(b.at("c")));
        CHECK(got == oracle);
    }
}

TEST_CASE("jsonld round trip on single subjects") {
    Store s;
    Term dev = Term::iri("ex:dev");
    s.insert(Triple(dev, Term::iri(rdf::kRdfType), Term::iri("devices:FibaroWallPlug")));
    s.insert(Triple(dev, Term::iri("rdfs:label"), Term::literal("Fibaro Kitchen")));
    s.insert(Triple(dev, Term::iri("qudt:numericValue"), Term::literal("2.9", rdf::kXsdDecimal)));
    auto doc = s.to_jsonld("ex:dev");
    CHECK(doc["@id"] == "ex:dev");
    CHECK(doc["@type"] == "devices:FibaroWallPlug");
    CHECK(doc["label"] == "Fibaro Kitchen");
    Store s2;
    s2.from_jsonld(doc);
    CHECK(s2.triples() == s.triples());
}

TEST_CASE("to_jsonld with only a type") {
    Store s;
    s.insert(Triple(Term::iri("ex:x"), Term::iri(rdf::kRdfType), Term::iri("ex:T")));
    auto doc = s.to_jsonld("ex:x");
    CHECK(doc.size() == 2);
    CHECK(doc["@type"] == "ex:T");
    CHECK_THROWS_AS(s.to_jsonld("ex:absent"), rdf::MissingId);
}

TEST_CASE("from_jsonld rejects unknown keys and missing @id") {
    Store s;
    CHECK_THROWS_AS(s.from_jsonld(rdf::json{{"label", "x"}}), rdf::MissingId);
    CHECK_THROWS_AS(s.from_jsonld(rdf::json{{"@id", "ex:a"}, {"nonsense", "x"}}),
                    rdf::UnknownContextKey);
    // keys containing ':' pass through as predicate IRIs
    s.from_jsonld(rdf::json{{"@id", "ex:a"}, {"ex:custom", "x"}});
    CHECK(s.size() == 1);
}

TEST_CASE("random jsonld round trips") {
    Rng rng(17);
    const char* keys[] = {"hasTimeStamp", "hasNetworkName", "label", "resultTime",
                          "hasIpAddress"};
    for (int run = 0; run < 50; ++run) {
        rdf::json doc;
        doc["@id"] = "ex:s" + std::to_string(run);
        size_t nk = 1 + rng.uniform_int(5);
        for (size_t i = 0; i < nk; ++i)
            doc[keys[rng.uniform_int(5)]] = "v" + std::to_string(rng.uniform_int(10));
        Store s;
        s.from_jsonld(doc);
        auto doc2 = s.to_jsonld(doc["@id"].get<std::string>());
        Store s2;
        s2.from_jsonld(doc2);
        CHECK(s2.triples() == s.triples());
    }
}

TEST_CASE("persist and load are inverse") {
    Rng rng(19);
    const char* path = "test_rdf_tmp.nt";
    for (int run = 0; run < 10; ++run) {
        Store s = random_store(rng, 80);
        s.persist(path);
        Store loaded = Store::load(path);
        CHECK(loaded.triples() == s.triples());
    }
    Store empty;
    empty.persist(path);
    CHECK(Store::load(path).size() == 0);
    std::remove(path);
}

TEST_CASE("parse_line rejects malformed input without crashing") {
    const char* bad[] = {
        "",
        "<a> <b>",
        "<a> <b> <c>",
        "<a> <b> \"unterminated .",
        "<a> <b> \"x\" .",
        "<a> <b> \"x\"^^ .",
        "<a> <b> \"x\"^^<> .",
        "<a b> <c> <d> .",
        "\"lit\" <p> <o> .",
        "<a> _:b <o> .",
        "<a> <b> <c> . trailing",
        "<a> <b> \"bad\\q\"^^<xsd:string> .",
        "_: <p> <o> .",
        "junk",
    };
    for (const char* line : bad)
        CHECK_THROWS_AS(Store::parse_line(line, 1), rdf::ParseError);
    // fuzz: random bytes never crash
    Rng rng(23);
    for (int i = 0; i < 2000; ++i) {
        std::string line;
        size_t len = rng.uniform_int(40);
        for (size_t j = 0; j < len; ++j)
            line.push_back(static_cast<char>(32 + rng.uniform_int(95)));
        try {
            Store::parse_line(line, 1);
        } catch (const rdf::ParseError&) {
        }
    }
}

TEST_CASE("escape round trip") {
    Store s;
    s.insert(Triple(Term::iri("ex:s"), Term::iri("ex:p"),
                    Term::literal("a\"b\\c\nd\te")));
    const char* path = "test_rdf_escape.nt";
    s.persist(path);
    CHECK(Store::load(path).triples() == s.triples());
    std::remove(path);
}

TEST_CASE("stream index and find_streams") {
    Store s;
    CHECK(rdf::build_index(s).byQuantityKind.empty());
    auto add_stream = [&](const std::string& iri, const std::string& qk,
                          const std::string& dev, const std::string& cls) {
        s.insert(Triple(Term::iri(iri), Term::iri(rdf::kRdfType),
                        Term::iri("iot-stream:IotStream")));
        s.insert(Triple(Term::iri(iri), Term::iri("sosa:observedProperty"), Term::iri(qk)));
        s.insert(Triple(Term::iri(iri), Term::iri("iot-stream:generatedBy"), Term::iri(dev)));
        s.insert(Triple(Term::iri(dev), Term::iri(rdf::kRdfType), Term::iri(cls)));
    };
    add_stream("ex:st1", "qk:Power", "ex:d1", "devices:FibaroWallPlug");
    add_stream("ex:st2", "qk:Power", "ex:d2", "devices:FibaroWallPlug");
    add_stream("ex:st3", "qk:Energy", "ex:d1", "devices:FibaroWallPlug");
    auto idx = rdf::build_index(s);
    CHECK(rdf::find_streams(idx, std::string("qk:Power"), std::nullopt) ==
          std::set<std::string>{"ex:st1", "ex:st2"});
    CHECK(rdf::find_streams(idx, std::string("qk:Power"),
                            std::string("devices:FibaroWallPlug")) ==
          std::set<std::string>{"ex:st1", "ex:st2"});
    CHECK(rdf::find_streams(idx, std::nullopt, std::nullopt).size() == 3);
    CHECK(rdf::find_streams(idx, std::string("qk:Nope"), std::nullopt).empty());
}

TEST_CASE("federated match equals unpartitioned match") {
    Rng rng(29);
    for (int run = 0; run < 20; ++run) {
        Store whole = random_store(rng, 120);
        Store parts[3];
        for (const auto& t : whole.triples()) parts[rng.uniform_int(3)].insert(t);
        Store local;
        rdf::FederatedStore fed{&local, {&parts[0], &parts[1], &parts[2]}};
        Pattern p = rdf::pattern(PatternTerm::variable("s"), PatternTerm::variable("p"),
                                 random_pattern_term(rng, true, 0));
        auto res = rdf::federated_match(fed, p);
        CHECK(res.triples == whole.match(p));
        CHECK(res.unavailableChildren.empty());
    }
    // unavailable child is reported, others still answer
    Store a;
    a.insert(Triple(Term::iri("ex:s"), Term::iri("ex:p"), Term::literal("x")));
    rdf::FederatedStore fed{nullptr, {&a, nullptr}};
    auto res = rdf::federated_match(fed, rdf::pattern(PatternTerm::variable("s"),
                                                      PatternTerm::variable("p"),
                                                      PatternTerm::variable("o")));
    CHECK(res.triples.size() == 1);
    CHECK(res.unavailableChildren == std::vector<size_t>{1});
}

TEST_CASE("insertion order independence") {
    Rng rng(31);
    Store forward, backward;
    std::vector<Triple> ts;
    for (int i = 0; i < 40; ++i)
        ts.push_back(Triple(random_term(rng, false), Term::iri("ex:p"), random_term(rng, true)));
    for (const auto& t : ts) forward.insert(t);
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) backward.insert(*it);
    CHECK(forward.triples() == backward.triples());
}
