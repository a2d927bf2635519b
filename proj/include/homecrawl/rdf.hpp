#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace homecrawl::rdf {

using nlohmann::json;

inline constexpr const char* kXsdString = "xsd:string";
inline constexpr const char* kXsdDecimal = "xsd:decimal";
inline constexpr const char* kRdfType = "rdf:type";

class InvalidTriple : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class MissingId : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class UnknownContextKey : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ParseError : public std::runtime_error {
public:
    ParseError(size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    size_t line;
};

// ---------------------------------------------------------------------------
// Term

class Term {
public:
    enum class Kind { Iri, Blank, Literal };

    static Term iri(std::string text) {
        if (text.empty()) throw InvalidTriple("empty IRI");
        for (char c : text)
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
                throw InvalidTriple("whitespace in IRI: " + text);
        Term t;
        t.kind_ = Kind::Iri;
        t.text_ = std::move(text);
        return t;
    }

    static Term blank(std::string label) {
        Term t;
        t.kind_ = Kind::Blank;
        t.text_ = std::move(label);
        return t;
    }

    static Term literal(std::string lexical, std::string datatype = kXsdString) {
        Term t;
        t.kind_ = Kind::Literal;
        t.text_ = std::move(lexical);
        t.datatype_ = std::move(datatype);
        return t;
    }

    Kind kind() const { return kind_; }
    const std::string& text() const { return text_; }
    const std::string& datatype() const { return datatype_; }

    bool is_iri() const { return kind_ == Kind::Iri; }
    bool is_blank() const { return kind_ == Kind::Blank; }
    bool is_literal() const { return kind_ == Kind::Literal; }

    // Canonical order: Iri < Blank < Literal, then text, then datatype.
    friend bool operator<(const Term& a, const Term& b) {
        return std::tie(a.kind_, a.text_, a.datatype_) < std::tie(b.kind_, b.text_, b.datatype_);
    }
    friend bool operator==(const Term& a, const Term& b) {
        return a.kind_ == b.kind_ && a.text_ == b.text_ && a.datatype_ == b.datatype_;
    }
    friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

private:
    Kind kind_ = Kind::Iri;
    std::string text_;
    std::string datatype_;
};

// ---------------------------------------------------------------------------
// Triple

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    Triple(Term s, Term p, Term o)
        : subject(std::move(s)), predicate(std::move(p)), object(std::move(o)) {
        if (subject.is_literal()) throw InvalidTriple("literal subject");
        if (!predicate.is_iri()) throw InvalidTriple("predicate must be an IRI");
    }

    friend bool operator<(const Triple& a, const Triple& b) {
        return std::tie(a.subject, a.predicate, a.object) <
               std::tie(b.subject, b.predicate, b.object);
    }
    friend bool operator==(const Triple& a, const Triple& b) {
        return a.subject == b.subject && a.predicate == b.predicate && a.object == b.object;
    }
};

// ---------------------------------------------------------------------------
// Pattern: each slot is a concrete term or a named variable.

struct PatternTerm {
    std::optional<Term> term;  // empty = variable
    std::string var;

    static PatternTerm fixed(Term t) { return {std::move(t), {}}; }
    static PatternTerm variable(std::string name) { return {std::nullopt, std::move(name)}; }

    bool is_var() const { return !term.has_value(); }
};

struct Pattern {
    PatternTerm subject, predicate, object;
};

inline Pattern pattern(PatternTerm s, PatternTerm p, PatternTerm o) {
    return {std::move(s), std::move(p), std::move(o)};
}

using Binding = std::map<std::string, Term>;

// ---------------------------------------------------------------------------
// Serialisation helpers (line format, see persist/load)

inline std::string escape_lexical(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline std::string term_to_line(const Term& t) {
    switch (t.kind()) {
        case Term::Kind::Iri: return "<" + t.text() + ">";
        case Term::Kind::Blank: return "_:" + t.text();
        case Term::Kind::Literal:
            return "\"" + escape_lexical(t.text()) + "\"^^<" + t.datatype() + ">";
    }
    return {};
}

inline std::string triple_to_line(const Triple& t) {
    return term_to_line(t.subject) + " " + term_to_line(t.predicate) + " " +
           term_to_line(t.object) + " .";
}

// ---------------------------------------------------------------------------
// JSON-LD context: fixed key -> predicate IRI table shipped with the artifact.

inline const std::map<std::string, std::string>& jsonld_context() {
    static const std::map<std::string, std::string> ctx = {
        {"hasTimeStamp", "iotc:hasTimeStamp"},
        {"hasNetworkName", "iotc:hasNetworkName"},
        {"label", "rdfs:label"},
        {"@label", "rdfs:label"},
        {"resultTime", "sosa:resultTime"},
        {"hasResult", "sosa:hasResult"},
        {"discoveredDevice", "iotc:discoveredDevice"},
        {"hasIpAddress", "iotc:hasIpAddress"},
        {"hasLocation", "iotc:hasLocation"},
        {"generatedBy", "iot-stream:generatedBy"},
        {"observedProperty", "sosa:observedProperty"},
        {"hasFeatureOfInterest", "sosa:hasFeatureOfInterest"},
        {"hasUnit", "qudt:unit"},
        {"numericValue", "qudt:numericValue"},
    };
    return ctx;
}

inline const std::map<std::string, std::string>& jsonld_reverse_context() {
    static const std::map<std::string, std::string> rev = [] {
        std::map<std::string, std::string> m;
        for (const auto& [k, v] : jsonld_context())
            if (k[0] != '@') m.emplace(v, k);  // prefer plain keys over @-aliases
        return m;
    }();
    return rev;
}

// ---------------------------------------------------------------------------
// Store

class Store {
public:
    bool insert(const Triple& t) { return triples_.insert(t).second; }

    bool erase(const Triple& t) { return triples_.erase(t) > 0; }

    size_t size() const { return triples_.size(); }
    bool contains(const Triple& t) const { return triples_.count(t) > 0; }
    const std::set<Triple>& triples() const { return triples_; }

    std::vector<Triple> match(const Pattern& p) const {
        std::vector<Triple> out;
        for (const auto& t : triples_)
            if (unifies(p.subject, t.subject) && unifies(p.predicate, t.predicate) &&
                unifies(p.object, t.object))
                out.push_back(t);
        return out;  // set iteration is already canonical order
    }

    // Basic graph pattern join; deterministic order by canonical binding
    // serialisation, duplicates removed.
    std::vector<Binding> query_join(const std::vector<Pattern>& patterns) const {
        std::vector<Binding> bindings = {{}};
        for (const auto& p : patterns) {
            std::vector<Binding> next;
            for (const auto& b : bindings) {
                Pattern bound = substitute(p, b);
                for (const auto& t : match(bound)) {
                    Binding nb = b;
                    bind(nb, p.subject, t.subject);
                    bind(nb, p.predicate, t.predicate);
                    bind(nb, p.object, t.object);
                    next.push_back(std::move(nb));
                }
            }
            bindings = std::move(next);
        }
        std::sort(bindings.begin(), bindings.end(),
                  [](const Binding& a, const Binding& b) { return serialize(a) < serialize(b); });
        bindings.erase(std::unique(bindings.begin(), bindings.end()), bindings.end());
        return bindings;
    }

    // One-subject JSON-LD document; rdf:type becomes @type, other predicates
    // use the fixed context (raw IRI as key when not in the table).
    json to_jsonld(const std::string& subjectIri) const {
        Term subj = Term::iri(subjectIri);
        auto ts = match(pattern(PatternTerm::fixed(subj), PatternTerm::variable("p"),
                                PatternTerm::variable("o")));
        if (ts.empty()) throw MissingId("unknown subject: " + subjectIri);
        json doc;
        doc["@id"] = subjectIri;
        std::map<std::string, std::vector<json>> props;
        std::vector<std::string> types;
        for (const auto& t : ts) {
            if (t.predicate.text() == kRdfType && t.object.is_iri()) {
                types.push_back(t.object.text());
                continue;
            }
            std::string key;
            auto it = jsonld_reverse_context().find(t.predicate.text());
            key = it != jsonld_reverse_context().end() ? it->second : t.predicate.text();
            props[key].push_back(object_to_jsonld(t.object));
        }
        if (types.size() == 1) doc["@type"] = types[0];
        else if (types.size() > 1) doc["@type"] = types;
        for (auto& [k, vals] : props) {
            if (vals.size() == 1) doc[k] = vals[0];
            else doc[k] = vals;
        }
        return doc;
    }

    std::vector<Triple> from_jsonld(const json& doc) {
        auto triples = jsonld_to_triples(doc);
        for (const auto& t : triples) insert(t);
        return triples;
    }

    static std::vector<Triple> jsonld_to_triples(const json& doc) {
        std::vector<Triple> out;
        size_t blankCounter = 0;
        jsonld_object(doc, out, blankCounter);
        return out;
    }

    void persist(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + path);
        for (const auto& t : triples_) f << triple_to_line(t) << "\n";
        if (!f) throw IoError("write failed: " + path);
    }

    static Store load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open: " + path);
        Store s;
        std::string line;
        size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty()) continue;
            s.insert(parse_line(line, lineno));
        }
        return s;
    }

    static Triple parse_line(const std::string& line, size_t lineno);

private:
    static bool unifies(const PatternTerm& p, const Term& t) {
        return p.is_var() || *p.term == t;
    }

    static Pattern substitute(const Pattern& p, const Binding& b) {
        auto sub = [&](const PatternTerm& pt) {
            if (pt.is_var()) {
                auto it = b.find(pt.var);
                if (it != b.end()) return PatternTerm::fixed(it->second);
            }
            return pt;
        };
        return {sub(p.subject), sub(p.predicate), sub(p.object)};
    }

    static void bind(Binding& b, const PatternTerm& p, const Term& t) {
        if (p.is_var()) b.emplace(p.var, t);
    }

    static std::string serialize(const Binding& b) {
        std::string s;
        for (const auto& [k, v] : b) s += k + "=" + term_to_line(v) + ";";
        return s;
    }

    static json object_to_jsonld(const Term& t) {
        if (t.is_iri() || t.is_blank()) return json{{"@id", t.is_blank() ? "_:" + t.text() : t.text()}};
        if (t.datatype() == kXsdString) return t.text();
        if (t.datatype() == kXsdDecimal) {
            try {
                return json::parse(t.text());
            } catch (...) { /* fall through */ }
        }
        return json{{"@value", t.text()}, {"@type", t.datatype()}};
    }

    static Term jsonld_value_term(const json& v, std::vector<Triple>& out, size_t& blankCounter);

    static void jsonld_object(const json& doc, std::vector<Triple>& out, size_t& blankCounter) {
        if (!doc.is_object() || !doc.contains("@id") || !doc["@id"].is_string())
            throw MissingId("JSON-LD document without @id");
        std::string id = doc["@id"].get<std::string>();
        Term subj = id.rfind("_:", 0) == 0 ? Term::blank(id.substr(2)) : Term::iri(id);
        for (const auto& [key, value] : doc.items()) {
            if (key == "@id") continue;
            if (key == "@type") {
                for (const auto& tv : value.is_array() ? value : json::array({value}))
                    out.emplace_back(subj, Term::iri(kRdfType), Term::iri(tv.get<std::string>()));
                continue;
            }
            std::string pred;
            auto it = jsonld_context().find(key);
            if (it != jsonld_context().end()) pred = it->second;
            else if (key.find(':') != std::string::npos && key[0] != '@') pred = key;
            else throw UnknownContextKey("unknown JSON-LD key: " + key);
            for (const auto& v : value.is_array() ? value : json::array({value}))
                out.emplace_back(subj, Term::iri(pred), jsonld_value_term(v, out, blankCounter));
        }
    }

    std::set<Triple> triples_;
};

inline Term Store::jsonld_value_term(const json& v, std::vector<Triple>& out,
                                     size_t& blankCounter) {
    if (v.is_string()) return Term::literal(v.get<std::string>());
    if (v.is_number()) return Term::literal(v.dump(), kXsdDecimal);
    if (v.is_boolean()) return Term::literal(v.dump(), "xsd:boolean");
    if (v.is_object()) {
        if (v.contains("@value")) {
            std::string dt = v.contains("@type") ? v["@type"].get<std::string>()
                                                 : std::string(kXsdString);
            const json& val = v["@value"];
            return Term::literal(val.is_string() ? val.get<std::string>() : val.dump(), dt);
        }
        if (v.contains("@id") && v.size() == 1) {
            std::string id = v["@id"].get<std::string>();
            return id.rfind("_:", 0) == 0 ? Term::blank(id.substr(2)) : Term::iri(id);
        }
        // nested object: mint a blank node and recurse one level
        json nested = v;
        std::string label;
        if (nested.contains("@id")) {
            label = nested["@id"].get<std::string>();
        } else {
            label = "_:b" + std::to_string(blankCounter++);
            nested["@id"] = label;
        }
        jsonld_object(nested, out, blankCounter);
        return label.rfind("_:", 0) == 0 ? Term::blank(label.substr(2)) : Term::iri(label);
    }
    throw UnknownContextKey("unsupported JSON-LD value: " + v.dump());
}

// Line parser for the persistence format.
inline Triple Store::parse_line(const std::string& line, size_t lineno) {
    size_t pos = 0;
    auto skip_ws = [&] { while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos; };
    auto parse_term = [&]() -> Term {
        skip_ws();
        if (pos >= line.size()) throw ParseError(lineno, "unexpected end of line");
        char c = line[pos];
        if (c == '<') {
            size_t end = line.find('>', pos);
            if (end == std::string::npos) throw ParseError(lineno, "unterminated IRI");
            std::string text = line.substr(pos + 1, end - pos - 1);
            pos = end + 1;
            if (text.empty()) throw ParseError(lineno, "empty IRI");
            try {
                return Term::iri(text);
            } catch (const InvalidTriple& e) {
                throw ParseError(lineno, e.what());
            }
        }
        if (c == '_') {
            if (pos + 1 >= line.size() || line[pos + 1] != ':')
                throw ParseError(lineno, "malformed blank node");
            size_t end = pos + 2;
            while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
            std::string label = line.substr(pos + 2, end - pos - 2);
            if (label.empty()) throw ParseError(lineno, "empty blank node label");
            pos = end;
            return Term::blank(label);
        }
        if (c == '"') {
            std::string lex;
            ++pos;
            bool closed = false;
            while (pos < line.size()) {
                char ch = line[pos];
                if (ch == '\\') {
                    if (pos + 1 >= line.size()) throw ParseError(lineno, "dangling escape");
                    char esc = line[pos + 1];
                    switch (esc) {
                        case '"': lex.push_back('"'); break;
                        case '\\': lex.push_back('\\'); break;
                        case 'n': lex.push_back('\n'); break;
                        case 't': lex.push_back('\t'); break;
                        default: throw ParseError(lineno, "bad escape");
                    }
                    pos += 2;
                    continue;
                }
                if (ch == '"') { closed = true; ++pos; break; }
                lex.push_back(ch);
                ++pos;
            }
            if (!closed) throw ParseError(lineno, "unterminated literal");
            if (pos + 1 >= line.size() || line[pos] != '^' || line[pos + 1] != '^')
                throw ParseError(lineno, "literal without datatype");
            pos += 2;
            if (pos >= line.size() || line[pos] != '<')
                throw ParseError(lineno, "malformed datatype IRI");
            size_t end = line.find('>', pos);
            if (end == std::string::npos) throw ParseError(lineno, "unterminated datatype IRI");
            std::string dt = line.substr(pos + 1, end - pos - 1);
            pos = end + 1;
            if (dt.empty()) throw ParseError(lineno, "empty datatype IRI");
            return Term::literal(lex, dt);
        }
        throw ParseError(lineno, "unexpected character");
    };

    Term s = parse_term();
    Term p = parse_term();
    Term o = parse_term();
    skip_ws();
    if (pos >= line.size() || line[pos] != '.') throw ParseError(lineno, "missing terminating dot");
    ++pos;
    skip_ws();
    if (pos != line.size() && !(pos == line.size() - 1 && line[pos] == '\r'))
        throw ParseError(lineno, "trailing content");
    try {
        return Triple(std::move(s), std::move(p), std::move(o));
    } catch (const InvalidTriple& e) {
        throw ParseError(lineno, e.what());
    }
}

// ---------------------------------------------------------------------------
// Stream index

struct StreamIndex {
    std::map<std::string, std::set<std::string>> byQuantityKind;
    std::map<std::string, std::set<std::string>> byDeviceType;
};

inline StreamIndex build_index(const Store& store) {
    StreamIndex idx;
    auto streams = store.match(pattern(PatternTerm::variable("s"),
                                       PatternTerm::fixed(Term::iri(kRdfType)),
                                       PatternTerm::fixed(Term::iri("iot-stream:IotStream"))));
    for (const auto& st : streams) {
        const std::string stream = st.subject.text();
        for (const auto& t :
             store.match(pattern(PatternTerm::fixed(st.subject),
                                 PatternTerm::fixed(Term::iri("sosa:observedProperty")),
                                 PatternTerm::variable("qk"))))
            if (t.object.is_iri()) idx.byQuantityKind[t.object.text()].insert(stream);
        for (const auto& g :
             store.match(pattern(PatternTerm::fixed(st.subject),
                                 PatternTerm::fixed(Term::iri("iot-stream:generatedBy")),
                                 PatternTerm::variable("d")))) {
            for (const auto& ty :
                 store.match(pattern(PatternTerm::fixed(g.object),
                                     PatternTerm::fixed(Term::iri(kRdfType)),
                                     PatternTerm::variable("c"))))
                if (ty.object.is_iri()) idx.byDeviceType[ty.object.text()].insert(stream);
        }
    }
    return idx;
}

inline std::set<std::string> find_streams(const StreamIndex& idx,
                                          const std::optional<std::string>& quantityKind,
                                          const std::optional<std::string>& deviceType) {
    auto lookup = [](const std::map<std::string, std::set<std::string>>& m,
                     const std::string& k) {
        auto it = m.find(k);
        return it != m.end() ? it->second : std::set<std::string>{};
    };
    if (quantityKind && deviceType) {
        auto a = lookup(idx.byQuantityKind, *quantityKind);
        auto b = lookup(idx.byDeviceType, *deviceType);
        std::set<std::string> out;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                              std::inserter(out, out.begin()));
        return out;
    }
    if (quantityKind) return lookup(idx.byQuantityKind, *quantityKind);
    if (deviceType) return lookup(idx.byDeviceType, *deviceType);
    std::set<std::string> all;
    for (const auto& [k, v] : idx.byQuantityKind) all.insert(v.begin(), v.end());
    for (const auto& [k, v] : idx.byDeviceType) all.insert(v.begin(), v.end());
    return all;
}

// ---------------------------------------------------------------------------
// Federation: query-time fan-out, skip-on-failure.

struct FederatedStore {
    const Store* local = nullptr;
    std::vector<const Store*> children;  // nullptr child = unavailable
};

struct FederatedResult {
    std::vector<Triple> triples;
    std::vector<size_t> unavailableChildren;
};

inline FederatedResult federated_match(const FederatedStore& fed, const Pattern& p) {
    std::set<Triple> acc;
    FederatedResult res;
    if (fed.local)
        for (auto& t : fed.local->match(p)) acc.insert(t);
    for (size_t i = 0; i < fed.children.size(); ++i) {
        if (!fed.children[i]) {
            res.unavailableChildren.push_back(i);
            continue;
        }
        for (auto& t : fed.children[i]->match(p)) acc.insert(t);
    }
    res.triples.assign(acc.begin(), acc.end());
    return res;
}

}  // namespace homecrawl::rdf
