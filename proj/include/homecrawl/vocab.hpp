#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace homecrawl::vocab {

using nlohmann::json;

// Fig-2-subset vocabulary constants used across the pipeline.
inline constexpr const char* kIotStream = "iot-stream:IotStream";
inline constexpr const char* kGeneratedBy = "iot-stream:generatedBy";
inline constexpr const char* kObservedProperty = "sosa:observedProperty";
inline constexpr const char* kHasFeatureOfInterest = "sosa:hasFeatureOfInterest";
inline constexpr const char* kFeatureOfInterest = "sosa:FeatureOfInterest";
inline constexpr const char* kResultTime = "sosa:resultTime";
inline constexpr const char* kHasResult = "sosa:hasResult";
inline constexpr const char* kRdfsLabel = "rdfs:label";
inline constexpr const char* kOwlSameAs = "owl:sameAs";
inline constexpr const char* kHasTimeStamp = "iotc:hasTimeStamp";
inline constexpr const char* kHasNetworkName = "iotc:hasNetworkName";
inline constexpr const char* kHasIpAddress = "iotc:hasIpAddress";
inline constexpr const char* kHasLocation = "iotc:hasLocation";
inline constexpr const char* kDiscoveredDevice = "iotc:discoveredDevice";
inline constexpr const char* kDiscoveryObservation = "iotc:DiscoveryObservation";
inline constexpr const char* kDiscoveryResult = "iotc:DiscoveryResult";
inline constexpr const char* kQuantityValue = "qudt:QuantityValue";
inline constexpr const char* kQudtUnit = "qudt:unit";
inline constexpr const char* kNumericValue = "qudt:numericValue";
inline constexpr const char* kLinkStatus = "iotc:linkStatus";
inline constexpr const char* kDiscoveredVia = "iotc:discoveredVia";
inline constexpr const char* kOnStream = "iotc:onStream";

class VocabError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class CycleDetected : public VocabError {
public:
    using VocabError::VocabError;
};
class DuplicateLabel : public VocabError {
public:
    using VocabError::VocabError;
};
class DanglingParent : public VocabError {
public:
    using VocabError::VocabError;
};
class UnknownClass : public VocabError {
public:
    using VocabError::VocabError;
};
class UnknownUnit : public VocabError {
public:
    using VocabError::VocabError;
};
class AmbiguousUnit : public VocabError {
public:
    using VocabError::VocabError;
};
class OntologyParseError : public VocabError {
public:
    using VocabError::VocabError;
};

enum class DeviceCategory { Gateway, SmartPlug, Sensor, Other };

inline DeviceCategory category_from_string(const std::string& s) {
    if (s == "Gateway") return DeviceCategory::Gateway;
    if (s == "SmartPlug") return DeviceCategory::SmartPlug;
    if (s == "Sensor") return DeviceCategory::Sensor;
    if (s == "Other") return DeviceCategory::Other;
    throw OntologyParseError("unknown device category: " + s);
}

struct DeviceClass {
    std::string id;
    std::string label;
    std::optional<std::string> parent;  // empty only for the root
    DeviceCategory category = DeviceCategory::Other;
};

inline constexpr const char* kRootClass = "devices:Device";

class DeviceOntology {
public:
    explicit DeviceOntology(std::vector<DeviceClass> classes) {
        for (auto& c : classes) {
            if (!classes_.emplace(c.id, c).second)
                throw OntologyParseError("duplicate class id: " + c.id);
        }
        validate();
    }

    static DeviceOntology from_json(const json& doc) {
        if (!doc.is_object() || !doc.contains("classes") || !doc["classes"].is_array())
            throw OntologyParseError("ontology document must contain a 'classes' array");
        std::vector<DeviceClass> cs;
        for (const auto& c : doc["classes"]) {
            DeviceClass dc;
            dc.id = c.at("id").get<std::string>();
            dc.label = c.at("label").get<std::string>();
            if (c.contains("parent") && !c["parent"].is_null())
                dc.parent = c["parent"].get<std::string>();
            if (c.contains("category")) dc.category = category_from_string(c["category"]);
            cs.push_back(std::move(dc));
        }
        return DeviceOntology(std::move(cs));
    }

    static DeviceOntology load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw OntologyParseError("cannot open ontology file: " + path);
        json doc;
        try {
            f >> doc;
        } catch (const json::exception& e) {
            throw OntologyParseError(std::string("ontology JSON: ") + e.what());
        }
        return from_json(doc);
    }

    bool has_class(const std::string& iri) const { return classes_.count(iri) > 0; }

    const DeviceClass& at(const std::string& iri) const {
        auto it = classes_.find(iri);
        if (it == classes_.end()) throw UnknownClass("unknown class: " + iri);
        return it->second;
    }

    size_t size() const { return classes_.size(); }

    // Reflexive subclass test along parent links.
    bool is_subclass(const std::string& a, const std::string& b) const {
        const DeviceClass* cur = &at(a);
        at(b);
        while (true) {
            if (cur->id == b) return true;
            if (!cur->parent) return false;
            cur = &at(*cur->parent);
        }
    }

    // (iri, label) pairs, one per class, sorted by iri.
    std::vector<std::pair<std::string, std::string>> labels() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [iri, c] : classes_) out.emplace_back(iri, c.label);
        return out;
    }

private:
    void validate() const {
        size_t roots = 0;
        std::map<std::string, std::string> lowerLabels;
        for (const auto& [iri, c] : classes_) {
            std::string lower = c.label;
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
            auto [it, fresh] = lowerLabels.emplace(lower, iri);
            if (!fresh)
                throw DuplicateLabel("duplicate label '" + c.label + "' on " + iri + " and " +
                                     it->second);
            if (!c.parent) {
                ++roots;
                if (iri != kRootClass)
                    throw OntologyParseError("parentless class must be " +
                                             std::string(kRootClass) + ", got " + iri);
            } else if (!classes_.count(*c.parent)) {
                throw DanglingParent("class " + iri + " has unknown parent " + *c.parent);
            }
        }
        if (roots != 1) throw OntologyParseError("ontology must have exactly one root class");
        // cycle check: walk each parent chain, bounded by class count
        for (const auto& [iri, c] : classes_) {
            const DeviceClass* cur = &c;
            size_t steps = 0;
            while (cur->parent) {
                if (++steps > classes_.size())
                    throw CycleDetected("parent cycle through " + iri);
                cur = &classes_.at(*cur->parent);
            }
        }
    }

    std::map<std::string, DeviceClass> classes_;
};

inline DeviceOntology load_ontology(const std::string& path) { return DeviceOntology::load(path); }

// Default shipped ontology: the class names the gateway/plug vendors in the
// demo actually use, rooted at devices:Device.
inline DeviceOntology default_ontology() {
    return DeviceOntology({
        {"devices:Device", "Device", std::nullopt, DeviceCategory::Other},
        {"devices:Gateway", "Gateway", "devices:Device", DeviceCategory::Gateway},
        {"devices:HomeeGateway", "Homee Gateway", "devices:Gateway", DeviceCategory::Gateway},
        {"devices:VeraSecureGateway", "Vera Secure Gateway", "devices:Gateway",
         DeviceCategory::Gateway},
        {"devices:OpenHabGateway", "OpenHAB Gateway", "devices:Gateway", DeviceCategory::Gateway},
        {"devices:SmartHomeDevice", "Smart Home Device", "devices:Device", DeviceCategory::Other},
        {"devices:FibaroWallPlug", "Fibaro Wall Plug", "devices:SmartHomeDevice",
         DeviceCategory::SmartPlug},
        {"devices:PikkertonPlug", "Pikkerton Plug", "devices:SmartHomeDevice",
         DeviceCategory::SmartPlug},
    });
}

// ---------------------------------------------------------------------------
// Unit registry (QUDT-style)

struct UnitEntry {
    std::string symbol;
    std::string iri;
    std::string quantityKind;
    std::string unitClass;
};

class UnitRegistry {
public:
    explicit UnitRegistry(std::vector<UnitEntry> entries) {
        for (auto& e : entries) {
            if (!bySymbol_.emplace(e.symbol, e).second)
                throw OntologyParseError("duplicate unit symbol: " + e.symbol);
        }
    }

    static UnitRegistry from_json(const json& doc) {
        if (!doc.is_array()) throw OntologyParseError("unit registry must be a JSON array");
        std::vector<UnitEntry> es;
        for (const auto& u : doc)
            es.push_back({u.at("symbol").get<std::string>(), u.at("iri").get<std::string>(),
                          u.at("quantityKind").get<std::string>(),
                          u.at("unitClass").get<std::string>()});
        return UnitRegistry(std::move(es));
    }

    static UnitRegistry load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw OntologyParseError("cannot open unit registry: " + path);
        json doc;
        try {
            f >> doc;
        } catch (const json::exception& e) {
            throw OntologyParseError(std::string("unit registry JSON: ") + e.what());
        }
        return from_json(doc);
    }

    // Exact case-sensitive match first, then unique case-insensitive match.
    const UnitEntry& lookup(const std::string& symbol) const {
        auto it = bySymbol_.find(symbol);
        if (it != bySymbol_.end()) return it->second;
        std::string lower = fold(symbol);
        const UnitEntry* found = nullptr;
        for (const auto& [sym, e] : bySymbol_) {
            if (fold(sym) == lower) {
                if (found) throw AmbiguousUnit("ambiguous unit symbol: " + symbol);
                found = &e;
            }
        }
        if (!found) throw UnknownUnit("unknown unit symbol: " + symbol);
        return *found;
    }

    std::optional<UnitEntry> try_lookup(const std::string& symbol) const {
        try {
            return lookup(symbol);
        } catch (const VocabError&) {
            return std::nullopt;
        }
    }

private:
    static std::string fold(const std::string& s) {
        std::string out = s;
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return out;
    }

    std::map<std::string, UnitEntry> bySymbol_;
};

inline UnitRegistry default_units() {
    return UnitRegistry({
        {"W", "unit:W", "qk:Power", "qudt:PowerUnit"},
        {"kW", "unit:KiloW", "qk:Power", "qudt:PowerUnit"},
        {"kWh", "unit:KiloW-HR", "qk:Energy", "qudt:EnergyUnit"},
        {"Wh", "unit:W-HR", "qk:Energy", "qudt:EnergyUnit"},
        {"V", "unit:V", "qk:Voltage", "qudt:VoltageUnit"},
        {"A", "unit:A", "qk:ElectricCurrent", "qudt:CurrentUnit"},
        {"\xC2\xB0\x43", "unit:DEG_C", "qk:Temperature", "qudt:TemperatureUnit"},
        {"lx", "unit:LUX", "qk:Illuminance", "qudt:IlluminanceUnit"},
        {"%", "unit:PERCENT", "qk:Fraction", "qudt:DimensionlessUnit"},
    });
}

}  // namespace homecrawl::vocab
