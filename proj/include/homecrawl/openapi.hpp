#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace homecrawl::openapi {

using nlohmann::json;

class OpenApiError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class MissingPaths : public OpenApiError {
public:
    using OpenApiError::OpenApiError;
};
class UnsupportedRef : public OpenApiError {
public:
    using OpenApiError::OpenApiError;
};
class MalformedParameter : public OpenApiError {
public:
    using OpenApiError::OpenApiError;
};
class UnknownEndpoint : public OpenApiError {
public:
    using OpenApiError::OpenApiError;
};
class DuplicateEntry : public OpenApiError {
public:
    using OpenApiError::OpenApiError;
};
class EnrichmentParseError : public OpenApiError {
public:
    using OpenApiError::OpenApiError;
};

enum class Method { Get, Post, Put, Delete, Patch };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Get: return "GET";
        case Method::Post: return "POST";
        case Method::Put: return "PUT";
        case Method::Delete: return "DELETE";
        case Method::Patch: return "PATCH";
    }
    return "";
}

inline Method method_from_string(const std::string& s) {
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), ::toupper);
    if (u == "GET") return Method::Get;
    if (u == "POST") return Method::Post;
    if (u == "PUT") return Method::Put;
    if (u == "DELETE") return Method::Delete;
    if (u == "PATCH") return Method::Patch;
    throw MalformedParameter("unsupported method: " + s);
}

enum class ParamLocation { Path, Query };

struct Parameter {
    std::string name;
    ParamLocation location = ParamLocation::Query;
    bool required = false;
};

struct EndpointDescriptor {
    Method method = Method::Get;
    std::string pathTemplate;
    std::string summary;
    std::vector<Parameter> parameters;
};

enum class Role { DeviceMetadata, MeasurementData, Control, Other };

inline Role role_from_string(const std::string& s) {
    if (s == "DeviceMetadata") return Role::DeviceMetadata;
    if (s == "MeasurementData") return Role::MeasurementData;
    if (s == "Control") return Role::Control;
    if (s == "Other") return Role::Other;
    throw EnrichmentParseError("unknown role: " + s);
}

struct EnrichmentEntry {
    Method method = Method::Get;
    std::string pathTemplate;
    Role role = Role::Other;
    std::map<std::string, std::string> hints;  // JSON-pointer texts
};

struct Enrichment {
    std::vector<EnrichmentEntry> entries;
};

namespace detail {

inline json resolve_parameter(const json& doc, const json& p) {
    if (!p.is_object()) throw MalformedParameter("parameter is not an object");
    if (p.contains("$ref")) {
        std::string ref = p["$ref"].get<std::string>();
        const std::string prefix = "#/components/parameters/";
        if (ref.rfind(prefix, 0) != 0) throw UnsupportedRef("non-local $ref: " + ref);
        std::string key = ref.substr(prefix.size());
        if (!doc.contains("components") || !doc["components"].contains("parameters") ||
            !doc["components"]["parameters"].contains(key))
            throw UnsupportedRef("unresolvable $ref: " + ref);
        return doc["components"]["parameters"][key];
    }
    return p;
}

inline std::set<std::string> path_template_vars(const std::string& path) {
    std::set<std::string> vars;
    size_t pos = 0;
    while ((pos = path.find('{', pos)) != std::string::npos) {
        size_t end = path.find('}', pos);
        if (end == std::string::npos) break;
        vars.insert(path.substr(pos + 1, end - pos - 1));
        pos = end + 1;
    }
    return vars;
}

}  // namespace detail

// Endpoint inventory extraction; one descriptor per (path, method), sorted.
inline std::vector<EndpointDescriptor> parse_openapi(const json& doc) {
    if (!doc.is_object() || !doc.contains("openapi"))
        throw MissingPaths("document has no 'openapi' version field");
    if (!doc.contains("paths") || !doc["paths"].is_object())
        throw MissingPaths("document has no 'paths' object");
    std::vector<EndpointDescriptor> out;
    for (const auto& [path, item] : doc["paths"].items()) {
        if (!item.is_object()) continue;
        std::vector<Parameter> shared;
        auto collect = [&](const json& params, std::vector<Parameter>& into) {
            for (const auto& raw : params) {
                json p = detail::resolve_parameter(doc, raw);
                Parameter param;
                if (!p.contains("name") || !p.contains("in"))
                    throw MalformedParameter("parameter without name/in on " + path);
                param.name = p["name"].get<std::string>();
                std::string loc = p["in"].get<std::string>();
                if (loc == "path") param.location = ParamLocation::Path;
                else if (loc == "query") param.location = ParamLocation::Query;
                else throw MalformedParameter("unsupported parameter location: " + loc);
                param.required = p.value("required", false);
                into.push_back(std::move(param));
            }
        };
        if (item.contains("parameters")) collect(item["parameters"], shared);
        for (const auto& [methodKey, op] : item.items()) {
            if (methodKey == "parameters" || methodKey == "summary" ||
                methodKey == "description")
                continue;
            Method m;
            try {
                m = method_from_string(methodKey);
            } catch (const MalformedParameter&) {
                continue;  // skip non-method keys like servers/extensions
            }
            EndpointDescriptor d;
            d.method = m;
            d.pathTemplate = path;
            d.summary = op.is_object() ? op.value("summary", "") : "";
            d.parameters = shared;
            if (op.is_object() && op.contains("parameters"))
                collect(op["parameters"], d.parameters);
            // every {var} in the path needs a matching path parameter
            for (const auto& var : detail::path_template_vars(path)) {
                bool found = std::any_of(d.parameters.begin(), d.parameters.end(),
                                         [&](const Parameter& p) {
                                             return p.location == ParamLocation::Path &&
                                                    p.name == var;
                                         });
                if (!found)
                    throw MalformedParameter("path variable {" + var +
                                             "} has no path parameter on " + path);
            }
            out.push_back(std::move(d));
        }
    }
    std::sort(out.begin(), out.end(), [](const EndpointDescriptor& a, const EndpointDescriptor& b) {
        if (a.pathTemplate != b.pathTemplate) return a.pathTemplate < b.pathTemplate;
        return method_name(a.method) < std::string(method_name(b.method));
    });
    return out;
}

inline Enrichment load_enrichment_json(const json& doc,
                                       const std::vector<EndpointDescriptor>& spec) {
    if (!doc.is_array()) throw EnrichmentParseError("enrichment must be a JSON array");
    Enrichment e;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& item : doc) {
        EnrichmentEntry entry;
        entry.method = method_from_string(item.at("method").get<std::string>());
        entry.pathTemplate = item.at("path").get<std::string>();
        entry.role = role_from_string(item.at("role").get<std::string>());
        if (item.contains("hints"))
            for (const auto& [k, v] : item["hints"].items())
                entry.hints[k] = v.get<std::string>();
        auto key = std::make_pair(std::string(method_name(entry.method)), entry.pathTemplate);
        if (!seen.insert(key).second)
            throw DuplicateEntry("duplicate enrichment entry for " + key.first + " " + key.second);
        bool exists = std::any_of(spec.begin(), spec.end(), [&](const EndpointDescriptor& d) {
            return d.method == entry.method && d.pathTemplate == entry.pathTemplate;
        });
        if (!exists)
            throw UnknownEndpoint("enrichment references absent endpoint " + key.first + " " +
                                  key.second);
        e.entries.push_back(std::move(entry));
    }
    return e;
}

inline Enrichment load_enrichment(const std::string& path,
                                  const std::vector<EndpointDescriptor>& spec) {
    std::ifstream f(path);
    if (!f) throw EnrichmentParseError("cannot open enrichment file: " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& ex) {
        throw EnrichmentParseError(std::string("enrichment JSON: ") + ex.what());
    }
    return load_enrichment_json(doc, spec);
}

// Spec-order filter of enriched endpoints with the given role.
inline std::vector<EndpointDescriptor> endpoints_with_role(
    const std::vector<EndpointDescriptor>& spec, const Enrichment& enrichment, Role role) {
    std::vector<EndpointDescriptor> out;
    for (const auto& d : spec) {
        for (const auto& e : enrichment.entries) {
            if (e.role == role && e.method == d.method && e.pathTemplate == d.pathTemplate) {
                out.push_back(d);
                break;
            }
        }
    }
    return out;
}

}  // namespace homecrawl::openapi
