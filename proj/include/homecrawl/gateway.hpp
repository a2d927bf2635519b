#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace homecrawl::gateway {

using nlohmann::json;

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ConnectionClosed : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class Timeout : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class MalformedResponse : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class NodeNotFound : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class AttributeMissing : public GatewayError {
public:
    using GatewayError::GatewayError;
};

struct Attribute {
    int64_t id = 0;
    int64_t node_id = 0;
    int type = 0;
    std::string unit;
    double current_value = 0.0;
    int64_t last_changed = 0;
};

struct Node {
    int64_t added = 0;
    int64_t id = 0;
    std::string name;               // possibly percent-encoded
    std::optional<std::string> ip;  // extra metadata some gateways expose
    std::vector<Attribute> attributes;
};

// Attribute type code -> semantic name. Code 3 is the instantaneous power
// reading; code 4 is the simulator's accumulated-energy code (configurable,
// real gateways may use a different integer).
inline const std::map<int, std::string>& default_attribute_types() {
    static const std::map<int, std::string> m = {
        {3, "CurrentEnergyUse"},
        {4, "AccumulatedEnergyUse"},
    };
    return m;
}

inline constexpr int kCurrentEnergyUse = 3;
inline constexpr int kAccumulatedEnergyUse = 4;

// Newline-delimited request/reply byte-stream connection. The reference
// transport is a plain socket or in-process pipe; a WebSocket binding can
// wrap the same message layer.
class Connection {
public:
    virtual ~Connection() = default;
    virtual void send_line(const std::string& line) = 0;
    virtual std::string recv_line() = 0;  // without trailing newline
};

// --- message layer -----------------------------------------------------------

inline json attribute_to_json(const Attribute& a) {
    json j;
    j["current_value"] = a.current_value;
    j["id"] = a.id;
    j["last_changed"] = a.last_changed;
    j["node_id"] = a.node_id;
    j["type"] = a.type;
    j["unit"] = a.unit;
    return j;
}

inline Attribute attribute_from_json(const json& j) {
    Attribute a;
    try {
        a.current_value = j.at("current_value").get<double>();
        a.id = j.at("id").get<int64_t>();
        a.last_changed = j.at("last_changed").get<int64_t>();
        a.node_id = j.at("node_id").get<int64_t>();
        a.type = j.at("type").get<int>();
        a.unit = j.at("unit").get<std::string>();
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("attribute: ") + e.what());
    }
    return a;
}

inline json node_to_json(const Node& n, bool withAttributes) {
    json j;
    j["added"] = n.added;
    if (withAttributes) {
        j["attributes"] = json::array();
        for (const auto& a : n.attributes) j["attributes"].push_back(attribute_to_json(a));
    }
    j["id"] = n.id;
    if (n.ip) j["ip"] = *n.ip;
    j["name"] = n.name;
    return j;
}

inline Node node_from_json(const json& j) {
    Node n;
    try {
        n.added = j.at("added").get<int64_t>();
        n.id = j.at("id").get<int64_t>();
        n.name = j.at("name").get<std::string>();
        if (j.contains("ip") && j["ip"].is_string()) n.ip = j["ip"].get<std::string>();
        if (j.contains("attributes"))
            for (const auto& a : j["attributes"]) n.attributes.push_back(attribute_from_json(a));
        // unknown keys are tolerated: the real gateway sends more fields
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("node: ") + e.what());
    }
    return n;
}

inline std::string nodes_reply(const std::vector<Node>& nodes) {
    json j;
    j["nodes"] = json::array();
    for (const auto& n : nodes) j["nodes"].push_back(node_to_json(n, false));
    return j.dump();
}

inline std::string node_reply(const Node& n) {
    json j;
    j["node"] = node_to_json(n, true);
    return j.dump();
}

inline std::string error_reply(int code, const std::string& message) {
    json j;
    j["error"] = {{"code", code}, {"message", message}};
    return j.dump();
}

namespace detail {

inline json parse_reply(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("reply is not JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("error")) {
        int code = j["error"].value("code", 0);
        std::string msg = j["error"].value("message", "");
        if (code == 404) throw NodeNotFound(msg.empty() ? "node not found" : msg);
        throw GatewayError("gateway error " + std::to_string(code) + ": " + msg);
    }
    return j;
}

}  // namespace detail

// --- client operations --------------------------------------------------------

inline std::vector<Node> request_nodes(Connection& conn) {
    conn.send_line("GET:nodes/");
    json j = detail::parse_reply(conn.recv_line());
    if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
        throw MalformedResponse("reply has no 'nodes' array");
    std::vector<Node> out;
    for (const auto& n : j["nodes"]) out.push_back(node_from_json(n));
    return out;
}

inline Node request_node(Connection& conn, int64_t id) {
    if (id < 1) throw GatewayError("node id must be >= 1");
    conn.send_line("GET:nodes/" + std::to_string(id));
    json j = detail::parse_reply(conn.recv_line());
    if (!j.is_object() || !j.contains("node") || !j["node"].is_object())
        throw MalformedResponse("reply has no 'node' object");
    return node_from_json(j["node"]);
}

struct Measurement {
    int64_t timestamp = 0;  // the attribute's last_changed
    double value = 0.0;
    std::string unit;
};

// Polls request_node `count` times spaced by `periodSec` (via the injected
// sleeper); consecutive samples with an unchanged last_changed are suppressed.
inline std::vector<Measurement> poll_measurements(Connection& conn, int64_t nodeId, int attrCode,
                                                  double periodSec, size_t count,
                                                  const std::function<void(double)>& sleeper) {
    if (periodSec <= 0) throw GatewayError("poll period must be positive");
    std::vector<Measurement> out;
    for (size_t i = 0; i < count; ++i) {
        if (i > 0) sleeper(periodSec);
        Node n = request_node(conn, nodeId);
        const Attribute* attr = nullptr;
        for (const auto& a : n.attributes)
            if (a.type == attrCode) attr = &a;
        if (!attr)
            throw AttributeMissing("node " + std::to_string(nodeId) + " has no attribute type " +
                                   std::to_string(attrCode));
        if (!out.empty() && out.back().timestamp == attr->last_changed) continue;
        out.push_back({attr->last_changed, attr->current_value, attr->unit});
    }
    return out;
}

}  // namespace homecrawl::gateway
