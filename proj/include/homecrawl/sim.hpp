#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "homecrawl/discovery.hpp"
#include "homecrawl/gateway.hpp"
#include "homecrawl/mdns.hpp"
#include "homecrawl/ml.hpp"
#include "homecrawl/rng.hpp"
#include "homecrawl/ssdp.hpp"
#include "homecrawl/timeutil.hpp"

namespace homecrawl::sim {

using nlohmann::json;

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InvalidDuration : public SimError {
public:
    using SimError::SimError;
};
class ScenarioParseError : public SimError {
public:
    using SimError::SimError;
};
class UnknownAppliance : public SimError {
public:
    using SimError::SimError;
};

// ---------------------------------------------------------------------------
// Appliance models

enum class DutyStyle { Burst, Cyclic, ConstantOn };

struct ApplianceModel {
    std::string type;
    double idleW = 0.0;
    double activeW = 0.0;
    double burstMinSec = 60.0;  // active-phase duration range
    double burstMaxSec = 120.0;
    double gapMinSec = 120.0;  // idle-phase duration range
    double gapMaxSec = 600.0;
    double noiseStd = 1.0;
    DutyStyle duty = DutyStyle::Burst;
};

inline const std::vector<ApplianceModel>& default_appliance_models() {
    static const std::vector<ApplianceModel> models = {
        {"coffee machine", 1.0, 1100.0, 40.0, 90.0, 300.0, 900.0, 12.0, DutyStyle::Burst},
        {"desk lamp", 0.0, 8.0, 600.0, 1800.0, 300.0, 1200.0, 0.2, DutyStyle::ConstantOn},
        {"dishwasher", 0.5, 1800.0, 300.0, 600.0, 1800.0, 5400.0, 40.0, DutyStyle::Burst},
        {"fridge", 2.0, 120.0, 300.0, 420.0, 600.0, 900.0, 4.0, DutyStyle::Cyclic},
        {"kettle", 0.5, 2000.0, 90.0, 180.0, 600.0, 1800.0, 15.0, DutyStyle::Burst},
        {"laptop charger", 0.5, 45.0, 900.0, 2400.0, 600.0, 1800.0, 2.0, DutyStyle::ConstantOn},
        {"microwave", 1.5, 1200.0, 30.0, 120.0, 900.0, 2400.0, 25.0, DutyStyle::Burst},
        {"space heater", 1.0, 1500.0, 600.0, 1200.0, 300.0, 900.0, 20.0, DutyStyle::Cyclic},
        {"television", 1.0, 90.0, 1800.0, 5400.0, 900.0, 2700.0, 6.0, DutyStyle::ConstantOn},
        {"toaster", 0.2, 900.0, 60.0, 150.0, 1200.0, 3600.0, 10.0, DutyStyle::Burst},
        {"vacuum cleaner", 0.0, 700.0, 120.0, 300.0, 1800.0, 5400.0, 30.0, DutyStyle::Burst},
        {"washing machine", 1.0, 500.0, 600.0, 1500.0, 1800.0, 5400.0, 60.0, DutyStyle::Cyclic},
    };
    return models;
}

inline const ApplianceModel& find_model(const std::vector<ApplianceModel>& models,
                                        const std::string& type) {
    for (const auto& m : models)
        if (m.type == type) return m;
    throw UnknownAppliance("no appliance model named '" + type + "'");
}

inline ApplianceModel model_from_json(const json& m) {
    ApplianceModel a;
    a.type = m.at("type").get<std::string>();
    a.idleW = m.at("idleW").get<double>();
    a.activeW = m.at("activeW").get<double>();
    a.burstMinSec = m.at("burstMinSec").get<double>();
    a.burstMaxSec = m.at("burstMaxSec").get<double>();
    a.gapMinSec = m.at("gapMinSec").get<double>();
    a.gapMaxSec = m.at("gapMaxSec").get<double>();
    a.noiseStd = m.at("noiseStd").get<double>();
    std::string duty = m.at("duty").get<std::string>();
    if (duty == "burst") a.duty = DutyStyle::Burst;
    else if (duty == "cyclic") a.duty = DutyStyle::Cyclic;
    else if (duty == "constant") a.duty = DutyStyle::ConstantOn;
    else throw ScenarioParseError("unknown duty style: " + duty);
    return a;
}

inline std::vector<ApplianceModel> models_from_json(const json& doc) {
    std::vector<ApplianceModel> out;
    for (const auto& m : doc) out.push_back(model_from_json(m));
    return out;
}

inline std::vector<ApplianceModel> load_models(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ScenarioParseError("cannot open models file: " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        throw ScenarioParseError(std::string("models JSON: ") + e.what());
    }
    return models_from_json(doc);
}

// Alternating on/off phase machine; phase durations drawn uniformly from the
// model ranges, readings get additive Gaussian noise and are clamped at 0.
inline ml::PowerTrace generate_trace(const ApplianceModel& model, double durationSec,
                                     double periodSec, Rng rng, int64_t startTime = 0) {
    if (durationSec <= 0 || periodSec <= 0)
        throw InvalidDuration("duration and period must be positive");
    ml::PowerTrace trace;
    trace.periodSec = periodSec;
    trace.startTime = startTime;
    size_t samples = static_cast<size_t>(std::floor(durationSec / periodSec));
    if (samples == 0) throw InvalidDuration("duration shorter than one sample period");

    bool on = model.duty != DutyStyle::Burst;  // Cyclic and ConstantOn start active
    double phaseLeft = on ? rng.uniform(model.burstMinSec, model.burstMaxSec)
                          : rng.uniform(model.gapMinSec, model.gapMaxSec);
    for (size_t i = 0; i < samples; ++i) {
        while (phaseLeft <= 0.0) {
            if (model.duty == DutyStyle::ConstantOn && on) {
                phaseLeft = durationSec;  // stays on for the rest of the trace
                break;
            }
            on = !on;
            phaseLeft = on ? rng.uniform(model.burstMinSec, model.burstMaxSec)
                           : rng.uniform(model.gapMinSec, model.gapMaxSec);
        }
        double base = on ? model.activeW : model.idleW;
        double noise = rng.gaussian(0.0, on ? model.noiseStd : model.noiseStd * 0.1);
        trace.watts.push_back(std::max(0.0, base + noise));
        phaseLeft -= periodSec;
    }
    return trace;
}

// Per-class sub-seeds via Rng::derive keep the dataset independent of
// generation order.
inline ml::Dataset make_dataset(const std::vector<ApplianceModel>& models, size_t tracesPerClass,
                                double durationSec, double periodSec, uint64_t seed,
                                double onThresholdW = 5.0) {
    ml::Dataset ds;
    for (size_t c = 0; c < models.size(); ++c) {
        for (size_t t = 0; t < tracesPerClass; ++t) {
            auto rng = Rng::derive(seed, c * 100000ull + t);
            auto trace = generate_trace(models[c], durationSec, periodSec, rng);
            ds.features.push_back(ml::extract_features(trace, onThresholdW));
            ds.labels.push_back(models[c].type);
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Scenario

struct ScenarioDevice {
    int64_t nodeId = 0;
    std::string nodeName;  // possibly percent-encoded
    std::optional<std::string> ip;
    std::optional<std::string> location;
    std::string appliance;
    std::optional<int64_t> added;
};

struct Scenario {
    uint64_t seed = 42;
    std::string gatewayName;
    std::string gatewayIp;
    int64_t startUnix = 0;
    int tzOffsetMin = 0;
    double samplePeriodSec = 10.0;
    double durationSec = 900.0;
    std::vector<ScenarioDevice> devices;
    std::vector<ApplianceModel> inlineModels;  // appliances defined in the scenario itself
};

inline Scenario scenario_from_json(const json& doc) {
    Scenario s;
    try {
        s.seed = doc.at("seed").get<uint64_t>();
        s.gatewayName = doc.at("gatewayName").get<std::string>();
        s.gatewayIp = doc.at("gatewayIp").get<std::string>();
        s.startUnix = doc.at("startUnix").get<int64_t>();
        s.tzOffsetMin = doc.value("tzOffsetMin", 0);
        s.samplePeriodSec = doc.value("samplePeriodSec", 10.0);
        s.durationSec = doc.value("durationSec", 900.0);
        for (const auto& d : doc.at("devices")) {
            ScenarioDevice dev;
            dev.nodeId = d.at("nodeId").get<int64_t>();
            dev.nodeName = d.at("nodeName").get<std::string>();
            if (d.contains("ip") && d["ip"].is_string()) dev.ip = d["ip"].get<std::string>();
            if (d.contains("location") && d["location"].is_string())
                dev.location = d["location"].get<std::string>();
            // appliance: either a model name or an inline model object
            const json& app = d.at("appliance");
            if (app.is_string()) {
                dev.appliance = app.get<std::string>();
            } else if (app.is_object()) {
                dev.appliance = app.at("type").get<std::string>();
                if (app.contains("idleW")) s.inlineModels.push_back(model_from_json(app));
            } else {
                throw ScenarioParseError("appliance must be a name or an object");
            }
            if (d.contains("added")) dev.added = d["added"].get<int64_t>();
            s.devices.push_back(std::move(dev));
        }
    } catch (const json::exception& e) {
        throw ScenarioParseError(std::string("scenario JSON: ") + e.what());
    }
    if (s.samplePeriodSec <= 0 || s.durationSec <= 0)
        throw ScenarioParseError("samplePeriodSec and durationSec must be positive");
    std::map<int64_t, bool> seen;
    for (const auto& d : s.devices)
        if (!seen.emplace(d.nodeId, true).second)
            throw ScenarioParseError("duplicate nodeId " + std::to_string(d.nodeId));
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ScenarioParseError("cannot open scenario file: " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        throw ScenarioParseError(std::string("scenario JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

// ---------------------------------------------------------------------------
// Simulated clock

class SimClock : public discovery::Clock {
public:
    SimClock(int64_t startUnix, int tzOffsetMin)
        : now_(static_cast<double>(startUnix)), tzOffsetMin_(tzOffsetMin) {}

    double now_seconds() const override { return now_; }
    std::string now_rfc3339() const override {
        return rfc3339_format(static_cast<int64_t>(now_), tzOffsetMin_);
    }
    int64_t now_unix() const { return static_cast<int64_t>(now_); }
    int tz_offset_min() const { return tzOffsetMin_; }

    void advance(double sec) { now_ += sec; }

private:
    double now_;
    int tzOffsetMin_;
};

// ---------------------------------------------------------------------------
// Scripted discovery bus

// In-process transport: sends are matched against registered responders and
// the replies are queued for the next receive. An empty queue advances the
// clock by the timeout, so scan deadlines elapse without wall time.
class ScriptedBus : public discovery::Transport {
public:
    using Responder = std::function<std::vector<discovery::Datagram>(const discovery::Datagram&)>;

    explicit ScriptedBus(SimClock& clock) : clock_(clock) {}

    void add_responder(Responder r) { responders_.push_back(std::move(r)); }
    void inject(discovery::Datagram d) { queue_.push_back(std::move(d)); }
    const std::vector<discovery::Datagram>& sent() const { return sent_; }

    void send(const std::string& endpoint, const std::vector<uint8_t>& bytes) override {
        discovery::Datagram d{endpoint, bytes};
        for (const auto& r : responders_)
            for (auto& reply : r(d)) queue_.push_back(std::move(reply));
        sent_.push_back(std::move(d));
    }

    std::optional<discovery::Datagram> receive(double timeoutSec) override {
        if (queue_.empty()) {
            clock_.advance(timeoutSec);
            return std::nullopt;
        }
        clock_.advance(timeoutSec / 10.0);  // a reply arrives before the slice expires
        discovery::Datagram d = std::move(queue_.front());
        queue_.pop_front();
        return d;
    }

private:
    SimClock& clock_;
    std::vector<Responder> responders_;
    std::deque<discovery::Datagram> queue_;
    std::vector<discovery::Datagram> sent_;
};

// The simulated gateway advertises over both protocols under one identity:
// the SSDP USN equals the full mDNS service instance name, so a dual-protocol
// scan folds into a single observation.
inline std::string gateway_instance_name(const Scenario& s) {
    return s.gatewayName + "._hap._tcp.local";
}

inline void announce(ScriptedBus& bus, const Scenario& scenario) {
    if (scenario.gatewayName.empty()) return;  // empty scenario: silent bus
    const std::string instance = gateway_instance_name(scenario);
    bus.add_responder([scenario, instance](const discovery::Datagram& d)
                          -> std::vector<discovery::Datagram> {
        if (d.endpoint == discovery::kSsdpEndpoint) {
            std::string text(d.payload.begin(), d.payload.end());
            ssdp::SsdpMessage msg;
            try {
                msg = ssdp::parse_ssdp(text);
            } catch (const ssdp::SsdpError&) {
                return {};
            }
            if (msg.kind != ssdp::Kind::MSearch) return {};
            std::string reply = ssdp::encode_response({
                {"CACHE-CONTROL", "max-age=1800"},
                {"LOCATION", "http://" + scenario.gatewayIp + ":80/"},
                {"SERVER", scenario.gatewayName},
                {"ST", *msg.header("ST")},
                {"USN", instance},
            });
            return {{scenario.gatewayIp + ":1900",
                     std::vector<uint8_t>(reply.begin(), reply.end())}};
        }
        if (d.endpoint == discovery::kMdnsEndpoint) {
            mdns::MdnsPacket q;
            try {
                q = mdns::parse_mdns(d.payload);
            } catch (const mdns::MdnsError&) {
                return {};
            }
            bool asked = false;
            for (const auto& question : q.questions)
                if (question.rrtype == mdns::kTypePtr && question.name == "_hap._tcp.local")
                    asked = true;
            if (!asked) return {};
            mdns::MdnsPacket reply;
            reply.flags = 0x8400;  // response, authoritative
            mdns::Record ptr;
            ptr.name = "_hap._tcp.local";
            ptr.rrtype = mdns::kTypePtr;
            ptr.ttl = 4500;
            ptr.rdata = mdns::ptr_rdata(instance);
            ptr.rdataName = instance;
            reply.answers.push_back(ptr);
            mdns::Record srv;
            srv.name = instance;
            srv.rrtype = mdns::kTypeSrv;
            srv.ttl = 120;
            srv.rdata = mdns::srv_rdata(0, 0, 7681, scenario.gatewayName + ".local");
            srv.rdataName = scenario.gatewayName + ".local";
            reply.additional.push_back(srv);
            mdns::Record a;
            a.name = scenario.gatewayName + ".local";
            a.rrtype = mdns::kTypeA;
            a.ttl = 120;
            a.rdata = mdns::a_rdata(scenario.gatewayIp);
            reply.additional.push_back(a);
            return {{scenario.gatewayIp + ":5353", mdns::encode_mdns(reply)}};
        }
        return {};
    });
}

// ---------------------------------------------------------------------------
// Gateway simulator

class GatewaySim {
public:
    GatewaySim(const Scenario& scenario, const std::vector<ApplianceModel>& models,
               const discovery::Clock& clock)
        : scenario_(scenario), clock_(clock) {
        for (size_t i = 0; i < scenario.devices.size(); ++i) {
            const auto& dev = scenario.devices[i];
            const ApplianceModel* found = nullptr;
            for (const auto& m : scenario.inlineModels)
                if (m.type == dev.appliance) found = &m;
            const auto& model = found ? *found : find_model(models, dev.appliance);
            // per-device stream keyed by node id: stable under device reordering
            auto rng = Rng::derive(scenario.seed, static_cast<uint64_t>(dev.nodeId));
            traces_.push_back(generate_trace(model, scenario.durationSec,
                                             scenario.samplePeriodSec, rng, scenario.startUnix));
        }
    }

    const ml::PowerTrace& trace(size_t deviceIndex) const { return traces_.at(deviceIndex); }
    const Scenario& scenario() const { return scenario_; }

    // Request handler for the newline-delimited protocol.
    std::string handle(const std::string& request) const {
        const std::string prefix = "GET:nodes/";
        if (request.rfind(prefix, 0) != 0)
            return gateway::error_reply(400, "unsupported request");
        std::string rest = request.substr(prefix.size());
        if (rest.empty()) {
            std::vector<gateway::Node> nodes;
            for (size_t i = 0; i < scenario_.devices.size(); ++i) nodes.push_back(make_node(i));
            return gateway::nodes_reply(nodes);
        }
        int64_t id = 0;
        try {
            id = std::stoll(rest);
        } catch (const std::exception&) {
            return gateway::error_reply(400, "bad node id");
        }
        for (size_t i = 0; i < scenario_.devices.size(); ++i)
            if (scenario_.devices[i].nodeId == id) return gateway::node_reply(make_node(i));
        return gateway::error_reply(404, "node not found");
    }

private:
    size_t sample_index(const ml::PowerTrace& t) const {
        double elapsed = clock_.now_seconds() - static_cast<double>(t.startTime);
        if (elapsed < 0) return 0;
        size_t idx = static_cast<size_t>(std::floor(elapsed / t.periodSec));
        return std::min(idx, t.watts.size() - 1);
    }

    gateway::Node make_node(size_t i) const {
        const auto& dev = scenario_.devices[i];
        const auto& t = traces_[i];
        size_t idx = sample_index(t);
        int64_t lastChanged = t.startTime + static_cast<int64_t>(
                                                static_cast<double>(idx) * t.periodSec);
        double cumWh = 0.0;
        for (size_t k = 0; k <= idx; ++k) cumWh += t.watts[k] * t.periodSec / 3600.0;
        gateway::Node n;
        n.added = dev.added.value_or(scenario_.startUnix);
        n.id = dev.nodeId;
        n.name = dev.nodeName;
        n.ip = dev.ip;
        gateway::Attribute power;
        power.id = dev.nodeId * 10 + gateway::kCurrentEnergyUse;
        power.node_id = dev.nodeId;
        power.type = gateway::kCurrentEnergyUse;
        power.unit = "W";
        power.current_value = std::round(t.watts[idx] * 10.0) / 10.0;
        power.last_changed = lastChanged;
        gateway::Attribute energy;
        energy.id = dev.nodeId * 10 + gateway::kAccumulatedEnergyUse;
        energy.node_id = dev.nodeId;
        energy.type = gateway::kAccumulatedEnergyUse;
        energy.unit = "kWh";
        energy.current_value = std::round(cumWh) / 1000.0;  // Wh -> kWh, 3 decimals
        energy.last_changed = lastChanged;
        n.attributes = {power, energy};
        return n;
    }

    Scenario scenario_;
    const discovery::Clock& clock_;
    std::vector<ml::PowerTrace> traces_;
};

// In-process connection to a GatewaySim.
class LoopbackConnection : public gateway::Connection {
public:
    explicit LoopbackConnection(const GatewaySim& sim) : sim_(sim) {}

    void send_line(const std::string& line) override { pending_ = line; }
    std::string recv_line() override {
        if (!pending_) throw gateway::ConnectionClosed("no request pending");
        std::string req = *pending_;
        pending_.reset();
        return sim_.handle(req);
    }

private:
    const GatewaySim& sim_;
    std::optional<std::string> pending_;
};

}  // namespace homecrawl::sim
