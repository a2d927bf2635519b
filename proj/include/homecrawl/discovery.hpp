#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "homecrawl/mdns.hpp"
#include "homecrawl/rdf.hpp"
#include "homecrawl/ssdp.hpp"
#include "homecrawl/timeutil.hpp"
#include "homecrawl/uuid.hpp"
#include "homecrawl/vocab.hpp"

namespace homecrawl::discovery {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Source { Ssdp, Mdns, Bluetooth };  // Bluetooth reserved, no radio backend

struct DiscoveryObservation {
    std::string deviceId;     // UUIDv5 of the identity key
    std::string identityKey;  // USN (SSDP) / full service instance name (mDNS)
    std::string timestamp;    // RFC 3339 with offset
    std::string networkName;
    std::optional<std::string> address;
    Source source = Source::Ssdp;
    std::map<std::string, std::string> extras;  // manufacturer, locationUrl, serviceType
};

// Injected time source; library code never reads the system clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_seconds() const = 0;
    virtual std::string now_rfc3339() const = 0;
};

struct Datagram {
    std::string endpoint;
    std::vector<uint8_t> payload;
};

// Abstract datagram transport: UDP multicast in production, a scripted
// in-process bus in the simulator.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(const std::string& endpoint, const std::vector<uint8_t>& bytes) = 0;
    // Returns nothing on timeout; never blocks forever.
    virtual std::optional<Datagram> receive(double timeoutSec) = 0;
};

inline constexpr const char* kSsdpEndpoint = "239.255.255.250:1900";
inline constexpr const char* kMdnsEndpoint = "224.0.0.251:5353";

inline std::vector<std::string> default_mdns_services() {
    return {"_hap._tcp.local", "_http._tcp.local", "_ssh._tcp.local"};
}

struct ScanConfig {
    std::string searchTarget = "ssdp:all";
    int mx = 2;
    std::vector<std::string> mdnsServices = default_mdns_services();
    double receiveSliceSec = 0.1;
};

namespace detail {

inline void merge_observation(std::map<std::string, DiscoveryObservation>& byKey,
                              DiscoveryObservation obs) {
    auto it = byKey.find(obs.identityKey);
    if (it == byKey.end()) {
        byKey.emplace(obs.identityKey, std::move(obs));
        return;
    }
    DiscoveryObservation& cur = it->second;
    if (!cur.address && obs.address) cur.address = obs.address;
    if (cur.networkName.empty()) cur.networkName = obs.networkName;
    for (auto& [k, v] : obs.extras) cur.extras.emplace(k, v);
}

inline std::optional<DiscoveryObservation> from_ssdp(const ssdp::SsdpMessage& msg,
                                                     const std::string& timestamp) {
    if (msg.kind != ssdp::Kind::Response && msg.kind != ssdp::Kind::Notify) return std::nullopt;
    const std::string* usn = msg.header("USN");
    if (!usn) return std::nullopt;
    DiscoveryObservation obs;
    obs.source = Source::Ssdp;
    obs.identityKey = *usn;
    obs.deviceId = uuid5(obs.identityKey);
    obs.timestamp = timestamp;
    if (const std::string* server = msg.header("SERVER")) obs.networkName = *server;
    else obs.networkName = *usn;
    if (const std::string* loc = msg.header("LOCATION")) {
        obs.extras["locationUrl"] = *loc;
        // host part of http://a.b.c.d:port/...
        std::string l = *loc;
        size_t scheme = l.find("://");
        if (scheme != std::string::npos) {
            size_t host = scheme + 3;
            size_t end = l.find_first_of(":/", host);
            obs.address = l.substr(host, end == std::string::npos ? std::string::npos : end - host);
        }
    }
    if (const std::string* man = msg.header("X-MANUFACTURER")) obs.extras["manufacturer"] = *man;
    if (const std::string* st = msg.header("ST")) obs.extras["serviceType"] = *st;
    return obs;
}

inline std::vector<DiscoveryObservation> from_mdns(const mdns::MdnsPacket& pkt,
                                                   const std::string& timestamp) {
    std::vector<DiscoveryObservation> out;
    std::optional<std::string> address;
    std::map<std::string, std::string> hostForInstance;
    auto all = pkt.answers;
    all.insert(all.end(), pkt.additional.begin(), pkt.additional.end());
    for (const auto& r : all)
        if (r.rrtype == mdns::kTypeA) address = mdns::a_rdata_to_ip(r.rdata);
    for (const auto& r : all) {
        if (r.rrtype != mdns::kTypePtr || r.rdataName.empty()) continue;
        DiscoveryObservation obs;
        obs.source = Source::Mdns;
        obs.identityKey = r.rdataName;  // full service instance name
        obs.deviceId = uuid5(obs.identityKey);
        obs.timestamp = timestamp;
        size_t dot = r.rdataName.find('.');
        obs.networkName = r.rdataName.substr(0, dot);
        obs.extras["serviceType"] = r.name;
        obs.address = address;
        out.push_back(std::move(obs));
    }
    return out;
}

}  // namespace detail

// One M-SEARCH plus one PTR query per configured service, then collect
// responses until the duration elapses. One observation per identity key.
inline std::vector<DiscoveryObservation> scan(Transport& transport, double durationSec,
                                              const Clock& clock,
                                              const ScanConfig& config = {}) {
    if (durationSec <= 0) throw TransportError("scan duration must be positive");
    const std::string msearch = ssdp::encode_msearch(config.searchTarget, config.mx);
    transport.send(kSsdpEndpoint, std::vector<uint8_t>(msearch.begin(), msearch.end()));
    for (const auto& svc : config.mdnsServices)
        transport.send(kMdnsEndpoint, mdns::encode_mdns_query(svc));

    std::map<std::string, DiscoveryObservation> byKey;
    const double deadline = clock.now_seconds() + durationSec;
    while (clock.now_seconds() < deadline) {
        auto dgram = transport.receive(config.receiveSliceSec);
        if (!dgram) continue;
        const std::string ts = clock.now_rfc3339();
        std::string text(dgram->payload.begin(), dgram->payload.end());
        try {
            auto msg = ssdp::parse_ssdp(text);
            if (auto obs = detail::from_ssdp(msg, ts)) detail::merge_observation(byKey, *obs);
            continue;
        } catch (const ssdp::SsdpError&) {
        }
        try {
            auto pkt = mdns::parse_mdns(dgram->payload);
            for (auto& obs : detail::from_mdns(pkt, ts)) detail::merge_observation(byKey, obs);
        } catch (const mdns::MdnsError&) {
            // not a packet we understand; ignore
        }
    }
    std::vector<DiscoveryObservation> out;
    for (auto& [k, obs] : byKey) out.push_back(std::move(obs));
    return out;
}

// Device triples exactly as the discovery snippet (timestamp, label, network
// name), plus a DiscoveryObservation resource with result/resultTime.
inline std::vector<rdf::Triple> observation_to_triples(const DiscoveryObservation& obs) {
    using rdf::Term;
    std::vector<rdf::Triple> out;
    Term dev = Term::iri(obs.deviceId);
    out.emplace_back(dev, Term::iri(vocab::kHasTimeStamp), Term::literal(obs.timestamp));
    out.emplace_back(dev, Term::iri(vocab::kRdfsLabel), Term::literal(obs.networkName));
    out.emplace_back(dev, Term::iri(vocab::kHasNetworkName), Term::literal(obs.networkName));
    if (obs.address)
        out.emplace_back(dev, Term::iri(vocab::kHasIpAddress), Term::literal(*obs.address));

    Term observation = Term::iri(obs.deviceId + "/observation/" + obs.timestamp);
    Term result = Term::iri(obs.deviceId + "/observation/" + obs.timestamp + "/result");
    out.emplace_back(observation, Term::iri(rdf::kRdfType),
                     Term::iri(vocab::kDiscoveryObservation));
    out.emplace_back(observation, Term::iri(vocab::kHasResult), result);
    out.emplace_back(observation, Term::iri(vocab::kResultTime), Term::literal(obs.timestamp));
    out.emplace_back(result, Term::iri(rdf::kRdfType), Term::iri(vocab::kDiscoveryResult));
    out.emplace_back(result, Term::iri(vocab::kDiscoveredDevice),
                     Term::literal("#" + obs.networkName));
    return out;
}

// Re-observation policy: hasTimeStamp on the device is replaced (latest
// sighting wins) while observation resources accumulate as a stream.
inline void record_observation(rdf::Store& store, const DiscoveryObservation& obs) {
    using rdf::PatternTerm;
    using rdf::Term;
    for (const auto& old :
         store.match(rdf::pattern(PatternTerm::fixed(Term::iri(obs.deviceId)),
                                  PatternTerm::fixed(Term::iri(vocab::kHasTimeStamp)),
                                  PatternTerm::variable("t"))))
        store.erase(old);
    for (const auto& t : observation_to_triples(obs)) store.insert(t);
}

}  // namespace homecrawl::discovery
