// homecrawl: crawl a (simulated or real) home network, normalise what is
// found into a triple store, and answer questions about it.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "homecrawl/net.hpp"
#include "homecrawl/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;
constexpr int kExitStore = 4;

using namespace homecrawl;

rdf::Store load_store_or_empty(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) return {};
    return rdf::Store::load(path);
}

// Pattern text: three whitespace-separated terms; ?name is a variable,
// "text" a literal, anything else an IRI.
rdf::Pattern parse_pattern(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    bool quoted = false;
    for (char c : text) {
        if (quoted) {
            cur.push_back(c);
            if (c == '"') quoted = false;
            continue;
        }
        if (c == '"') {
            cur.push_back(c);
            quoted = true;
        } else if (c == ' ' || c == '\t') {
            if (!cur.empty()) tokens.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    if (tokens.size() != 3)
        throw pipeline::PipelineError("pattern needs exactly 3 terms, got " +
                                      std::to_string(tokens.size()));
    auto term = [](const std::string& t) -> rdf::PatternTerm {
        if (t[0] == '?') return rdf::PatternTerm::variable(t.substr(1));
        if (t.size() >= 2 && t.front() == '"' && t.back() == '"')
            return rdf::PatternTerm::fixed(rdf::Term::literal(t.substr(1, t.size() - 2)));
        return rdf::PatternTerm::fixed(rdf::Term::iri(t));
    };
    return rdf::pattern(term(tokens[0]), term(tokens[1]), term(tokens[2]));
}

int cmd_crawl(const std::string& source, const std::string& storePath, bool autoAcceptTop,
              const std::optional<std::string>& modelPath) {
    rdf::Store store = load_store_or_empty(storePath);
    pipeline::CrawlOptions options;
    options.autoAcceptTop = autoAcceptTop;
    options.classifyModelPath = modelPath;
    pipeline::CrawlReport report;
    auto t0 = std::chrono::steady_clock::now();

    if (source.rfind("sim:", 0) == 0) {
        auto scenario = sim::load_scenario(source.substr(4));
        report = pipeline::crawl_sim(scenario, store, options);
    } else if (source == "real") {
        net::UdpTransport transport;
        net::SystemClock clock;
        const auto ontology = vocab::default_ontology();
        for (const auto& obs : discovery::scan(transport, options.scanDurationSec, clock)) {
            discovery::record_observation(store, obs);
            report.devices++;
            auto result = linker::link(obs.networkName, ontology, options.linker);
            if (const auto* linked = std::get_if<linker::Linked>(&result)) {
                linker::apply_link(store, obs.deviceId, linked->classIri, ontology);
                report.linked++;
            } else if (std::holds_alternative<linker::Ambiguous>(result)) {
                report.ambiguous++;
            } else {
                report.noMatch++;
            }
        }
    } else {
        std::cerr << "source must be sim:<scenario.json> or real\n";
        return kExitConfig;
    }

    store.persist(storePath);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "devices: " << report.devices << "\n"
              << "linked: " << report.linked << "\n"
              << "ambiguous: " << report.ambiguous << "\n"
              << "no-match: " << report.noMatch << "\n"
              << "streams: " << report.streams << "\n"
              << "merges: " << report.merges << "\n"
              << "observations: " << report.observations << "\n"
              << "duration: " << secs << "s\n";
    for (const auto& line : report.classified) std::cout << "classified: " << line << "\n";
    return kExitOk;
}

int cmd_confirm(const std::string& storePath) {
    rdf::Store store = rdf::Store::load(storePath);
    auto flagged = store.match(
        rdf::pattern(rdf::PatternTerm::variable("s"),
                     rdf::PatternTerm::fixed(rdf::Term::iri(vocab::kLinkStatus)),
                     rdf::PatternTerm::variable("st")));
    if (flagged.empty()) {
        std::cout << "nothing to confirm\n";
        return kExitOk;
    }
    size_t n = pipeline::confirm_links(store, vocab::default_ontology(), std::cin, std::cout);
    store.persist(storePath);
    std::cout << "confirmed " << n << " link(s)\n";
    return kExitOk;
}

int cmd_ask(const std::string& storePath, const std::string& question) {
    rdf::Store store = rdf::Store::load(storePath);
    for (const auto& line : pipeline::ask(store, question)) std::cout << line << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& scenarioPath, const std::string& listen) {
    auto scenario = sim::load_scenario(scenarioPath);
    net::SystemClock clock;
    scenario.startUnix = static_cast<int64_t>(clock.now_seconds());
    sim::GatewaySim gateway(scenario, sim::default_appliance_models(), clock);
    auto ep = listen;
    size_t colon = ep.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--listen needs HOST:PORT\n";
        return kExitConfig;
    }
    net::TcpLineServer server(ep.substr(0, colon),
                              static_cast<uint16_t>(std::stoi(ep.substr(colon + 1))));
    std::cout << "gateway '" << scenario.gatewayName << "' listening on " << listen << "\n";
    server.serve_forever([&gateway](const std::string& line) { return gateway.handle(line); });
    return kExitOk;
}

int cmd_train(const std::optional<std::string>& modelsPath, const std::string& outPath,
              uint64_t seed, size_t tracesPerClass) {
    auto models = modelsPath ? sim::load_models(*modelsPath) : sim::default_appliance_models();
    auto outcome = pipeline::train_forest(models, tracesPerClass, seed);
    outcome.forest.save(outPath);
    std::cout << "classes: " << outcome.forest.classes().size() << "\n";
    if (outcome.holdout.macroPrecision)
        std::cout << "macro precision: " << *outcome.holdout.macroPrecision << "\n";
    else
        std::cout << "macro precision: n/a\n";
    if (outcome.holdout.microPrecision)
        std::cout << "micro precision: " << *outcome.holdout.microPrecision << "\n";
    std::cout << "abstention rate: " << outcome.holdout.abstentionRate << "\n"
              << "model written to " << outPath << "\n";
    return kExitOk;
}

int cmd_classify(const std::string& modelPath, const std::string& tracePath) {
    auto forest = ml::RandomForest::load(modelPath);
    auto trace = pipeline::load_trace_csv(tracePath);
    auto pred = forest.predict(ml::extract_features(trace, 5.0));
    if (const auto* label = std::get_if<ml::Label>(&pred))
        std::cout << label->cls << " (confidence " << label->confidence << ")\n";
    else if (const auto* nc = std::get_if<ml::NotConfident>(&pred))
        std::cout << "not_confident (top " << nc->topClass << ", confidence " << nc->confidence
                  << ")\n";
    return kExitOk;
}

int cmd_query(const std::string& storePath, const std::optional<std::string>& patternText,
              bool findStreams, const std::optional<std::string>& quantity,
              const std::optional<std::string>& deviceType) {
    rdf::Store store = rdf::Store::load(storePath);
    if (findStreams) {
        auto idx = rdf::build_index(store);
        for (const auto& iri : rdf::find_streams(idx, quantity, deviceType))
            std::cout << iri << "\n";
        return kExitOk;
    }
    if (!patternText) {
        std::cerr << "query needs --pattern or --find-streams\n";
        return kExitConfig;
    }
    for (const auto& t : store.match(parse_pattern(*patternText)))
        std::cout << rdf::triple_to_line(t) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smart home crawler"};
    app.require_subcommand(1);

    std::string source, storePath = "./crawl.nt", question, scenarioPath, listen;
    std::string outPath = "model.json", modelPath, tracePath;
    std::optional<std::string> classifyModel, trainModels, patternText, quantity, deviceType;
    bool autoAcceptTop = false, findStreams = false;
    uint64_t seed = 42;
    size_t tracesPerClass = 200;

    auto* crawl = app.add_subcommand("crawl", "scan, ingest and normalise");
    crawl->add_option("--source", source, "sim:<scenario.json> or real")->required();
    crawl->add_option("--store", storePath, "triple store path");
    crawl->add_flag("--auto-accept-top", autoAcceptTop, "accept top ambiguous candidate");
    crawl->add_option("--classify", classifyModel, "model file for appliance classification");

    auto* confirm = app.add_subcommand("confirm", "resolve ambiguous links interactively");
    confirm->add_option("--store", storePath, "triple store path");

    auto* ask = app.add_subcommand("ask", "answer a question about the home");
    ask->add_option("--store", storePath, "triple store path");
    ask->add_option("question", question, "whats-happening | devices | appliances | network")
        ->required();

    auto* simulate = app.add_subcommand("simulate", "serve a simulated gateway over TCP");
    simulate->add_option("--scenario", scenarioPath, "scenario JSON")->required();
    simulate->add_option("--listen", listen, "HOST:PORT")->required();

    auto* train = app.add_subcommand("train", "train the appliance classifier");
    train->add_option("--models", trainModels, "appliance models JSON (default built in)");
    train->add_option("--out", outPath, "output model path");
    train->add_option("--seed", seed, "training seed");
    train->add_option("--traces-per-class", tracesPerClass, "corpus size per class");

    auto* classify = app.add_subcommand("classify", "classify one power trace");
    classify->add_option("--model", modelPath, "model file")->required();
    classify->add_option("--trace", tracePath, "trace CSV")->required();

    auto* query = app.add_subcommand("query", "match a pattern or list streams");
    query->add_option("--store", storePath, "triple store path");
    query->add_option("--pattern", patternText, "\"S P O\" with ?vars");
    query->add_flag("--find-streams", findStreams, "list indexed streams");
    query->add_option("--quantity", quantity, "quantity-kind IRI filter");
    query->add_option("--device-type", deviceType, "device-class IRI filter");

    CLI11_PARSE(app, argc, argv);

    try {
        if (crawl->parsed()) return cmd_crawl(source, storePath, autoAcceptTop, classifyModel);
        if (confirm->parsed()) return cmd_confirm(storePath);
        if (ask->parsed()) return cmd_ask(storePath, question);
        if (simulate->parsed()) return cmd_simulate(scenarioPath, listen);
        if (train->parsed()) return cmd_train(trainModels, outPath, seed, tracesPerClass);
        if (classify->parsed()) return cmd_classify(modelPath, tracePath);
        if (query->parsed())
            return cmd_query(storePath, patternText, findStreams, quantity, deviceType);
    } catch (const rdf::IoError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return kExitStore;
    } catch (const rdf::ParseError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return kExitStore;
    } catch (const net::NetError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const discovery::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const gateway::GatewayError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
