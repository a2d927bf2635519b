#pragma once

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "homecrawl/rdf.hpp"
#include "homecrawl/vocab.hpp"

namespace homecrawl::linker {

class EmptyLabel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LinkerConfig {
    double tauHigh = 0.55;
    double tauLow = 0.35;
    double margin = 0.15;
    size_t topK = 3;
};

struct Candidate {
    std::string classIri;
    double score = 0.0;
};

struct Linked {
    std::string classIri;
    double score;
};
struct Ambiguous {
    std::vector<Candidate> candidates;  // descending score, then classIri
};
struct NoMatch {};

using LinkResult = std::variant<Linked, Ambiguous, NoMatch>;

// Percent-decode; invalid escapes are passed through literally.
inline std::string percent_decode(const std::string& s) {
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int hi = hex(s[i + 1]), lo = hex(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

// Percent-decode, lowercase, split on non-alphanumeric runs and at
// lower->upper camelCase boundaries. Digits stay attached within a run.
inline std::vector<std::string> normalize_name(const std::string& raw) {
    std::string s = percent_decode(raw);
    std::vector<std::string> tokens;
    std::string cur;
    char prev = 0;
    for (char c : s) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            if (std::isupper(uc) && prev && std::islower(static_cast<unsigned char>(prev))) {
                tokens.push_back(cur);
                cur.clear();
            }
            cur.push_back(static_cast<char>(std::tolower(uc)));
            prev = c;
        } else {
            if (!cur.empty()) tokens.push_back(cur);
            cur.clear();
            prev = 0;
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

inline size_t levenshtein(const std::string& a, const std::string& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

inline double token_similarity(const std::string& a, const std::string& b) {
    size_t maxLen = std::max(a.size(), b.size());
    if (maxLen == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(maxLen);
}

// Label-coverage score: mean over label tokens of the best match among name
// tokens. Long vendor strings can still reach 1.0 against short labels.
inline double similarity(const std::vector<std::string>& nameTokens,
                         const std::vector<std::string>& labelTokens) {
    if (labelTokens.empty()) throw EmptyLabel("label has no tokens");
    if (nameTokens.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& lt : labelTokens) {
        double best = 0.0;
        for (const auto& nt : nameTokens) best = std::max(best, token_similarity(lt, nt));
        sum += best;
    }
    return sum / static_cast<double>(labelTokens.size());
}

inline LinkResult link(const std::string& rawName, const vocab::DeviceOntology& ontology,
                       const LinkerConfig& config = {}) {
    auto nameTokens = normalize_name(rawName);
    std::vector<Candidate> scored;
    for (const auto& [iri, label] : ontology.labels())
        scored.push_back({iri, similarity(nameTokens, normalize_name(label))});
    std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.classIri < b.classIri;
    });
    if (scored.empty()) return NoMatch{};
    double best = scored[0].score;
    double second = scored.size() > 1 ? scored[1].score : 0.0;
    if (best >= config.tauHigh && best - second >= config.margin)
        return Linked{scored[0].classIri, best};
    if (best >= config.tauLow) {
        Ambiguous amb;
        for (const auto& c : scored) {
            if (c.score < config.tauLow || amb.candidates.size() >= config.topK) break;
            amb.candidates.push_back(c);
        }
        return amb;
    }
    return NoMatch{};
}

// rdf:type assertion for a confirmed link; idempotent.
inline rdf::Triple apply_link(rdf::Store& store, const std::string& deviceIri,
                              const std::string& classIri, const vocab::DeviceOntology& ontology) {
    if (!ontology.has_class(classIri)) throw vocab::UnknownClass("unknown class: " + classIri);
    rdf::Triple t(rdf::Term::iri(deviceIri), rdf::Term::iri(rdf::kRdfType),
                  rdf::Term::iri(classIri));
    store.insert(t);
    return t;
}

}  // namespace homecrawl::linker
