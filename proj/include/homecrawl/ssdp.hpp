#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>
#include <string>

namespace homecrawl::ssdp {

class SsdpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InvalidMx : public SsdpError {
public:
    using SsdpError::SsdpError;
};
class MalformedStartLine : public SsdpError {
public:
    using SsdpError::SsdpError;
};
class MalformedHeader : public SsdpError {
public:
    using SsdpError::SsdpError;
};
class MissingRequiredHeader : public SsdpError {
public:
    using SsdpError::SsdpError;
};

enum class Kind { MSearch, Notify, Response };

struct SsdpMessage {
    Kind kind = Kind::Response;
    std::map<std::string, std::string> headers;  // names uppercased

    const std::string* header(const std::string& name) const {
        auto it = headers.find(name);
        return it != headers.end() ? &it->second : nullptr;
    }
};

// Exact M-SEARCH byte layout; CRLF line endings, fixed header order.
inline std::string encode_msearch(const std::string& st, int mx) {
    if (mx < 1 || mx > 5) throw InvalidMx("MX must be in [1,5], got " + std::to_string(mx));
    return "M-SEARCH * HTTP/1.1\r\n"
           "HOST: 239.255.255.250:1900\r\n"
           "MAN: \"ssdp:discover\"\r\n"
           "MX: " + std::to_string(mx) + "\r\n"
           "ST: " + st + "\r\n\r\n";
}

inline std::string encode_response(const std::map<std::string, std::string>& headers) {
    std::string out = "HTTP/1.1 200 OK\r\n";
    for (const auto& [k, v] : headers) out += k + ": " + v + "\r\n";
    return out + "\r\n";
}

inline SsdpMessage parse_ssdp(const std::string& bytes) {
    SsdpMessage msg;
    size_t pos = bytes.find("\r\n");
    if (pos == std::string::npos) {
        // tolerate bare-LF line endings
        pos = bytes.find('\n');
        if (pos == std::string::npos) throw MalformedStartLine("no start line terminator");
    }
    std::string start = bytes.substr(0, pos);
    if (!start.empty() && start.back() == '\r') start.pop_back();
    if (start == "M-SEARCH * HTTP/1.1") msg.kind = Kind::MSearch;
    else if (start == "NOTIFY * HTTP/1.1") msg.kind = Kind::Notify;
    else if (start.rfind("HTTP/1.1 200", 0) == 0) msg.kind = Kind::Response;
    else throw MalformedStartLine("unrecognised start line: " + start);

    size_t lineStart = bytes[pos] == '\r' ? pos + 2 : pos + 1;
    while (lineStart < bytes.size()) {
        size_t lineEnd = bytes.find('\n', lineStart);
        std::string line = bytes.substr(
            lineStart, (lineEnd == std::string::npos ? bytes.size() : lineEnd) - lineStart);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;  // end of headers
        size_t colon = line.find(':');
        if (colon == std::string::npos) throw MalformedHeader("header without colon: " + line);
        std::string name = line.substr(0, colon);
        if (name.empty()) throw MalformedHeader("empty header name");
        std::string value = line.substr(colon + 1);
        while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
            value.erase(value.begin());
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        for (char c : name)
            if (c <= ' ' || c == 0x7f) throw MalformedHeader("bad header name: " + name);
        msg.headers[name] = value;  // duplicate headers: last wins
        if (lineEnd == std::string::npos) break;
        lineStart = lineEnd + 1;
    }

    if (msg.kind == Kind::MSearch) {
        const std::string* man = msg.header("MAN");
        if (!man || *man != "\"ssdp:discover\"")
            throw MissingRequiredHeader("M-SEARCH requires MAN: \"ssdp:discover\"");
        if (!msg.header("ST")) throw MissingRequiredHeader("M-SEARCH requires ST");
    } else if (msg.kind == Kind::Response) {
        if (!msg.header("USN")) throw MissingRequiredHeader("response requires USN");
    }
    return msg;
}

}  // namespace homecrawl::ssdp
